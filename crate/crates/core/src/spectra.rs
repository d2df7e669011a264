//! Dense diagonalization, spectrum matching and closed-form reference spectra.

use faer::Side;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{Hermiticity, OperatorMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Symmetric,
    General,
}

/// Which eigenvectors to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vectors {
    None,
    Lowest(usize),
    All,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// Kept eigenvectors in eigenvalue order, normalized so `Σ|v_j|² w = 1`
    /// with `w` the grid measure.
    pub eigenvectors: Option<Vec<Vec<Complex64>>>,
    pub solver: Solver,
    /// `max_k ‖M v_k - λ_k v_k‖₂ / ‖v_k‖₂` over the kept eigenvectors.
    pub residual_max: Option<f64>,
    pub measure: f64,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn real_parts(&self, k: usize) -> Vec<f64> {
        self.eigenvalues.iter().take(k).map(|z| z.re).collect()
    }

    pub fn eigenvector(&self, level: usize) -> Option<&[Complex64]> {
        self.eigenvectors.as_ref()?.get(level).map(Vec::as_slice)
    }
}

fn solver_error(m: &OperatorMatrix, reason: impl Into<String>) -> Error {
    Error::Solver {
        dim: m.dim(),
        frobenius: m.frobenius(),
        finite: linalg::all_finite(&m.matrix),
        reason: reason.into(),
    }
}

fn keep_count(request: Vectors, n: usize) -> usize {
    match request {
        Vectors::None => 0,
        Vectors::Lowest(k) => k.min(n),
        Vectors::All => n,
    }
}

fn normalize(mut v: Vec<Complex64>, measure: f64) -> Vec<Complex64> {
    let norm = (linalg::norm2_complex(&v).powi(2) * measure).sqrt();
    if norm > 0.0 {
        // fix the phase so the largest component is real and positive
        let pivot = v
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { Complex64::new(1.0, 0.0) };
        for x in v.iter_mut() {
            *x = *x * phase / norm;
        }
    }
    v
}

fn residual(m: &OperatorMatrix, values: &[Complex64], vectors: &[Vec<Complex64>]) -> f64 {
    values
        .iter()
        .zip(vectors)
        .map(|(&lambda, v)| {
            let mv = linalg::mat_vec_complex(&m.matrix, v);
            let r: Vec<Complex64> = mv.iter().zip(v).map(|(a, b)| a - lambda * b).collect();
            linalg::norm2_complex(&r) / linalg::norm2_complex(v)
        })
        .fold(0.0, f64::max)
}

/// Entries must be finite and `‖M‖_F` representable: residuals and
/// tolerances downstream are scaled by it.
fn ensure_finite(m: &OperatorMatrix) -> Result<()> {
    if !linalg::all_finite(&m.matrix) {
        return Err(solver_error(m, "matrix has non-finite entries"));
    }
    if !m.frobenius().is_finite() {
        return Err(solver_error(m, "Frobenius norm overflows"));
    }
    Ok(())
}

fn ensure_finite_values(m: &OperatorMatrix, values: &[Complex64]) -> Result<()> {
    if values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(solver_error(m, "non-finite eigenvalues"))
    }
}

/// Real symmetric eigensolver; rejects matrices not tagged Hermitian.
pub fn eigen_hermitian(m: &OperatorMatrix, vectors: Vectors) -> Result<SpectrumResult> {
    if m.hermiticity != Hermiticity::Hermitian {
        return Err(Error::NotHermitian {
            asymmetry: linalg::max_asymmetry(&m.matrix),
            scale: linalg::max_abs(&m.matrix),
        });
    }
    ensure_finite(m)?;
    let measure = m.discretization.measure();
    let keep = keep_count(vectors, m.dim());
    if keep == 0 {
        let values = m
            .matrix
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| solver_error(m, format!("{e:?}")))?;
        let eigenvalues: Vec<Complex64> = values.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        ensure_finite_values(m, &eigenvalues)?;
        return Ok(SpectrumResult {
            eigenvalues,
            eigenvectors: None,
            solver: Solver::Symmetric,
            residual_max: None,
            measure,
        });
    }
    let evd = m
        .matrix
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| solver_error(m, format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let eigenvalues: Vec<Complex64> = s.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    ensure_finite_values(m, &eigenvalues)?;
    let kept: Vec<Vec<Complex64>> = (0..keep)
        .map(|k| {
            let v = u.col(k).iter().map(|&x| Complex64::new(x, 0.0)).collect();
            normalize(v, measure)
        })
        .collect();
    let residual_max = residual(m, &eigenvalues[..keep], &kept);
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors: Some(kept),
        solver: Solver::Symmetric,
        residual_max: Some(residual_max),
        measure,
    })
}

fn by_real_then_imag(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// General real eigensolver; eigenvalues come back sorted by real part.
pub fn eigen_general(m: &OperatorMatrix, vectors: Vectors) -> Result<SpectrumResult> {
    ensure_finite(m)?;
    let measure = m.discretization.measure();
    let keep = keep_count(vectors, m.dim());
    if keep == 0 {
        let mut values = m
            .matrix
            .eigenvalues()
            .map_err(|e| solver_error(m, format!("{e:?}")))?;
        ensure_finite_values(m, &values)?;
        values.sort_by(by_real_then_imag);
        return Ok(SpectrumResult {
            eigenvalues: values,
            eigenvectors: None,
            solver: Solver::General,
            residual_max: None,
            measure,
        });
    }
    let evd = m.matrix.eigen().map_err(|e| solver_error(m, format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..m.dim()).collect();
    order.sort_by(|&a, &b| by_real_then_imag(&s[a], &s[b]));
    let eigenvalues: Vec<Complex64> = order.iter().map(|&k| s[k]).collect();
    ensure_finite_values(m, &eigenvalues)?;
    let kept: Vec<Vec<Complex64>> = order[..keep]
        .iter()
        .map(|&k| normalize(u.col(k).iter().copied().collect(), measure))
        .collect();
    let residual_max = residual(m, &eigenvalues[..keep], &kept);
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors: Some(kept),
        solver: Solver::General,
        residual_max: Some(residual_max),
        measure,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedPair {
    pub index_a: usize,
    pub index_b: usize,
    pub abs_re_diff: f64,
    pub abs_im_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub pairs: Vec<MatchedPair>,
    pub k_matched: usize,
    pub max_abs_re_diff: f64,
    pub max_abs_im: f64,
    pub tol_re: f64,
    pub tol_im: f64,
    pub passed: bool,
}

/// Greedy nearest-real-part pairing of the `k` lowest states of `a` (typically
/// the non-Hermitian spectrum) with the `k` lowest of `b`. Ties go to the lower
/// index, so members of a near-degenerate cluster are interchangeable.
pub fn match_spectra(a: &SpectrumResult, b: &SpectrumResult, k: usize, tol_re: f64, tol_im: f64) -> Result<MatchReport> {
    if a.len() < k || b.len() < k {
        return Err(Error::config(format!(
            "cannot match {k} levels: spectra have {} and {} eigenvalues",
            a.len(),
            b.len()
        )));
    }
    let mut used = vec![false; k];
    let mut pairs = Vec::with_capacity(k);
    for (ia, za) in a.eigenvalues[..k].iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (ib, zb) in b.eigenvalues[..k].iter().enumerate() {
            if used[ib] {
                continue;
            }
            let d = (za.re - zb.re).abs();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((ib, d));
            }
        }
        let (ib, d) = best.expect("k unused candidates remain");
        used[ib] = true;
        pairs.push(MatchedPair {
            index_a: ia,
            index_b: ib,
            abs_re_diff: d,
            abs_im_a: za.im.abs(),
        });
    }
    let max_abs_re_diff = pairs.iter().map(|p| p.abs_re_diff).fold(0.0, f64::max);
    let max_abs_im = a.eigenvalues[..k]
        .iter()
        .chain(&b.eigenvalues[..k])
        .map(|z| z.im.abs())
        .fold(0.0, f64::max);
    Ok(MatchReport {
        pairs,
        k_matched: k,
        max_abs_re_diff,
        max_abs_im,
        tol_re,
        tol_im,
        passed: max_abs_re_diff <= tol_re && max_abs_im <= tol_im,
    })
}

/// Bound-state energy `2α√D(n+½) - α²(n+½)²` of `p² + D(1-e^{-αx})²`, or
/// `None` when level `n` does not exist (`n + ½ ≥ √D/α`).
pub fn morse_analytic(depth: f64, alpha: f64, n_level: usize) -> Option<f64> {
    if !(depth > 0.0 && alpha > 0.0) {
        return None;
    }
    let nu = n_level as f64 + 0.5;
    let lambda = depth.sqrt() / alpha;
    if nu >= lambda {
        return None;
    }
    let e = 2.0 * alpha * depth.sqrt() * nu - alpha * alpha * nu * nu;
    (e > 0.0 && e < depth).then_some(e)
}

/// Number of Morse bound states.
pub fn morse_level_count(depth: f64, alpha: f64) -> usize {
    (0..).take_while(|&n| morse_analytic(depth, alpha, n).is_some()).count()
}

/// Closed-form spectrum of a model's Hermitian partner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticSpectrum {
    /// `p² + 4a²x²`: `2|a|(2n+1)`.
    Harmonic { a: f64 },
    /// `p·p + 4a²(x²+y²)`: `4|a|(n_x+n_y+1)`.
    Harmonic2d { a: f64 },
    Morse {
        #[serde(rename = "D")]
        depth: f64,
        alpha: f64,
    },
    /// Dirichlet box of width `L`: `(πk/L)²`, `k ≥ 1`.
    FreeBox,
}

impl AnalyticSpectrum {
    /// The `k` lowest levels (fewer if the spectrum has fewer bound states).
    /// `box_width` is the domain width, used by `FreeBox` only.
    pub fn lowest(&self, k: usize, box_width: f64) -> Vec<f64> {
        match *self {
            AnalyticSpectrum::Harmonic { a } => (0..k).map(|n| 2.0 * a.abs() * (2 * n + 1) as f64).collect(),
            AnalyticSpectrum::Harmonic2d { a } => {
                let mut levels = Vec::with_capacity(k);
                let mut shell = 0usize;
                while levels.len() < k {
                    // shell n_x + n_y = shell has shell + 1 states
                    for _ in 0..=shell {
                        levels.push(4.0 * a.abs() * (shell + 1) as f64);
                    }
                    shell += 1;
                }
                levels.truncate(k);
                levels
            }
            AnalyticSpectrum::Morse { depth, alpha } => (0..k).map_while(|n| morse_analytic(depth, alpha, n)).collect(),
            AnalyticSpectrum::FreeBox => (1..=k)
                .map(|j| (std::f64::consts::PI * j as f64 / box_width).powi(2))
                .collect(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            AnalyticSpectrum::Harmonic { a } => format!("harmonic 2|a|(2n+1), a = {a}"),
            AnalyticSpectrum::Harmonic2d { a } => format!("2D harmonic 4|a|(nx+ny+1), a = {a}"),
            AnalyticSpectrum::Morse { depth, alpha } => format!("Morse D = {depth}, alpha = {alpha}"),
            AnalyticSpectrum::FreeBox => "Dirichlet box (pi k / L)^2".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Scheme};
    use crate::model::catalog;
    use crate::operators::{build_hermitian, build_pseudo, Construction};

    fn spectrum(values: &[f64]) -> SpectrumResult {
        SpectrumResult {
            eigenvalues: values.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            eigenvectors: None,
            solver: Solver::Symmetric,
            residual_max: None,
            measure: 1.0,
        }
    }

    #[test]
    fn match_identical_is_exact() {
        let a = spectrum(&[1.0, 3.0, 5.0]);
        let r = match_spectra(&a, &a, 3, 0.0, 0.0).unwrap();
        assert_eq!(r.max_abs_re_diff, 0.0);
        assert_eq!(r.max_abs_im, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn match_small_offsets() {
        let a = spectrum(&[1.0, 3.0, 5.0]);
        let b = spectrum(&[1.001, 3.002, 4.999]);
        let r = match_spectra(&a, &b, 3, 0.01, 0.0).unwrap();
        assert!(r.passed);
        assert!((r.max_abs_re_diff - 0.002).abs() < 1e-12);
    }

    #[test]
    fn match_requires_enough_levels() {
        let a = spectrum(&[1.0, 3.0]);
        assert!(match_spectra(&a, &a, 3, 1.0, 1.0).is_err());
    }

    #[test]
    fn match_handles_degenerate_cluster() {
        let a = spectrum(&[2.0, 4.0 + 1e-9, 4.0 - 1e-9]);
        let b = spectrum(&[2.0, 4.0, 4.0]);
        let r = match_spectra(&a, &b, 3, 1e-8, 0.0).unwrap();
        assert!(r.passed);
        let mut used: Vec<usize> = r.pairs.iter().map(|p| p.index_b).collect();
        used.sort();
        assert_eq!(used, vec![0, 1, 2]);
    }

    #[test]
    fn morse_levels_formula() {
        assert_eq!(morse_analytic(36.0, 1.0, 0), Some(5.75));
        assert_eq!(morse_analytic(36.0, 1.0, 1), Some(15.75));
        assert_eq!(morse_analytic(36.0, 1.0, 2), Some(23.75));
        assert_eq!(morse_analytic(36.0, 1.0, 3), Some(29.75));
        assert_eq!(morse_analytic(36.0, 1.0, 5), Some(35.75));
        assert_eq!(morse_analytic(36.0, 1.0, 6), None);
        assert_eq!(morse_level_count(36.0, 1.0), 6);
        assert_eq!(morse_analytic(-1.0, 1.0, 0), None);
    }

    #[test]
    fn analytic_lowest() {
        assert_eq!(AnalyticSpectrum::Harmonic { a: 0.5 }.lowest(4, 0.0), vec![1.0, 3.0, 5.0, 7.0]);
        assert_eq!(
            AnalyticSpectrum::Harmonic2d { a: 0.5 }.lowest(7, 0.0),
            vec![2.0, 4.0, 4.0, 6.0, 6.0, 6.0, 8.0]
        );
        assert_eq!(AnalyticSpectrum::Morse { depth: 36.0, alpha: 1.0 }.lowest(10, 0.0).len(), 6);
    }

    #[test]
    fn hermitian_solver_rejects_non_hermitian() {
        let grid = make_grid(-4.0, 4.0, 30).unwrap();
        let model = catalog::build_default("harmonic_gauge").unwrap();
        let h = build_pseudo(&grid, &model, Scheme::Central2, Construction::Continuum).unwrap();
        assert!(matches!(eigen_hermitian(&h, Vectors::None), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn solvers_agree_on_hermitian_input() {
        let grid = make_grid(-6.0, 6.0, 150).unwrap();
        for name in catalog::line_models() {
            let model = catalog::build_default(name).unwrap();
            let (hh, _) = crate::operators::build_line_pair(&grid, &model, Scheme::Central2, Construction::Continuum).unwrap();
            let sym = eigen_hermitian(&hh, Vectors::None).unwrap();
            let gen = eigen_general(&hh, Vectors::None).unwrap();
            let scale = sym.eigenvalues.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
            for (a, b) in sym.eigenvalues.iter().zip(&gen.eigenvalues) {
                assert!((a - b).norm() <= 1e-10 * scale, "{name}: {a} vs {b}");
            }
            assert!(sym.eigenvalues.iter().all(|z| z.im == 0.0));
        }
    }

    #[test]
    fn eigenvectors_grid_normalized_with_small_residual() {
        let grid = make_grid(-8.0, 8.0, 300).unwrap();
        let model = catalog::build_default("harmonic_gauge").unwrap();
        let hh = build_hermitian(&grid, &model, Scheme::Central2).unwrap();
        let h = build_pseudo(&grid, &model, Scheme::Central2, Construction::Continuum).unwrap();
        for (m, r) in [
            (&hh, eigen_hermitian(&hh, Vectors::Lowest(4)).unwrap()),
            (&h, eigen_general(&h, Vectors::Lowest(4)).unwrap()),
        ] {
            for v in r.eigenvectors.as_ref().unwrap() {
                let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spacing();
                assert!((norm - 1.0).abs() < 1e-12);
            }
            assert!(r.residual_max.unwrap() <= 1e-8 * m.frobenius());
        }
    }

    #[test]
    fn conjugate_pairs_closed_for_real_input() {
        // a rotation-like real matrix with complex eigenvalues
        let grid = make_grid(-1.0, 1.0, 40).unwrap();
        let model = catalog::build_default("free").unwrap();
        let mut m = build_hermitian(&grid, &model, Scheme::Central2).unwrap();
        for j in 0..39 {
            m.matrix[(j, j + 1)] += 1000.0;
            m.matrix[(j + 1, j)] -= 1000.0;
        }
        m.hermiticity = Hermiticity::NonHermitian;
        let r = eigen_general(&m, Vectors::None).unwrap();
        assert!(r.eigenvalues.iter().any(|z| z.im.abs() > 1.0));
        for z in &r.eigenvalues {
            let partner = r
                .eigenvalues
                .iter()
                .map(|w| (w - z.conj()).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(partner <= 1e-10 * z.norm().max(1.0));
        }
    }

    #[test]
    fn free_particle_box_levels() {
        let model = catalog::build_default("free").unwrap();
        let grid = make_grid(0.0, 5.0, 800).unwrap();
        let hh = build_hermitian(&grid, &model, Scheme::Central2).unwrap();
        let r = eigen_hermitian(&hh, Vectors::None).unwrap();
        let exact = AnalyticSpectrum::FreeBox.lowest(4, 5.0);
        for (z, e) in r.eigenvalues.iter().zip(exact) {
            assert!(z.re > 0.0);
            assert!((z.re - e).abs() / e < 1e-4);
        }
    }
}
