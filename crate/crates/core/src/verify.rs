//! Residual checks for the similarity construction and their aggregation into
//! a [`VerificationReport`].
//!
//! Two discretizations of `p²` appear here. The operator-identity check uses
//! `P² = (-i D1)² = -D1²`, for which the expansion of `(P + iF)²` holds exactly
//! as a matrix identity. Spectral checks use `-D2`, which is the accurate
//! choice for eigenvalues. Every report records which one a check used.

use std::collections::BTreeMap;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::{diff_matrix, make_grid, DerivativeOrder, Grid, Scheme};
use crate::linalg;
use crate::model::{Dimension, FunctionSpec, ModelDefinition, Representation};
use crate::operators::{
    self, build_2d, build_line_pair, Construction, Discretization, MetricMatrix, OperatorMatrix,
};
use crate::spectra::{self, eigen_general, eigen_hermitian, match_spectra, SpectrumResult, Vectors};

/// Similarity-mode pseudo-Hermiticity is only checked when `ln cond(η)` is below this.
pub const MAX_LOG_CONDITION: f64 = 60.0;
/// Probe width in units of the grid spacing of the coarsest level.
pub const PROBE_WIDTH_IN_H: f64 = 10.0;

pub const OPERATOR_IDENTITY: &str = "operator_identity";
pub const PARTNER_HERMITICITY: &str = "partner_hermiticity";
pub const MORSE_CONSISTENCY: &str = "morse_consistency";
pub const ANALYTIC_SPECTRUM: &str = "analytic_spectrum";
pub const ISOSPECTRAL_CONTINUUM: &str = "isospectral_continuum";
pub const ISOSPECTRAL_SIMILARITY: &str = "isospectral_similarity";
pub const PSEUDO_HERMITICITY_CONTINUUM: &str = "pseudo_hermiticity_continuum";
pub const PSEUDO_HERMITICITY_SIMILARITY: &str = "pseudo_hermiticity_similarity";
pub const EIGENFUNCTION_MAP_CONTINUUM: &str = "eigenfunction_map_continuum";
pub const EIGENFUNCTION_MAP_SIMILARITY: &str = "eigenfunction_map_similarity";
pub const NORMALIZABILITY_PREFIX: &str = "normalizability_level_";

pub const CHECK_IDS: &[&str] = &[
    ANALYTIC_SPECTRUM,
    EIGENFUNCTION_MAP_CONTINUUM,
    EIGENFUNCTION_MAP_SIMILARITY,
    ISOSPECTRAL_CONTINUUM,
    ISOSPECTRAL_SIMILARITY,
    MORSE_CONSISTENCY,
    OPERATOR_IDENTITY,
    PARTNER_HERMITICITY,
    PSEUDO_HERMITICITY_CONTINUUM,
    PSEUDO_HERMITICITY_SIMILARITY,
];

pub fn is_known_check(id: &str) -> bool {
    CHECK_IDS.contains(&id)
        || id
            .strip_prefix(NORMALIZABILITY_PREFIX)
            .is_some_and(|n| n.parse::<usize>().is_ok())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkipCause {
    Solver,
    Construction,
    Conditioning,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check_id: String,
    pub residual: f64,
    pub tolerance: f64,
    /// `residual <= tolerance` and every recorded gate holds; false when skipped.
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(skip)]
    pub skip_cause: Option<SkipCause>,
    pub details: BTreeMap<String, Value>,
}

impl CheckResult {
    pub fn new(check_id: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        CheckResult {
            check_id: check_id.into(),
            residual,
            tolerance,
            passed: residual <= tolerance,
            skipped: None,
            skip_cause: None,
            details: BTreeMap::new(),
        }
    }

    pub fn skipped(check_id: impl Into<String>, cause: SkipCause, reason: impl Into<String>) -> Self {
        let mut r = CheckResult::new(check_id, f64::NAN, f64::NAN);
        r.passed = false;
        r.skipped = Some(reason.into());
        r.skip_cause = Some(cause);
        r.details.insert("skip_cause".into(), json!(cause));
        r
    }

    pub fn from_error(check_id: impl Into<String>, err: &Error) -> Self {
        let cause = match err {
            Error::Solver { .. } => SkipCause::Solver,
            Error::Conditioning { .. } | Error::Overflow { .. } => SkipCause::Conditioning,
            _ => SkipCause::Construction,
        };
        CheckResult::skipped(check_id, cause, err.to_string())
    }

    /// Record an additional pass condition.
    pub fn gate(mut self, name: &str, ok: bool) -> Self {
        self.details.insert(name.to_string(), json!(ok));
        self.passed &= ok;
        self
    }

    pub fn detail(mut self, key: &str, value: impl Serialize) -> Self {
        self.details
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn is_skipped(&self) -> bool {
        self.skipped.is_some()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub model: String,
    pub grid: Value,
    pub mode: String,
    pub checks: Vec<CheckResult>,
    pub overall: bool,
}

impl VerificationReport {
    /// Sorts checks by id; `overall` is the AND over executed checks. A report
    /// in which nothing executed is an error.
    pub fn new(model: impl Into<String>, grid: Value, mode: impl Into<String>, mut checks: Vec<CheckResult>) -> Result<Self> {
        checks.sort_by(|a, b| a.check_id.cmp(&b.check_id));
        let executed: Vec<&CheckResult> = checks.iter().filter(|c| !c.is_skipped()).collect();
        if executed.is_empty() {
            return Err(Error::EmptyReport);
        }
        let overall = executed.iter().all(|c| c.passed);
        Ok(VerificationReport {
            model: model.into(),
            grid,
            mode: mode.into(),
            checks,
            overall,
        })
    }

    pub fn check(&self, id: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check_id == id)
    }

    pub fn has_solver_failure(&self) -> bool {
        self.checks
            .iter()
            .any(|c| c.skip_cause == Some(SkipCause::Solver))
    }
}

/// Observed convergence orders between consecutive levels.
pub fn observed_orders(errors: &[f64], spacings: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(spacings.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

fn complex_mat(n: usize, f: impl Fn(usize, usize) -> Complex64) -> Mat<Complex64> {
    Mat::from_fn(n, n, f)
}

fn complex_frobenius(m: &Mat<Complex64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for z in m.col(j).iter() {
            s += z.norm_sqr();
        }
    }
    s.sqrt()
}

/// Matrix form of `(Q + iτF)² = Q² - F² + iτ(FQ + QF)`.
///
/// In coordinate representation `Q = P = -i D1` and `τ = +1`; in momentum
/// representation `Q = X = +i D1` and `τ = -1`, mirroring `(x - ig')²`.
/// The residual is `‖L - R‖_F / ‖R‖_F`.
pub fn check_operator_identity(grid: &Grid, model: &ModelDefinition, scheme: Scheme, tolerance: f64) -> Result<CheckResult> {
    let (_, f) = model.line_functions()?;
    let scale = 1.0 + model.f_prime_perturbation;
    let (sigma, tau) = match model.representation {
        Representation::Coordinate => (-1.0, 1.0),
        Representation::Momentum => (1.0, -1.0),
    };
    let n = grid.len();
    let d1 = diff_matrix(grid, DerivativeOrder::First, scheme).matrix;
    let fp: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| f.eval_prime(x).map(|g| scale * g))
        .collect::<Result<_>>()?;
    let i = Complex64::new(0.0, 1.0);
    let q = complex_mat(n, |r, c| i * sigma * d1[(r, c)]);
    let ff = complex_mat(n, |r, c| if r == c { Complex64::new(fp[r], 0.0) } else { Complex64::new(0.0, 0.0) });
    let shifted = complex_mat(n, |r, c| q[(r, c)] + i * tau * ff[(r, c)]);
    let lhs = &shifted * &shifted;
    let q2 = &q * &q;
    let fq = &ff * &q;
    let qf = &q * &ff;
    let rhs = complex_mat(n, |r, c| {
        let f2 = if r == c { fp[r] * fp[r] } else { 0.0 };
        q2[(r, c)] - f2 + i * tau * (fq[(r, c)] + qf[(r, c)])
    });
    let diff = complex_mat(n, |r, c| lhs[(r, c)] - rhs[(r, c)]);
    let denom = complex_frobenius(&rhs);
    let residual = if denom == 0.0 { complex_frobenius(&diff) } else { complex_frobenius(&diff) / denom };
    Ok(CheckResult::new(OPERATOR_IDENTITY, residual, tolerance)
        .detail("kinetic", "-D1^2")
        .detail("scheme", scheme)
        .detail("n", n)
        .detail("representation", model.representation))
}

/// Entry-wise `‖Hη - ηH†‖_F / ‖Hη‖_F`, zero exactly when `H† = η⁻¹ H η`.
pub fn metric_frobenius_residual(h: &OperatorMatrix, eta: &MetricMatrix) -> f64 {
    let n = h.dim();
    let d = &eta.diagonal;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..n {
        for j in 0..n {
            let left = h.matrix[(j, k)] * d[k];
            let right = d[j] * h.matrix[(k, j)];
            num += (left - right).powi(2);
            den += left * left;
        }
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

fn probe_axis(grid: &Grid, count: usize) -> Vec<f64> {
    let quarter = grid.width() / 4.0;
    let lo = grid.x_min() + quarter;
    let span = 2.0 * quarter;
    (0..count)
        .map(|i| lo + span * (i as f64 + 0.5) / count as f64)
        .collect()
}

/// Unit-norm Gaussian probes with centers spread over the middle half of the
/// domain (along the diagonal in 2D).
pub fn gaussian_probes(discretization: &Discretization, count: usize, width: f64) -> Vec<Vec<f64>> {
    let gauss = |x: f64, c: f64| (-(x - c).powi(2) / (2.0 * width * width)).exp();
    let mut probes: Vec<Vec<f64>> = match discretization {
        Discretization::Line(grid) => probe_axis(grid, count)
            .into_iter()
            .map(|c| grid.points().iter().map(|&x| gauss(x, c)).collect())
            .collect(),
        Discretization::Plane { x, y } => probe_axis(x, count)
            .into_iter()
            .zip(probe_axis(y, count))
            .map(|(cx, cy)| {
                x.points()
                    .iter()
                    .flat_map(|&xi| y.points().iter().map(move |&yj| gauss(xi, cx) * gauss(yj, cy)))
                    .collect()
            })
            .collect(),
    };
    for p in probes.iter_mut() {
        let norm = linalg::norm2(p);
        p.iter_mut().for_each(|v| *v /= norm);
    }
    probes
}

/// `max_v ‖(Hη - ηH†) v‖₂ / ‖Hη v‖₂` over the given probes.
pub fn probe_residual(h: &OperatorMatrix, eta: &MetricMatrix, probes: &[Vec<f64>]) -> f64 {
    let d = &eta.diagonal;
    probes
        .iter()
        .map(|v| {
            let eta_v: Vec<f64> = v.iter().zip(d).map(|(a, b)| a * b).collect();
            let h_eta_v = linalg::mat_vec(&h.matrix, &eta_v);
            let ht_v = linalg::mat_t_vec(&h.matrix, v);
            let diff: Vec<f64> = h_eta_v
                .iter()
                .zip(ht_v.iter().zip(d))
                .map(|(a, (b, e))| a - e * b)
                .collect();
            linalg::norm2(&diff) / linalg::norm2(&h_eta_v)
        })
        .fold(0.0, f64::max)
}

fn grid_spacing(disc: &Discretization) -> f64 {
    match disc {
        Discretization::Line(g) => g.spacing(),
        Discretization::Plane { x, y } => x.spacing().max(y.spacing()),
    }
}

/// Pseudo-Hermiticity `H† = η⁻¹ H η` with `η = e^{2f}`.
///
/// Similarity-mode matrices are checked through the full Frobenius residual
/// (skipped when `ln cond(η)` exceeds [`MAX_LOG_CONDITION`]); continuum-mode
/// matrices through localized probes of width `10h`.
pub fn check_pseudo_hermiticity(h: &OperatorMatrix, eta: &MetricMatrix, probes: usize, tolerance: f64) -> CheckResult {
    match h.mode {
        Construction::Similarity => {
            let id = PSEUDO_HERMITICITY_SIMILARITY;
            if eta.log_condition > MAX_LOG_CONDITION {
                return CheckResult::skipped(
                    id,
                    SkipCause::Conditioning,
                    format!(
                        "ln cond(eta) = {:.1} exceeds {MAX_LOG_CONDITION}",
                        eta.log_condition
                    ),
                )
                .detail("log_condition", eta.log_condition);
            }
            CheckResult::new(id, metric_frobenius_residual(h, eta), tolerance)
                .detail("log_condition", eta.log_condition)
                .detail("norm", "frobenius")
        }
        Construction::Continuum => {
            let width = PROBE_WIDTH_IN_H * grid_spacing(&h.discretization);
            let vs = gaussian_probes(&h.discretization, probes, width);
            CheckResult::new(PSEUDO_HERMITICITY_CONTINUUM, probe_residual(h, eta, &vs), tolerance)
                .detail("log_condition", eta.log_condition)
                .detail("probes", probes)
                .detail("probe_width", width)
        }
    }
}

fn line_metric(grid: &Grid, model: &ModelDefinition) -> Result<MetricMatrix> {
    operators::build_metric(grid, model)
}

/// Continuum-mode pseudo-Hermiticity under h-halving: the probe residual on
/// `base`, `base.refined()` and its refinement, with probes of fixed width
/// `10 h_base`. Reports the finest residual against `tolerance` and gates on
/// the smallest observed order reaching `min_order`.
pub fn pseudo_hermiticity_order(
    model: &ModelDefinition,
    base: &Grid,
    scheme: Scheme,
    probes: usize,
    tolerance: f64,
    min_order: f64,
) -> Result<CheckResult> {
    let width = PROBE_WIDTH_IN_H * base.spacing();
    let mut grids = vec![base.clone()];
    for _ in 0..2 {
        let next = grids.last().expect("non-empty").refined();
        grids.push(next);
    }
    let mut residuals = Vec::new();
    for grid in &grids {
        let (_, h) = build_line_pair(grid, model, scheme, Construction::Continuum)?;
        let eta = line_metric(grid, model)?;
        let vs = gaussian_probes(&h.discretization, probes, width);
        residuals.push(probe_residual(&h, &eta, &vs));
    }
    let spacings: Vec<f64> = grids.iter().map(Grid::spacing).collect();
    let orders = observed_orders(&residuals, &spacings);
    let worst = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let finest = *residuals.last().expect("three levels");
    Ok(CheckResult::new(PSEUDO_HERMITICITY_CONTINUUM, finest, tolerance)
        .gate("order_verified", worst >= min_order)
        .detail("residuals", &residuals)
        .detail("spacings", &spacings)
        .detail("observed_orders", &orders)
        .detail("min_order", min_order)
        .detail("probe_width", width)
        .detail("probes", probes))
}

/// How an isospectrality tolerance scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceScale {
    #[default]
    Absolute,
    /// Relative to the magnitude of the reference value.
    Relative,
    /// Multiplied by `‖H_H‖_F`.
    NormHh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(alias = "tol_re")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_im: Option<f64>,
    #[serde(default)]
    pub scale: ToleranceScale,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_order: Option<f64>,
}

impl ToleranceSpec {
    pub const fn absolute(tol: f64) -> Self {
        ToleranceSpec {
            tol,
            tol_im: None,
            scale: ToleranceScale::Absolute,
            min_order: None,
        }
    }

    fn resolve(&self, norm_hh: f64) -> (f64, f64) {
        let factor = match self.scale {
            ToleranceScale::NormHh => norm_hh,
            _ => 1.0,
        };
        (self.tol * factor, self.tol_im.unwrap_or(self.tol) * factor)
    }

    pub fn validate(&self, id: &str) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.tol) || !self.tol_im.is_none_or(ok) || !self.min_order.is_none_or(|o| o.is_finite()) {
            return Err(Error::config(format!(
                "tolerances.{id}: values must be finite and non-negative"
            )));
        }
        Ok(())
    }
}

/// Default tolerances, frozen from calibration runs on the catalog models.
pub fn default_tolerance(check_id: &str) -> ToleranceSpec {
    match check_id {
        OPERATOR_IDENTITY => ToleranceSpec::absolute(1e-13),
        PARTNER_HERMITICITY => ToleranceSpec::absolute(1e-12),
        MORSE_CONSISTENCY => ToleranceSpec::absolute(1e-12),
        ANALYTIC_SPECTRUM => ToleranceSpec {
            scale: ToleranceScale::Relative,
            ..ToleranceSpec::absolute(1e-3)
        },
        ISOSPECTRAL_SIMILARITY => ToleranceSpec {
            tol_im: Some(1e-8),
            scale: ToleranceScale::NormHh,
            ..ToleranceSpec::absolute(1e-8)
        },
        ISOSPECTRAL_CONTINUUM => ToleranceSpec {
            tol_im: Some(1e-6),
            ..ToleranceSpec::absolute(1e-2)
        },
        PSEUDO_HERMITICITY_SIMILARITY => ToleranceSpec::absolute(1e-10),
        PSEUDO_HERMITICITY_CONTINUUM => ToleranceSpec {
            min_order: Some(1.9),
            ..ToleranceSpec::absolute(1e-2)
        },
        EIGENFUNCTION_MAP_CONTINUUM => ToleranceSpec::absolute(1e-2),
        EIGENFUNCTION_MAP_SIMILARITY => ToleranceSpec::absolute(1e-6),
        _ => ToleranceSpec::absolute(1e-3), // normalizability_level_*
    }
}

fn isospectral_from(
    mode: Construction,
    hermitian: &SpectrumResult,
    pseudo: &SpectrumResult,
    norm_hh: f64,
    k: usize,
    tol: &ToleranceSpec,
) -> Result<CheckResult> {
    let id = match mode {
        Construction::Continuum => ISOSPECTRAL_CONTINUUM,
        Construction::Similarity => ISOSPECTRAL_SIMILARITY,
    };
    let (tol_re, tol_im) = tol.resolve(norm_hh);
    let report = match_spectra(pseudo, hermitian, k, tol_re, tol_im)?;
    let levels: Vec<Value> = report
        .pairs
        .iter()
        .map(|p| {
            json!({
                "re_hermitian": hermitian.eigenvalues[p.index_b].re,
                "re_pseudo": pseudo.eigenvalues[p.index_a].re,
                "im_pseudo": pseudo.eigenvalues[p.index_a].im,
            })
        })
        .collect();
    Ok(CheckResult::new(id, report.max_abs_re_diff, tol_re)
        .gate("imaginary_within_tolerance", report.max_abs_im <= tol_im)
        .detail("max_abs_im", report.max_abs_im)
        .detail("tol_im", tol_im)
        .detail("k", k)
        .detail("norm_hh_frobenius", norm_hh)
        .detail("kinetic", "-D2")
        .detail("levels", levels))
}

/// Grid(s) a model is discretized on.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Line(Grid),
    Plane { x: Grid, y: Grid },
}

impl GridSpec {
    pub fn discretization(&self) -> Discretization {
        match self {
            GridSpec::Line(g) => Discretization::Line(g.clone()),
            GridSpec::Plane { x, y } => Discretization::Plane { x: x.clone(), y: y.clone() },
        }
    }

    pub fn metadata(&self) -> Value {
        let one = |g: &Grid| json!({"x_min": g.x_min(), "x_max": g.x_max(), "n": g.len(), "h": g.spacing()});
        match self {
            GridSpec::Line(g) => one(g),
            GridSpec::Plane { x, y } => json!({"x": one(x), "y": one(y)}),
        }
    }

    fn box_width(&self) -> f64 {
        match self {
            GridSpec::Line(g) => g.width(),
            GridSpec::Plane { x, .. } => x.width(),
        }
    }
}

/// Builds `(H_H, H)` for any model on the matching grid.
pub fn build_pair(model: &ModelDefinition, grid: &GridSpec, scheme: Scheme, mode: Construction) -> Result<(OperatorMatrix, OperatorMatrix)> {
    match (grid, model.dimension) {
        (GridSpec::Line(g), Dimension::One) => build_line_pair(g, model, scheme, mode),
        (GridSpec::Plane { x, y }, Dimension::Two) => build_2d(x, y, model, scheme, mode),
        _ => Err(Error::config(format!(
            "model `{}` is {}-dimensional but the grid is not",
            model.name,
            model.dimension.as_usize()
        ))),
    }
}

fn build_metric_for(model: &ModelDefinition, grid: &GridSpec) -> Result<MetricMatrix> {
    match grid {
        GridSpec::Line(g) => operators::build_metric(g, model),
        GridSpec::Plane { x, y } => operators::build_metric_2d(x, y, model),
    }
}

/// Isospectrality of `H` and `H_H` over the `k` lowest levels.
pub fn check_isospectral(
    model: &ModelDefinition,
    grid: &GridSpec,
    scheme: Scheme,
    mode: Construction,
    k: usize,
    tol: &ToleranceSpec,
) -> Result<CheckResult> {
    let (hh, h) = build_pair(model, grid, scheme, mode)?;
    let hermitian = eigen_hermitian(&hh, Vectors::None)?;
    let pseudo = eigen_general(&h, Vectors::None)?;
    isospectral_from(mode, &hermitian, &pseudo, hh.frobenius(), k, tol)
}

#[derive(Debug, Clone)]
pub struct MappedState {
    /// Grid-normalized `e^f ψ`.
    pub values: Vec<Complex64>,
    /// Grid norm of `e^f ψ` before renormalization.
    pub raw_norm: f64,
}

/// Guard on `f(x_j)` when forming `e^f ψ`.
pub const MAP_EXPONENT_LIMIT: f64 = 300.0;

pub fn map_with_gauge(psi: &[Complex64], gauge: &[f64], measure: f64, nodes: impl Fn(usize) -> f64) -> Result<MappedState> {
    assert_eq!(psi.len(), gauge.len());
    let mut values = Vec::with_capacity(psi.len());
    for (j, (&p, &f)) in psi.iter().zip(gauge).enumerate() {
        if f > MAP_EXPONENT_LIMIT {
            return Err(Error::Overflow {
                what: "eigenfunction map e^f".into(),
                exponent: f,
                at: nodes(j),
                limit: MAP_EXPONENT_LIMIT,
            });
        }
        values.push(p * f.exp());
    }
    let raw_norm = (linalg::norm2_complex(&values).powi(2) * measure).sqrt();
    if raw_norm > 0.0 {
        values.iter_mut().for_each(|z| *z /= raw_norm);
    }
    Ok(MappedState { values, raw_norm })
}

/// `φ_j = e^{f(x_j)} ψ_j`, renormalized on the grid.
pub fn map_eigenfunction(psi: &[Complex64], f: &FunctionSpec, grid: &Grid) -> Result<MappedState> {
    let gauge: Vec<f64> = grid.points().iter().map(|&x| f.eval(x)).collect::<Result<_>>()?;
    map_with_gauge(psi, &gauge, grid.spacing(), |j| grid.points()[j])
}

/// `‖Hφ - Eφ‖₂ / ‖φ‖₂`.
pub fn eigen_residual(h: &OperatorMatrix, phi: &[Complex64], energy: f64) -> f64 {
    let hp = linalg::mat_vec_complex(&h.matrix, phi);
    let r: Vec<Complex64> = hp.iter().zip(phi).map(|(a, b)| a - energy * b).collect();
    linalg::norm2_complex(&r) / linalg::norm2_complex(phi)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Square-integrability diagnostics for a mapped state on a line grid.
///
/// The residual is the fraction of `Σ|φ|²h` carried by the outer 10% of the
/// nodes (5% at each end). A second gate requires `ln|φ|`, fitted linearly
/// over the outer 20% at each end, to decrease towards both endpoints.
pub fn check_normalizability(phi: &[Complex64], grid: &Grid, level: usize, tolerance: f64) -> CheckResult {
    let n = phi.len();
    let mass: Vec<f64> = phi.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = mass.iter().sum();
    let tail = ((n as f64) * 0.05).round().max(1.0) as usize;
    let tail_mass: f64 = mass[..tail].iter().chain(&mass[n - tail..]).sum::<f64>() / total;

    let band = ((n as f64) * 0.2).round().max(2.0) as usize;
    let xs = grid.points();
    let log_abs: Vec<f64> = phi.iter().map(|z| z.norm().max(f64::MIN_POSITIVE).ln()).collect();
    // outward slope: d ln|φ| / d(distance from the interior)
    let left_outward = -slope(&xs[..band], &log_abs[..band]);
    let right_outward = slope(&xs[n - band..], &log_abs[n - band..]);

    CheckResult::new(format!("{NORMALIZABILITY_PREFIX}{level}"), tail_mass, tolerance)
        .gate("decays_left", left_outward < 0.0)
        .gate("decays_right", right_outward < 0.0)
        .detail("slope_left_outward", left_outward)
        .detail("slope_right_outward", right_outward)
        .detail("level", level)
        .detail("tail_fraction_of_nodes", 2.0 * tail as f64 / n as f64)
}

/// Which constructions of `H` a run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Continuum,
    Similarity,
    #[default]
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<Construction> {
        match self {
            ModeSelection::Continuum => vec![Construction::Continuum],
            ModeSelection::Similarity => vec![Construction::Similarity],
            ModeSelection::Both => vec![Construction::Continuum, Construction::Similarity],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeSelection::Continuum => "continuum",
            ModeSelection::Similarity => "similarity",
            ModeSelection::Both => "both",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSetup {
    pub grid: GridSpec,
    pub scheme: Scheme,
    pub modes: ModeSelection,
    /// `None` runs every applicable check.
    pub checks: Option<Vec<String>>,
    pub k_levels: usize,
    pub tolerances: BTreeMap<String, ToleranceSpec>,
    pub probes: usize,
    pub normalizability_levels: Vec<usize>,
}

impl RunSetup {
    pub fn new(grid: GridSpec) -> Self {
        RunSetup {
            grid,
            scheme: Scheme::Central2,
            modes: ModeSelection::Both,
            checks: None,
            k_levels: 5,
            tolerances: BTreeMap::new(),
            probes: 5,
            normalizability_levels: vec![0],
        }
    }

    pub fn tolerance(&self, id: &str) -> ToleranceSpec {
        self.tolerances
            .get(id)
            .copied()
            .unwrap_or_else(|| default_tolerance(id))
    }

    fn wants(&self, id: &str) -> bool {
        self.checks
            .as_ref()
            .is_none_or(|list| list.iter().any(|c| c == id || c == "all"))
    }

    fn explicitly_requested(&self, id: &str) -> bool {
        self.checks
            .as_ref()
            .is_some_and(|list| list.iter().any(|c| c == id))
    }
}

/// Accumulates check results, turning errors into skipped entries.
struct Collector<'a> {
    setup: &'a RunSetup,
    results: Vec<CheckResult>,
}

impl Collector<'_> {
    fn run(&mut self, id: &str, f: impl FnOnce() -> Result<CheckResult>) {
        if !self.setup.wants(id) {
            return;
        }
        let result = match f() {
            Ok(mut r) => {
                r.check_id = id.to_string();
                r
            }
            Err(e) => CheckResult::from_error(id, &e),
        };
        self.results.push(result);
    }

    fn not_applicable(&mut self, id: &str, why: &str) {
        if self.setup.explicitly_requested(id) {
            self.results
                .push(CheckResult::skipped(id, SkipCause::NotApplicable, why));
        }
    }
}

/// Runs every applicable check for `model` and aggregates them.
pub fn run_all(model: &ModelDefinition, setup: &RunSetup) -> Result<VerificationReport> {
    let mut out = Collector {
        setup,
        results: Vec::new(),
    };
    let scheme = setup.scheme;
    let k = setup.k_levels;
    let disc = setup.grid.discretization();
    let measure = disc.measure();
    let keep = setup
        .normalizability_levels
        .iter()
        .copied()
        .max()
        .unwrap_or(0)
        .max(k.saturating_sub(1))
        + 1;

    let (hh, h_cont) = build_pair(model, &setup.grid, scheme, Construction::Continuum)?;
    let norm_hh = hh.frobenius();

    out.run(PARTNER_HERMITICITY, || {
        Ok(CheckResult::new(
            PARTNER_HERMITICITY,
            hh.hermiticity_defect(),
            setup.tolerance(PARTNER_HERMITICITY).tol,
        ))
    });

    if let GridSpec::Line(grid) = &setup.grid {
        out.run(OPERATOR_IDENTITY, || {
            check_operator_identity(grid, model, scheme, setup.tolerance(OPERATOR_IDENTITY).tol)
        });
    } else {
        out.not_applicable(OPERATOR_IDENTITY, "operator identity is checked on line grids only");
    }

    if let Some(spectra::AnalyticSpectrum::Morse { depth, alpha }) = model.analytic {
        out.run(MORSE_CONSISTENCY, || {
            let (v, f) = model.line_functions()?;
            let r = crate::model::morse_consistency_with(v, f, depth, alpha)?;
            Ok(CheckResult::new(MORSE_CONSISTENCY, r.max_deviation, setup.tolerance(MORSE_CONSISTENCY).tol)
                .detail("samples", r.samples))
        });
    } else {
        out.not_applicable(MORSE_CONSISTENCY, "model is not the Morse model");
    }

    let hermitian = match eigen_hermitian(&hh, Vectors::Lowest(keep.min(hh.dim()))) {
        Ok(s) => Some(s),
        Err(e) => {
            for id in [ANALYTIC_SPECTRUM, ISOSPECTRAL_CONTINUUM, ISOSPECTRAL_SIMILARITY] {
                out.run(id, || Err(Error::Solver {
                    dim: hh.dim(),
                    frobenius: norm_hh,
                    finite: linalg::all_finite(&hh.matrix),
                    reason: e.to_string(),
                }));
            }
            None
        }
    };

    if let Some(hermitian) = &hermitian {
        match model.analytic {
            Some(oracle) => out.run(ANALYTIC_SPECTRUM, || {
                let exact = oracle.lowest(k, setup.grid.box_width());
                let tol = setup.tolerance(ANALYTIC_SPECTRUM);
                let numeric = hermitian.real_parts(exact.len());
                let errors: Vec<f64> = numeric
                    .iter()
                    .zip(&exact)
                    .map(|(a, e)| match tol.scale {
                        ToleranceScale::Relative => (a - e).abs() / e.abs(),
                        _ => (a - e).abs(),
                    })
                    .collect();
                let worst = errors.iter().copied().fold(0.0, f64::max);
                Ok(CheckResult::new(ANALYTIC_SPECTRUM, worst, tol.tol)
                    .gate("levels_available", exact.len() == k)
                    .detail("oracle", oracle.describe())
                    .detail("exact", &exact)
                    .detail("numeric", &numeric)
                    .detail("scale", tol.scale))
            }),
            None => out.not_applicable(ANALYTIC_SPECTRUM, "model has no closed-form spectrum"),
        }
    }

    let gauge = operators::gauge_values(&disc, model);
    let nodes = |j: usize| match &setup.grid {
        GridSpec::Line(g) => g.points()[j],
        GridSpec::Plane { x, y } => x.points()[j / y.len()],
    };

    for mode in setup.modes.modes() {
        let (iso_id, map_id) = match mode {
            Construction::Continuum => (ISOSPECTRAL_CONTINUUM, EIGENFUNCTION_MAP_CONTINUUM),
            Construction::Similarity => (ISOSPECTRAL_SIMILARITY, EIGENFUNCTION_MAP_SIMILARITY),
        };
        let h = match mode {
            Construction::Continuum => Ok(h_cont.clone()),
            Construction::Similarity => build_pair(model, &setup.grid, scheme, mode).map(|(_, h)| h),
        };
        let h = match h {
            Ok(h) => h,
            Err(e) => {
                for id in [iso_id, map_id] {
                    out.run(id, || Err(Error::config(e.to_string())));
                }
                continue;
            }
        };

        if let Some(hermitian) = &hermitian {
            out.run(iso_id, || {
                let pseudo = eigen_general(&h, Vectors::None)?;
                isospectral_from(mode, hermitian, &pseudo, norm_hh, k, &setup.tolerance(iso_id))
            });
            out.run(map_id, || {
                let gauge = gauge.as_ref().map_err(|e| Error::config(e.to_string()))?;
                let psi = hermitian.eigenvector(0).expect("ground state kept");
                let mapped = map_with_gauge(psi, gauge, measure, nodes)?;
                let energy = hermitian.eigenvalues[0].re;
                Ok(CheckResult::new(map_id, eigen_residual(&h, &mapped.values, energy), setup.tolerance(map_id).tol)
                    .detail("level", 0)
                    .detail("energy", energy)
                    .detail("raw_norm", mapped.raw_norm))
            });
        }

        match mode {
            Construction::Similarity => out.run(PSEUDO_HERMITICITY_SIMILARITY, || {
                let eta = build_metric_for(model, &setup.grid)?;
                Ok(check_pseudo_hermiticity(&h, &eta, setup.probes, setup.tolerance(PSEUDO_HERMITICITY_SIMILARITY).tol))
            }),
            Construction::Continuum => match &setup.grid {
                GridSpec::Line(grid) => out.run(PSEUDO_HERMITICITY_CONTINUUM, || {
                    let tol = setup.tolerance(PSEUDO_HERMITICITY_CONTINUUM);
                    let base_n = ((grid.len() + 1) / 4).saturating_sub(1).max(crate::grid::MIN_POINTS);
                    let base = make_grid(grid.x_min(), grid.x_max(), base_n)?;
                    pseudo_hermiticity_order(model, &base, scheme, setup.probes, tol.tol, tol.min_order.unwrap_or(1.9))
                }),
                GridSpec::Plane { .. } => out.not_applicable(
                    PSEUDO_HERMITICITY_CONTINUUM,
                    "continuum probe study runs on line grids only",
                ),
            },
        }
    }

    if let (Some(hermitian), GridSpec::Line(grid)) = (&hermitian, &setup.grid) {
        for &level in &setup.normalizability_levels {
            let id = format!("{NORMALIZABILITY_PREFIX}{level}");
            out.run(&id, || {
                let gauge = gauge.as_ref().map_err(|e| Error::config(e.to_string()))?;
                let psi = hermitian
                    .eigenvector(level)
                    .ok_or_else(|| Error::config(format!("level {level} not available")))?;
                let mapped = map_with_gauge(psi, gauge, measure, nodes)?;
                Ok(check_normalizability(&mapped.values, grid, level, setup.tolerance(&id).tol)
                    .detail("energy", hermitian.eigenvalues[level].re))
            });
        }
    }

    let mode = setup.modes.name();
    VerificationReport::new(&model.name, setup.grid.metadata(), mode, out.results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog;
    use crate::operators::build_metric;

    #[test]
    fn check_result_invariant() {
        let r = CheckResult::new("x", 1.0, 2.0);
        assert!(r.passed);
        let r = CheckResult::new("x", 3.0, 2.0);
        assert!(!r.passed);
        let r = CheckResult::new("x", f64::NAN, 2.0);
        assert!(!r.passed);
        let r = CheckResult::new("x", 1.0, 2.0).gate("g", false);
        assert!(!r.passed);
    }

    #[test]
    fn report_aggregation() {
        let checks = vec![
            CheckResult::new("b", 1.0, 2.0),
            CheckResult::new("a", 1.0, 2.0),
            CheckResult::skipped("c", SkipCause::Conditioning, "too wide"),
        ];
        let r = VerificationReport::new("m", Value::Null, "both", checks).unwrap();
        assert!(r.overall);
        assert_eq!(r.checks[0].check_id, "a");

        let checks = vec![CheckResult::new("a", 3.0, 2.0), CheckResult::new("b", 1.0, 2.0)];
        assert!(!VerificationReport::new("m", Value::Null, "both", checks).unwrap().overall);

        let only_skipped = vec![CheckResult::skipped("c", SkipCause::Solver, "boom")];
        assert!(matches!(
            VerificationReport::new("m", Value::Null, "both", only_skipped),
            Err(Error::EmptyReport)
        ));
    }

    #[test]
    fn operator_identity_zero_gauge_exact() {
        let grid = make_grid(-3.0, 3.0, 64).unwrap();
        let free = catalog::build_default("free").unwrap();
        let r = check_operator_identity(&grid, &free, Scheme::Central2, 1e-13).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn operator_identity_harmonic() {
        let grid = make_grid(-6.0, 6.0, 512).unwrap();
        let model = catalog::build_default("harmonic_gauge").unwrap();
        let r = check_operator_identity(&grid, &model, Scheme::Central2, 1e-13).unwrap();
        assert!(r.passed, "residual {}", r.residual);
    }

    #[test]
    fn identity_metric_any_hermitian() {
        let grid = make_grid(-4.0, 4.0, 60).unwrap();
        let free = catalog::build_default("free").unwrap();
        let eta = build_metric(&grid, &free).unwrap();
        for mode in [Construction::Continuum, Construction::Similarity] {
            let (_, h) = build_line_pair(&grid, &free, Scheme::Central2, mode).unwrap();
            let r = check_pseudo_hermiticity(&h, &eta, 5, 1e-14);
            assert!(r.passed && r.residual <= 1e-14, "{mode}: {}", r.residual);
        }
    }

    #[test]
    fn similarity_pseudo_hermiticity_harmonic() {
        let grid = make_grid(-4.0, 4.0, 400).unwrap();
        let model = catalog::build_default("harmonic_gauge").unwrap();
        let eta = build_metric(&grid, &model).unwrap();
        let (_, h) = build_line_pair(&grid, &model, Scheme::Central2, Construction::Similarity).unwrap();
        let r = check_pseudo_hermiticity(&h, &eta, 5, 1e-10);
        assert!(r.passed, "residual {}", r.residual);
    }

    #[test]
    fn similarity_pseudo_hermiticity_skips_wide_domains() {
        let grid = make_grid(-8.0, 8.0, 200).unwrap();
        let model = catalog::build_default("harmonic_gauge").unwrap();
        let eta = build_metric(&grid, &model).unwrap();
        let (_, h) = build_line_pair(&grid, &model, Scheme::Central2, Construction::Similarity).unwrap();
        let r = check_pseudo_hermiticity(&h, &eta, 5, 1e-10);
        assert!(r.is_skipped());
        assert_eq!(r.skip_cause, Some(SkipCause::Conditioning));
    }

    #[test]
    fn mapping_with_zero_gauge_is_identity() {
        let grid = make_grid(-1.0, 1.0, 20).unwrap();
        let h = grid.spacing();
        let raw: Vec<Complex64> = (0..20).map(|j| Complex64::new((j as f64).sin(), 0.0)).collect();
        let norm = (raw.iter().map(|z| z.norm_sqr()).sum::<f64>() * h).sqrt();
        let psi: Vec<Complex64> = raw.iter().map(|z| z / norm).collect();
        let mapped = map_eigenfunction(&psi, &FunctionSpec::zero(Representation::Coordinate), &grid).unwrap();
        for (a, b) in mapped.values.iter().zip(&psi) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!((mapped.raw_norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mapping_overflow_guard() {
        let grid = make_grid(-1.0, 1.0, 20).unwrap();
        let psi = vec![Complex64::new(1.0, 0.0); 20];
        let f = FunctionSpec::polynomial(vec![400.0], Representation::Coordinate).unwrap();
        assert!(matches!(map_eigenfunction(&psi, &f, &grid), Err(Error::Overflow { .. })));
    }

    #[test]
    fn normalizability_of_gaussian_and_growing_profiles() {
        let grid = make_grid(-10.0, 10.0, 400).unwrap();
        let gauss: Vec<Complex64> = grid.points().iter().map(|x| Complex64::new((-x * x).exp(), 0.0)).collect();
        let r = check_normalizability(&gauss, &grid, 0, 1e-3);
        assert!(r.passed && r.residual <= 1e-12);

        let growing: Vec<Complex64> = grid.points().iter().map(|x| Complex64::new((0.5 * x).exp(), 0.0)).collect();
        let r = check_normalizability(&growing, &grid, 0, 1e-3);
        assert!(!r.passed);
    }

    #[test]
    fn orders_from_errors() {
        let orders = observed_orders(&[1.0, 0.25, 0.0625], &[0.1, 0.05, 0.025]);
        for o in orders {
            assert!((o - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn known_check_ids() {
        assert!(is_known_check("operator_identity"));
        assert!(is_known_check("normalizability_level_3"));
        assert!(!is_known_check("normalizability_level_x"));
        assert!(!is_known_check("speed"));
    }
}
