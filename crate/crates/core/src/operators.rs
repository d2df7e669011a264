//! Dense matrices for the Hermitian partner `H_H = p² + V + f'²`, the
//! non-Hermitian `H = p² + V + i(f'p + pf')`, the metric `η = e^{2f}`, the
//! momentum-space mirror and the two-dimensional Kronecker-sum versions.
//!
//! With `p = -i D1` the symmetrized term `i(f'p + pf')` is the real matrix
//! `F D1 + D1 F`, so every operator here is stored as a real matrix. The same
//! holds in momentum representation, where `x = +i D1` and
//! `-i(g'x + xg') = G D1 + D1 G`.

use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{diff_matrix, DerivativeOrder, Grid, Scheme};
use crate::linalg;
use crate::model::{Dimension, FunctionSpec, ModelDefinition, Representation};

/// Per-entry guard on `|f(x_j) - f(x_k)|` in similarity mode.
pub const SIMILARITY_EXPONENT_LIMIT: f64 = 300.0;
/// Guard on `|2 f(x_j)|` when forming the metric.
pub const METRIC_EXPONENT_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hermiticity {
    Hermitian,
    NonHermitian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    /// Discretize the operator term by term.
    Continuum,
    /// Conjugate the discrete Hermitian partner by `diag(e^f)`.
    Similarity,
}

impl std::fmt::Display for Construction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Construction::Continuum => write!(f, "continuum"),
            Construction::Similarity => write!(f, "similarity"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Discretization {
    Line(Grid),
    Plane { x: Grid, y: Grid },
}

impl Discretization {
    pub fn len(&self) -> usize {
        match self {
            Discretization::Line(g) => g.len(),
            Discretization::Plane { x, y } => x.len() * y.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element of the grid inner product.
    pub fn measure(&self) -> f64 {
        match self {
            Discretization::Line(g) => g.spacing(),
            Discretization::Plane { x, y } => x.spacing() * y.spacing(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub matrix: Mat<f64>,
    pub hermiticity: Hermiticity,
    pub mode: Construction,
    pub scheme: Scheme,
    pub discretization: Discretization,
    pub representation: Representation,
    pub model: String,
    /// `f` at the nodes, recorded for similarity-mode matrices.
    pub gauge_values: Option<Vec<f64>>,
    /// The Hermitian matrix this one was conjugated from (similarity mode).
    pub partner: Option<Arc<OperatorMatrix>>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn frobenius(&self) -> f64 {
        linalg::frobenius(&self.matrix)
    }

    /// `max |M - Mᵀ| / max |M|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = linalg::max_abs(&self.matrix);
        if scale == 0.0 {
            0.0
        } else {
            linalg::max_asymmetry(&self.matrix) / scale
        }
    }
}

#[derive(Debug, Clone)]
pub struct MetricMatrix {
    pub diagonal: Vec<f64>,
    /// `2 (max f - min f)` over the grid, i.e. `ln cond(η)`.
    pub log_condition: f64,
}

fn require_line(model: &ModelDefinition, representation: Representation) -> Result<(&FunctionSpec, &FunctionSpec)> {
    if model.dimension != Dimension::One {
        return Err(Error::UnsupportedModel(format!(
            "model `{}` is two-dimensional; use build_2d",
            model.name
        )));
    }
    if model.representation != representation {
        return Err(Error::Representation(format!(
            "model `{}` is in {} representation, builder expects {representation}",
            model.name, model.representation
        )));
    }
    model.line_functions()
}

fn sample(spec: &FunctionSpec, points: &[f64], derivative: bool) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|&x| if derivative { spec.eval_prime(x) } else { spec.eval(x) })
        .collect()
}

/// `-D2 + diag(V + (s f')²)` on a line; `s = 1 + perturbation`.
fn line_hermitian(grid: &Grid, potential: &FunctionSpec, gauge: &FunctionSpec, scheme: Scheme, scale: f64) -> Result<Mat<f64>> {
    let d2 = diff_matrix(grid, DerivativeOrder::Second, scheme).matrix;
    let v = sample(potential, grid.points(), false)?;
    let fp = sample(gauge, grid.points(), true)?;
    let mut m = -d2;
    for j in 0..grid.len() {
        let g = scale * fp[j];
        m[(j, j)] += v[j] + g * g;
    }
    check_finite(&m, grid)?;
    Ok(m)
}

/// `-D2 + diag(V) + F D1 + D1 F` on a line, `F = diag(s f')`.
fn line_continuum(grid: &Grid, potential: &FunctionSpec, gauge: &FunctionSpec, scheme: Scheme, scale: f64) -> Result<Mat<f64>> {
    let d1 = diff_matrix(grid, DerivativeOrder::First, scheme).matrix;
    let d2 = diff_matrix(grid, DerivativeOrder::Second, scheme).matrix;
    let v = sample(potential, grid.points(), false)?;
    let fp: Vec<f64> = sample(gauge, grid.points(), true)?
        .into_iter()
        .map(|g| scale * g)
        .collect();
    let n = grid.len();
    let mut m = -d2;
    for j in 0..n {
        m[(j, j)] += v[j];
    }
    for k in 0..n {
        for j in 0..n {
            let d = d1[(j, k)];
            if d != 0.0 {
                m[(j, k)] += d * (fp[j] + fp[k]);
            }
        }
    }
    check_finite(&m, grid)?;
    Ok(m)
}

fn check_finite(m: &Mat<f64>, grid: &Grid) -> Result<()> {
    for j in 0..m.nrows() {
        if !m[(j, j)].is_finite() {
            return Err(Error::Evaluation {
                what: "operator diagonal".into(),
                at: grid.points()[j % grid.len()],
            });
        }
    }
    Ok(())
}

/// `M_jk e^{f_j - f_k}` for every stored entry, with the per-entry exponent guard.
fn conjugate_by_gauge(hermitian: &Mat<f64>, gauge: &[f64]) -> Result<Mat<f64>> {
    let n = hermitian.nrows();
    let mut out = Mat::<f64>::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            let entry = hermitian[(j, k)];
            if entry == 0.0 {
                continue;
            }
            let gap = gauge[j] - gauge[k];
            if gap.abs() > SIMILARITY_EXPONENT_LIMIT {
                return Err(Error::Conditioning {
                    gap: gap.abs(),
                    limit: SIMILARITY_EXPONENT_LIMIT,
                    row: j,
                    col: k,
                });
            }
            out[(j, k)] = entry * gap.exp();
        }
    }
    Ok(out)
}

fn hermitian_line_operator(grid: &Grid, model: &ModelDefinition, scheme: Scheme, representation: Representation) -> Result<OperatorMatrix> {
    let (v, f) = require_line(model, representation)?;
    Ok(OperatorMatrix {
        matrix: line_hermitian(grid, v, f, scheme, 1.0)?,
        hermiticity: Hermiticity::Hermitian,
        mode: Construction::Continuum,
        scheme,
        discretization: Discretization::Line(grid.clone()),
        representation,
        model: model.name.clone(),
        gauge_values: None,
        partner: None,
    })
}

fn pseudo_line_operator(
    grid: &Grid,
    model: &ModelDefinition,
    scheme: Scheme,
    mode: Construction,
    representation: Representation,
) -> Result<OperatorMatrix> {
    let (v, f) = require_line(model, representation)?;
    let scale = 1.0 + model.f_prime_perturbation;
    let (matrix, gauge_values, partner) = match mode {
        Construction::Continuum => (line_continuum(grid, v, f, scheme, scale)?, None, None),
        Construction::Similarity => {
            let hermitian = line_hermitian(grid, v, f, scheme, scale)?;
            let gauge = sample(f, grid.points(), false)?;
            let matrix = conjugate_by_gauge(&hermitian, &gauge)?;
            let partner = OperatorMatrix {
                matrix: hermitian,
                hermiticity: Hermiticity::Hermitian,
                mode: Construction::Continuum,
                scheme,
                discretization: Discretization::Line(grid.clone()),
                representation,
                model: model.name.clone(),
                gauge_values: None,
                partner: None,
            };
            (matrix, Some(gauge), Some(Arc::new(partner)))
        }
    };
    let hermiticity = if f.is_zero() && model.f_prime_perturbation == 0.0 {
        Hermiticity::Hermitian
    } else {
        Hermiticity::NonHermitian
    };
    Ok(OperatorMatrix {
        matrix,
        hermiticity,
        mode,
        scheme,
        discretization: Discretization::Line(grid.clone()),
        representation,
        model: model.name.clone(),
        gauge_values,
        partner,
    })
}

/// Hermitian partner `p² + V + f'²` in coordinate representation.
pub fn build_hermitian(grid: &Grid, model: &ModelDefinition, scheme: Scheme) -> Result<OperatorMatrix> {
    hermitian_line_operator(grid, model, scheme, Representation::Coordinate)
}

/// Non-Hermitian partner `p² + V + i(f'p + pf')` in coordinate representation.
pub fn build_pseudo(grid: &Grid, model: &ModelDefinition, scheme: Scheme, mode: Construction) -> Result<OperatorMatrix> {
    pseudo_line_operator(grid, model, scheme, mode, Representation::Coordinate)
}

/// Both partners for a one-dimensional model in either representation.
pub fn build_line_pair(grid: &Grid, model: &ModelDefinition, scheme: Scheme, mode: Construction) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let representation = model.representation;
    Ok((
        hermitian_line_operator(grid, model, scheme, representation)?,
        pseudo_line_operator(grid, model, scheme, mode, representation)?,
    ))
}

/// Momentum-grid mirror: `x² + V(p) + g'²` and `x² + V(p) - i(g'x + xg')`
/// with `x = +i d/dp`, central2, built term by term.
pub fn build_momentum_dual(grid_p: &Grid, model: &ModelDefinition) -> Result<(OperatorMatrix, OperatorMatrix)> {
    build_momentum_dual_with(grid_p, model, Scheme::Central2, Construction::Continuum)
}

pub fn build_momentum_dual_with(
    grid_p: &Grid,
    model: &ModelDefinition,
    scheme: Scheme,
    mode: Construction,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    Ok((
        hermitian_line_operator(grid_p, model, scheme, Representation::Momentum)?,
        pseudo_line_operator(grid_p, model, scheme, mode, Representation::Momentum)?,
    ))
}

/// Gauge values at the nodes of a discretization (row-major `i * ny + j` in 2D).
pub fn gauge_values(discretization: &Discretization, model: &ModelDefinition) -> Result<Vec<f64>> {
    match discretization {
        Discretization::Line(grid) => {
            let (_, f) = model.line_functions()?;
            sample(f, grid.points(), false)
        }
        Discretization::Plane { x, y } => {
            let (fx, fy) = model.gauge.as_separable().ok_or_else(|| {
                Error::UnsupportedModel(format!("model `{}` has a non-separable gauge", model.name))
            })?;
            let ax = sample(fx, x.points(), false)?;
            let ay = sample(fy, y.points(), false)?;
            Ok(ax.iter().flat_map(|a| ay.iter().map(move |b| a + b)).collect())
        }
    }
}

fn metric_from_gauge(gauge: &[f64], nodes: impl Fn(usize) -> f64) -> Result<MetricMatrix> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut diagonal = Vec::with_capacity(gauge.len());
    for (j, &f) in gauge.iter().enumerate() {
        if (2.0 * f).abs() > METRIC_EXPONENT_LIMIT {
            return Err(Error::Overflow {
                what: "metric e^{2f}".into(),
                exponent: 2.0 * f,
                at: nodes(j),
                limit: METRIC_EXPONENT_LIMIT,
            });
        }
        lo = lo.min(f);
        hi = hi.max(f);
        diagonal.push((2.0 * f).exp());
    }
    Ok(MetricMatrix {
        diagonal,
        log_condition: 2.0 * (hi - lo),
    })
}

/// Metric `η = diag(e^{2 f(x_j)})` for a one-dimensional model.
pub fn build_metric(grid: &Grid, model: &ModelDefinition) -> Result<MetricMatrix> {
    if model.dimension != Dimension::One {
        return Err(Error::UnsupportedModel("build_metric expects a one-dimensional model".into()));
    }
    let gauge = gauge_values(&Discretization::Line(grid.clone()), model)?;
    metric_from_gauge(&gauge, |j| grid.points()[j])
}

pub fn build_metric_2d(grid_x: &Grid, grid_y: &Grid, model: &ModelDefinition) -> Result<MetricMatrix> {
    let disc = Discretization::Plane {
        x: grid_x.clone(),
        y: grid_y.clone(),
    };
    let gauge = gauge_values(&disc, model)?;
    let ny = grid_y.len();
    metric_from_gauge(&gauge, |k| grid_x.points()[k / ny])
}

/// Kronecker-sum assembly of `(H_H, H)` for an additively separable 2D model.
///
/// Node `(x_i, y_j)` maps to row `i * ny + j`.
pub fn build_2d(
    grid_x: &Grid,
    grid_y: &Grid,
    model: &ModelDefinition,
    scheme: Scheme,
    mode: Construction,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if model.dimension != Dimension::Two {
        return Err(Error::UnsupportedModel(format!(
            "model `{}` is not two-dimensional",
            model.name
        )));
    }
    let (vx, vy) = model.potential.as_separable().ok_or_else(|| {
        Error::UnsupportedModel(format!("model `{}` has a non-separable potential", model.name))
    })?;
    let (fx, fy) = model.gauge.as_separable().ok_or_else(|| {
        Error::UnsupportedModel(format!("model `{}` has a non-separable gauge", model.name))
    })?;
    let scale = 1.0 + model.f_prime_perturbation;
    let ix = linalg::identity(grid_x.len());
    let iy = linalg::identity(grid_y.len());
    let kron_sum = |ax: &Mat<f64>, ay: &Mat<f64>| linalg::kron(ax, &iy) + linalg::kron(&ix, ay);

    let disc = Discretization::Plane {
        x: grid_x.clone(),
        y: grid_y.clone(),
    };
    let hermitian_matrix = kron_sum(
        &line_hermitian(grid_x, vx, fx, scheme, 1.0)?,
        &line_hermitian(grid_y, vy, fy, scheme, 1.0)?,
    );
    let hermitian = OperatorMatrix {
        matrix: hermitian_matrix,
        hermiticity: Hermiticity::Hermitian,
        mode: Construction::Continuum,
        scheme,
        discretization: disc.clone(),
        representation: model.representation,
        model: model.name.clone(),
        gauge_values: None,
        partner: None,
    };

    let (matrix, gauge, partner) = match mode {
        Construction::Continuum => (
            kron_sum(
                &line_continuum(grid_x, vx, fx, scheme, scale)?,
                &line_continuum(grid_y, vy, fy, scheme, scale)?,
            ),
            None,
            None,
        ),
        Construction::Similarity => {
            let base = if scale == 1.0 {
                hermitian.clone()
            } else {
                OperatorMatrix {
                    matrix: kron_sum(
                        &line_hermitian(grid_x, vx, fx, scheme, scale)?,
                        &line_hermitian(grid_y, vy, fy, scheme, scale)?,
                    ),
                    ..hermitian.clone()
                }
            };
            let gauge = gauge_values(&disc, model)?;
            let matrix = conjugate_by_gauge(&base.matrix, &gauge)?;
            (matrix, Some(gauge), Some(Arc::new(base)))
        }
    };
    let trivial = fx.is_zero() && fy.is_zero() && model.f_prime_perturbation == 0.0;
    let pseudo = OperatorMatrix {
        matrix,
        hermiticity: if trivial {
            Hermiticity::Hermitian
        } else {
            Hermiticity::NonHermitian
        },
        mode,
        scheme,
        discretization: disc,
        representation: model.representation,
        model: model.name.clone(),
        gauge_values: gauge,
        partner,
    };
    Ok((hermitian, pseudo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::model::catalog;

    fn harmonic() -> ModelDefinition {
        catalog::build_default("harmonic_gauge").unwrap()
    }

    #[test]
    fn free_model_both_modes_equal_minus_d2() {
        let grid = make_grid(-3.0, 3.0, 30).unwrap();
        let free = catalog::build_default("free").unwrap();
        let d2 = diff_matrix(&grid, DerivativeOrder::Second, Scheme::Central2).matrix;
        let hh = build_hermitian(&grid, &free, Scheme::Central2).unwrap();
        for mode in [Construction::Continuum, Construction::Similarity] {
            let h = build_pseudo(&grid, &free, Scheme::Central2, mode).unwrap();
            assert_eq!(h.hermiticity, Hermiticity::Hermitian);
            for i in 0..30 {
                for j in 0..30 {
                    assert_eq!(h.matrix[(i, j)], -d2[(i, j)]);
                    assert_eq!(hh.matrix[(i, j)], -d2[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn hermitian_partner_is_symmetric() {
        for name in catalog::line_models() {
            let model = catalog::build_default(name).unwrap();
            let grid = make_grid(-2.0, 9.0, 64).unwrap();
            let (hh, _) = build_line_pair(&grid, &model, Scheme::Central4, Construction::Continuum).unwrap();
            assert_eq!(hh.hermiticity_defect(), 0.0, "{name}");
        }
    }

    #[test]
    fn continuum_minus_hermitian_is_three_term_structure() {
        let grid = make_grid(-2.0, 9.0, 80).unwrap();
        let model = catalog::build_default("morse").unwrap();
        let (_, f) = model.line_functions().unwrap();
        let hh = build_hermitian(&grid, &model, Scheme::Central2).unwrap();
        let h = build_pseudo(&grid, &model, Scheme::Central2, Construction::Continuum).unwrap();
        let d1 = diff_matrix(&grid, DerivativeOrder::First, Scheme::Central2).matrix;
        let fp: Vec<f64> = grid.points().iter().map(|&x| f.eval_prime(x).unwrap()).collect();
        for j in 0..80 {
            for k in 0..80 {
                let mut expected = d1[(j, k)] * (fp[j] + fp[k]);
                if j == k {
                    expected -= fp[j] * fp[j];
                }
                let diff = h.matrix[(j, k)] - hh.matrix[(j, k)];
                assert!((diff - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
            }
        }
    }

    #[test]
    fn similarity_is_conjugation_of_stored_partner() {
        let grid = make_grid(-4.0, 4.0, 40).unwrap();
        let h = build_pseudo(&grid, &harmonic(), Scheme::Central2, Construction::Similarity).unwrap();
        let partner = h.partner.as_ref().unwrap();
        let gauge = h.gauge_values.as_ref().unwrap();
        for j in 0..40 {
            for k in 0..40 {
                let expected = partner.matrix[(j, k)] * (gauge[j] - gauge[k]).exp();
                assert_eq!(h.matrix[(j, k)], expected);
            }
        }
    }

    #[test]
    fn continuum_harmonic_reproduces_gaussian_image() {
        // -u'' - 2x u' - u on u = e^{-x²} gives exactly u
        let grid = make_grid(-6.0, 6.0, 1200).unwrap();
        let h = build_pseudo(&grid, &harmonic(), Scheme::Central2, Construction::Continuum).unwrap();
        let u: Vec<f64> = grid.points().iter().map(|x| (-x * x).exp()).collect();
        let hu = linalg::mat_vec(&h.matrix, &u);
        let h2 = grid.spacing().powi(2);
        for j in 1..grid.len() - 1 {
            assert!((hu[j] - u[j]).abs() <= 10.0 * h2, "row {j}");
        }
    }

    #[test]
    fn similarity_guard_trips() {
        let grid = make_grid(-2.0, 2.0, 9).unwrap();
        let model = catalog::build(
            "harmonic_gauge",
            serde_json::json!({"a": 1000.0}).as_object().unwrap(),
        )
        .unwrap();
        let err = build_pseudo(&grid, &model, Scheme::Central2, Construction::Similarity).unwrap_err();
        assert!(matches!(err, Error::Conditioning { .. }));
    }

    #[test]
    fn metric_examples() {
        let grid = make_grid(-4.0, 4.0, 79).unwrap();
        let eta = build_metric(&grid, &catalog::build_default("free").unwrap()).unwrap();
        assert!(eta.diagonal.iter().all(|&d| d == 1.0));
        assert_eq!(eta.log_condition, 0.0);

        let eta = build_metric(&grid, &harmonic()).unwrap();
        for (x, d) in grid.points().iter().zip(&eta.diagonal) {
            assert!((d - (-x * x).exp()).abs() < 1e-15);
        }
        // max f = 0 at x = 0 (a node), min f at the outermost nodes
        let edge = grid.points()[0];
        assert!((eta.log_condition - edge * edge).abs() < 1e-12);
        assert!((eta.log_condition - 15.21).abs() < 1e-12);

        let grid = make_grid(-2.0, 8.0, 99).unwrap();
        let morse = catalog::build_default("morse").unwrap();
        let eta = build_metric(&grid, &morse).unwrap();
        assert!(eta.diagonal.iter().all(|&d| d > 0.0));
        for (pair, xs) in eta.diagonal.windows(2).zip(grid.points().windows(2)) {
            if xs[0] > 0.0 {
                assert!(pair[1] > pair[0]);
            }
        }
    }

    #[test]
    fn metric_overflow_guard() {
        let grid = make_grid(-30.0, 30.0, 99).unwrap();
        let err = build_metric(&grid, &harmonic()).unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }));
    }

    #[test]
    fn dual_requires_momentum_model() {
        let grid = make_grid(-5.0, 5.0, 50).unwrap();
        assert!(matches!(
            build_momentum_dual(&grid, &harmonic()),
            Err(Error::Representation(_))
        ));
        let dual = catalog::build_default("harmonic_dual_p").unwrap();
        assert!(build_hermitian(&grid, &dual, Scheme::Central2).is_err());
        let (hh, h) = build_momentum_dual(&grid, &dual).unwrap();
        assert_eq!(hh.representation, Representation::Momentum);
        assert_eq!(h.hermiticity, Hermiticity::NonHermitian);
    }

    #[test]
    fn dual_with_zero_gauge_is_hermitian_partner() {
        let grid = make_grid(-5.0, 5.0, 50).unwrap();
        let dual = catalog::build(
            "harmonic_dual_p",
            serde_json::json!({"a": 0.0, "v": [0.0, 0.0, 1.0]}).as_object().unwrap(),
        )
        .unwrap();
        let (hh, h) = build_momentum_dual(&grid, &dual).unwrap();
        for i in 0..50 {
            for j in 0..50 {
                assert_eq!(hh.matrix[(i, j)], h.matrix[(i, j)]);
            }
        }
    }

    #[test]
    fn two_d_rejects_non_separable_and_line_models() {
        let g = make_grid(-1.0, 1.0, 8).unwrap();
        assert!(matches!(
            build_2d(&g, &g, &harmonic(), Scheme::Central2, Construction::Continuum),
            Err(Error::UnsupportedModel(_))
        ));
        let table = crate::model::JointTable {
            xs: vec![-1.0, 1.0],
            ys: vec![-1.0, 1.0],
            values: vec![0.0; 4],
            grad_x: vec![0.0; 4],
            grad_y: vec![0.0; 4],
        };
        let c = Representation::Coordinate;
        let model = ModelDefinition::new(
            "joint",
            c,
            crate::model::Field::Joint(table),
            crate::model::Field::Separable {
                x: FunctionSpec::zero(c),
                y: FunctionSpec::zero(c),
            },
            None,
        )
        .unwrap();
        assert!(matches!(
            build_2d(&g, &g, &model, Scheme::Central2, Construction::Continuum),
            Err(Error::UnsupportedModel(_))
        ));
    }

    #[test]
    fn two_d_zero_gauge_gives_equal_partners() {
        let g = make_grid(-2.0, 2.0, 10).unwrap();
        let c = Representation::Coordinate;
        let model = ModelDefinition::new(
            "free2d",
            c,
            crate::model::Field::Separable {
                x: FunctionSpec::polynomial(vec![0.0, 0.0, 1.0], c).unwrap(),
                y: FunctionSpec::zero(c),
            },
            crate::model::Field::Separable {
                x: FunctionSpec::zero(c),
                y: FunctionSpec::zero(c),
            },
            None,
        )
        .unwrap();
        let (hh, h) = build_2d(&g, &g, &model, Scheme::Central2, Construction::Continuum).unwrap();
        assert_eq!(h.hermiticity, Hermiticity::Hermitian);
        assert_eq!(hh.dim(), 100);
        for i in 0..100 {
            for j in 0..100 {
                assert_eq!(hh.matrix[(i, j)], h.matrix[(i, j)]);
            }
        }
    }
}
