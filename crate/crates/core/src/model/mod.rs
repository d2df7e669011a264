//! Potentials `V` and gauge functions `f` with exact first derivatives.
//!
//! Every function in this module is evaluated in closed form together with its
//! derivative. Nothing downstream differentiates `f` numerically, so all
//! discretization error in an operator check comes from the difference
//! matrices alone.

pub mod catalog;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::spectra::AnalyticSpectrum;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Grid variable is `x`, with `p = -i d/dx`.
    #[default]
    Coordinate,
    /// Grid variable is `p`, with `x = +i d/dp` so that `[x, p] = i`.
    Momentum,
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Representation::Coordinate => write!(f, "coordinate"),
            Representation::Momentum => write!(f, "momentum"),
        }
    }
}

/// Tabulated function with its tabulated derivative, linearly interpolated.
///
/// Values and derivatives are interpolated independently, so the derivative is
/// only as consistent with the values as the table is. Tables are excluded from
/// the machine-precision identity checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
}

impl Table {
    fn validate(&self) -> Result<()> {
        let n = self.t.len();
        if n < 2 || self.values.len() != n || self.derivatives.len() != n {
            return Err(Error::config(
                "custom_table needs at least two nodes and equal-length t/values/derivatives",
            ));
        }
        if self.t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("custom_table nodes must be strictly increasing"));
        }
        Ok(())
    }

    fn interpolate(&self, column: &[f64], at: f64) -> Result<f64> {
        let n = self.t.len();
        if !(self.t[0]..=self.t[n - 1]).contains(&at) {
            return Err(Error::Evaluation {
                what: format!("custom_table (outside [{}, {}])", self.t[0], self.t[n - 1]),
                at,
            });
        }
        let k = self.t.partition_point(|&s| s <= at).clamp(1, n - 1);
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let w = (at - t0) / (t1 - t0);
        Ok((1.0 - w) * column[k - 1] + w * column[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum FunctionKind {
    #[serde(rename = "zero")]
    Zero {},
    /// `Σ_i c_i t^i`.
    #[serde(rename = "polynomial")]
    Polynomial { coeffs: Vec<f64> },
    /// `(3D/4) (1 - e^{-αt})²`.
    #[serde(rename = "morse_V")]
    MorseV {
        #[serde(rename = "D")]
        depth: f64,
        alpha: f64,
    },
    /// `(√D/2) (t + e^{-αt}/α)`.
    #[serde(rename = "morse_f")]
    MorseF {
        #[serde(rename = "D")]
        depth: f64,
        alpha: f64,
    },
    /// `-a t²`.
    #[serde(rename = "gaussian_gauge")]
    GaussianGauge { a: f64 },
    /// `-Σ_k c_k t^{k+n+1} / (k+n+1)`, truncated at the given coefficients.
    #[serde(rename = "miao_xu_series")]
    MiaoXuSeries { n: u32, c: Vec<f64> },
    #[serde(rename = "custom_table")]
    CustomTable(Table),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFunctionSpec", into = "RawFunctionSpec")]
pub struct FunctionSpec {
    pub kind: FunctionKind,
    pub representation: Representation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunctionSpec {
    kind: String,
    #[serde(default)]
    params: Value,
    #[serde(default)]
    representation: Representation,
}

impl TryFrom<RawFunctionSpec> for FunctionSpec {
    type Error = String;

    fn try_from(raw: RawFunctionSpec) -> std::result::Result<Self, String> {
        let params = match raw.params {
            Value::Null => Value::Object(Default::default()),
            other => other,
        };
        let tagged = serde_json::json!({ "kind": raw.kind, "params": params });
        let kind: FunctionKind =
            serde_json::from_value(tagged).map_err(|e| format!("kind `{}`: {e}", raw.kind))?;
        let spec = FunctionSpec {
            kind,
            representation: raw.representation,
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

impl From<FunctionSpec> for RawFunctionSpec {
    fn from(spec: FunctionSpec) -> Self {
        let tagged = serde_json::to_value(&spec.kind).expect("function kinds serialize");
        RawFunctionSpec {
            kind: tagged["kind"].as_str().unwrap_or_default().to_string(),
            params: tagged.get("params").cloned().unwrap_or(Value::Null),
            representation: spec.representation,
        }
    }
}

fn ensure_finite(what: &str, at: f64, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Evaluation {
            what: what.to_string(),
            at,
        })
    }
}

impl FunctionSpec {
    pub fn new(kind: FunctionKind, representation: Representation) -> Result<Self> {
        let spec = FunctionSpec {
            kind,
            representation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn zero(representation: Representation) -> Self {
        FunctionSpec {
            kind: FunctionKind::Zero {},
            representation,
        }
    }

    pub fn polynomial(coeffs: Vec<f64>, representation: Representation) -> Result<Self> {
        Self::new(FunctionKind::Polynomial { coeffs }, representation)
    }

    pub fn morse_v(depth: f64, alpha: f64) -> Result<Self> {
        Self::new(FunctionKind::MorseV { depth, alpha }, Representation::Coordinate)
    }

    pub fn morse_f(depth: f64, alpha: f64) -> Result<Self> {
        Self::new(FunctionKind::MorseF { depth, alpha }, Representation::Coordinate)
    }

    pub fn gaussian_gauge(a: f64, representation: Representation) -> Result<Self> {
        Self::new(FunctionKind::GaussianGauge { a }, representation)
    }

    pub fn miao_xu(n: u32, c: Vec<f64>) -> Result<Self> {
        Self::new(FunctionKind::MiaoXuSeries { n, c }, Representation::Coordinate)
    }

    pub fn table(table: Table, representation: Representation) -> Result<Self> {
        Self::new(FunctionKind::CustomTable(table), representation)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, xs: &[f64]| {
            if xs.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be finite")))
            }
        };
        match &self.kind {
            FunctionKind::Zero {} => Ok(()),
            FunctionKind::Polynomial { coeffs } => finite("polynomial coefficients", coeffs),
            FunctionKind::MorseV { depth, alpha } | FunctionKind::MorseF { depth, alpha } => {
                if !(depth.is_finite() && *depth > 0.0 && alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::config(format!(
                        "Morse functions require D > 0 and alpha > 0 (got D = {depth}, alpha = {alpha})"
                    )));
                }
                Ok(())
            }
            FunctionKind::GaussianGauge { a } => finite("gaussian_gauge a", &[*a]),
            FunctionKind::MiaoXuSeries { c, .. } => finite("miao_xu_series coefficients", c),
            FunctionKind::CustomTable(table) => {
                finite("custom_table entries", &table.t)?;
                finite("custom_table entries", &table.values)?;
                finite("custom_table entries", &table.derivatives)?;
                table.validate()
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            FunctionKind::Zero {} => "zero",
            FunctionKind::Polynomial { .. } => "polynomial",
            FunctionKind::MorseV { .. } => "morse_V",
            FunctionKind::MorseF { .. } => "morse_f",
            FunctionKind::GaussianGauge { .. } => "gaussian_gauge",
            FunctionKind::MiaoXuSeries { .. } => "miao_xu_series",
            FunctionKind::CustomTable(_) => "custom_table",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, FunctionKind::Zero {})
    }

    /// Tabulated kinds only interpolate; they do not satisfy identities to rounding.
    pub fn is_exact(&self) -> bool {
        !matches!(self.kind, FunctionKind::CustomTable(_))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let value = match &self.kind {
            FunctionKind::Zero {} => 0.0,
            FunctionKind::Polynomial { coeffs } => horner(coeffs, t),
            FunctionKind::MorseV { depth, alpha } => {
                let s = 1.0 - (-alpha * t).exp();
                0.75 * depth * s * s
            }
            FunctionKind::MorseF { depth, alpha } => {
                0.5 * depth.sqrt() * (t + (-alpha * t).exp() / alpha)
            }
            FunctionKind::GaussianGauge { a } => -a * t * t,
            FunctionKind::MiaoXuSeries { n, c } => {
                let base = t.powi(*n as i32 + 1);
                let series: f64 = c
                    .iter()
                    .enumerate()
                    .rev()
                    .fold(0.0, |acc, (k, ck)| acc * t + ck / (k as f64 + *n as f64 + 1.0));
                -base * series
            }
            FunctionKind::CustomTable(table) => table.interpolate(&table.values, t)?,
        };
        ensure_finite(self.kind_name(), t, value)
    }

    pub fn eval_prime(&self, t: f64) -> Result<f64> {
        let value = match &self.kind {
            FunctionKind::Zero {} => 0.0,
            FunctionKind::Polynomial { coeffs } => {
                let derived: Vec<f64> = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, c)| i as f64 * c)
                    .collect();
                horner(&derived, t)
            }
            FunctionKind::MorseV { depth, alpha } => {
                let e = (-alpha * t).exp();
                1.5 * depth * alpha * (1.0 - e) * e
            }
            FunctionKind::MorseF { depth, alpha } => {
                0.5 * depth.sqrt() * (1.0 - (-alpha * t).exp())
            }
            FunctionKind::GaussianGauge { a } => -2.0 * a * t,
            FunctionKind::MiaoXuSeries { n, c } => -t.powi(*n as i32) * horner(c, t),
            FunctionKind::CustomTable(table) => table.interpolate(&table.derivatives, t)?,
        };
        ensure_finite(self.kind_name(), t, value)
    }
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Two-dimensional table on a tensor grid, bilinearly interpolated.
///
/// Accepted as a model field so non-separable inputs can be described, but the
/// two-dimensional operator builders only accept separable fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointTable {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major, `values[i * ys.len() + j]` at `(xs[i], ys[j])`.
    pub values: Vec<f64>,
    pub grad_x: Vec<f64>,
    pub grad_y: Vec<f64>,
}

impl JointTable {
    pub fn validate(&self) -> Result<()> {
        let size = self.xs.len() * self.ys.len();
        let increasing = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&self.xs) || !increasing(&self.ys) {
            return Err(Error::config("joint table axes must be strictly increasing with ≥ 2 nodes"));
        }
        if [&self.values, &self.grad_x, &self.grad_y]
            .iter()
            .any(|v| v.len() != size)
        {
            return Err(Error::config("joint table arrays must have xs.len() * ys.len() entries"));
        }
        Ok(())
    }

    fn bilinear(&self, column: &[f64], x: f64, y: f64) -> Result<f64> {
        let locate = |axis: &[f64], at: f64| -> Result<(usize, f64)> {
            let n = axis.len();
            if !(axis[0]..=axis[n - 1]).contains(&at) {
                return Err(Error::Evaluation {
                    what: "joint table (outside range)".into(),
                    at,
                });
            }
            let k = axis.partition_point(|&s| s <= at).clamp(1, n - 1);
            Ok((k - 1, (at - axis[k - 1]) / (axis[k] - axis[k - 1])))
        };
        let (i, wx) = locate(&self.xs, x)?;
        let (j, wy) = locate(&self.ys, y)?;
        let ny = self.ys.len();
        let at = |a: usize, b: usize| column[a * ny + b];
        Ok((1.0 - wx) * (1.0 - wy) * at(i, j)
            + wx * (1.0 - wy) * at(i + 1, j)
            + (1.0 - wx) * wy * at(i, j + 1)
            + wx * wy * at(i + 1, j + 1))
    }
}

/// A potential or gauge field: one-dimensional, additively separable in two
/// dimensions, or a general two-dimensional table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Line(FunctionSpec),
    Separable { x: FunctionSpec, y: FunctionSpec },
    Joint(JointTable),
}

impl Field {
    pub fn dimension(&self) -> Dimension {
        match self {
            Field::Line(_) => Dimension::One,
            Field::Separable { .. } | Field::Joint(_) => Dimension::Two,
        }
    }

    pub fn as_line(&self) -> Option<&FunctionSpec> {
        match self {
            Field::Line(spec) => Some(spec),
            _ => None,
        }
    }

    pub fn as_separable(&self) -> Option<(&FunctionSpec, &FunctionSpec)> {
        match self {
            Field::Separable { x, y } => Some((x, y)),
            _ => None,
        }
    }

    fn specs(&self) -> Vec<&FunctionSpec> {
        match self {
            Field::Line(s) => vec![s],
            Field::Separable { x, y } => vec![x, y],
            Field::Joint(_) => vec![],
        }
    }

    pub fn eval_2d(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            Field::Line(_) => Err(Error::UnsupportedModel("one-dimensional field evaluated in 2D".into())),
            Field::Separable { x: fx, y: fy } => Ok(fx.eval(x)? + fy.eval(y)?),
            Field::Joint(table) => table.bilinear(&table.values, x, y),
        }
    }

    pub fn gradient_2d(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        match self {
            Field::Line(_) => Err(Error::UnsupportedModel("one-dimensional field evaluated in 2D".into())),
            Field::Separable { x: fx, y: fy } => Ok((fx.eval_prime(x)?, fy.eval_prime(y)?)),
            Field::Joint(table) => Ok((
                table.bilinear(&table.grad_x, x, y)?,
                table.bilinear(&table.grad_y, x, y)?,
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimension {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Dimension {
    pub fn as_usize(self) -> usize {
        match self {
            Dimension::One => 1,
            Dimension::Two => 2,
        }
    }
}

/// A potential `V`, a gauge `f`, and the representation they live in.
///
/// The Hermitian partner is `p² + V + f'²` and the non-Hermitian one is
/// `p² + V + i(f'p + pf')` (or the mirrored forms in momentum representation).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelDefinition {
    pub name: String,
    pub dimension: Dimension,
    pub representation: Representation,
    pub potential: Field,
    pub gauge: Field,
    pub analytic: Option<AnalyticSpectrum>,
    /// Relative perturbation applied to `f'` when assembling the
    /// non-Hermitian partner only. Zero for every genuine model; nonzero
    /// values exist to build negative controls.
    pub f_prime_perturbation: f64,
}

impl ModelDefinition {
    pub fn new(
        name: impl Into<String>,
        representation: Representation,
        potential: Field,
        gauge: Field,
        analytic: Option<AnalyticSpectrum>,
    ) -> Result<Self> {
        let dimension = potential.dimension();
        if gauge.dimension() != dimension {
            return Err(Error::config("potential and gauge must have the same dimension"));
        }
        for spec in potential.specs().into_iter().chain(gauge.specs()) {
            spec.validate()?;
            if spec.representation != representation {
                return Err(Error::Representation(format!(
                    "{} function in a {representation} model",
                    spec.representation
                )));
            }
        }
        for field in [&potential, &gauge] {
            if let Field::Joint(table) = field {
                table.validate()?;
            }
        }
        Ok(ModelDefinition {
            name: name.into(),
            dimension,
            representation,
            potential,
            gauge,
            analytic,
            f_prime_perturbation: 0.0,
        })
    }

    /// Copy of this model whose non-Hermitian partner sees `(1 + eps) f'`.
    pub fn corrupted(&self, eps: f64) -> Self {
        ModelDefinition {
            name: format!("{} (f' perturbed by {eps:e})", self.name),
            f_prime_perturbation: eps,
            ..self.clone()
        }
    }

    pub fn is_separable(&self) -> bool {
        !matches!(self.potential, Field::Joint(_)) && !matches!(self.gauge, Field::Joint(_))
    }

    /// True when every function has exact values and derivatives.
    pub fn is_exact(&self) -> bool {
        self.potential.specs().iter().chain(self.gauge.specs().iter()).all(|s| s.is_exact())
            && self.is_separable()
    }

    pub fn line_functions(&self) -> Result<(&FunctionSpec, &FunctionSpec)> {
        match (self.potential.as_line(), self.gauge.as_line()) {
            (Some(v), Some(f)) => Ok((v, f)),
            _ => Err(Error::UnsupportedModel(format!(
                "model `{}` is not one-dimensional",
                self.name
            ))),
        }
    }
}

/// Maximum sampled deviation of `V + f'²` from a target potential.
pub fn partner_deviation(
    potential: &FunctionSpec,
    gauge: &FunctionSpec,
    target: impl Fn(f64) -> f64,
    samples: &[f64],
) -> Result<f64> {
    let mut worst = 0.0f64;
    for &t in samples {
        let fp = gauge.eval_prime(t)?;
        let lhs = potential.eval(t)? + fp * fp;
        worst = worst.max((lhs - target(t)).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MorseConsistency {
    pub depth: f64,
    pub alpha: f64,
    pub samples: usize,
    pub max_deviation: f64,
}

/// Confirms that `(3D/4)(1-e^{-αx})² + f'²` reproduces `D(1-e^{-αx})²` on 101
/// points of `[-2, 8]`.
pub fn morse_consistency(depth: f64, alpha: f64) -> Result<MorseConsistency> {
    let potential = FunctionSpec::morse_v(depth, alpha)?;
    let gauge = FunctionSpec::morse_f(depth, alpha)?;
    morse_consistency_with(&potential, &gauge, depth, alpha)
}

pub fn morse_consistency_with(
    potential: &FunctionSpec,
    gauge: &FunctionSpec,
    depth: f64,
    alpha: f64,
) -> Result<MorseConsistency> {
    let samples: Vec<f64> = (0..101).map(|i| -2.0 + 0.1 * i as f64).collect();
    let target = |x: f64| {
        let s = 1.0 - (-alpha * x).exp();
        depth * s * s
    };
    let max_deviation = partner_deviation(potential, gauge, target, &samples)?;
    Ok(MorseConsistency {
        depth,
        alpha,
        samples: samples.len(),
        max_deviation,
    })
}
