//! Run configuration: JSON schema, parsing with key-path diagnostics, and
//! resolution into a model plus a [`RunSetup`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::grid::{make_grid, Scheme};
use crate::model::{catalog, Dimension, Field, ModelDefinition, Representation};
use crate::verify::{self, GridSpec, ModeSelection, RunSetup, ToleranceSpec, NORMALIZABILITY_PREFIX};

pub const CONFIG_VERSION: u32 = 1;
const DEFAULT_K_LEVELS: usize = 5;

fn default_version() -> u32 {
    CONFIG_VERSION
}

fn default_k_levels() -> usize {
    DEFAULT_K_LEVELS
}

fn default_checks() -> Value {
    Value::String("all".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl GridConfig {
    fn build(&self, key: &str) -> Result<crate::grid::Grid> {
        make_grid(self.x_min, self.x_max, self.n).map_err(|e| Error::config(format!("{key}: {e}")))
    }
}

/// Either a catalog model (`name` + `params`) or a custom one (`potential`
/// and `gauge` given explicitly).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representation: Option<Representation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Field>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge: Option<Field>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectra: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_x: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_y: Option<GridConfig>,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub mode: ModeSelection,
    /// `"all"` or a list of check ids (which may itself contain `"all"`).
    #[serde(default = "default_checks")]
    pub checks: Value,
    #[serde(default = "default_k_levels")]
    pub k_levels: usize,
    #[serde(default)]
    pub tolerances: BTreeMap<String, ToleranceSpec>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Parses a config; errors name the offending key path.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            Error::config(inner.to_string())
        } else {
            Error::config(format!("at `{path}`: {inner}"))
        }
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// A config resolved into everything a run needs.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub model: ModelDefinition,
    pub setup: RunSetup,
    /// The config with defaults materialized, as embedded in reports.
    pub config: RunConfig,
}

fn parse_checks(value: &Value) -> Result<Option<Vec<String>>> {
    match value {
        Value::String(s) if s == "all" => Ok(None),
        Value::Array(items) => {
            let mut ids = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                let id = item
                    .as_str()
                    .ok_or_else(|| Error::config(format!("at `checks[{i}]`: expected a check id string")))?;
                if id != "all" && !verify::is_known_check(id) {
                    return Err(Error::config(format!(
                        "at `checks[{i}]`: unknown check id `{id}` (known: {}, {NORMALIZABILITY_PREFIX}<n>)",
                        verify::CHECK_IDS.join(", ")
                    )));
                }
                ids.push(id.to_string());
            }
            if ids.is_empty() {
                return Err(Error::config("at `checks`: empty check list"));
            }
            Ok(Some(ids))
        }
        _ => Err(Error::config("at `checks`: expected \"all\" or a list of check ids")),
    }
}

fn build_model(spec: &ModelConfig) -> Result<ModelDefinition> {
    match (&spec.potential, &spec.gauge) {
        (None, None) => catalog::build(&spec.name, &spec.params).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("at `model`: {msg}")),
            other => other,
        }),
        (Some(potential), Some(gauge)) => {
            let mut extra = spec.params.keys().filter(|k| *k != catalog::CORRUPTION_PARAM);
            if let Some(key) = extra.next() {
                return Err(Error::config(format!(
                    "at `model.params.{key}`: custom models accept only `{}`",
                    catalog::CORRUPTION_PARAM
                )));
            }
            let representation = spec.representation.unwrap_or_default();
            let model = ModelDefinition::new(&spec.name, representation, potential.clone(), gauge.clone(), None)?;
            match spec.params.get(catalog::CORRUPTION_PARAM) {
                Some(eps) => {
                    let eps = eps.as_f64().ok_or_else(|| {
                        Error::config(format!("at `model.params.{}`: expected a number", catalog::CORRUPTION_PARAM))
                    })?;
                    Ok(model.corrupted(eps))
                }
                None => Ok(model),
            }
        }
        _ => Err(Error::config("at `model`: custom models need both `potential` and `gauge`")),
    }
}

fn build_grid(config: &RunConfig, dimension: Dimension) -> Result<GridSpec> {
    match (dimension, &config.grid, &config.grid_x, &config.grid_y) {
        (Dimension::One, Some(g), None, None) => Ok(GridSpec::Line(g.build("grid")?)),
        (Dimension::One, ..) => Err(Error::config(
            "at `grid`: one-dimensional models take `grid` only",
        )),
        (Dimension::Two, Some(g), None, None) => {
            let axis = g.build("grid")?;
            Ok(GridSpec::Plane { x: axis.clone(), y: axis })
        }
        (Dimension::Two, None, Some(gx), Some(gy)) => Ok(GridSpec::Plane {
            x: gx.build("grid_x")?,
            y: gy.build("grid_y")?,
        }),
        (Dimension::Two, ..) => Err(Error::config(
            "at `grid`: two-dimensional models take either `grid` or both `grid_x` and `grid_y`",
        )),
    }
}

/// Resolves a parsed config: builds the model and grids, validates check ids
/// and tolerances, and materializes defaults.
pub fn resolve(config: &RunConfig) -> Result<ResolvedRun> {
    if config.version != CONFIG_VERSION {
        return Err(Error::config(format!(
            "at `version`: unsupported config version {} (expected {CONFIG_VERSION})",
            config.version
        )));
    }
    if config.k_levels == 0 {
        return Err(Error::config("at `k_levels`: must be at least 1"));
    }
    let model = build_model(&config.model)?;
    let grid = build_grid(config, model.dimension)?;
    let checks = parse_checks(&config.checks)?;
    for (id, tol) in &config.tolerances {
        if !verify::is_known_check(id) {
            return Err(Error::config(format!("at `tolerances.{id}`: unknown check id")));
        }
        tol.validate(id)?;
    }

    let mut levels: Vec<usize> = checks
        .iter()
        .flatten()
        .filter_map(|id| id.strip_prefix(NORMALIZABILITY_PREFIX))
        .filter_map(|n| n.parse().ok())
        .collect();
    let runs_all = checks.as_ref().is_none_or(|list| list.iter().any(|c| c == "all"));
    if runs_all {
        levels.push(0);
    }
    levels.sort_unstable();
    levels.dedup();

    let mut setup = RunSetup::new(grid);
    setup.scheme = config.scheme;
    setup.modes = config.mode;
    setup.checks = checks;
    setup.k_levels = config.k_levels;
    setup.tolerances = config.tolerances.clone();
    setup.normalizability_levels = levels.clone();

    let mut resolved = config.clone();
    if config.model.potential.is_none() {
        resolved.model.params = catalog::resolve_params(&config.model.name, &config.model.params)?;
    } else {
        resolved.model.representation = Some(model.representation);
    }
    let mut ids: Vec<String> = verify::CHECK_IDS.iter().map(|s| s.to_string()).collect();
    ids.extend(levels.iter().map(|n| format!("{NORMALIZABILITY_PREFIX}{n}")));
    resolved.tolerances = ids.into_iter().map(|id| {
        let tol = setup.tolerance(&id);
        (id, tol)
    }).collect();

    Ok(ResolvedRun { model, setup, config: resolved })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HARMONIC: &str = r#"{
        "model": {"name": "harmonic_gauge", "params": {"a": 0.5}},
        "grid": {"x_min": -6, "x_max": 6, "n": 200},
        "k_levels": 4
    }"#;

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let run = resolve(&parse_config(HARMONIC).unwrap()).unwrap();
        assert_eq!(run.config.version, CONFIG_VERSION);
        assert_eq!(run.config.scheme, Scheme::Central2);
        assert_eq!(run.config.mode, ModeSelection::Both);
        assert_eq!(run.setup.normalizability_levels, vec![0]);
        assert!(run.config.tolerances.contains_key("operator_identity"));
        assert!(run.config.tolerances.contains_key("normalizability_level_0"));
    }

    #[test]
    fn parse_errors_name_the_key() {
        let bad = r#"{"model": {"name": "morse", "params": {}}, "grid": {"x_min": -2, "x_max": 9, "nn": 10}}"#;
        let msg = parse_config(bad).unwrap_err().to_string();
        assert!(msg.contains("grid") && msg.contains("nn"), "{msg}");

        let bad = r#"{"model": {"name": "morse"}, "grid": {"x_min": -2, "x_max": 9, "n": 100}, "scheme": "central3"}"#;
        let msg = parse_config(bad).unwrap_err().to_string();
        assert!(msg.contains("scheme"), "{msg}");

        let bad = r#"{"model": {"name": "morse"}, "grid": {"x_min": -2, "x_max": 9, "n": 100}, "tolerances": {"isospectral_continuum": {"tol": "x"}}}"#;
        let msg = parse_config(bad).unwrap_err().to_string();
        assert!(msg.contains("tolerances.isospectral_continuum.tol"), "{msg}");
    }

    #[test]
    fn resolution_errors_name_the_key() {
        let mut cfg = parse_config(HARMONIC).unwrap();
        cfg.checks = serde_json::json!(["operator_identity", "bogus"]);
        let msg = resolve(&cfg).unwrap_err().to_string();
        assert!(msg.contains("checks[1]") && msg.contains("bogus"), "{msg}");

        let mut cfg = parse_config(HARMONIC).unwrap();
        cfg.tolerances.insert("operator_identity".into(), ToleranceSpec::absolute(-1.0));
        assert!(resolve(&cfg).unwrap_err().to_string().contains("operator_identity"));

        let mut cfg = parse_config(HARMONIC).unwrap();
        cfg.model.params.insert("b".into(), serde_json::json!(1.0));
        assert!(resolve(&cfg).unwrap_err().to_string().contains("`b`"));
    }

    #[test]
    fn two_dimensional_grids() {
        let cfg = parse_config(
            r#"{"model": {"name": "harmonic_2d"}, "grid_x": {"x_min": -5, "x_max": 5, "n": 12}, "grid_y": {"x_min": -4, "x_max": 4, "n": 10}}"#,
        )
        .unwrap();
        let run = resolve(&cfg).unwrap();
        assert!(matches!(run.setup.grid, GridSpec::Plane { ref x, ref y } if x.len() == 12 && y.len() == 10));

        let cfg = parse_config(
            r#"{"model": {"name": "harmonic_2d"}, "grid_x": {"x_min": -5, "x_max": 5, "n": 12}}"#,
        )
        .unwrap();
        assert!(resolve(&cfg).is_err());
    }

    #[test]
    fn custom_model() {
        let cfg = parse_config(
            r#"{
                "model": {
                    "name": "quartic",
                    "potential": {"line": {"kind": "polynomial", "params": {"coeffs": [0, 0, 0, 0, 1]}}},
                    "gauge": {"line": {"kind": "gaussian_gauge", "params": {"a": 0.25}}}
                },
                "grid": {"x_min": -4, "x_max": 4, "n": 100}
            }"#,
        )
        .unwrap();
        let run = resolve(&cfg).unwrap();
        assert_eq!(run.model.name, "quartic");
        assert!(run.model.analytic.is_none());
    }

    #[test]
    fn explicit_normalizability_levels() {
        let mut cfg = parse_config(HARMONIC).unwrap();
        cfg.checks = serde_json::json!(["all", "normalizability_level_2"]);
        let run = resolve(&cfg).unwrap();
        assert_eq!(run.setup.normalizability_levels, vec![0, 2]);
    }
}
