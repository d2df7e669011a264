//! Named models with default parameters.

use serde_json::{json, Map, Value};

use super::{Field, FunctionSpec, ModelDefinition, Representation};
use crate::error::{Error, Result};
use crate::spectra::AnalyticSpectrum;

/// Parameter accepted by every catalog model; see [`ModelDefinition::corrupted`].
pub const CORRUPTION_PARAM: &str = "corrupt_f_prime";

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub dimension: usize,
    pub representation: Representation,
    pub summary: &'static str,
    pub oracle: &'static str,
    pub defaults: Value,
}

pub fn entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "free",
            dimension: 1,
            representation: Representation::Coordinate,
            summary: "V = 0, f = 0: free particle in the Dirichlet box",
            oracle: "box levels (pi k / L)^2",
            defaults: json!({}),
        },
        CatalogEntry {
            name: "harmonic_gauge",
            dimension: 1,
            representation: Representation::Coordinate,
            summary: "V = 0, f = -a x^2: H_H = p^2 + 4a^2 x^2",
            oracle: "2|a|(2n+1)",
            defaults: json!({ "a": 0.5 }),
        },
        CatalogEntry {
            name: "morse",
            dimension: 1,
            representation: Representation::Coordinate,
            summary: "V = (3D/4)(1-e^{-alpha x})^2, f = (sqrt(D)/2)(x + e^{-alpha x}/alpha): H_H = p^2 + D(1-e^{-alpha x})^2",
            oracle: "Morse closed form 2 alpha sqrt(D)(n+1/2) - alpha^2 (n+1/2)^2",
            defaults: json!({ "D": 36.0, "alpha": 1.0 }),
        },
        CatalogEntry {
            name: "miao_xu",
            dimension: 1,
            representation: Representation::Coordinate,
            summary: "f = -sum_k c_k x^{k+n+1}/(k+n+1) (truncated), V = polynomial v",
            oracle: "none",
            defaults: json!({ "n": 1, "c": [1.0, 0.0, 0.05], "v": [] }),
        },
        CatalogEntry {
            name: "harmonic_dual_p",
            dimension: 1,
            representation: Representation::Momentum,
            summary: "momentum grid, V(p) = polynomial v, g = -a p^2: H_H = x^2 + V(p) + 4a^2 p^2",
            oracle: "2|a|(2n+1) when v is empty",
            defaults: json!({ "a": 0.5, "v": [] }),
        },
        CatalogEntry {
            name: "harmonic_2d",
            dimension: 2,
            representation: Representation::Coordinate,
            summary: "V = 0, f = -a (x^2 + y^2): H_H = p.p + 4a^2 (x^2 + y^2)",
            oracle: "4|a|(n_x + n_y + 1)",
            defaults: json!({ "a": 0.5 }),
        },
    ]
}

pub fn entry(name: &str) -> Result<CatalogEntry> {
    entries().into_iter().find(|e| e.name == name).ok_or_else(|| {
        let known: Vec<&str> = entries().iter().map(|e| e.name).collect();
        Error::config(format!(
            "unknown model `{name}` (known: {})",
            known.join(", ")
        ))
    })
}

/// Catalog defaults overlaid with the given parameters. Unknown keys are rejected.
pub fn resolve_params(name: &str, params: &Map<String, Value>) -> Result<Map<String, Value>> {
    let entry = entry(name)?;
    let mut resolved = entry.defaults.as_object().cloned().unwrap_or_default();
    for (key, value) in params {
        if !resolved.contains_key(key) && key != CORRUPTION_PARAM {
            return Err(Error::config(format!(
                "unknown parameter `{key}` for model `{name}`"
            )));
        }
        resolved.insert(key.clone(), value.clone());
    }
    Ok(resolved)
}

fn number(params: &Map<String, Value>, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::config(format!("parameter `{key}` must be a number")))
}

fn numbers(params: &Map<String, Value>, key: &str) -> Result<Vec<f64>> {
    let err = || Error::config(format!("parameter `{key}` must be an array of numbers"));
    params
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(err)?
        .iter()
        .map(|v| v.as_f64().ok_or_else(err))
        .collect()
}

/// Build a catalog model from (possibly partial) parameters.
pub fn build(name: &str, params: &Map<String, Value>) -> Result<ModelDefinition> {
    let p = resolve_params(name, params)?;
    let coord = Representation::Coordinate;
    let mut model = match name {
        "free" => ModelDefinition::new(
            "free",
            coord,
            Field::Line(FunctionSpec::zero(coord)),
            Field::Line(FunctionSpec::zero(coord)),
            Some(AnalyticSpectrum::FreeBox),
        )?,
        "harmonic_gauge" => {
            let a = number(&p, "a")?;
            ModelDefinition::new(
                "harmonic_gauge",
                coord,
                Field::Line(FunctionSpec::zero(coord)),
                Field::Line(FunctionSpec::gaussian_gauge(a, coord)?),
                Some(AnalyticSpectrum::Harmonic { a }),
            )?
        }
        "morse" => {
            let depth = number(&p, "D")?;
            let alpha = number(&p, "alpha")?;
            ModelDefinition::new(
                "morse",
                coord,
                Field::Line(FunctionSpec::morse_v(depth, alpha)?),
                Field::Line(FunctionSpec::morse_f(depth, alpha)?),
                Some(AnalyticSpectrum::Morse { depth, alpha }),
            )?
        }
        "miao_xu" => {
            let n = p
                .get("n")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::config("parameter `n` must be a non-negative integer"))?;
            let c = numbers(&p, "c")?;
            let v = numbers(&p, "v")?;
            let potential = if v.is_empty() {
                FunctionSpec::zero(coord)
            } else {
                FunctionSpec::polynomial(v, coord)?
            };
            ModelDefinition::new(
                "miao_xu",
                coord,
                Field::Line(potential),
                Field::Line(FunctionSpec::miao_xu(n as u32, c)?),
                None,
            )?
        }
        "harmonic_dual_p" => {
            let mom = Representation::Momentum;
            let a = number(&p, "a")?;
            let v = numbers(&p, "v")?;
            let (potential, analytic) = if v.is_empty() {
                (FunctionSpec::zero(mom), Some(AnalyticSpectrum::Harmonic { a }))
            } else {
                (FunctionSpec::polynomial(v, mom)?, None)
            };
            ModelDefinition::new(
                "harmonic_dual_p",
                mom,
                Field::Line(potential),
                Field::Line(FunctionSpec::gaussian_gauge(a, mom)?),
                analytic,
            )?
        }
        "harmonic_2d" => {
            let a = number(&p, "a")?;
            ModelDefinition::new(
                "harmonic_2d",
                coord,
                Field::Separable {
                    x: FunctionSpec::zero(coord),
                    y: FunctionSpec::zero(coord),
                },
                Field::Separable {
                    x: FunctionSpec::gaussian_gauge(a, coord)?,
                    y: FunctionSpec::gaussian_gauge(a, coord)?,
                },
                Some(AnalyticSpectrum::Harmonic2d { a }),
            )?
        }
        other => return Err(Error::config(format!("unknown model `{other}`"))),
    };
    if let Some(eps) = p.get(CORRUPTION_PARAM) {
        let eps = eps
            .as_f64()
            .ok_or_else(|| Error::config(format!("parameter `{CORRUPTION_PARAM}` must be a number")))?;
        model = model.corrupted(eps);
    }
    Ok(model)
}

pub fn build_default(name: &str) -> Result<ModelDefinition> {
    build(name, &Map::new())
}

/// Names of the one-dimensional catalog models.
pub fn line_models() -> Vec<&'static str> {
    entries()
        .into_iter()
        .filter(|e| e.dimension == 1)
        .map(|e| e.name)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_builds_with_defaults() {
        for e in entries() {
            let m = build_default(e.name).unwrap();
            assert_eq!(m.dimension.as_usize(), e.dimension);
            assert_eq!(m.representation, e.representation);
        }
        assert_eq!(line_models().len(), 5);
    }

    #[test]
    fn unknown_names_and_params_rejected() {
        assert!(build_default("hydrogen").is_err());
        let mut p = Map::new();
        p.insert("beta".into(), json!(1.0));
        let err = build("morse", &p).unwrap_err().to_string();
        assert!(err.contains("beta"));
    }

    #[test]
    fn overrides_apply() {
        let mut p = Map::new();
        p.insert("D".into(), json!(16.0));
        let m = build("morse", &p).unwrap();
        assert_eq!(
            m.analytic,
            Some(AnalyticSpectrum::Morse {
                depth: 16.0,
                alpha: 1.0
            })
        );
    }

    #[test]
    fn corruption_parameter() {
        let mut p = Map::new();
        p.insert(CORRUPTION_PARAM.into(), json!(1e-3));
        let m = build("harmonic_gauge", &p).unwrap();
        assert_eq!(m.f_prime_perturbation, 1e-3);
    }
}
