//! Experiment parameters: declared schemas, override parsing and the flat
//! JSON snapshot written next to every run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{CliError, Result};

/// Type and default of one experiment parameter.
#[derive(Debug, Clone, Copy)]
pub enum ParamKind {
    /// Positive integer.
    Int(u64),
    /// Finite float.
    Float(f64),
    /// Spectral bound: a non-negative float, or `auto` (`None`) to compute it.
    Bound(Option<f64>),
}

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub kind: ParamKind,
    pub help: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolved {
    Int(u64),
    Float(f64),
    Bound(Option<f64>),
}

impl Resolved {
    fn to_json(self) -> Value {
        match self {
            Resolved::Int(v) => Value::from(v),
            Resolved::Float(v) => Value::from(v),
            Resolved::Bound(Some(v)) => Value::from(v),
            Resolved::Bound(None) => Value::from("auto"),
        }
    }
}

impl std::fmt::Display for Resolved {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Resolved::Int(v) => write!(f, "{v}"),
            Resolved::Float(v) | Resolved::Bound(Some(v)) => write!(f, "{v}"),
            Resolved::Bound(None) => f.write_str("auto"),
        }
    }
}

fn default_of(kind: ParamKind) -> Resolved {
    match kind {
        ParamKind::Int(v) => Resolved::Int(v),
        ParamKind::Float(v) => Resolved::Float(v),
        ParamKind::Bound(v) => Resolved::Bound(v),
    }
}

fn parse_value(key: &str, kind: ParamKind, raw: &str) -> Result<Resolved> {
    let raw = raw.trim();
    let float = || -> Result<f64> {
        let v: f64 = raw
            .parse()
            .map_err(|_| CliError::invalid(key, format!("expected a number, got {raw:?}")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::invalid(key, "value must be finite"))
        }
    };
    match kind {
        ParamKind::Int(_) => match raw.parse::<u64>() {
            Ok(v) if v >= 1 => Ok(Resolved::Int(v)),
            _ => Err(CliError::invalid(key, format!("expected a positive integer, got {raw:?}"))),
        },
        ParamKind::Float(_) => Ok(Resolved::Float(float()?)),
        ParamKind::Bound(_) if raw.eq_ignore_ascii_case("auto") => Ok(Resolved::Bound(None)),
        ParamKind::Bound(_) => {
            let v = float()?;
            if v < 0.0 {
                return Err(CliError::invalid(key, "bounds must be non-negative"));
            }
            Ok(Resolved::Bound(Some(v)))
        }
    }
}

/// Splits `key=value`.
pub fn split_assignment(s: &str) -> Result<(String, String)> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.to_string())),
        _ => Err(CliError::invalid(s, "expected KEY=VALUE")),
    }
}

/// Reads a flat JSON object of overrides. A `seed` entry is returned apart.
pub fn read_config_file(path: &Path) -> Result<(Option<u64>, Vec<(String, String)>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(CliError::Usage(format!(
            "config file {} must hold a flat JSON object",
            path.display()
        )));
    };
    let mut seed = None;
    let mut pairs = Vec::new();
    for (k, v) in map {
        let raw = match &v {
            Value::Number(n) => n.to_string(),
            Value::String(s) => s.clone(),
            _ => return Err(CliError::invalid(k, "values must be numbers or strings")),
        };
        if k == "seed" {
            seed = Some(
                raw.parse()
                    .map_err(|_| CliError::invalid("seed", format!("expected an integer, got {raw}")))?,
            );
        } else {
            pairs.push((k, raw));
        }
    }
    Ok((seed, pairs))
}

/// Fully resolved parameters of one run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    pub params: BTreeMap<String, Resolved>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Applies `overrides` in order on top of the schema defaults. Keys that the
    /// schema does not declare are rejected.
    pub fn resolve(
        experiment: &str,
        seed: u64,
        schema: &[Param],
        overrides: &[(String, String)],
        output_dir: PathBuf,
    ) -> Result<Self> {
        let mut params: BTreeMap<String, Resolved> =
            schema.iter().map(|p| (p.key.to_string(), default_of(p.kind))).collect();
        for (key, raw) in overrides {
            let p = schema.iter().find(|p| p.key == key).ok_or_else(|| {
                let known: Vec<&str> = schema.iter().map(|p| p.key).collect();
                CliError::invalid(
                    key,
                    format!("unknown key for {experiment}; known keys: {}", known.join(", ")),
                )
            })?;
            params.insert(key.clone(), parse_value(key, p.kind, raw)?);
        }
        Ok(ExperimentConfig {
            experiment: experiment.to_string(),
            seed,
            params,
            output_dir,
        })
    }

    fn get(&self, key: &str) -> Resolved {
        *self
            .params
            .get(key)
            .unwrap_or_else(|| panic!("parameter {key} is not declared"))
    }

    pub fn int(&self, key: &str) -> usize {
        match self.get(key) {
            Resolved::Int(v) => v as usize,
            other => panic!("parameter {key} is not an integer: {other:?}"),
        }
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.get(key) {
            Resolved::Float(v) => v,
            other => panic!("parameter {key} is not a float: {other:?}"),
        }
    }

    pub fn bound(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Resolved::Bound(v) => v,
            other => panic!("parameter {key} is not a bound: {other:?}"),
        }
    }

    /// Flat JSON object: experiment, seed and every parameter.
    pub fn snapshot(&self) -> Value {
        let mut m = Map::new();
        m.insert("experiment".into(), Value::from(self.experiment.clone()));
        m.insert("seed".into(), Value::from(self.seed));
        for (k, v) in &self.params {
            m.insert(k.clone(), v.to_json());
        }
        Value::Object(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &[Param] = &[
        Param {
            key: "n",
            kind: ParamKind::Int(8),
            help: "",
        },
        Param {
            key: "std",
            kind: ParamKind::Float(0.5),
            help: "",
        },
        Param {
            key: "lambda_min",
            kind: ParamKind::Bound(None),
            help: "",
        },
    ];

    fn resolve(pairs: &[(&str, &str)]) -> Result<ExperimentConfig> {
        let pairs: Vec<(String, String)> =
            pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        ExperimentConfig::resolve("demo", 3, SCHEMA, &pairs, PathBuf::from("out"))
    }

    #[test]
    fn defaults_and_overrides() {
        let c = resolve(&[]).unwrap();
        assert_eq!((c.int("n"), c.float("std"), c.bound("lambda_min")), (8, 0.5, None));
        let c = resolve(&[("n", "32"), ("lambda_min", "0.25"), ("std", "1e-2")]).unwrap();
        assert_eq!((c.int("n"), c.float("std"), c.bound("lambda_min")), (32, 0.01, Some(0.25)));
        let c = resolve(&[("lambda_min", "0.25"), ("lambda_min", "AUTO")]).unwrap();
        assert_eq!(c.bound("lambda_min"), None);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        for bad in [
            ("bogus", "1"),
            ("n", "0"),
            ("n", "2.5"),
            ("std", "nan"),
            ("std", "x"),
            ("lambda_min", "-1"),
        ] {
            let e = resolve(&[bad]).unwrap_err();
            assert_eq!(e.kind(), "InvalidOverride", "{bad:?}");
        }
    }

    #[test]
    fn snapshot_is_flat() {
        let s = resolve(&[("n", "4")]).unwrap().snapshot();
        let obj = s.as_object().unwrap();
        assert_eq!(obj["experiment"], "demo");
        assert_eq!(obj["seed"], 3);
        assert_eq!(obj["n"], 4);
        assert_eq!(obj["lambda_min"], "auto");
        assert!(obj.values().all(|v| !v.is_object() && !v.is_array()));
    }

    #[test]
    fn assignments_split_on_first_equals() {
        assert_eq!(split_assignment("a=b=c").unwrap(), ("a".into(), "b=c".into()));
        assert!(split_assignment("novalue").is_err());
        assert!(split_assignment("=3").is_err());
    }
}
