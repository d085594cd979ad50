//! Command schemas, the flat `key = value` config file, and typed values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wds_core::angle::Angle;

use crate::error::CliError;

pub const OUT_ROOT_VAR: &str = "WDS_OUT_ROOT";
pub const DEFAULT_OUT_ROOT: &str = "runs";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Real,
    Int,
    /// Exact `p/q`.
    Rational,
    /// Catalog name, `p/q`, `surd:a,b,d,c` or decimal.
    Angle,
    Path,
    Text,
}

#[derive(Clone, Copy, Debug)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn req(name: &'static str, kind: Kind, help: &'static str) -> Key {
    Key { name, kind, default: None, help }
}

const fn opt(name: &'static str, kind: Kind, default: &'static str, help: &'static str) -> Key {
    Key { name, kind, default: Some(default), help }
}

#[derive(Clone, Copy, Debug)]
pub struct Schema {
    pub command: &'static str,
    pub about: &'static str,
    pub keys: &'static [Key],
}

impl Schema {
    pub fn key(&self, name: &str) -> Option<&Key> {
        self.keys.iter().find(|k| k.name == name)
    }
}

pub const SCHEMAS: &[Schema] = &[
    Schema {
        command: "sturmian",
        about: "Sturmian window, factor table and complexity counts",
        keys: &[
            req("alpha", Kind::Angle, "rotation number"),
            opt("theta", Kind::Angle, "0", "phase of the coding point"),
            opt("radius", Kind::Int, "1000", "window radius"),
            opt("max-len", Kind::Int, "50", "longest factor length tabulated"),
        ],
    },
    Schema {
        command: "denjoy",
        about: "Denjoy counterexample: orbit samples and the Cantor set",
        keys: &[
            opt("alpha", Kind::Angle, "golden", "rotation number"),
            opt("cutoff", Kind::Int, "10000", "number of inserted gaps M"),
            opt("map", Kind::Path, "", "read the map from this file instead"),
            opt("x0", Kind::Real, "0", "starting point"),
            opt("iterates", Kind::Int, "1000", "orbit length"),
        ],
    },
    Schema {
        command: "wds-family",
        about: "Rotation classes, gap orbits and graph distances for a list of rotation numbers",
        keys: &[
            req("alpha-list", Kind::Path, "file with one rotation number per line"),
            opt("depth", Kind::Int, "6", "cylinder depth"),
        ],
    },
    Schema {
        command: "am-compute",
        about: "Aubry-Mather set of the standard family and its hyperbolicity",
        keys: &[
            req("k", Kind::Real, "twist parameter K"),
            req("p", Kind::Int, "rotation numerator"),
            req("q", Kind::Int, "rotation denominator"),
            opt("branch", Kind::Text, "plus", "plus or minus"),
            opt("cone-radius", Kind::Real, "1e-3", "grid radius for the cone test"),
        ],
    },
    Schema {
        command: "horseshoe-build",
        about: "Markov partition, transition matrix and certificate near a saddle orbit",
        keys: &[
            req("k", Kind::Real, "twist parameter K"),
            req("p", Kind::Int, "rotation numerator"),
            req("q", Kind::Int, "rotation denominator"),
            opt("budget", Kind::Real, "4", "manifold length budget"),
            opt("cap", Kind::Int, "12", "largest common return count"),
        ],
    },
    Schema {
        command: "verify-containment",
        about: "Nearby Aubry-Mather sets against a horseshoe certificate",
        keys: &[
            req("certificate", Kind::Path, "certificate.json from horseshoe-build"),
            req("omegas", Kind::Text, "comma separated list of p/q"),
        ],
    },
];

pub fn schema(command: &str) -> Option<&'static Schema> {
    SCHEMAS.iter().find(|s| s.command == command)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Real(f64),
    Int(i64),
    Rational(i64, i64),
    Text(String),
}

/// A validated command invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: String,
    /// Raw strings as given, after merging file and flags.
    pub raw: BTreeMap<String, String>,
    pub values: BTreeMap<String, Value>,
    pub out: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    fn get(&self, key: &str) -> Result<&Value, CliError> {
        self.values.get(key).ok_or_else(|| self.invalid(key, "missing"))
    }

    fn invalid(&self, key: &str, msg: &str) -> CliError {
        CliError::Validation(format!("{}.{key}: {msg}", self.command))
    }

    pub fn real(&self, key: &str) -> Result<f64, CliError> {
        match self.get(key)? {
            Value::Real(x) => Ok(*x),
            Value::Int(n) => Ok(*n as f64),
            _ => Err(self.invalid(key, "not a real")),
        }
    }

    pub fn int(&self, key: &str) -> Result<i64, CliError> {
        match self.get(key)? {
            Value::Int(n) => Ok(*n),
            _ => Err(self.invalid(key, "not an integer")),
        }
    }

    pub fn count(&self, key: &str) -> Result<usize, CliError> {
        usize::try_from(self.int(key)?).map_err(|_| self.invalid(key, "must be nonnegative"))
    }

    pub fn text(&self, key: &str) -> Result<&str, CliError> {
        match self.get(key)? {
            Value::Text(s) => Ok(s),
            _ => Err(self.invalid(key, "not text")),
        }
    }

    pub fn angle(&self, key: &str) -> Result<Angle, CliError> {
        self.text(key)?.parse().map_err(|e: wds_core::error::AngleError| self.invalid(key, &e.to_string()))
    }

    pub fn path(&self, key: &str) -> Result<Option<PathBuf>, CliError> {
        let s = self.text(key)?;
        Ok((!s.is_empty()).then(|| PathBuf::from(s)))
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("config line {}: expected key = value", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn parse_rational(s: &str) -> Option<(i64, i64)> {
    let (p, q) = s.split_once('/')?;
    let p: i64 = p.trim().parse().ok()?;
    let q: i64 = q.trim().parse().ok()?;
    (q > 0).then_some((p, q))
}

fn parse_value(kind: Kind, s: &str) -> Result<Value, String> {
    match kind {
        Kind::Real => s
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Value::Real)
            .ok_or_else(|| format!("expected a real number, got `{s}`")),
        Kind::Int => s.parse::<i64>().map(Value::Int).map_err(|_| format!("expected an integer, got `{s}`")),
        Kind::Rational => parse_rational(s)
            .map(|(p, q)| Value::Rational(p, q))
            .ok_or_else(|| format!("expected p/q, got `{s}`")),
        Kind::Angle => s
            .parse::<Angle>()
            .map(|_| Value::Text(s.to_string()))
            .map_err(|e| e.to_string()),
        Kind::Path | Kind::Text => Ok(Value::Text(s.to_string())),
    }
}

/// Merges file entries with flag entries (flags win) and checks them against the schema.
pub fn validate(
    schema: &Schema,
    file: BTreeMap<String, String>,
    flags: BTreeMap<String, String>,
    out: Option<PathBuf>,
    seed: u64,
) -> Result<RunConfig, CliError> {
    let mut raw = BTreeMap::new();
    let mut out = out;
    for (k, v) in file {
        if k == "out" {
            out = out.or(Some(PathBuf::from(v)));
        } else if schema.key(&k).is_none() {
            return Err(CliError::Validation(format!("{}.{k}: unknown key", schema.command)));
        } else {
            raw.insert(k, v);
        }
    }
    raw.extend(flags);
    let mut values = BTreeMap::new();
    for key in schema.keys {
        let s = match (raw.get(key.name), key.default) {
            (Some(s), _) => s.clone(),
            (None, Some(d)) => d.to_string(),
            (None, None) => return Err(CliError::Validation(format!("{}.{}: required key missing", schema.command, key.name))),
        };
        let v = parse_value(key.kind, &s).map_err(|m| CliError::Validation(format!("{}.{}: {m}", schema.command, key.name)))?;
        raw.insert(key.name.to_string(), s);
        values.insert(key.name.to_string(), v);
    }
    let out = out.unwrap_or_else(|| default_out(schema.command));
    Ok(RunConfig { command: schema.command.to_string(), raw, values, out, seed })
}

pub fn default_out(command: &str) -> PathBuf {
    let root = std::env::var_os(OUT_ROOT_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
    root.join(command)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
    parse_config_file(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let s = schema("am-compute").unwrap();
        let file = parse_config_file("k = 1.0\np = 0 # saddle\nq = 1\nbranch = minus\n").unwrap();
        let flags = BTreeMap::from([("k".to_string(), "2".to_string())]);
        let c = validate(s, file, flags, Some("x".into()), 0).unwrap();
        assert_eq!(c.real("k").unwrap(), 2.0);
        assert_eq!(c.text("branch").unwrap(), "minus");
    }

    #[test]
    fn missing_key_names_its_path() {
        let s = schema("am-compute").unwrap();
        let flags = BTreeMap::from([("k".to_string(), "1".to_string()), ("p".to_string(), "0".to_string())]);
        let err = validate(s, BTreeMap::new(), flags, None, 0).unwrap_err();
        assert_eq!(err.to_string(), "invalid configuration: am-compute.q: required key missing");
    }

    #[test]
    fn rationals_are_exact() {
        assert_eq!(parse_rational("2/25"), Some((2, 25)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_value(Kind::Rational, "3/7"), Ok(Value::Rational(3, 7)));
    }
}
