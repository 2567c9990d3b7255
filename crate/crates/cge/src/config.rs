//! Plain-text run configuration.
//!
//! One `key = value` per line; `#` starts a comment; blank lines are ignored.
//! Unknown keys and repeated keys are rejected with their line number. List
//! values are comma separated. Command-line flags override file values.

use std::collections::BTreeMap;
use std::path::Path;

use cge_core::harness::Calibration;
use cge_core::solver::{Discretization, Preconditioner, SolveConfig};

/// Every accepted key with its default and meaning.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("dim", "2", "spatial dimension d"),
    ("level", "3", "resolution level N (3^N cells per side)"),
    ("field", "", "path of a CGE1 field file; overrides the generator"),
    ("generator", "constant", "constant | laminate | layered | cantor | cascade | random"),
    ("matrix", "", "constant: row-major upper triangle of the matrix, empty for the identity"),
    ("axis", "0", "laminate: stacking axis"),
    ("values", "1,4", "laminate: stripe values"),
    ("alpha", "0.5", "layered: exponent α"),
    ("k_max", "3", "layered: number of layers"),
    ("generation", "2", "cantor/cascade: generation n"),
    ("digits", "0,2", "cantor: retained base-3 digits"),
    ("gamma", "0.5", "cascade: intermittency γ"),
    ("lo", "0.001", "random: smallest eigenvalue"),
    ("hi", "1000", "random: largest eigenvalue"),
    ("diagonal", "false", "random: diagonal matrices only"),
    ("seed", "42", "generator seed (cascade sweeps use seed, seed+1, ...)"),
    ("s", "0.4", "upper exponent s"),
    ("t", "0.4", "lower exponent t"),
    ("discretization", "q1", "q1 | fd5"),
    ("cg_rel_tol", "1e-10", "relative residual tolerance"),
    ("cg_max_iter", "auto", "iteration cap or auto"),
    ("preconditioner", "jacobi", "jacobi | none"),
    ("p", "2", "criterion: integrability of a"),
    ("q", "2", "criterion: integrability of a^-1"),
    ("criterion_alpha", "0", "criterion: regularity of a"),
    ("criterion_beta", "0", "criterion: regularity of a^-1"),
    ("boundary", "affine:2,1,0", "constant:c | affine:c,g1,..,gd | exp:Λ | osc:amplitude,frequency"),
    ("kind", "sharpness", "sweep kind: sharpness | cantor | cascade"),
    ("lambda", "1,4,16,64", "sharpness: anisotropy values Λ"),
    ("generations", "2,3,4", "cantor/cascade sweep: generations"),
    ("seeds", "20", "cascade sweep: seeds per generation"),
    ("audit_slack", "1e-7", "audit: relative slack"),
    ("calibration_harnack", "", "Harnack calibration constant (default: frozen baseline)"),
    ("calibration_local_bound", "", "local-boundedness calibration constant"),
    ("calibration_reverse_holder", "", "reverse Hölder baseline"),
    ("calibration_log_caccioppoli", "", "log-Caccioppoli baseline"),
    ("calibration_sobolev_poincare", "", "Sobolev–Poincaré baseline"),
    ("threads", "0", "worker threads, 0 for all cores"),
    ("cache_dir", "", "sweep cache directory, empty to disable"),
    ("out", "", "output path"),
];

/// Keys that affect how a run executes but not what it computes.
const OPERATIONAL: &[&str] = &["threads", "cache_dir", "out"];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot parse `{value}`: {message}")]
    Value { key: String, value: String, message: String },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _, _)| *k == key)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::Parse { line, message: format!("expected `key = value`, got `{content}`") })?;
            let key = key.trim();
            if !known(key) {
                return Err(ConfigError::Parse { line, message: format!("unknown key `{key}`") });
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Parse { line, message: format!("key `{key}` repeated") });
            }
        }
        Ok(RunConfig { values })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if !known(key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Result<Self, ConfigError> {
        self.set(key, value)?;
        Ok(self)
    }

    /// Raw value, falling back to the default.
    pub fn raw(&self, key: &str) -> &str {
        if let Some(v) = self.values.get(key) {
            return v;
        }
        KEYS.iter().find(|(k, _, _)| *k == key).map(|(_, d, _)| *d).unwrap_or_else(|| panic!("undeclared key {key}"))
    }

    pub fn is_set(&self, key: &str) -> bool {
        !self.raw(key).is_empty()
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, value: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        value.trim().parse().map_err(|e: T::Err| ConfigError::Value {
            key: key.to_string(),
            value: value.to_string(),
            message: e.to_string(),
        })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(key, self.raw(key))
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key);
        if raw.trim().is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',').map(|v| self.parsed(key, v)).collect()
    }

    fn bad(&self, key: &str, message: &str) -> ConfigError {
        ConfigError::Value { key: key.to_string(), value: self.raw(key).to_string(), message: message.to_string() }
    }

    pub fn solve_config(&self) -> Result<SolveConfig, ConfigError> {
        let discretization = match self.raw("discretization") {
            "q1" => Discretization::Q1Fem,
            "fd5" => Discretization::Fd5,
            _ => return Err(self.bad("discretization", "expected q1 or fd5")),
        };
        let preconditioner = match self.raw("preconditioner") {
            "jacobi" => Preconditioner::Diagonal,
            "none" => Preconditioner::None,
            _ => return Err(self.bad("preconditioner", "expected jacobi or none")),
        };
        let cg_max_iter = match self.raw("cg_max_iter") {
            "auto" | "" => None,
            _ => Some(self.get("cg_max_iter")?),
        };
        Ok(SolveConfig { discretization, cg_rel_tol: self.get("cg_rel_tol")?, cg_max_iter, preconditioner })
    }

    pub fn calibration(&self) -> Result<Calibration, ConfigError> {
        let mut c = Calibration::default();
        for (key, slot) in [
            ("calibration_harnack", &mut c.harnack),
            ("calibration_local_bound", &mut c.local_bound),
            ("calibration_reverse_holder", &mut c.reverse_holder_baseline),
            ("calibration_log_caccioppoli", &mut c.log_caccioppoli_baseline),
            ("calibration_sobolev_poincare", &mut c.sobolev_poincare_baseline),
        ] {
            if self.is_set(key) {
                *slot = self.get(key)?;
            }
        }
        Ok(c)
    }

    /// Every non-operational key with its effective value, for embedding in reports.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        KEYS.iter()
            .filter(|(k, _, _)| !OPERATIONAL.contains(k))
            .map(|(k, _, _)| (k.to_string(), self.raw(k).to_string()))
            .collect()
    }

    /// The documented key table as a config file with every default.
    pub fn template() -> String {
        let mut out = String::new();
        for (k, d, doc) in KEYS {
            out.push_str(&format!("# {doc}\n{k} = {d}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments_and_defaults() {
        let c = RunConfig::parse("# header\n\nlevel = 4  # finer\ns=0.3\nlambda = 1, 4,16\n").unwrap();
        assert_eq!(c.get::<u32>("level").unwrap(), 4);
        assert_eq!(c.get::<f64>("s").unwrap(), 0.3);
        assert_eq!(c.get::<f64>("t").unwrap(), 0.4);
        assert_eq!(c.list::<f64>("lambda").unwrap(), vec![1.0, 4.0, 16.0]);
        assert_eq!(c.solve_config().unwrap(), SolveConfig::default());
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(
            RunConfig::parse("level = 3\n\nbogus = 1\n").unwrap_err(),
            ConfigError::Parse { line: 3, message: "unknown key `bogus`".into() }
        );
        assert!(matches!(RunConfig::parse("level 3"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(RunConfig::parse("s = 1\ns = 2"), Err(ConfigError::Parse { line: 2, .. })));
        let c = RunConfig::parse("level = x").unwrap();
        assert!(matches!(c.get::<u32>("level"), Err(ConfigError::Value { .. })));
        assert!(RunConfig::default().with("nope", "1").is_err());
    }

    #[test]
    fn template_round_trips() {
        let c = RunConfig::parse(&RunConfig::template()).unwrap();
        assert_eq!(c.resolved(), RunConfig::default().resolved());
        assert!(!c.resolved().contains_key("threads"));
    }

    #[test]
    fn calibration_overrides() {
        let c = RunConfig::parse("calibration_harnack = 0.5").unwrap();
        let cal = c.calibration().unwrap();
        assert_eq!(cal.harnack, 0.5);
        assert_eq!(cal.local_bound, Calibration::default().local_bound);
    }
}
