//! Run configuration: subcommand, parameters, and the flat `key = value`
//! config file format.
//!
//! File format: one `key = value` per line, `#` starts a comment, blank lines
//! are ignored. Keys are the long flag names (`alpha`, `n`, `t`, `replicas`,
//! `seed`, `dist`, `tol`, `mode`, `x`, `k`, `tau`, `out`, `format`). Flags given
//! on the command line override the file.

use polymer_core::EnvSpec;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid value for `{name}`: {reason}")]
    Param { name: String, reason: String },
    #[error("config file line {line}: {reason}")]
    ConfigSyntax { line: usize, reason: String },
    #[error("missing required parameter `{0}`")]
    Missing(&'static str),
    #[error(transparent)]
    Core(#[from] polymer_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("report serialization: {0}")]
    Serialize(String),
}

impl LabError {
    pub fn param(name: &str, reason: impl Into<String>) -> Self {
        LabError::Param { name: name.to_string(), reason: reason.into() }
    }
}

pub type LabResult<T> = std::result::Result<T, LabError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    Validate,
    Lyapunov,
    StableCheck,
    Front,
    Fluctuation,
    Ppp,
    Polymer,
    Levy,
    Perturbed,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Validate,
        Experiment::Lyapunov,
        Experiment::StableCheck,
        Experiment::Front,
        Experiment::Fluctuation,
        Experiment::Ppp,
        Experiment::Polymer,
        Experiment::Levy,
        Experiment::Perturbed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Validate => "validate",
            Experiment::Lyapunov => "lyapunov",
            Experiment::StableCheck => "stable-check",
            Experiment::Front => "front",
            Experiment::Fluctuation => "fluctuation",
            Experiment::Ppp => "ppp",
            Experiment::Polymer => "polymer",
            Experiment::Levy => "levy",
            Experiment::Perturbed => "perturbed",
        }
    }

    /// Accepted `mode` values; the first is the default.
    pub fn modes(self) -> &'static [&'static str] {
        match self {
            Experiment::Lyapunov => &["estimate", "asymptotic", "clt"],
            Experiment::StableCheck => &["laplace", "heights", "equilibrium"],
            Experiment::Polymer => &["stationarity", "contraction", "shift", "pf"],
            Experiment::Perturbed => &["convergence", "max-weight"],
            _ => &["default"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = LabError;

    fn from_str(s: &str) -> LabResult<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| LabError::param("experiment", format!("unknown experiment `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl FromStr for Format {
    type Err = LabError;

    fn from_str(s: &str) -> LabResult<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "both" => Ok(Format::Both),
            _ => Err(LabError::param("format", format!("`{s}` is not one of csv, json, both"))),
        }
    }
}

/// Raw parameters before per-experiment defaults are applied. Every field
/// is optional so a config file and flags can be layered.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub values: BTreeMap<String, String>,
}

pub const KEYS: [&str; 13] = ["alpha", "n", "t", "replicas", "seed", "dist", "tol", "mode", "x", "k", "tau", "out", "format"];

impl Overrides {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> LabResult<()> {
        if !KEYS.contains(&key) {
            return Err(LabError::param(key, "unknown key"));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    /// Entries of `other` replace those of `self`.
    pub fn layered(mut self, other: &Overrides) -> Self {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
        self
    }

    fn get<T: FromStr>(&self, key: &str) -> LabResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.trim().parse::<T>().map_err(|e| LabError::param(key, format!("`{v}`: {e}"))))
            .transpose()
    }
}

pub fn parse_config_text(text: &str) -> LabResult<Overrides> {
    let mut o = Overrides::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| LabError::ConfigSyntax { line: i + 1, reason: format!("expected `key = value`, got `{line}`") })?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(LabError::ConfigSyntax { line: i + 1, reason: format!("unknown key `{k}`") });
        }
        o.values.insert(k.to_string(), v.trim().to_string());
    }
    Ok(o)
}

pub fn read_config_file(path: &std::path::Path) -> LabResult<Overrides> {
    let text = std::fs::read_to_string(path).map_err(|source| LabError::Io { path: path.display().to_string(), source })?;
    parse_config_text(&text)
}

/// Fully resolved parameters of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub mode: String,
    pub alpha: f64,
    pub n: usize,
    pub t: usize,
    pub replicas: usize,
    pub seed: u64,
    pub dist: EnvSpec,
    pub tol: f64,
    pub x: f64,
    pub k: usize,
    pub tau: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

struct Defaults {
    n: usize,
    t: usize,
    replicas: usize,
}

fn defaults(e: Experiment, mode: &str) -> Defaults {
    let d = |n, t, replicas| Defaults { n, t, replicas };
    match (e, mode) {
        (Experiment::Validate, _) => d(3, 4, 20),
        (Experiment::Lyapunov, "asymptotic") => d(10_000, 1, 10_000),
        (Experiment::Lyapunov, "clt") => d(20, 2000, 300),
        (Experiment::Lyapunov, _) => d(100, 2000, 100_000),
        (Experiment::StableCheck, "heights") => d(50, 10, 1),
        (Experiment::StableCheck, "equilibrium") => d(50, 1, 2000),
        (Experiment::StableCheck, _) => d(1, 1, 1_000_000),
        (Experiment::Front, _) => d(10_000, 3, 1),
        (Experiment::Fluctuation, _) => d(10_000, 3, 500),
        (Experiment::Ppp, _) => d(10_000, 1, 200),
        (Experiment::Polymer, "contraction") => d(10, 50, 1000),
        (Experiment::Polymer, "pf") => d(10, 50, 1),
        (Experiment::Polymer, _) => d(10, 1, 1),
        (Experiment::Levy, _) => d(1000, 1, 1000),
        (Experiment::Perturbed, "max-weight") => d(10_000, 2, 21),
        (Experiment::Perturbed, _) => d(10_000, 2, 100),
    }
}

impl RunConfig {
    /// Applies defaults and validates. `seed` is mandatory.
    pub fn resolve(experiment: Experiment, o: &Overrides) -> LabResult<RunConfig> {
        let mode = o.get::<String>("mode")?.unwrap_or_else(|| experiment.modes()[0].to_string());
        if !experiment.modes().contains(&mode.as_str()) {
            return Err(LabError::param("mode", format!("`{mode}` is not one of {:?} for {experiment}", experiment.modes())));
        }
        let def = defaults(experiment, &mode);
        let alpha = o.get::<f64>("alpha")?.unwrap_or(0.5);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(LabError::param("alpha", format!("{alpha} is outside (0, 1)")));
        }
        let n = o.get::<usize>("n")?.unwrap_or(def.n);
        let t = o.get::<usize>("t")?.unwrap_or(def.t);
        let replicas = o.get::<usize>("replicas")?.unwrap_or(def.replicas);
        let seed = o.get::<u64>("seed")?.ok_or(LabError::Missing("seed"))?;
        let default_dist = match (experiment, mode.as_str()) {
            (Experiment::Perturbed, _) => EnvSpec::Pareto { alpha },
            _ => EnvSpec::Stable { alpha },
        };
        let dist = match o.values.get("dist") {
            Some(s) => s.parse::<EnvSpec>().map_err(|e| LabError::param("dist", e.to_string()))?,
            None => default_dist,
        };
        dist.validate().map_err(|e| LabError::param("dist", e.to_string()))?;
        let tol = o.get::<f64>("tol")?.unwrap_or(1e-8);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(LabError::param("tol", format!("{tol} is outside (0, 1)")));
        }
        let x = o.get::<f64>("x")?.unwrap_or(0.0);
        if !x.is_finite() {
            return Err(LabError::param("x", "must be finite"));
        }
        let k = o.get::<usize>("k")?.unwrap_or(50);
        let tau = o.get::<f64>("tau")?.unwrap_or(1.0);
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(LabError::param("tau", format!("{tau} must be positive")));
        }
        let out = o.get::<PathBuf>("out")?;
        let format = o.get::<Format>("format")?.unwrap_or(Format::Json);
        if n < 1 {
            return Err(LabError::param("n", "must be positive"));
        }
        if replicas < 1 {
            return Err(LabError::param("replicas", "must be positive"));
        }
        Ok(RunConfig { experiment, mode, alpha, n, t, replicas, seed, dist, tol, x, k, tau, out, format })
    }

    /// Builds a config from `key=value` pairs; convenient in tests.
    pub fn from_pairs(experiment: Experiment, pairs: &[(&str, &str)]) -> LabResult<RunConfig> {
        let mut o = Overrides::default();
        for (k, v) in pairs {
            o.set(k, *v)?;
        }
        RunConfig::resolve(experiment, &o)
    }

    /// Parameters echoed into reports, in a fixed order.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("experiment".into(), self.experiment.to_string());
        m.insert("mode".into(), self.mode.clone());
        m.insert("alpha".into(), self.alpha.to_string());
        m.insert("n".into(), self.n.to_string());
        m.insert("t".into(), self.t.to_string());
        m.insert("replicas".into(), self.replicas.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("dist".into(), self.dist.to_string());
        m.insert("tol".into(), self.tol.to_string());
        m.insert("x".into(), self.x.to_string());
        m.insert("k".into(), self.k.to_string());
        m.insert("tau".into(), self.tau.to_string());
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let file = parse_config_text("# run\nalpha = 0.3\nn=50 # inline\n\nseed = 7\n").unwrap();
        let mut flags = Overrides::default();
        flags.set("n", "60").unwrap();
        let c = RunConfig::resolve(Experiment::Front, &file.layered(&flags)).unwrap();
        assert_eq!((c.alpha, c.n, c.seed), (0.3, 60, 7));
        assert_eq!(c.dist, EnvSpec::Stable { alpha: 0.3 });
    }

    #[test]
    fn errors_name_the_parameter() {
        let e = RunConfig::from_pairs(Experiment::Front, &[("alpha", "1.5"), ("seed", "1")]).unwrap_err();
        assert!(e.to_string().contains("alpha"), "{e}");
        let e = RunConfig::from_pairs(Experiment::Front, &[]).unwrap_err();
        assert!(e.to_string().contains("seed"));
        assert!(RunConfig::from_pairs(Experiment::Polymer, &[("seed", "1"), ("mode", "nope")]).is_err());
        assert!(parse_config_text("alpha 0.5").is_err());
        assert!(parse_config_text("color = red").is_err());
        assert!(RunConfig::from_pairs(Experiment::Lyapunov, &[("seed", "1"), ("dist", "pareto(2)")]).is_err());
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
    }
}
