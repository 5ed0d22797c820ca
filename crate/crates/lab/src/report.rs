//! Experiment reports and their CSV / JSON encodings.
//!
//! Reports are deterministic given the config: maps are ordered, floats are
//! written in shortest round-trip form, and the wall time is kept in its own
//! field so it can be ignored when comparing runs.

use crate::config::{Format, LabError, LabResult};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// A float that survives JSON even when non-finite (`"inf"`, `"-inf"`,
/// `"nan"` are written as strings).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&fmt_float(self.0))
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            F(f64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::F(x) => Ok(Num(x)),
            Raw::S(s) => match s.as_str() {
                "inf" => Ok(Num(f64::INFINITY)),
                "-inf" => Ok(Num(f64::NEG_INFINITY)),
                "nan" => Ok(Num(f64::NAN)),
                _ => Err(serde::de::Error::custom(format!("not a number: {s}"))),
            },
        }
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

/// One pass/fail decision: `statistic` compared with `threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub statistic: Num,
    pub threshold: Num,
    pub pass: bool,
}

impl Check {
    /// Passes when `statistic ≤ threshold`.
    pub fn at_most(name: &str, statistic: f64, threshold: f64) -> Self {
        Check { name: name.into(), statistic: Num(statistic), threshold: Num(threshold), pass: statistic <= threshold }
    }

    /// Passes when `statistic < threshold` (strict, as for test statistics).
    pub fn below(name: &str, statistic: f64, threshold: f64) -> Self {
        Check { name: name.into(), statistic: Num(statistic), threshold: Num(threshold), pass: statistic < threshold }
    }

    pub fn flag(name: &str, pass: bool) -> Self {
        Check { name: name.into(), statistic: Num(if pass { 1.0 } else { 0.0 }), threshold: Num(1.0), pass }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub mode: String,
    pub code_version: String,
    pub config: BTreeMap<String, String>,
    pub estimates: BTreeMap<String, Num>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Num>>,
    pub wall_time_s: f64,
}

impl ExperimentReport {
    pub fn new(experiment: &str, mode: &str, config: BTreeMap<String, String>, columns: &[&str]) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            mode: mode.into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            config,
            estimates: BTreeMap::new(),
            checks: Vec::new(),
            pass: true,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn estimate(&mut self, name: &str, value: f64) {
        self.estimates.insert(name.into(), Num(value));
    }

    pub fn check(&mut self, c: Check) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.columns.len(), "row width differs from the header");
        self.rows.push(values.iter().map(|&v| Num(v)).collect());
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.estimates.get(name).map(|n| n.0)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Same report with the wall time zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        ExperimentReport { wall_time_s: 0.0, ..self.clone() }
    }

    pub fn to_json(&self) -> LabResult<String> {
        serde_json::to_string_pretty(self).map(|s| s + "\n").map_err(|e| LabError::Serialize(e.to_string()))
    }

    pub fn from_json(s: &str) -> LabResult<Self> {
        serde_json::from_str(s).map_err(|e| LabError::Serialize(e.to_string()))
    }

    pub fn to_csv(&self) -> LabResult<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let ser = |e: csv::Error| LabError::Serialize(e.to_string());
        w.write_record(&self.columns).map_err(ser)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| fmt_float(v.0))).map_err(ser)?;
        }
        let bytes = w.into_inner().map_err(|e| LabError::Serialize(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| LabError::Serialize(e.to_string()))
    }

    /// One line per check, for terminals.
    pub fn summary(&self) -> String {
        let mut s = format!("{} ({}): {}\n", self.experiment, self.mode, if self.pass { "PASS" } else { "FAIL" });
        for (k, v) in &self.estimates {
            s += &format!("  {k} = {}\n", fmt_float(v.0));
        }
        for c in &self.checks {
            s += &format!(
                "  [{}] {}: {} vs {}\n",
                if c.pass { "ok" } else { "FAIL" },
                c.name,
                fmt_float(c.statistic.0),
                fmt_float(c.threshold.0)
            );
        }
        s
    }
}

fn write_file(path: &Path, contents: &str) -> LabResult<()> {
    let mut f = std::fs::File::create(path).map_err(|source| LabError::Io { path: path.display().to_string(), source })?;
    f.write_all(contents.as_bytes()).map_err(|source| LabError::Io { path: path.display().to_string(), source })
}

/// Writes the report. With `path = None` the chosen encoding goes to `out`;
/// with `Format::Both` the path's extension is replaced by `.csv` and `.json`.
/// Returns the files written.
pub fn emit_report(report: &ExperimentReport, format: Format, path: Option<&Path>, out: &mut dyn Write) -> LabResult<Vec<PathBuf>> {
    match path {
        None => {
            let io = |source| LabError::Io { path: "<stdout>".into(), source };
            if matches!(format, Format::Json | Format::Both) {
                out.write_all(report.to_json()?.as_bytes()).map_err(io)?;
            }
            if matches!(format, Format::Csv | Format::Both) {
                out.write_all(report.to_csv()?.as_bytes()).map_err(io)?;
            }
            Ok(Vec::new())
        }
        Some(p) => {
            let targets: Vec<(PathBuf, bool)> = match format {
                Format::Csv => vec![(p.to_path_buf(), true)],
                Format::Json => vec![(p.to_path_buf(), false)],
                Format::Both => vec![(p.with_extension("csv"), true), (p.with_extension("json"), false)],
            };
            for (path, csv) in &targets {
                let body = if *csv { report.to_csv()? } else { report.to_json()? };
                write_file(path, &body)?;
            }
            Ok(targets.into_iter().map(|t| t.0).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new("front", "default", BTreeMap::new(), &["x", "profile"]);
        r.estimate("supDeviation", 0.012345678901234567);
        r.estimate("bound", f64::INFINITY);
        r.check(Check::at_most("sup", 0.01, 0.0163));
        r.row(&[0.1, 1.0 / 3.0]);
        r.row(&[-1e-300, 2.5e10]);
        r
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        assert_eq!(ExperimentReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }

    #[test]
    fn csv_shape() {
        let csv = sample().to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,profile");
        assert!(lines.iter().all(|l| l.split(',').count() == 2));
        assert!(!csv.contains('\r'));
        assert_eq!(lines[1].split(',').nth(1).unwrap().parse::<f64>().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn empty_rows_give_header_only() {
        let r = ExperimentReport::new("ppp", "default", BTreeMap::new(), &["replica", "count"]);
        assert_eq!(r.to_csv().unwrap(), "replica,count\n");
    }

    #[test]
    fn failing_check_fails_report() {
        let mut r = sample();
        assert!(r.pass);
        r.check(Check::below("ks", 2.0, 1.0));
        assert!(!r.pass);
    }
}
