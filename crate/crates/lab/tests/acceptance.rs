//! Acceptance suite: sixteen criteria, fixed seeds, one line per criterion.
//!
//! Runs without the libtest harness so the lines are printed even when
//! everything passes. Exits non-zero if any criterion fails.

use polymer_core::lyapunov::c_alpha;
use polymer_core::stable::{levy_exponent, Stable1Constants};
use polymer_lab::{run_experiment, Experiment, ExperimentReport, LabResult, RunConfig};
use std::f64::consts::PI;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> LabResult<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn run(e: Experiment, pairs: &[(&str, &str)]) -> LabResult<ExperimentReport> {
    run_experiment(&RunConfig::from_pairs(e, pairs)?)
}

fn check_line(r: &ExperimentReport, name: &str) -> String {
    match r.find_check(name) {
        Some(c) => format!("{name} {:.6e} vs {:.6e}", c.statistic.0, c.threshold.0),
        None => format!("{name} missing"),
    }
}

fn checks_pass(r: &ExperimentReport, names: &[&str]) -> bool {
    names.iter().all(|n| r.find_check(n).is_some_and(|c| c.pass))
}

/// Runs `f` on seeds `1..=seeds` and counts passing reports.
fn seed_count(seeds: u64, f: impl Fn(u64) -> LabResult<ExperimentReport>) -> LabResult<(usize, Vec<ExperimentReport>)> {
    let reports: Vec<_> = (1..=seeds).map(f).collect::<LabResult<_>>()?;
    Ok((reports.iter().filter(|r| r.pass).count(), reports))
}

fn c01_oracle() -> LabResult<Outcome> {
    let r = run(Experiment::Validate, &[("seed", "1"), ("replicas", "20")])?;
    outcome(checks_pass(&r, &["oracle"]), check_line(&r, "oracle"))
}

fn c02_ones() -> LabResult<Outcome> {
    let r = run(Experiment::Validate, &[("seed", "2"), ("replicas", "1")])?;
    let names = ["ones-heights", "ones-velocity", "ones-covariant-law"];
    outcome(checks_pass(&r, &names), names.iter().map(|n| check_line(&r, n)).collect::<Vec<_>>().join("; "))
}

fn c03_sampler() -> LabResult<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, a) in ["0.3", "0.5", "0.7"].iter().enumerate() {
        let seed = (30 + i).to_string();
        let r = run(Experiment::StableCheck, &[("mode", "laplace"), ("alpha", a), ("replicas", "1000000"), ("seed", &seed)])?;
        let worst = r.checks.iter().filter(|c| c.name.starts_with("laplace")).map(|c| c.statistic.0).fold(0.0, f64::max);
        pass &= r.checks.iter().filter(|c| c.name.starts_with("laplace")).all(|c| c.pass);
        parts.push(format!("alpha {a}: max |z| {worst:.3}"));
        if *a == "0.5" {
            pass &= checks_pass(&r, &["ks-cdf"]);
            parts.push(check_line(&r, "ks-cdf"));
        }
    }
    outcome(pass, parts.join("; "))
}

fn c04_heights() -> LabResult<Outcome> {
    let (k, _) = seed_count(10, |s| {
        run(Experiment::StableCheck, &[("mode", "heights"), ("n", "50"), ("t", "10"), ("seed", &s.to_string())])
    })?;
    outcome(k >= 8, format!("{k}/10 seeds pass KS at 1%"))
}

fn c05_velocity() -> LabResult<Outcome> {
    let r = run(Experiment::Lyapunov, &[("alpha", "0.5"), ("n", "100"), ("t", "2000"), ("replicas", "100000"), ("seed", "5")])?;
    outcome(
        checks_pass(&r, &["v-agreement"]),
        format!(
            "vHat {:.5}, exact MC {:.5}; {}",
            r.get("vHat").unwrap_or(f64::NAN),
            r.get("vMc").unwrap_or(f64::NAN),
            check_line(&r, "v-agreement")
        ),
    )
}

fn c06_asymptotics() -> LabResult<Outcome> {
    let r = run(Experiment::Lyapunov, &[("mode", "asymptotic"), ("alpha", "0.5"), ("n", "10000"), ("replicas", "10000"), ("seed", "6")])?;
    let errs: Vec<String> = r.rows.iter().map(|row| format!("{:.4}", row[4].0)).collect();
    outcome(
        r.pass,
        format!(
            "|v - vAsym| over N = 1e2..1e4: [{}]; {}; {}; {}; {}",
            errs.join(", "),
            check_line(&r, "error-decreasing"),
            check_line(&r, "relative-error"),
            check_line(&r, "variance-ratio"),
            check_line(&r, "variance-ratio-approaching-one")
        ),
    )
}

fn c07_clt() -> LabResult<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (dist, n) in [("stable(0.5)", "20"), ("lognormal(0,1)", "10")] {
        let (k, _) = seed_count(10, |s| {
            run(
                Experiment::Lyapunov,
                &[("mode", "clt"), ("dist", dist), ("n", n), ("t", "2000"), ("replicas", "300"), ("seed", &(70 + s).to_string())],
            )
        })?;
        pass &= k >= 8;
        parts.push(format!("{dist} N={n}: {k}/10"));
    }
    outcome(pass, parts.join("; "))
}

fn c08_contraction() -> LabResult<Outcome> {
    let r = run(Experiment::Polymer, &[("mode", "contraction"), ("n", "10"), ("t", "50"), ("replicas", "1000"), ("seed", "8")])?;
    outcome(r.pass, ["submultiplicative", "negative-rate", "spot-check-violations"].map(|n| check_line(&r, n)).join("; "))
}

fn c09_equilibrium() -> LabResult<Outcome> {
    let r = run(Experiment::StableCheck, &[("mode", "equilibrium"), ("n", "50"), ("replicas", "2000"), ("seed", "9")])?;
    outcome(r.pass, ["ks-uniform", "ks-vertex", "ks-random"].map(|n| check_line(&r, n)).join("; "))
}

fn c10_stationarity() -> LabResult<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for dist in ["stable(0.5)", "lognormal(0,1)"] {
        let (k, reports) = seed_count(20, |s| {
            run(Experiment::Polymer, &[("mode", "stationarity"), ("dist", dist), ("n", "10"), ("tol", "1e-8"), ("seed", &(100 + s).to_string())])
        })?;
        let worst = reports
            .iter()
            .flat_map(|r| r.checks.iter().map(|c| c.statistic.0 / c.threshold.0))
            .fold(0.0, f64::max);
        pass &= k == 20;
        parts.push(format!("{dist}: {k}/20, worst residual/allowed {worst:.3}"));
    }
    outcome(pass, parts.join("; "))
}

fn c11_front() -> LabResult<Outcome> {
    let (k, reports) = seed_count(10, |s| {
        run(Experiment::Front, &[("dist", "stable(0.5)"), ("n", "10000"), ("t", "3"), ("seed", &(110 + s).to_string())])
    })?;
    let worst = reports.iter().map(|r| r.get("supDeviation").unwrap_or(f64::NAN)).fold(0.0, f64::max);
    outcome(k >= 9, format!("{k}/10 seeds with sup-deviation <= 0.0163, largest {worst:.4}"))
}

fn c12_fluctuation() -> LabResult<Outcome> {
    let r = run(Experiment::Fluctuation, &[("alpha", "0.5"), ("n", "10000"), ("t", "3"), ("x", "0"), ("replicas", "500"), ("seed", "12")])?;
    outcome(
        r.pass,
        format!(
            "|cf(1)| {:.4} at N=1e4, {:.4} at N=1e3, target {:.4}; {}",
            r.get("cfModulusU1").unwrap_or(f64::NAN),
            r.get("cfModulusU1SmallN").unwrap_or(f64::NAN),
            r.get("targetU1").unwrap_or(f64::NAN),
            check_line(&r, "improves-with-n")
        ),
    )
}

fn c13_ppp() -> LabResult<Outcome> {
    let r = run(Experiment::Ppp, &[("alpha", "0.5"), ("n", "10000"), ("replicas", "200"), ("seed", "13")])?;
    outcome(
        r.pass,
        format!(
            "mean count in [0,inf) {:.4} (se {:.4}); {}; {}",
            r.get("meanCountUpper").unwrap_or(f64::NAN),
            r.get("meanCountUpperStdErr").unwrap_or(f64::NAN),
            check_line(&r, "mean-count-upper"),
            check_line(&r, "chi-square")
        ),
    )
}

fn c14_perturbed() -> LabResult<Outcome> {
    let conv = run(Experiment::Perturbed, &[("mode", "convergence"), ("dist", "pareto(0.5)"), ("n", "10000"), ("t", "2"), ("seed", "14")])?;
    let mw = run(Experiment::Perturbed, &[("mode", "max-weight"), ("dist", "pareto(0.5)"), ("n", "10000"), ("t", "2"), ("seed", "14")])?;
    let medians: Vec<String> = mw.rows.iter().map(|row| format!("{:.4}", row[1].0)).collect();
    outcome(
        checks_pass(&conv, &["ks-stable"]) && checks_pass(&mw, &["median-decreasing", "alpha-sum"]),
        format!("{}; medians [{}]; {}", check_line(&conv, "ks-stable"), medians.join(", "), check_line(&mw, "alpha-sum")),
    )
}

fn c15_levy() -> LabResult<Outcome> {
    let r = run(Experiment::Levy, &[("alpha", "0.5"), ("n", "1000"), ("k", "50"), ("tau", "1"), ("replicas", "1000"), ("seed", "15")])?;
    let cf: Vec<String> = ["0.5", "1", "2"]
        .iter()
        .map(|u| {
            format!(
                "u={u}: {:.4} vs {:.4}",
                r.get(&format!("cfModulus_u{u}")).unwrap_or(f64::NAN),
                r.get(&format!("target_u{u}")).unwrap_or(f64::NAN)
            )
        })
        .collect();
    outcome(r.pass, format!("{}; {}", cf.join(", "), check_line(&r, "additivity")))
}

fn c16_constants() -> LabResult<Outcome> {
    let re = levy_exponent(1.0)?.re;
    let c = Stable1Constants::compute()?.c;
    let ch = c_alpha(0.5)?;
    let pass = (re + PI / 2.0).abs() <= 1e-6 && (c - 0.42278).abs() <= 1e-4 && (ch - 1.128379).abs() <= 1e-6;
    outcome(pass, format!("Re psi(1) = {re:.9}, C = {c:.6}, c_1/2 = {ch:.7}"))
}

type Criterion = (&'static str, &'static str, fn() -> LabResult<Outcome>);

const CRITERIA: [Criterion; 16] = [
    ("C01", "path-sum oracle", c01_oracle),
    ("C02", "all-ones closed forms", c02_ones),
    ("C03", "stable sampler", c03_sampler),
    ("C04", "stationary heights", c04_heights),
    ("C05", "velocity vs exact Monte Carlo", c05_velocity),
    ("C06", "large-N asymptotics", c06_asymptotics),
    ("C07", "central limit theorem", c07_clt),
    ("C08", "projective contraction", c08_contraction),
    ("C09", "instantaneous equilibrium", c09_equilibrium),
    ("C10", "polymer stationarity", c10_stationarity),
    ("C11", "front profile", c11_front),
    ("C12", "front fluctuations", c12_fluctuation),
    ("C13", "Poisson point process", c13_ppp),
    ("C14", "perturbed environments", c14_perturbed),
    ("C15", "Levy marginal", c15_levy),
    ("C16", "constants", c16_constants),
];

fn main() {
    // `cargo test -- <filter>` runs only criteria whose id or name contains the filter
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    let total = Instant::now();
    for (id, name, f) in CRITERIA {
        if !filter.is_empty() && !filter.iter().any(|p| id.contains(p.as_str()) || name.contains(p.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        println!("[{}] {id} {name} ({:.1}s): {detail}", if pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
        if !pass {
            failed.push(id);
        }
    }
    println!("acceptance: {}/{ran} criteria pass in {:.0}s", ran - failed.len(), total.elapsed().as_secs_f64());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
