//! Argument parsing and exit codes for the `polymer-lab` binary, kept in the
//! library so they can be exercised in-process.

use crate::config::read_config_file;
use crate::{emit_report, run_experiment, Experiment, LabError, LabResult, Overrides, RunConfig};
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

/// Exit status when every check passes.
pub const EXIT_PASS: u8 = 0;
/// Exit status when the run completed but a check failed.
pub const EXIT_FAIL: u8 = 1;
/// Exit status for bad parameters, unreadable config files and I/O errors.
pub const EXIT_ERROR: u8 = 2;

/// Numerical experiments on log-domain random matrix products.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on bad
/// parameters or I/O errors. POLYMER_LAB_THREADS sets the worker count.
#[derive(Parser)]
#[command(name = "polymer-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Internal consistency: oracles, closed forms, metric axioms
    Validate(Params),
    /// Velocity and variance estimates (modes: estimate, asymptotic, clt)
    Lyapunov(Params),
    /// Stable sampler and stationarity (modes: laplace, heights, equilibrium)
    StableCheck(Params),
    /// Empirical front against its limit profile
    Front(Params),
    /// Characteristic function of front fluctuations
    Fluctuation(Params),
    /// Point-process counts of the normalized cloud
    Ppp(Params),
    /// Polymer measures (modes: stationarity, contraction, shift, pf)
    Polymer(Params),
    /// Rescaled increment walk
    Levy(Params),
    /// Perturbed tails (modes: convergence, max-weight)
    Perturbed(Params),
}

#[derive(Args)]
struct Params {
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// stable(a), pareto(a), lognormal(mu,sigma) or ones
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    /// Output path; stdout when absent
    #[arg(long)]
    out: Option<String>,
    /// csv, json or both
    #[arg(long)]
    format: Option<String>,
    /// key = value file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Params {
    fn overrides(&self) -> LabResult<Overrides> {
        let file = match &self.config {
            Some(p) => read_config_file(p)?,
            None => Overrides::default(),
        };
        let flags = [
            ("alpha", &self.alpha),
            ("n", &self.n),
            ("t", &self.t),
            ("replicas", &self.replicas),
            ("seed", &self.seed),
            ("dist", &self.dist),
            ("tol", &self.tol),
            ("mode", &self.mode),
            ("x", &self.x),
            ("k", &self.k),
            ("tau", &self.tau),
            ("out", &self.out),
            ("format", &self.format),
        ];
        let mut cli = Overrides::default();
        for (k, v) in flags {
            if let Some(v) = v {
                cli.set(k, v.clone())?;
            }
        }
        Ok(file.layered(&cli))
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> LabResult<bool> {
    let (experiment, params) = match &cli.command {
        Command::Validate(p) => (Experiment::Validate, p),
        Command::Lyapunov(p) => (Experiment::Lyapunov, p),
        Command::StableCheck(p) => (Experiment::StableCheck, p),
        Command::Front(p) => (Experiment::Front, p),
        Command::Fluctuation(p) => (Experiment::Fluctuation, p),
        Command::Ppp(p) => (Experiment::Ppp, p),
        Command::Polymer(p) => (Experiment::Polymer, p),
        Command::Levy(p) => (Experiment::Levy, p),
        Command::Perturbed(p) => (Experiment::Perturbed, p),
    };
    let cfg = RunConfig::resolve(experiment, &params.overrides()?)?;
    let report = run_experiment(&cfg)?;
    let written = emit_report(&report, cfg.format, cfg.out.as_deref(), out)?;
    if !written.is_empty() {
        // the report went to files, so the terminal gets the summary
        let _ = err.write_all(report.summary().as_bytes());
    }
    Ok(report.pass)
}

/// Parses `args` (program name first), runs the experiment and returns the
/// exit status. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

/// Sizes the global worker pool from `POLYMER_LAB_THREADS` when set.
pub fn init_threads() -> LabResult<()> {
    if let Ok(v) = std::env::var("POLYMER_LAB_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| LabError::param("POLYMER_LAB_THREADS", format!("`{v}` is not a count")))?;
        // a pool may already exist when embedded; the default is then kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
