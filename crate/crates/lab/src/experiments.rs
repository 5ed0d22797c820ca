//! One function per subcommand. Each turns a [`RunConfig`] into an
//! [`ExperimentReport`] whose `pass` flag is the conjunction of its checks.

use crate::config::{Experiment, LabResult, RunConfig};
use crate::report::{Check, ExperimentReport};
use polymer_core::env::{sample_environment, ConstantEnvironment, SeededEnvironment};
use polymer_core::front::{
    centered_front_check, dkw_radius, front_fluctuation_experiment, max_weight_check, max_weight_medians,
    perturbed_convergence_check, pooled_height_check, ppp_experiment, Bin, FrontProfile,
};
use polymer_core::lyapunov::{
    asymptotics, clt_fluctuation_experiment, growth_increments, levy_additivity_check, rescaled_walk_marginal,
    summarize_increments, velocity_variance_exact_mc, CltOptions,
};
use polymer_core::partition::{
    alpha_norm_log, p2p_bruteforce, p2p_matrix, project_log_coords, run_partition, step_recursion,
};
use polymer_core::polymer::{covariance_check, covariant_law, reversal_balance_check};
use polymer_core::projective::{
    contraction_profile, contraction_spot_check, instantaneous_equilibrium_check, pf_comparability_check,
    proj_distance_log, shift_covariance_check, LimitOptions,
};
use polymer_core::rng::par_replicas;
use polymer_core::stable::{levy_half_cdf, sample_stable, stable_cdf, u_alpha, validate_laplace, StableParams};
use polymer_core::stats::{ks_one_sample, TestResult};
use polymer_core::{EnvSpec, EnvironmentMatrix, PartitionVector, SimplexPoint, Substreams};
use rand::Rng;
use std::time::Instant;

/// Runs the experiment named in `cfg`; identical configs give identical
/// reports apart from `wall_time_s`.
pub fn run_experiment(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let start = Instant::now();
    let mut r = match cfg.experiment {
        Experiment::Validate => validate(cfg),
        Experiment::Lyapunov => match cfg.mode.as_str() {
            "asymptotic" => lyapunov_asymptotic(cfg),
            "clt" => lyapunov_clt(cfg),
            _ => lyapunov_estimate(cfg),
        },
        Experiment::StableCheck => match cfg.mode.as_str() {
            "heights" => stable_heights(cfg),
            "equilibrium" => stable_equilibrium(cfg),
            _ => stable_laplace(cfg),
        },
        Experiment::Front => front(cfg),
        Experiment::Fluctuation => fluctuation(cfg),
        Experiment::Ppp => ppp(cfg),
        Experiment::Polymer => match cfg.mode.as_str() {
            "contraction" => polymer_contraction(cfg),
            "shift" => polymer_shift(cfg),
            "pf" => polymer_pf(cfg),
            _ => polymer_stationarity(cfg),
        },
        Experiment::Levy => levy(cfg),
        Experiment::Perturbed => match cfg.mode.as_str() {
            "max-weight" => perturbed_max_weight(cfg),
            _ => perturbed_convergence(cfg),
        },
    }?;
    r.wall_time_s = start.elapsed().as_secs_f64();
    Ok(r)
}

fn report(cfg: &RunConfig, columns: &[&str]) -> ExperimentReport {
    ExperimentReport::new(cfg.experiment.name(), &cfg.mode, cfg.echo(), columns)
}

fn ks_check(name: &str, t: &TestResult) -> Check {
    Check::below(name, t.statistic, t.critical_value)
}

/// Powers of ten from 100 up to `n`.
fn decade_ladder(n: usize) -> Vec<usize> {
    let mut v = vec![100];
    while v.last().unwrap() * 10 <= n {
        let next = v.last().unwrap() * 10;
        v.push(next);
    }
    v
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn validate(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["index", "statistic", "threshold", "pass"]);
    let subs = Substreams::new(cfg.seed);

    // path enumeration against the matrix product
    let mut worst: f64 = 0.0;
    for s in 0..cfg.replicas as u64 {
        for n in [2usize, 3] {
            for t in [2usize, 3, 4] {
                let mut rng = subs.stream(s * 100 + (n * 10 + t) as u64, "oracle");
                let xis: Vec<_> = (0..t).map(|_| sample_environment(&cfg.dist, n, &mut rng)).collect::<Result<_, _>>()?;
                for i in 0..n {
                    for j in 0..n {
                        worst = worst.max((p2p_matrix(&xis, i, j, t)? - p2p_bruteforce(&xis, i, j, t)?).abs());
                    }
                }
            }
        }
    }
    r.check(Check::at_most("oracle", worst, 1e-9));

    // all-ones closed forms, relative to the size of log Z
    let mut ones_err: f64 = 0.0;
    let mut v_err: f64 = 0.0;
    let mut nu_err: f64 = 0.0;
    for n in [2usize, 3, 10] {
        let t = 50;
        let traj = run_partition(&EnvSpec::ConstantOnes, n, t, 1.0, None, &mut subs.stream(n as u64, "ones"))?;
        for (s, z) in traj.z.iter().enumerate() {
            let exact = s as f64 * (n as f64).ln();
            for h in z.as_slice() {
                ones_err = ones_err.max((h - exact).abs() / exact.max(1.0));
            }
        }
        let inc = growth_increments(&EnvSpec::ConstantOnes, n, 200, &mut subs.stream(n as u64, "ones-v"))?;
        v_err = v_err.max((summarize_increments(&inc, n, 200)?.v_hat - (n as f64).ln()).abs());
        let env = ConstantEnvironment::new(EnvironmentMatrix::ones(n)?);
        let nu = covariant_law(&env, 0, LimitOptions::default())?;
        nu_err = nu.probs.iter().map(|p| (p - 1.0 / n as f64).abs()).fold(nu_err, f64::max);
    }
    r.check(Check::at_most("ones-heights", ones_err, 1e-12));
    r.check(Check::at_most("ones-velocity", v_err, 1e-12));
    r.check(Check::at_most("ones-covariant-law", nu_err, 1e-12));

    // shift commutes with the recursion
    let mut rng = subs.stream(0, "homogeneity");
    let mut hom: f64 = 0.0;
    for _ in 0..200 {
        let z = PartitionVector::new((0..4).map(|_| rng.random_range(-20.0..20.0)).collect())?;
        let c = rng.random_range(-50.0..50.0);
        let xi = sample_environment(&cfg.dist, 4, &mut rng)?;
        let a = step_recursion(&z.shifted(c), &xi)?;
        let b = step_recursion(&z, &xi)?.shifted(c);
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            hom = hom.max((x - y).abs() / (1.0 + x.abs()));
        }
    }
    r.check(Check::at_most("homogeneity", hom, 1e-12));

    // log Z = φ + log X
    let traj = run_partition(&cfg.dist, 5, 20, cfg.alpha, None, &mut subs.stream(0, "decomposition"))?;
    let mut dec: f64 = 0.0;
    for s in 0..=traj.t() {
        let x = traj.direction(s);
        for (h, l) in traj.z[s].as_slice().iter().zip(x.log_coords()) {
            dec = dec.max((traj.phi[s] + l - h).abs() / (1.0 + h.abs()));
        }
        dec = dec.max((alpha_norm_log(&traj.z[s], cfg.alpha)? - traj.phi[s]).abs());
    }
    r.check(Check::at_most("decomposition", dec, 1e-12));

    // metric axioms and ‖x - y‖₂ ≤ 2 d(x, y)
    let mut rng = subs.stream(0, "metric");
    let mut bad = 0usize;
    for _ in 0..1000 {
        let pts: Vec<Vec<f64>> = (0..3).map(|_| (0..5).map(|_| rng.random_range(-8.0..8.0)).collect()).collect();
        let d = |a: usize, b: usize| proj_distance_log(&pts[a], &pts[b]);
        let lin = |a: usize| project_log_coords(&pts[a], 1.0).map(|p| p.linear());
        let (x, y) = (lin(0)?, lin(1)?);
        let e = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let ok = d(0, 1) <= d(0, 2) + d(2, 1) + 1e-12
            && d(0, 1) == d(1, 0)
            && d(0, 0) == 0.0
            && (0.0..=1.0).contains(&d(0, 1))
            && e <= 2.0 * d(0, 1) + 1e-12;
        bad += usize::from(!ok);
    }
    r.check(Check::at_most("metric-axioms", bad as f64, 0.0));

    let spot = contraction_spot_check(&cfg.dist, 5, 1000, &mut subs.stream(0, "spot"))?;
    r.check(Check::at_most("contraction-spot-checks", spot.violations as f64, 0.0));

    let env = SeededEnvironment::new(cfg.dist.clone(), 10, cfg.seed)?;
    let sc = shift_covariance_check(&env, cfg.alpha, LimitOptions::default())?;
    r.check(Check::at_most("shift-covariance", sc.distance, sc.bound));
    let st = covariance_check(&env, 0, cfg.tol)?;
    r.check(Check::at_most("stationarity", st.residual, 10.0 * st.bound));

    let mut rng = subs.stream(0, "pf");
    let xis: Vec<_> = (0..30).map(|_| sample_environment(&cfg.dist, 6, &mut rng)).collect::<Result<_, _>>()?;
    let pf = pf_comparability_check(&xis, 30)?;
    r.check(Check::flag("pf-comparability", pf.ratios_ok && pf.discrepancy_bounded));

    let heights: Vec<f64> = (0..100).map(|_| rng.random_range(-10.0..10.0)).collect();
    let prof = FrontProfile::new(heights)?;
    let steps_ok = prof.sorted().windows(2).all(|w| w[0] < w[1])
        && prof.sorted().iter().enumerate().all(|(i, &h)| (prof.eval(h) - (99 - i) as f64 / 100.0).abs() < 1e-12);
    r.check(Check::flag("front-steps", steps_ok));

    for (i, c) in r.checks.clone().iter().enumerate() {
        r.row(&[i as f64, c.statistic.0, c.threshold.0, f64::from(u8::from(c.pass))]);
    }
    Ok(r)
}

fn lyapunov_estimate(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["s", "increment"]);
    let subs = Substreams::new(cfg.seed);
    let inc = growth_increments(&cfg.dist, cfg.n, cfg.t, &mut subs.stream(0, "lyapunov"))?;
    let est = summarize_increments(&inc, cfg.n, cfg.t)?;
    r.estimate("vHat", est.v_hat);
    r.estimate("sigmaHat", est.sigma_hat);
    r.estimate("stdErr", est.std_err);
    match &cfg.dist {
        EnvSpec::Stable { alpha } => {
            let mc = velocity_variance_exact_mc(*alpha, cfg.n, cfg.replicas, &mut subs.stream(0, "exact-mc"))?;
            r.estimate("vMc", mc.v);
            r.estimate("vMcStdErr", mc.v_se);
            r.estimate("sigma2Mc", mc.sigma2);
            let se = (est.std_err.powi(2) + mc.v_se.powi(2)).sqrt();
            r.check(Check::at_most("v-agreement", (est.v_hat - mc.v).abs(), 3.0 * se));
        }
        EnvSpec::ConstantOnes => {
            r.check(Check::at_most("v-exact", (est.v_hat - (cfg.n as f64).ln()).abs(), 1e-12));
        }
        _ => {}
    }
    for (s, x) in inc.iter().enumerate() {
        r.row(&[(s + 1) as f64, *x]);
    }
    Ok(r)
}

fn lyapunov_asymptotic(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(
        cfg,
        &["n", "v_mc", "v_se", "v_asym", "abs_error", "sigma2_mc", "sigma2_se", "sigma2_asym", "variance_ratio"],
    );
    let subs = Substreams::new(cfg.seed);
    let ladder = decade_ladder(cfg.n);
    let mut errs = Vec::new();
    let mut ratio_gaps = Vec::new();
    for (i, &n) in ladder.iter().enumerate() {
        let mc = velocity_variance_exact_mc(cfg.alpha, n, cfg.replicas, &mut subs.stream(i as u64, "asymptotic"))?;
        let a = asymptotics(cfg.alpha, n)?;
        let err = (mc.v - a.v_asym).abs();
        let ratio = mc.sigma2 / a.sigma2_asym;
        errs.push(err);
        ratio_gaps.push((ratio - 1.0).abs());
        r.row(&[n as f64, mc.v, mc.v_se, a.v_asym, err, mc.sigma2, mc.sigma2_se, a.sigma2_asym, ratio]);
        if i + 1 == ladder.len() {
            r.estimate("vMc", mc.v);
            r.estimate("vAsym", a.v_asym);
            r.estimate("relativeError", err / a.v_asym);
            r.estimate("varianceRatio", ratio);
        }
    }
    r.check(Check::flag("error-decreasing", strictly_decreasing(&errs)));
    let last = ladder.len() - 1;
    r.check(Check::at_most("relative-error", errs[last] / asymptotics(cfg.alpha, ladder[last])?.v_asym, 0.02));
    r.check(Check::at_most("variance-ratio", ratio_gaps[last], 0.3));
    r.check(Check::flag("variance-ratio-approaching-one", strictly_decreasing(&ratio_gaps)));
    Ok(r)
}

fn lyapunov_clt(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["replica", "standardized"]);
    let subs = Substreams::new(cfg.seed);
    let rep = clt_fluctuation_experiment(&cfg.dist, cfg.n, cfg.t, cfg.replicas, CltOptions::default(), &mut subs.stream(0, "clt"))?;
    r.estimate("vPilot", rep.pilot.v_hat);
    r.estimate("sigmaPilot", rep.pilot.sigma_hat);
    match &rep.ks {
        Some(ks) => r.check(ks_check("ks-normal", ks)),
        None => r.check(Check::flag("degenerate-exact", rep.standardized.iter().all(|&x| x == 0.0))),
    }
    for (i, x) in rep.standardized.iter().enumerate() {
        r.row(&[i as f64, *x]);
    }
    Ok(r)
}

const LAMBDAS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
const KS_DRAWS: usize = 100_000;

fn stable_laplace(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["lambda", "mean", "std_err", "target", "z_score"]);
    let p = StableParams::new(cfg.alpha)?;
    let subs = Substreams::new(cfg.seed);
    let rows = validate_laplace(&p, &LAMBDAS, cfg.replicas, &mut subs.stream(0, "laplace"))?;
    for row in &rows {
        r.row(&[row.lambda, row.mean, row.std_err, row.target, row.z_score]);
        r.check(Check::at_most(&format!("laplace-{}", row.lambda), row.z_score.abs(), 4.0));
    }
    let draws = cfg.replicas.min(KS_DRAWS);
    let chunks = draws.div_ceil(1000);
    let samples: Vec<f64> = par_replicas(cfg.seed, "stable-ks", chunks, |c, rng| {
        let len = 1000.min(draws - c * 1000);
        (0..len).map(|_| sample_stable(&p, rng)).collect::<Vec<_>>()
    })
    .concat();
    let ks = if cfg.alpha == 0.5 {
        ks_one_sample(&samples, levy_half_cdf, 0.01)?
    } else {
        let pit: Vec<f64> = samples.iter().map(|&s| stable_cdf(s, &p)).collect::<Result<_, _>>()?;
        ks_one_sample(&pit, |u| u.clamp(0.0, 1.0), 0.01)?
    };
    r.estimate("ksStatistic", ks.statistic);
    r.check(ks_check("ks-cdf", &ks));
    Ok(r)
}

fn stable_heights(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["statistic", "critical_value"]);
    let subs = Substreams::new(cfg.seed);
    let ks = pooled_height_check(&cfg.dist, cfg.n, cfg.t, 0.01, &mut subs.stream(0, "heights"))?;
    r.row(&[ks.statistic, ks.critical_value]);
    r.check(ks_check("ks-pooled-heights", &ks));
    Ok(r)
}

fn stable_equilibrium(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["start", "statistic", "critical_value"]);
    let n = cfg.n;
    let mut rng = Substreams::new(cfg.seed).stream(0, "equilibrium-starts");
    let mut vertex = vec![-20.0; n];
    vertex[0] = 0.0;
    let random: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let starts = [SimplexPoint::uniform(n, cfg.alpha)?, project_log_coords(&vertex, cfg.alpha)?, project_log_coords(&random, cfg.alpha)?];
    let tests = instantaneous_equilibrium_check(cfg.alpha, &starts, cfg.replicas, 0.01, cfg.seed)?;
    for (i, (t, name)) in tests.iter().zip(["uniform", "vertex", "random"]).enumerate() {
        r.row(&[i as f64, t.statistic, t.critical_value]);
        r.check(ks_check(&format!("ks-{name}"), t));
    }
    Ok(r)
}

fn front(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["x", "profile", "limit"]);
    let subs = Substreams::new(cfg.seed);
    let c = centered_front_check(&cfg.dist, cfg.n, cfg.t, &mut subs.stream(0, "front"))?;
    let stable = matches!(cfg.dist, EnvSpec::Stable { .. });
    // the perturbed class has the same limit with an unknown rate
    let bound = dkw_radius(cfg.n, 0.01) * if stable { 1.0 } else { 2.0 };
    r.estimate("supDeviation", c.sup_deviation);
    r.estimate("dkwBound", c.dkw_bound);
    r.check(Check::at_most("sup-deviation", c.sup_deviation, bound));
    let p = StableParams::new(cfg.dist.tail_index().unwrap_or(cfg.alpha))?;
    for i in 0..=160 {
        let x = -8.0 + 0.1 * i as f64;
        r.row(&[x, c.profile.eval(x), u_alpha(x, &p)?]);
    }
    Ok(r)
}

const CF_POINTS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

fn fluctuation(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["replica", "sample"]);
    let subs = Substreams::new(cfg.seed);
    let main = front_fluctuation_experiment(cfg.alpha, cfg.n, cfg.t, cfg.x, cfg.replicas, &CF_POINTS, &mut subs.stream(0, "fluctuation"))?;
    let at = |f: &polymer_core::front::FrontFluctuation| (f.cf_modulus[2] - f.target[2]).abs();
    r.estimate("cfModulusU1", main.cf_modulus[2]);
    r.estimate("targetU1", main.target[2]);
    r.estimate("derivative", main.derivative);
    r.estimate("vN", main.velocity.v);
    r.check(Check::at_most("cf-deviation-u1", at(&main), 0.1));
    if cfg.n / 10 >= 2 {
        let small =
            front_fluctuation_experiment(cfg.alpha, cfg.n / 10, cfg.t, cfg.x, cfg.replicas, &CF_POINTS, &mut subs.stream(1, "fluctuation"))?;
        r.estimate("cfModulusU1SmallN", small.cf_modulus[2]);
        r.check(Check::at_most("improves-with-n", at(&main), at(&small)));
    }
    for (i, x) in main.samples.iter().enumerate() {
        r.row(&[i as f64, *x]);
    }
    Ok(r)
}

pub fn ppp_bins() -> [Bin; 4] {
    [Bin { lo: -2.0, hi: -1.0 }, Bin { lo: -1.0, hi: 0.0 }, Bin { lo: 0.0, hi: 1.0 }, Bin { lo: 1.0, hi: f64::INFINITY }]
}

fn ppp(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["replica", "count_m2_m1", "count_m1_0", "count_0_1", "count_1_inf"]);
    let subs = Substreams::new(cfg.seed);
    let rep = ppp_experiment(cfg.alpha, cfg.n, cfg.replicas, &ppp_bins(), &mut subs.stream(0, "ppp"))?;
    r.estimate("meanCountUpper", rep.mean_count_upper);
    r.estimate("meanCountUpperStdErr", rep.mean_count_upper_se);
    r.estimate("rawCountMean", rep.raw_count_mean);
    r.estimate("rawCountStdErr", rep.raw_count_se);
    r.estimate("maxBinCorrelation", rep.max_bin_correlation);
    r.estimate("maxPointMean", rep.max_point_mean);
    r.estimate("maxMassScaled", rep.max_mass_scaled);
    r.estimate("chiSquare", rep.chi_square.statistic);
    r.check(Check::at_most("mean-count-upper", (rep.mean_count_upper - 1.0).abs(), 0.05));
    r.check(ks_check("chi-square", &rep.chi_square));
    for (i, c) in rep.counts.iter().enumerate() {
        let mut row = vec![i as f64];
        row.extend(c.iter().map(|&x| x as f64));
        r.row(&row);
    }
    Ok(r)
}

fn polymer_stationarity(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["covariance_residual", "covariance_bound", "balance_residual", "balance_bound"]);
    let env = SeededEnvironment::new(cfg.dist.clone(), cfg.n, cfg.seed)?;
    let cov = covariance_check(&env, 0, cfg.tol)?;
    let bal = reversal_balance_check(&env, 0, cfg.tol)?;
    r.row(&[cov.residual, cov.bound, bal.residual, bal.bound]);
    r.check(Check::at_most("covariance", cov.residual, 10.0 * cov.bound));
    r.check(Check::at_most("balance", bal.residual, 10.0 * bal.bound));
    Ok(r)
}

fn polymer_contraction(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["t", "log_c_product", "log_c_steps"]);
    let env = SeededEnvironment::new(cfg.dist.clone(), cfg.n, cfg.seed)?;
    let prof = contraction_profile(&env, cfg.t)?;
    for s in &prof {
        r.row(&[s.t as f64, s.log_c_product, s.log_c_steps]);
    }
    r.check(Check::flag("submultiplicative", prof.iter().all(|s| s.submultiplicative(1e-12))));
    r.check(Check::flag("negative-rate", prof.iter().filter(|s| s.t >= 5).all(|s| s.log_c_product / (s.t as f64) < 0.0)));
    let spot = contraction_spot_check(&cfg.dist, cfg.n, cfg.replicas, &mut Substreams::new(cfg.seed).stream(0, "spot"))?;
    r.estimate("spotMaxRatio", spot.max_ratio);
    r.check(Check::at_most("spot-check-violations", spot.violations as f64, 0.0));
    Ok(r)
}

fn polymer_shift(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["distance", "bound"]);
    let env = SeededEnvironment::new(cfg.dist.clone(), cfg.n, cfg.seed)?;
    let sc = shift_covariance_check(&env, cfg.alpha, LimitOptions::with_tol(cfg.tol))?;
    r.row(&[sc.distance, sc.bound]);
    r.check(Check::at_most("shift-covariance", sc.distance, sc.bound));
    Ok(r)
}

fn polymer_pf(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["t", "log_lambda", "log_norm", "discrepancy", "entry_ratio", "entry_ratio_bound", "row_ratio", "row_ratio_bound"]);
    let env = SeededEnvironment::new(cfg.dist.clone(), cfg.n, cfg.seed)?;
    let xis: Vec<_> = (1..=cfg.t as i64).map(|s| polymer_core::env::Environment::matrix(&env, s)).collect();
    let pf = pf_comparability_check(&xis, cfg.t)?;
    for s in &pf.steps {
        r.row(&[s.t as f64, s.log_lambda, s.log_norm, s.discrepancy, s.entry_ratio, s.entry_ratio_bound, s.row_ratio, s.row_ratio_bound]);
    }
    r.estimate("supDiscrepancy", pf.sup_discrepancy);
    r.check(Check::flag("ratios", pf.ratios_ok));
    r.check(Check::flag("discrepancy-bounded", pf.discrepancy_bounded));
    Ok(r)
}

const LEVY_POINTS: [f64; 3] = [0.5, 1.0, 2.0];

fn levy(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["replica", "sample"]);
    let subs = Substreams::new(cfg.seed);
    let m = rescaled_walk_marginal(cfg.alpha, cfg.n, cfg.k, cfg.tau, cfg.replicas, &LEVY_POINTS, &mut subs.stream(0, "levy"))?;
    for (u, (c, t)) in LEVY_POINTS.iter().zip(m.cf_modulus.iter().zip(&m.target)) {
        r.estimate(&format!("cfModulus_u{u}"), *c);
        r.estimate(&format!("target_u{u}"), *t);
    }
    r.check(Check::at_most("cf-deviation", m.max_deviation(), 0.1));
    let add = levy_additivity_check(cfg.alpha, cfg.n, cfg.k, cfg.replicas, 0.05, &mut subs.stream(1, "levy"))?;
    r.check(ks_check("additivity", &add));
    for (i, x) in m.samples.iter().enumerate() {
        r.row(&[i as f64, *x]);
    }
    Ok(r)
}

fn perturbed_convergence(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["replica", "normalized_height"]);
    let c = perturbed_convergence_check(&cfg.dist, cfg.n, cfg.t, cfg.replicas, 0.05, cfg.seed)?;
    r.estimate("ksStatistic", c.ks.statistic);
    r.estimate("pairCorrelation", c.pair_correlation);
    r.estimate("quenchedKsStatistic", c.quenched_ks.statistic);
    r.estimate("quenchedKsCritical", c.quenched_ks.critical_value);
    r.check(ks_check("ks-stable", &c.ks));
    r.check(Check::at_most("pair-correlation", c.pair_correlation.abs(), c.pair_bound));
    for (i, x) in c.samples.iter().enumerate() {
        r.row(&[i as f64, *x]);
    }
    Ok(r)
}

fn perturbed_max_weight(cfg: &RunConfig) -> LabResult<ExperimentReport> {
    let mut r = report(cfg, &["n", "median_max_weight"]);
    let ladder = decade_ladder(cfg.n);
    let medians = max_weight_medians(&cfg.dist, &ladder, cfg.t, cfg.replicas, cfg.seed)?;
    for (n, m) in &medians {
        r.row(&[*n as f64, *m]);
    }
    let ms: Vec<f64> = medians.iter().map(|m| m.1).collect();
    r.check(Check::flag("median-decreasing", strictly_decreasing(&ms)));
    let one = max_weight_check(&cfg.dist, ladder[0], cfg.t, &mut Substreams::new(cfg.seed).stream(0, "alpha-sum"))?;
    r.check(Check::at_most("alpha-sum", (one.alpha_sum - 1.0).abs(), 1e-12));
    Ok(r)
}
