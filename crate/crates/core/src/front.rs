//! Height profiles: the front `U_N(t, x)`, its centered limit and
//! fluctuations, the Poisson picture of the top coordinates, and the
//! perturbed (domain-of-attraction) environments.

use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::lyapunov::{upsilon_from_logs, velocity_variance_exact_mc, VelocityVariance};
use crate::logspace::LogAccumulator;
use crate::partition::{alpha_norm_log_slice, run_partition, PartitionVector};
use crate::rng::{derive_substream, par_replicas};
use crate::stable::{sample_log_stable, stable_cdf, tail_constant, u_alpha, u_alpha_derivative, StableParams};
use crate::stats::{chi_square_counts, correlation, empirical_cf, ks_one_sample, mean_var, ChiSquareDof, TestResult, KS_MIN_SAMPLES};
use rand::RngCore;
use std::f64::consts::PI;

/// `U(x) = (1/N) #{j : h_j > x}` over a fixed set of heights.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontProfile {
    sorted: Vec<f64>,
}

impl FrontProfile {
    pub fn new(mut heights: Vec<f64>) -> Result<Self> {
        if heights.is_empty() {
            return Err(Error::EmptyReduction);
        }
        if heights.iter().any(|h| h.is_nan()) {
            return Err(Error::param("heights", "NaN height"));
        }
        heights.sort_by(f64::total_cmp);
        Ok(FrontProfile { sorted: heights })
    }

    pub fn from_partition(z: &PartitionVector) -> Result<Self> {
        Self::new(z.as_slice().to_vec())
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn eval(&self, x: f64) -> f64 {
        let below = self.sorted.partition_point(|&h| h <= x);
        (self.sorted.len() - below) as f64 / self.sorted.len() as f64
    }

    /// `sup_x |U(x) - u(x)|` for a continuous nonincreasing `u`; the sup sits
    /// at the jumps, where both one-sided values are compared.
    pub fn sup_distance<F: Fn(f64) -> Result<f64>>(&self, u: F) -> Result<f64> {
        let n = self.sorted.len() as f64;
        let mut sup: f64 = 0.0;
        for (i, &h) in self.sorted.iter().enumerate() {
            let target = u(h)?;
            let right = (n - (i + 1) as f64) / n;
            let left = (n - i as f64) / n;
            sup = sup.max((right - target).abs()).max((left - target).abs());
        }
        Ok(sup)
    }
}

/// `U_N(t, x)` for each `x` in `xs`, from the heights `log Z(t, ·)`.
pub fn front_profile(z: &PartitionVector, xs: &[f64]) -> Result<Vec<f64>> {
    let p = FrontProfile::from_partition(z)?;
    Ok(xs.iter().map(|&x| p.eval(x)).collect())
}

/// DKW radius: `P(sup |F_N - F| > ε) ≤ δ` for `ε = sqrt(ln(2/δ) / 2N)`.
pub fn dkw_radius(n: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

fn tail_params(spec: &EnvSpec) -> Result<StableParams> {
    let alpha = spec.tail_index().ok_or_else(|| Error::param("spec", format!("{spec} has no α-regular tail")))?;
    StableParams::new(alpha)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontCheck {
    pub n: usize,
    pub t: usize,
    /// `sup_x |U_N(t, x + φ(t-1)) - u_α(x)|`.
    pub sup_deviation: f64,
    /// DKW radius at `δ = 0.01`.
    pub dkw_bound: f64,
    /// Centered heights `log Z(t, ·) - φ(t-1)`.
    pub profile: FrontProfile,
}

/// Runs the full recursion for `t` steps and compares the centered front with
/// `u_α`, `α` being the tail index of `spec`.
pub fn centered_front_check<R: RngCore>(spec: &EnvSpec, n: usize, t: usize, rng: &mut R) -> Result<FrontCheck> {
    if t < 2 {
        return Err(Error::param("t", format!("{t} < 2")));
    }
    let p = tail_params(spec)?;
    let traj = run_partition(spec, n, t, p.alpha(), None, rng)?;
    let profile = FrontProfile::new(traj.centered_heights(t))?;
    let sup_deviation = profile.sup_distance(|x| u_alpha(x, &p))?;
    Ok(FrontCheck { n, t, sup_deviation, dkw_bound: dkw_radius(n, 0.01), profile })
}

/// KS test of all `Z(s, j) / ‖Z(s-1)‖_α`, `s = 1..=t`, pooled, against
/// `S_α` with `α` the tail index of `spec`.
pub fn pooled_height_check<R: RngCore>(spec: &EnvSpec, n: usize, t: usize, level: f64, rng: &mut R) -> Result<TestResult> {
    let p = tail_params(spec)?;
    let traj = run_partition(spec, n, t, p.alpha(), None, rng)?;
    let pit: Vec<f64> = (1..=t)
        .flat_map(|s| traj.centered_heights(s))
        .map(|h| stable_cdf(h.exp(), &p))
        .collect::<Result<_>>()?;
    ks_one_sample(&pit, |u| u.clamp(0.0, 1.0), level)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontFluctuation {
    pub alpha: f64,
    pub n: usize,
    pub t: usize,
    pub x: f64,
    /// `log N · [U_N(t, x + (t-1) v_N + φ(0)) - u_α(x)]` per replica.
    pub samples: Vec<f64>,
    pub velocity: VelocityVariance,
    pub derivative: f64,
    pub us: Vec<f64>,
    pub cf_modulus: Vec<f64>,
    /// `exp(-(t-1) |u u_α'(x)| π / 2)`.
    pub target: Vec<f64>,
}

impl FrontFluctuation {
    pub fn max_deviation(&self) -> f64 {
        self.cf_modulus.iter().zip(&self.target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Monte Carlo draws used for the `v_N` centering. The CF modulus is
/// shift-invariant, so its error only moves the samples' location.
pub const VELOCITY_SAMPLES: usize = 10_000;

/// Samples the front at a fixed point `x` after `t` steps of the stable
/// environment started from all-ones.
///
/// Uses the exact stable-case representation: given the past, the centered
/// heights are i.i.d. `log S_α`, and `φ(t-1) - φ(0)` is a sum of `t-1`
/// independent copies of `Υ_N`. That costs `tN` draws per replica instead of
/// `tN²`.
pub fn front_fluctuation_experiment<R: RngCore>(
    alpha: f64,
    n: usize,
    t: usize,
    x: f64,
    replicas: usize,
    us: &[f64],
    rng: &mut R,
) -> Result<FrontFluctuation> {
    let p = StableParams::new(alpha)?;
    if replicas < 500 {
        return Err(Error::param("replicas", format!("{replicas} < 500")));
    }
    if t < 2 {
        return Err(Error::param("t", format!("{t} < 2")));
    }
    if n < 2 {
        return Err(Error::param("n", format!("{n} < 2")));
    }
    let velocity = velocity_variance_exact_mc(alpha, n, VELOCITY_SAMPLES, rng)?;
    let u_x = u_alpha(x, &p)?;
    let derivative = u_alpha_derivative(x, &p)?;
    let ln_n = (n as f64).ln();
    let v = velocity.v;
    let samples = par_replicas(rng.next_u64(), "front-fluctuation", replicas, |_, r| {
        let drift: f64 = (1..t).map(|_| upsilon_from_logs(alpha, (0..n).map(|_| sample_log_stable(&p, r))) - v).sum();
        let threshold = x - drift;
        let above = (0..n).filter(|_| sample_log_stable(&p, r) > threshold).count();
        ln_n * (above as f64 / n as f64 - u_x)
    });
    let cf_modulus = empirical_cf(&samples, us).iter().map(|c| c.norm()).collect();
    let target = us.iter().map(|u| (-((t - 1) as f64) * (u * derivative).abs() * PI / 2.0).exp()).collect();
    Ok(FrontFluctuation { alpha, n, t, x, samples, velocity, derivative, us: us.to_vec(), cf_modulus, target })
}

/// Half-open interval `[lo, hi)`; `hi` may be `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
}

impl Bin {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi > lo) {
            return Err(Error::param("bin", format!("[{lo}, {hi}) is not a valid interval")));
        }
        Ok(Bin { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x < self.hi
    }

    /// `∫ e^{-σ} dσ` over the bin.
    pub fn poisson_mean(&self) -> f64 {
        (-self.lo).exp() - (-self.hi).exp()
    }
}

/// Transformed coordinates `α log X(i) + log log N` of one simplex point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Vec<f64>,
}

impl PointCloud {
    pub fn from_log_coords(alpha: f64, log_x: &[f64]) -> Self {
        let shift = (log_x.len() as f64).ln().ln();
        PointCloud { points: log_x.iter().map(|l| alpha * l + shift).collect() }
    }

    pub fn count(&self, bin: &Bin) -> usize {
        self.points.iter().filter(|&&p| bin.contains(p)).count()
    }

    pub fn max(&self) -> f64 {
        self.points.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PppReport {
    pub alpha: f64,
    pub n: usize,
    pub bins: Vec<Bin>,
    /// `counts[r][b]`: points of replica `r` in bin `b`.
    pub counts: Vec<Vec<usize>>,
    pub expected_per_replica: Vec<f64>,
    /// Pooled Pearson test against `replicas · ∫_bin e^{-σ} dσ`.
    pub chi_square: TestResult,
    pub mean_count_upper: f64,
    pub mean_count_upper_se: f64,
    /// Points `N S_i^{-α} / Γ(1-α)` in `[0, 1]` per replica (limit mean 1).
    pub raw_count_mean: f64,
    pub raw_count_se: f64,
    /// Largest `|corr|` between counts of two different bins.
    pub max_bin_correlation: f64,
    /// Mean of the largest transformed point (Gumbel limit, mean γ_E).
    pub max_point_mean: f64,
    /// Mean of `max_i X(i) · (log N)^{1/α}`.
    pub max_mass_scaled: f64,
}

/// `X = S / ‖S‖_α` for i.i.d. `S_α` coordinates, one per replica.
pub fn ppp_experiment<R: RngCore>(alpha: f64, n: usize, replicas: usize, bins: &[Bin], rng: &mut R) -> Result<PppReport> {
    let p = StableParams::new(alpha)?;
    if replicas < 100 {
        return Err(Error::param("replicas", format!("{replicas} < 100")));
    }
    if n < 3 {
        return Err(Error::param("n", format!("{n} < 3")));
    }
    if bins.is_empty() {
        return Err(Error::param("bins", "empty"));
    }
    // raw point ≤ 1  ⇔  α log S ≥ log(N / Γ(1-α))
    let raw_threshold = (n as f64 * tail_constant(&p)).ln();
    let ln_n = (n as f64).ln();
    let rows = par_replicas(rng.next_u64(), "ppp", replicas, |_, r| {
        let logs: Vec<f64> = (0..n).map(|_| sample_log_stable(&p, r)).collect();
        let raw = logs.iter().filter(|&&l| alpha * l >= raw_threshold).count();
        let norm = alpha_norm_log_slice(&logs, alpha).expect("n ≥ 3");
        let log_x: Vec<f64> = logs.iter().map(|l| l - norm).collect();
        let cloud = PointCloud::from_log_coords(alpha, &log_x);
        let counts: Vec<usize> = bins.iter().map(|b| cloud.count(b)).collect();
        let upper = cloud.count(&Bin { lo: 0.0, hi: f64::INFINITY });
        let max = cloud.max();
        (counts, upper, raw, max)
    });
    let expected_per_replica: Vec<f64> = bins.iter().map(Bin::poisson_mean).collect();
    let pooled: Vec<f64> = (0..bins.len()).map(|b| rows.iter().map(|r| r.0[b] as f64).sum()).collect();
    let expected: Vec<f64> = expected_per_replica.iter().map(|e| e * replicas as f64).collect();
    let chi_square = chi_square_counts(&pooled, &expected, ChiSquareDof::Free, 0.01)?;

    let upper: Vec<f64> = rows.iter().map(|r| r.1 as f64).collect();
    let (mean_count_upper, var_u) = mean_var(&upper)?;
    let raw: Vec<f64> = rows.iter().map(|r| r.2 as f64).collect();
    let (raw_count_mean, var_r) = mean_var(&raw)?;
    let maxes: Vec<f64> = rows.iter().map(|r| r.3).collect();
    let max_point_mean = maxes.iter().sum::<f64>() / replicas as f64;
    // max X = exp((max point - log log N) / α)
    let max_mass_scaled =
        maxes.iter().map(|m| ((m - ln_n.ln()) / alpha).exp() * ln_n.powf(1.0 / alpha)).sum::<f64>() / replicas as f64;

    let mut max_bin_correlation: f64 = 0.0;
    for a in 0..bins.len() {
        for b in a + 1..bins.len() {
            let xa: Vec<f64> = rows.iter().map(|r| r.0[a] as f64).collect();
            let xb: Vec<f64> = rows.iter().map(|r| r.0[b] as f64).collect();
            if let Ok(c) = correlation(&xa, &xb) {
                max_bin_correlation = max_bin_correlation.max(c.abs());
            }
        }
    }
    Ok(PppReport {
        alpha,
        n,
        bins: bins.to_vec(),
        counts: rows.into_iter().map(|r| r.0).collect(),
        expected_per_replica,
        chi_square,
        mean_count_upper,
        mean_count_upper_se: (var_u / replicas as f64).sqrt(),
        raw_count_mean,
        raw_count_se: (var_r / replicas as f64).sqrt(),
        max_bin_correlation,
        max_point_mean,
        max_mass_scaled,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxWeight {
    pub n: usize,
    /// `max_i a_i` with `a_i = Z(t-1, i) / ‖Z(t-1)‖_α`.
    pub max: f64,
    /// `Σ_i a_i^α`, equal to one up to rounding.
    pub alpha_sum: f64,
}

pub fn max_weight_check<R: RngCore>(spec: &EnvSpec, n: usize, t: usize, rng: &mut R) -> Result<MaxWeight> {
    if t < 2 {
        return Err(Error::param("t", format!("{t} < 2")));
    }
    let alpha = tail_params(spec)?.alpha();
    let traj = run_partition(spec, n, t - 1, alpha, None, rng)?;
    let a = traj.direction(t - 1).linear();
    let max = a.iter().copied().fold(0.0, f64::max);
    let alpha_sum = a.iter().map(|x| x.powf(alpha)).sum();
    Ok(MaxWeight { n, max, alpha_sum })
}

/// Median of `max_i a_i` over `replicas` independent environments per `N`.
pub fn max_weight_medians(spec: &EnvSpec, ns: &[usize], t: usize, replicas: usize, seed: u64) -> Result<Vec<(usize, f64)>> {
    ns.iter()
        .map(|&n| {
            let runs: Result<Vec<f64>> = (0..replicas)
                .map(|r| max_weight_check(spec, n, t, &mut derive_substream(seed, (n * replicas + r) as u64, "max-weight")).map(|m| m.max))
                .collect();
            Ok((n, crate::stats::median(&runs?)?))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedConvergence {
    pub n: usize,
    pub t: usize,
    /// `Z̄_1 = Z(t, 1) / ‖Z(t-1)‖_α`, one per independent environment.
    pub samples: Vec<f64>,
    /// KS of `samples` against the stable law.
    pub ks: TestResult,
    /// Correlation of `F(Z̄_1)` with `F(Z̄_2)` across environments.
    pub pair_correlation: f64,
    /// `3 / sqrt(replicas)`.
    pub pair_bound: f64,
    /// Diagnostic: KS of all `N` coordinates of the first environment. Given
    /// the past these are i.i.d. from a mixture that depends on the weights
    /// `a_i`, so this tests the quenched law, which converges more slowly.
    pub quenched_ks: TestResult,
}

/// Annealed check that `Z̄_i = Z(t, i) / ‖Z(t-1)‖_α` is asymptotically
/// stable: `replicas` independent environments, each run to `t - 1` in full;
/// then only coordinates 1 and 2 of `Z(t)` are formed (column `i` of `ξ(t)`
/// drawn in ascending source order). The first environment also gets a full
/// last step for the quenched diagnostic.
pub fn perturbed_convergence_check(
    spec: &EnvSpec,
    n: usize,
    t: usize,
    replicas: usize,
    level: f64,
    seed: u64,
) -> Result<PerturbedConvergence> {
    if t < 2 {
        return Err(Error::param("t", format!("{t} < 2")));
    }
    if replicas < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: KS_MIN_SAMPLES, got: replicas });
    }
    let p = tail_params(spec)?;
    let sampler = spec.sampler()?;
    let runs: Vec<Result<[f64; 2]>> = par_replicas(seed, "perturbed", replicas, |_, rng| {
        let traj = run_partition(spec, n, t - 1, p.alpha(), None, rng)?;
        let z = traj.z[t - 1].as_slice();
        let phi = traj.phi[t - 1];
        let mut out = [0.0; 2];
        for o in out.iter_mut() {
            let mut acc = LogAccumulator::EMPTY;
            for &zj in z {
                acc.push(zj + sampler.sample_log(rng));
            }
            *o = (acc.value() - phi).exp();
        }
        Ok(out)
    });
    let pairs: Vec<[f64; 2]> = runs.into_iter().collect::<Result<_>>()?;
    let samples: Vec<f64> = pairs.iter().map(|q| q[0]).collect();
    let f0: Vec<f64> = pairs.iter().map(|q| stable_cdf(q[0], &p)).collect::<Result<_>>()?;
    let f1: Vec<f64> = pairs.iter().map(|q| stable_cdf(q[1], &p)).collect::<Result<_>>()?;
    // cdf values are already computed, so test them against the uniform law
    let ks = ks_one_sample(&f0, |u| u.clamp(0.0, 1.0), level)?;
    let pair_correlation = correlation(&f0, &f1)?;

    let traj = run_partition(spec, n, t, p.alpha(), None, &mut derive_substream(seed, 0, "perturbed-quenched"))?;
    let pit: Vec<f64> = traj.centered_heights(t).iter().map(|h| stable_cdf(h.exp(), &p)).collect::<Result<_>>()?;
    let quenched_ks = ks_one_sample(&pit, |u| u.clamp(0.0, 1.0), level)?;
    Ok(PerturbedConvergence { n, t, samples, ks, pair_correlation, pair_bound: 3.0 / (replicas as f64).sqrt(), quenched_ks })
}
