//! Free energy `v_N`, fluctuation size `σ_N`, their exact stable-case
//! representation through `Υ_N = log ‖S_N‖_α`, large-`N` asymptotics and
//! Lévy scaling of the height.

use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::logspace::LogAccumulator;
use crate::partition::{run_partition, step_streaming};
use crate::rng::{derive_substream, par_replicas, StreamRng};
use crate::stable::{sample_log_stable, StableParams};
use crate::stats::{batch_means, empirical_cf, ks_one_sample, ks_two_sample, mean_var, normal_cdf, TestResult};
use rand::{Rng, RngCore};
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

/// Number of batches in every batch-means estimate.
pub const BATCHES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovEstimate {
    pub v_hat: f64,
    pub sigma_hat: f64,
    /// Standard error of `v_hat`.
    pub std_err: f64,
    pub t: usize,
    pub n: usize,
    /// Set when every increment is identical (constant disorder).
    pub degenerate: bool,
}

/// Mean that is exact when all values coincide.
fn stable_mean(xs: &[f64]) -> f64 {
    let x0 = xs[0];
    x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64
}

/// Increments `log ‖ξ(s)* X(s-1)‖_1` of the 1-normalized direction chain
/// started at the uniform point.
pub fn growth_increments<R: Rng>(spec: &EnvSpec, n: usize, t: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::param("n", format!("{n} < 2")));
    }
    let sampler = spec.sampler()?;
    let mut x = vec![-(n as f64).ln(); n];
    let mut out = Vec::with_capacity(t);
    for _ in 0..t {
        let y = step_streaming(&x, &sampler, rng);
        let mut acc = LogAccumulator::EMPTY;
        y.iter().for_each(|&v| acc.push(v));
        let g = acc.value();
        out.push(g);
        x = y.into_iter().map(|v| v - g).collect();
    }
    Ok(out)
}

fn post_burn_in(t: usize) -> usize {
    t - t / 10
}

/// Burn-in, mean and batch-means error of precomputed increments.
pub fn summarize_increments(increments: &[f64], n: usize, t: usize) -> Result<LyapunovEstimate> {
    let kept = &increments[t / 10..];
    let v_hat = stable_mean(kept);
    if kept.iter().all(|&x| x == kept[0]) {
        return Ok(LyapunovEstimate { v_hat, sigma_hat: 0.0, std_err: 0.0, t, n, degenerate: true });
    }
    let bm = batch_means(kept, BATCHES)?;
    let sigma_hat = (bm.batch_sum_variance() / bm.batch_size as f64).sqrt();
    Ok(LyapunovEstimate { v_hat, sigma_hat, std_err: bm.std_err, t, n, degenerate: false })
}

/// Time average of the growth increments after a 10% burn-in; `σ` from
/// batch means over 20 batches.
pub fn lyapunov_estimate<R: Rng>(spec: &EnvSpec, n: usize, t: usize, rng: &mut R) -> Result<LyapunovEstimate> {
    if post_burn_in(t) < 2 * BATCHES {
        return Err(Error::TooFewSamples { needed: 2 * BATCHES, got: post_burn_in(t) });
    }
    let inc = growth_increments(spec, n, t, rng)?;
    summarize_increments(&inc, n, t)
}

/// Pools several independent chains of length `t`: `v` is the grand mean,
/// `σ²` and the standard error come from all batches together.
pub fn lyapunov_pooled(spec: &EnvSpec, n: usize, t: usize, chains: usize, seed: u64) -> Result<LyapunovEstimate> {
    if chains == 0 {
        return Err(Error::param("chains", "must be positive"));
    }
    if post_burn_in(t) < 2 * BATCHES {
        return Err(Error::TooFewSamples { needed: 2 * BATCHES, got: post_burn_in(t) });
    }
    let runs = par_replicas(seed, "pilot", chains, |_, r| growth_increments(spec, n, t, r));
    let mut all_kept = Vec::new();
    let mut batch = Vec::new();
    let mut b = 0;
    for run in runs {
        let inc = run?;
        let kept = &inc[t / 10..];
        all_kept.extend_from_slice(kept);
        if !kept.iter().all(|&x| x == kept[0]) {
            let bm = batch_means(kept, BATCHES)?;
            b = bm.batch_size;
            batch.extend(bm.batch_means);
        }
    }
    let v_hat = stable_mean(&all_kept);
    if batch.is_empty() {
        return Ok(LyapunovEstimate { v_hat, sigma_hat: 0.0, std_err: 0.0, t, n, degenerate: true });
    }
    let (_, var) = mean_var(&batch)?;
    Ok(LyapunovEstimate {
        v_hat,
        sigma_hat: (var * b as f64).sqrt(),
        std_err: (var / batch.len() as f64).sqrt(),
        t,
        n,
        degenerate: false,
    })
}

/// One draw of `Υ_N = log ‖S_N‖_α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpsilonSample {
    pub value: f64,
}

/// `(1/α) log Σ_i exp(α log S_i)` from log-stable draws.
#[inline]
pub fn upsilon_from_logs(alpha: f64, logs: impl Iterator<Item = f64>) -> f64 {
    let mut acc = LogAccumulator::EMPTY;
    logs.for_each(|l| acc.push(alpha * l));
    acc.value() / alpha
}

pub fn upsilon_sample<R: Rng>(alpha: f64, n: usize, rng: &mut R) -> Result<UpsilonSample> {
    let p = StableParams::new(alpha)?;
    if n < 1 {
        return Err(Error::param("n", "must be positive"));
    }
    Ok(UpsilonSample { value: upsilon_from_logs(alpha, (0..n).map(|_| sample_log_stable(&p, rng))) })
}

/// Monte Carlo moments of `Υ_N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityVariance {
    pub v: f64,
    pub sigma2: f64,
    pub v_se: f64,
    pub sigma2_se: f64,
    pub n_samples: usize,
}

/// Mean and variance of `Υ_N` from `n_samples` independent draws, computed in
/// parallel chunks on substreams derived from `rng`.
pub fn velocity_variance_exact_mc<R: RngCore>(alpha: f64, n: usize, n_samples: usize, rng: &mut R) -> Result<VelocityVariance> {
    if n_samples < 10_000 {
        return Err(Error::TooFewSamples { needed: 10_000, got: n_samples });
    }
    let ups = upsilon_draws(alpha, n, n_samples, rng.next_u64())?;
    moments(&ups)
}

/// `count` independent draws of `Υ_N`, deterministic in `seed`.
pub fn upsilon_draws(alpha: f64, n: usize, count: usize, seed: u64) -> Result<Vec<f64>> {
    let p = StableParams::new(alpha)?;
    if n < 1 {
        return Err(Error::param("n", "must be positive"));
    }
    const CHUNK: usize = 256;
    let chunks = count.div_ceil(CHUNK);
    let parts = par_replicas(seed, "upsilon", chunks, |c, r: &mut StreamRng| {
        let len = CHUNK.min(count - c * CHUNK);
        (0..len).map(|_| upsilon_from_logs(alpha, (0..n).map(|_| sample_log_stable(&p, r)))).collect::<Vec<_>>()
    });
    Ok(parts.concat())
}

fn moments(xs: &[f64]) -> Result<VelocityVariance> {
    let (v, sigma2) = mean_var(xs)?;
    let m = xs.len() as f64;
    let m4 = xs.iter().map(|x| (x - v).powi(4)).sum::<f64>() / m;
    Ok(VelocityVariance {
        v,
        sigma2,
        v_se: (sigma2 / m).sqrt(),
        sigma2_se: ((m4 - sigma2 * sigma2).max(0.0) / m).sqrt(),
        n_samples: xs.len(),
    })
}

/// Leading-order large-`N` behaviour of `v_N` and `σ_N²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Asymptotics {
    pub v_asym: f64,
    pub sigma2_asym: f64,
    /// `c_α = Γ(α) sin(πα) / (πα)`.
    pub c_alpha: f64,
}

pub fn c_alpha(alpha: f64) -> Result<f64> {
    StableParams::new(alpha)?;
    Ok(gamma(alpha) * (PI * alpha).sin() / (PI * alpha))
}

/// `v ≈ α⁻¹(log N + log log N + log c_α)`, `σ² ≈ π² / (3α² log N)`.
pub fn asymptotics(alpha: f64, n: usize) -> Result<Asymptotics> {
    let c = c_alpha(alpha)?;
    if n < 3 {
        return Err(Error::param("n", format!("{n} < 3 leaves log log N undefined or negative")));
    }
    let ln_n = (n as f64).ln();
    Ok(Asymptotics {
        v_asym: (ln_n + ln_n.ln() + c.ln()) / alpha,
        sigma2_asym: PI * PI / (3.0 * alpha * alpha * ln_n),
        c_alpha: c,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CltOptions {
    /// Number of independent pilot chains used to estimate `v_N` and `σ_N`.
    pub pilot_chains: usize,
    /// Each pilot chain runs for `pilot_factor · t` steps.
    pub pilot_factor: usize,
    /// Stable disorder: `Υ` draws replacing the pilot chains (the increments
    /// of `φ` are then exactly i.i.d. `Υ_N`).
    pub exact_samples: usize,
    pub level: f64,
}

impl Default for CltOptions {
    // the pilot's error in v̂ shifts the standardized values by about
    // sqrt(t / pilot steps) standard deviations; these keep it near 0.03
    fn default() -> Self {
        CltOptions { pilot_chains: 10, pilot_factor: 100, exact_samples: 2_000_000, level: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CltReport {
    pub pilot: LyapunovEstimate,
    /// `(log Z(t, 0) - v̂ t) / (σ̂ √t)` per replica.
    pub standardized: Vec<f64>,
    /// `None` when the disorder is degenerate.
    pub ks: Option<TestResult>,
    pub degenerate: bool,
}

/// Standardized end values of independent replicas compared with `N(0, 1)`.
/// Centering and scale come from independent pilot chains, or from exact
/// `Υ` moments for stable disorder.
pub fn clt_fluctuation_experiment<R: RngCore>(
    spec: &EnvSpec,
    n: usize,
    t: usize,
    replicas: usize,
    opts: CltOptions,
    rng: &mut R,
) -> Result<CltReport> {
    if replicas < 200 {
        return Err(Error::TooFewSamples { needed: 200, got: replicas });
    }
    let seed = rng.next_u64();
    let pilot = match *spec {
        EnvSpec::Stable { alpha } => {
            let mc = velocity_variance_exact_mc(alpha, n, opts.exact_samples, &mut derive_substream(seed, 0, "pilot"))?;
            let sigma_hat = mc.sigma2.sqrt();
            LyapunovEstimate { v_hat: mc.v, sigma_hat, std_err: mc.v_se, t, n, degenerate: false }
        }
        _ => lyapunov_pooled(spec, n, opts.pilot_factor * t, opts.pilot_chains, seed)?,
    };
    let ends = par_replicas(seed, "clt", replicas, |_, r| {
        run_partition(spec, n, t, 1.0, None, r).map(|tr| tr.z[t].as_slice()[0])
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    if pilot.degenerate || pilot.sigma_hat == 0.0 {
        // no scale to divide by; report the raw deviation, snapped to zero
        // at rounding level
        let standardized = ends
            .iter()
            .map(|&e| e - pilot.v_hat * t as f64)
            .map(|d| if d.abs() < 1e-9 * t as f64 { 0.0 } else { d })
            .collect();
        return Ok(CltReport { pilot, standardized, ks: None, degenerate: true });
    }
    let scale = pilot.sigma_hat * (t as f64).sqrt();
    let standardized: Vec<f64> = ends.iter().map(|&e| (e - pilot.v_hat * t as f64) / scale).collect();
    let ks = ks_one_sample(&standardized, normal_cdf, opts.level)?;
    Ok(CltReport { pilot, standardized, ks: Some(ks), degenerate: false })
}

/// Centering `γ_N = α⁻¹ log(N log N / Γ(1-α)) + log k / (α log N)`.
pub fn gamma_n(alpha: f64, n: usize, k: usize) -> f64 {
    let ln_n = (n as f64).ln();
    (ln_n + ln_n.ln() - ln_gamma(1.0 - alpha)) / alpha + (k as f64).ln() / (alpha * ln_n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevyMarginal {
    pub samples: Vec<f64>,
    pub us: Vec<f64>,
    pub cf_modulus: Vec<f64>,
    /// `exp(-τ π |u| / 2)`.
    pub target: Vec<f64>,
}

impl LevyMarginal {
    pub fn max_deviation(&self) -> f64 {
        self.cf_modulus.iter().zip(&self.target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// `(φ(kτ) - φ(0) - γ_N k τ) · α log N / k` from the exact random-walk
/// representation of the height, `kτ` rounded down.
pub fn rescaled_walk_samples(alpha: f64, n: usize, k: usize, tau: f64, replicas: usize, seed: u64) -> Result<Vec<f64>> {
    let p = StableParams::new(alpha)?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::param("tau", format!("{tau} is not a finite nonnegative number")));
    }
    let steps = (k as f64 * tau).floor() as usize;
    let g = gamma_n(alpha, n, k);
    let scale = alpha * (n as f64).ln() / k as f64;
    Ok(par_replicas(seed, "levy", replicas, |_, r| {
        if steps == 0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for _ in 0..steps {
            sum += upsilon_from_logs(alpha, (0..n).map(|_| sample_log_stable(&p, r))) - g;
        }
        sum * scale
    }))
}

pub fn rescaled_walk_marginal<R: RngCore>(
    alpha: f64,
    n: usize,
    k: usize,
    tau: f64,
    replicas: usize,
    us: &[f64],
    rng: &mut R,
) -> Result<LevyMarginal> {
    if k < 10 {
        return Err(Error::param("k", format!("{k} < 10")));
    }
    let samples = rescaled_walk_samples(alpha, n, k, tau, replicas, rng.next_u64())?;
    let cf_modulus = empirical_cf(&samples, us).iter().map(|c| c.norm()).collect();
    let target = us.iter().map(|u| (-tau * PI * u.abs() / 2.0).exp()).collect();
    Ok(LevyMarginal { samples, us: us.to_vec(), cf_modulus, target })
}

/// Two-sample KS between the rescaled walk at `τ = 2` and the sum of two
/// independent `τ = 1` samples.
pub fn levy_additivity_check<R: RngCore>(alpha: f64, n: usize, k: usize, replicas: usize, level: f64, rng: &mut R) -> Result<TestResult> {
    let seed = rng.next_u64();
    let two = rescaled_walk_samples(alpha, n, k, 2.0, replicas, seed)?;
    let a = rescaled_walk_samples(alpha, n, k, 1.0, replicas, seed ^ 0x5555_5555_5555_5555)?;
    let b = rescaled_walk_samples(alpha, n, k, 1.0, replicas, seed ^ 0xAAAA_AAAA_AAAA_AAAA)?;
    let sums: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    ks_two_sample(&two, &sums, level)
}
