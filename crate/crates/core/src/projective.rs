//! Projective geometry of positive vectors: the bounded metric `d`, Birkhoff
//! contraction coefficients, certified limit directions and Perron–Frobenius
//! comparisons.
//!
//! For positive `x, y` let `m(x, y) = min_i x_i / y_i`. Then
//! `d(x, y) = φ(m(x, y) m(y, x))` with `φ(s) = (1 - s)/(1 + s)`, which equals
//! `tanh(h/2)` where `h = max_i log(x_i/y_i) - min_i log(x_i/y_i)` is the
//! Hilbert distance. Everything is computed from `h` in the log domain.

use crate::env::{sample_environment, EnvSpec, Environment, EnvironmentMatrix};
use crate::error::{Error, Result};
use crate::logspace::LogAccumulator;
use crate::partition::{alpha_norm_log_slice, left_mul, project_log_coords, right_mul, SimplexPoint};
use crate::rng::par_replicas;
use crate::stable::{sample_log_stable, StableParams};
use crate::stats::{batch_means, ks_two_sample, mann_kendall, MannKendall, TestResult};
use rand::Rng;
use rand_distr::StandardNormal;

/// Hilbert distance between log-coordinate vectors. Coordinates that vanish
/// in both vectors are ignored; one that vanishes in only one gives `+∞`.
pub fn hilbert_log(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (&a, &b) in x.iter().zip(y) {
        match (a == f64::NEG_INFINITY, b == f64::NEG_INFINITY) {
            (true, true) => continue,
            (false, false) => {
                let r = a - b;
                lo = lo.min(r);
                hi = hi.max(r);
            }
            _ => return f64::INFINITY,
        }
    }
    if lo > hi {
        0.0
    } else {
        hi - lo
    }
}

/// `tanh(h/2)`.
#[inline]
pub fn spread_to_distance(h: f64) -> f64 {
    if h == f64::INFINITY {
        1.0
    } else {
        (0.5 * h).tanh()
    }
}

/// `log tanh(h/2)`, accurate when the distance is close to 1.
#[inline]
pub fn spread_to_log_distance(h: f64) -> f64 {
    if h == 0.0 {
        return f64::NEG_INFINITY;
    }
    let e = (-h).exp();
    (-e).ln_1p() - e.ln_1p()
}

/// `d(x, y)` on log coordinates.
pub fn proj_distance_log(x: &[f64], y: &[f64]) -> f64 {
    spread_to_distance(hilbert_log(x, y))
}

/// `d(x, y)`; invariant under rescaling either argument, so any α works.
pub fn proj_distance(x: &SimplexPoint, y: &SimplexPoint) -> f64 {
    proj_distance_log(x.log_coords(), y.log_coords())
}

fn max_column_spread(g: &EnvironmentMatrix) -> f64 {
    let n = g.n();
    let cols = g.transpose();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let cj = cols.row(j);
        for k in j + 1..n {
            let ck = cols.row(k);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (a, b) in cj.iter().zip(ck) {
                let r = a - b;
                lo = lo.min(r);
                hi = hi.max(r);
            }
            worst = worst.max(hi - lo);
        }
    }
    worst
}

/// Contraction coefficient `c(g) = sup_{x,y} d(g x, g y)`, evaluated as the
/// largest distance between two columns of `g` (images of basis vectors).
pub fn contraction_coeff(g: &EnvironmentMatrix) -> f64 {
    spread_to_distance(max_column_spread(g))
}

/// `log c(g)`; keeps resolution when `c(g)` rounds to 1.
pub fn contraction_log_coeff(g: &EnvironmentMatrix) -> f64 {
    spread_to_log_distance(max_column_spread(g))
}

/// Random log-coordinate vector mixing interior points with points close to
/// the boundary and near-vertices.
fn random_log_point<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let scale = [0.1, 1.0, 5.0, 30.0][rng.random_range(0..4)];
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Largest `d(g x, g y)` over `samples` random pairs; never exceeds
/// [`contraction_coeff`] when the supremum sits at basis-vector pairs.
pub fn sampled_contraction<R: Rng>(g: &EnvironmentMatrix, samples: usize, rng: &mut R) -> Result<f64> {
    let n = g.n();
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let x = random_log_point(n, rng);
        let y = random_log_point(n, rng);
        best = best.max(proj_distance_log(&right_mul(g, &x)?, &right_mul(g, &y)?));
    }
    Ok(best)
}

/// Projective action `g ·_α x = Ψ_α(g x)`.
pub fn act(g: &EnvironmentMatrix, x: &SimplexPoint) -> Result<SimplexPoint> {
    project_log_coords(&right_mul(g, x.log_coords())?, x.alpha())
}

/// One step of the direction chain, `X' = Ψ_α(ξ* X)`.
pub fn chain_step(x: &SimplexPoint, xi: &EnvironmentMatrix) -> Result<SimplexPoint> {
    project_log_coords(&left_mul(x.log_coords(), xi)?, x.alpha())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitOptions {
    /// Target certified distance to the limit.
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions { tol: 1e-10, max_steps: 100_000 }
    }
}

impl LimitOptions {
    pub fn with_tol(tol: f64) -> Self {
        LimitOptions { tol, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::param("tol", format!("{} is outside (0, 1)", self.tol)));
        }
        if self.max_steps == 0 {
            return Err(Error::param("max_steps", "must be positive"));
        }
        Ok(())
    }
}

/// Approximation of a limit direction with a certified error bound.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionLimit {
    pub point: SimplexPoint,
    /// `c(M_1 ⋯ M_k)`: every `d(M_1 ⋯ M_k v, limit)` is at most this.
    pub bound: f64,
    /// `Σ_s log c(M_s)`, the weaker per-factor bound in log form.
    pub log_step_product: f64,
    pub steps: usize,
}

impl DirectionLimit {
    pub fn step_product(&self) -> f64 {
        self.log_step_product.exp()
    }
}

/// Limit of `M_1 M_2 ⋯ M_k · v` as `k` grows, stopping once the product's
/// contraction coefficient drops below `opts.tol`. `v` defaults to all ones.
pub fn limit_from_matrices<I>(matrices: I, alpha: f64, v: Option<&[f64]>, opts: LimitOptions) -> Result<DirectionLimit>
where
    I: IntoIterator<Item = EnvironmentMatrix>,
{
    opts.validate()?;
    let mut product: Option<EnvironmentMatrix> = None;
    let mut log_step_product = 0.0;
    let mut steps = 0;
    let mut log_bound = 0.0f64;
    for m in matrices {
        steps += 1;
        log_step_product += contraction_log_coeff(&m);
        let p = match product.take() {
            None => m,
            Some(p) => normalize(p.log_matmul(&m)?),
        };
        log_bound = contraction_log_coeff(&p);
        product = Some(p);
        if log_bound < opts.tol.ln() {
            break;
        }
        if steps >= opts.max_steps {
            return Err(Error::StepCapExceeded { steps, bound: log_bound.exp() });
        }
    }
    let p = product.ok_or(Error::EmptyReduction)?;
    if log_bound >= opts.tol.ln() {
        return Err(Error::StepCapExceeded { steps, bound: log_bound.exp() });
    }
    let ones;
    let v = match v {
        Some(v) => v,
        None => {
            ones = vec![0.0; p.n()];
            &ones
        }
    };
    let point = project_log_coords(&right_mul(&p, v)?, alpha)?;
    Ok(DirectionLimit { point, bound: log_bound.exp(), log_step_product, steps })
}

/// Rescales so the largest log entry is zero.
fn normalize(p: EnvironmentMatrix) -> EnvironmentMatrix {
    let m = p.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = p.n();
    EnvironmentMatrix::from_log_entries(n, p.as_slice().iter().map(|x| x - m).collect())
        .expect("finite entries stay finite")
}

/// `V∞(s) = lim_t Π(s, t) · v` built from `ξ(s+1), ξ(s+2), …`.
pub fn forward_limit(env: &dyn Environment, s: i64, alpha: f64, opts: LimitOptions) -> Result<DirectionLimit> {
    limit_from_matrices((1..).map(|k| env.matrix(s + k)), alpha, None, opts)
}

/// As [`forward_limit`], applied to a given start vector `v`.
pub fn forward_limit_from(
    env: &dyn Environment,
    s: i64,
    alpha: f64,
    v: &[f64],
    opts: LimitOptions,
) -> Result<DirectionLimit> {
    limit_from_matrices((1..).map(|k| env.matrix(s + k)), alpha, Some(v), opts)
}

/// `V̄∞(s) = lim_{t→-∞} Π(t, s)* · v` built from `ξ(s)*, ξ(s-1)*, …`.
pub fn backward_limit(env: &dyn Environment, s: i64, alpha: f64, opts: LimitOptions) -> Result<DirectionLimit> {
    limit_from_matrices((0..).map(|k| env.matrix(s - k).transpose()), alpha, None, opts)
}

/// Forward limit with matrices drawn sequentially from `rng`.
pub fn limit_direction<R: Rng>(spec: &EnvSpec, n: usize, alpha: f64, opts: LimitOptions, rng: &mut R) -> Result<DirectionLimit> {
    spec.validate()?;
    let draws = std::iter::from_fn(|| Some(sample_environment(spec, n, rng).expect("validated")));
    limit_from_matrices(draws, alpha, None, opts)
}

/// Backward limit with matrices drawn sequentially from `rng`; each draw
/// enters transposed.
pub fn backward_limit_direction<R: Rng>(
    spec: &EnvSpec,
    n: usize,
    alpha: f64,
    opts: LimitOptions,
    rng: &mut R,
) -> Result<DirectionLimit> {
    spec.validate()?;
    let draws = std::iter::from_fn(|| Some(sample_environment(spec, n, rng).expect("validated").transpose()));
    limit_from_matrices(draws, alpha, None, opts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftCovariance {
    /// `d(ξ(0) ·_α V∞(0), V∞(-1))` between the two approximations.
    pub distance: f64,
    /// `c(ξ(0)) · bound(V∞(0)) + bound(V∞(-1))`, plus rounding slack.
    pub bound: f64,
    pub pass: bool,
}

/// Checks `ξ(0) ·_α V∞(0) = V∞(-1)`.
pub fn shift_covariance_check(env: &dyn Environment, alpha: f64, opts: LimitOptions) -> Result<ShiftCovariance> {
    let v0 = forward_limit(env, 0, alpha, opts)?;
    let v_minus = forward_limit(env, -1, alpha, opts)?;
    let xi0 = env.matrix(0);
    let lhs = act(&xi0, &v0.point)?;
    let distance = proj_distance(&lhs, &v_minus.point);
    let bound = contraction_coeff(&xi0) * v0.bound + v_minus.bound + 1e-12;
    Ok(ShiftCovariance { distance, bound, pass: distance <= bound })
}

/// Contraction of the running product `Π(t) = ξ(1) ⋯ ξ(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionStep {
    pub t: usize,
    /// `log c(Π(t))`.
    pub log_c_product: f64,
    /// `Σ_{s ≤ t} log c(ξ(s))`.
    pub log_c_steps: f64,
}

impl ContractionStep {
    /// `c(Π(t)) ≤ Π_s c(ξ(s)) + slack`.
    pub fn submultiplicative(&self, slack: f64) -> bool {
        self.log_c_product.exp() <= self.log_c_steps.exp() + slack
    }
}

pub fn contraction_profile(env: &dyn Environment, t_max: usize) -> Result<Vec<ContractionStep>> {
    let mut out = Vec::with_capacity(t_max);
    let mut product: Option<EnvironmentMatrix> = None;
    let mut log_c_steps = 0.0;
    for t in 1..=t_max {
        let m = env.matrix(t as i64);
        log_c_steps += contraction_log_coeff(&m);
        let p = match product.take() {
            None => m,
            Some(p) => normalize(p.log_matmul(&m)?),
        };
        out.push(ContractionStep { t, log_c_product: contraction_log_coeff(&p), log_c_steps });
        product = Some(p);
    }
    Ok(out)
}

/// Random checks of `d(g x, g y) ≤ c(g) d(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpotCheck {
    pub trials: usize,
    pub violations: usize,
    /// Largest `d(g x, g y) / (c(g) d(x, y))` seen.
    pub max_ratio: f64,
}

pub fn contraction_spot_check<R: Rng>(spec: &EnvSpec, n: usize, trials: usize, rng: &mut R) -> Result<SpotCheck> {
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for _ in 0..trials {
        let g = sample_environment(spec, n, rng)?;
        let x = random_log_point(n, rng);
        let y = random_log_point(n, rng);
        let before = proj_distance_log(&x, &y);
        let after = proj_distance_log(&right_mul(&g, &x)?, &right_mul(&g, &y)?);
        let c = contraction_coeff(&g);
        if after > c * before + 1e-12 {
            violations += 1;
        }
        if before > 0.0 && c > 0.0 {
            max_ratio = max_ratio.max(after / (c * before));
        }
    }
    Ok(SpotCheck { trials, violations, max_ratio })
}

/// One chain step in a stable environment from each of `starts`, compared
/// with the first coordinate of `S / ‖S‖_α` for i.i.d. `S_α` entries.
/// Returns one two-sample KS result per start.
pub fn instantaneous_equilibrium_check(
    alpha: f64,
    starts: &[SimplexPoint],
    replicas: usize,
    level: f64,
    seed: u64,
) -> Result<Vec<TestResult>> {
    let p = StableParams::new(alpha)?;
    let n = starts.first().ok_or_else(|| Error::param("starts", "empty"))?.n();
    if let Some(x) = starts.iter().find(|x| x.n() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: x.n() });
    }
    let spec = EnvSpec::Stable { alpha };
    let rows = par_replicas(seed, "equilibrium", replicas, |_, r| {
        let stepped: Vec<f64> = starts
            .iter()
            .map(|x| {
                let y = chain_step(&x.reproject(alpha).expect("valid alpha"), &sample_environment(&spec, n, r).expect("valid spec"))
                    .expect("matching dimension");
                y.log_coords()[0].exp()
            })
            .collect();
        let s: Vec<f64> = (0..n).map(|_| sample_log_stable(&p, r)).collect();
        let closed = (s[0] - alpha_norm_log_slice(&s, alpha).expect("n ≥ 1")).exp();
        (stepped, closed)
    });
    let closed: Vec<f64> = rows.iter().map(|r| r.1).collect();
    (0..starts.len())
        .map(|k| {
            let col: Vec<f64> = rows.iter().map(|r| r.0[k]).collect();
            ks_two_sample(&col, &closed, level)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErgodicAverage {
    pub mean: f64,
    /// Batch-means standard error (20 batches); `None` below 40 steps.
    pub std_err: Option<f64>,
    pub t: usize,
}

/// `(1/t) Σ_{s=1}^t f(X(s))` along the direction chain started at the
/// uniform point.
pub fn ergodic_average<F, R>(f: F, spec: &EnvSpec, n: usize, alpha: f64, t: usize, rng: &mut R) -> Result<ErgodicAverage>
where
    F: Fn(&SimplexPoint) -> f64,
    R: Rng,
{
    if t < 1 {
        return Err(Error::param("t", "must be at least 1"));
    }
    let mut x = SimplexPoint::uniform(n, alpha)?;
    let mut values = Vec::with_capacity(t);
    for _ in 0..t {
        x = chain_step(&x, &sample_environment(spec, n, rng)?)?;
        values.push(f(&x));
    }
    let mean = values.iter().sum::<f64>() / t as f64;
    let std_err = if t >= 40 { Some(batch_means(&values, 20)?.std_err) } else { None };
    Ok(ErgodicAverage { mean, std_err, t })
}

/// Top eigenvalue of a positive matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerResult {
    pub log_lambda: f64,
    /// Right eigenvector, log coordinates, 1-normalized.
    pub log_vector: Vec<f64>,
    pub iterations: usize,
}

/// Power iteration in the log domain. Stops when the Collatz–Wielandt
/// bracket `min_i (Mx)_i/x_i ≤ λ ≤ max_i (Mx)_i/x_i` is narrower than `tol`
/// in log scale.
pub fn power_iteration_log(m: &EnvironmentMatrix, tol: f64, max_iter: usize) -> Result<PowerResult> {
    let n = m.n();
    let mut x = vec![-(n as f64).ln(); n];
    let mut gap = f64::INFINITY;
    for it in 1..=max_iter {
        let y = right_mul(m, &x)?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (a, b) in y.iter().zip(&x) {
            lo = lo.min(a - b);
            hi = hi.max(a - b);
        }
        gap = hi - lo;
        let mut acc = LogAccumulator::EMPTY;
        y.iter().for_each(|&v| acc.push(v));
        let norm = acc.value();
        x = y.iter().map(|v| v - norm).collect();
        if gap < tol {
            return Ok(PowerResult { log_lambda: 0.5 * (lo + hi), log_vector: x, iterations: it });
        }
    }
    Err(Error::PowerIteration { iterations: max_iter, gap })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PfStep {
    pub t: usize,
    pub log_lambda: f64,
    /// `log ‖Π(t) 1‖_1`.
    pub log_norm: f64,
    /// `log ‖Π(t) 1‖_1 - log λ^PF(t)`.
    pub discrepancy: f64,
    /// `log(max Π / min Π)` and its bound from `ξ(1)` and `ξ(t)`.
    pub entry_ratio: f64,
    pub entry_ratio_bound: f64,
    /// `log(max (Π1) / min (Π1))` and its bound from `ξ(1)`.
    pub row_ratio: f64,
    pub row_ratio_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PfReport {
    pub steps: Vec<PfStep>,
    pub sup_discrepancy: f64,
    /// Entry- and row-ratio bounds held at every time.
    pub ratios_ok: bool,
    /// Every discrepancy lies in `[0, log N + log(max ξ(1) / min ξ(1))]`.
    pub discrepancy_bounded: bool,
    /// Trend test of the discrepancy sequence (three or more times).
    pub trend: Option<MannKendall>,
    pub pass: bool,
}

fn log_ratio(m: &EnvironmentMatrix) -> f64 {
    let s = m.as_slice();
    s.iter().copied().fold(f64::NEG_INFINITY, f64::max) - s.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Compares `λ^PF(Π(s))` with `‖Π(s) 1‖_1` for `s = 1..=t`, where
/// `Π(s) = ξ(1) ⋯ ξ(s)` and `xis[s - 1] = ξ(s)`.
pub fn pf_comparability_check(xis: &[EnvironmentMatrix], t: usize) -> Result<PfReport> {
    if t < 2 {
        return Err(Error::param("t", "must be at least 2"));
    }
    if xis.len() < t {
        return Err(Error::param("xis", format!("{} matrices supplied for t = {t}", xis.len())));
    }
    let n = xis[0].n();
    let r1 = log_ratio(&xis[0]);
    let slack = 1e-9;
    let mut steps = Vec::with_capacity(t);
    let mut p = xis[0].clone();
    let mut scale = 0.0;
    for s in 1..=t {
        if s > 1 {
            p = p.log_matmul(&xis[s - 1])?;
            let m = p.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            scale += m;
            p = EnvironmentMatrix::from_log_entries(n, p.as_slice().iter().map(|x| x - m).collect())?;
        }
        let pw = power_iteration_log(&p, 1e-12, 10_000)?;
        let row_sums = right_mul(&p, &vec![0.0; n])?;
        let mut acc = LogAccumulator::EMPTY;
        row_sums.iter().for_each(|&v| acc.push(v));
        let log_norm = acc.value() + scale;
        let log_lambda = pw.log_lambda + scale;
        let rmax = row_sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rmin = row_sums.iter().copied().fold(f64::INFINITY, f64::min);
        steps.push(PfStep {
            t: s,
            log_lambda,
            log_norm,
            discrepancy: log_norm - log_lambda,
            entry_ratio: log_ratio(&p),
            entry_ratio_bound: r1 + log_ratio(&xis[s - 1]),
            row_ratio: rmax - rmin,
            row_ratio_bound: r1,
        });
    }
    let ratios_ok = steps
        .iter()
        .filter(|st| st.t >= 2)
        .all(|st| st.entry_ratio <= st.entry_ratio_bound + slack && st.row_ratio <= st.row_ratio_bound + slack);
    let upper = (n as f64).ln() + r1;
    let discrepancy_bounded = steps.iter().all(|st| st.discrepancy >= -slack && st.discrepancy <= upper + slack);
    let sup_discrepancy = steps.iter().map(|st| st.discrepancy.abs()).fold(0.0, f64::max);
    let trend = if steps.len() >= 3 {
        Some(mann_kendall(&steps.iter().map(|st| st.discrepancy).collect::<Vec<_>>())?)
    } else {
        None
    };
    let pass = ratios_ok && discrepancy_bounded && !trend.is_some_and(|m| m.upward(0.01));
    Ok(PfReport { steps, sup_discrepancy, ratios_ok, discrepancy_bounded, trend, pass })
}
