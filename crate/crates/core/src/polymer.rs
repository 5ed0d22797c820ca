//! Polymer path measures: the finite-horizon point-to-line chain, its
//! infinite-volume limit, the co-variant site law and the reversed chain.
//!
//! Directions are taken with α = 1. With `V(t)` the forward limit built from
//! `ξ(t+1), ξ(t+2), …` and `V̄(t)` the backward one built from
//! `ξ(t)*, ξ(t-1)*, …`:
//!
//! ```text
//! P(ℓ | k) at time t  ∝ ω_{k,ℓ}(t+1) V(t+1, ℓ)
//! ν(t, j)             ∝ V̄(t, j) V(t, j)
//! P̄(k | ℓ) at time t  ∝ ω_{k,ℓ}(t+1) V̄(t, k)
//! ```
//!
//! A certified bound `b` on `d(x, x*)` bounds the Hilbert distance by
//! `h = 2 artanh(b)`, hence every coordinate ratio of the normalized vectors
//! lies in `[e^{-h}, e^{h}]`. All probability error bounds below follow
//! from that.

use crate::env::{Environment, EnvironmentMatrix};
use crate::error::{Error, Result};
use crate::logspace::LogAccumulator;
use crate::projective::{backward_limit, forward_limit, LimitOptions};
use crate::partition::right_mul;
use rand::Rng;

/// Rounding allowance added to every certified bound.
pub const ROUNDING_FLOOR: f64 = 1e-13;

/// One row of a transition kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionRow {
    pub t: i64,
    /// Conditioning state.
    pub from: usize,
    pub log_probs: Vec<f64>,
}

impl TransitionRow {
    fn from_log_weights(t: i64, from: usize, w: Vec<f64>) -> Self {
        let z = log_total(&w);
        TransitionRow { t, from, log_probs: w.into_iter().map(|x| x - z).collect() }
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|x| x.exp()).collect()
    }
}

fn log_total(w: &[f64]) -> f64 {
    let mut acc = LogAccumulator::EMPTY;
    w.iter().for_each(|&x| acc.push(x));
    acc.value()
}

fn normalized(w: &[f64]) -> Vec<f64> {
    let z = log_total(w);
    w.iter().map(|x| (x - z).exp()).collect()
}

fn check_state(k: usize, n: usize) -> Result<()> {
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, n });
    }
    Ok(())
}

/// `log Z(t+1, ℓ; T, ⋆) = log (ξ(t+2) ⋯ ξ(T) 1)_ℓ`.
fn log_to_horizon(env: &dyn Environment, t: i64, horizon: i64) -> Result<Vec<f64>> {
    let mut w = vec![0.0; env.n()];
    let mut s = horizon;
    while s >= t + 2 {
        w = right_mul(&env.matrix(s), &w)?;
        s -= 1;
    }
    Ok(w)
}

/// `P(j_{t+1} = ℓ | j_t = k)` for the polymer with horizon `T`:
/// proportional to `ω_{k,ℓ}(t+1) Z(t+1, ℓ; T, ⋆)`.
pub fn finite_horizon_transition(env: &dyn Environment, t: i64, horizon: i64, k: usize) -> Result<TransitionRow> {
    if t >= horizon {
        return Err(Error::param("t", format!("need t < T, got t = {t}, T = {horizon}")));
    }
    check_state(k, env.n())?;
    let tail = log_to_horizon(env, t, horizon)?;
    let xi = env.matrix(t + 1);
    let w = xi.row(k).iter().zip(&tail).map(|(a, b)| a + b).collect();
    Ok(TransitionRow::from_log_weights(t, k, w))
}

/// Hilbert radius matching a certified `d`-bound.
fn hilbert_radius(b: f64) -> f64 {
    if b >= 1.0 {
        f64::INFINITY
    } else {
        2.0 * b.atanh()
    }
}

/// Infinite-volume transition row in both equivalent forms.
#[derive(Clone, Debug, PartialEq)]
pub struct InfiniteTransition {
    /// `ω_{k,ℓ}(t+1) V(t+1, ℓ)`, normalized.
    pub row: TransitionRow,
    /// `ω_{k,ℓ}(t+1) V(t+1, ℓ) / (‖ξ(t+1) V(t+1)‖_1 V(t, k))`, not renormalized.
    pub alternate: Vec<f64>,
    /// `max_ℓ |row - alternate|`.
    pub agreement: f64,
    /// Sup-norm bound on the error of `row` from truncating `V(t+1)`.
    pub bound: f64,
}

pub fn infinite_transition(env: &dyn Environment, t: i64, k: usize, opts: LimitOptions) -> Result<InfiniteTransition> {
    check_state(k, env.n())?;
    let v_next = forward_limit(env, t + 1, 1.0, opts)?;
    let v_now = forward_limit(env, t, 1.0, opts)?;
    let xi = env.matrix(t + 1);
    let lv = v_next.point.log_coords();
    let w: Vec<f64> = xi.row(k).iter().zip(lv).map(|(a, b)| a + b).collect();
    let row = TransitionRow::from_log_weights(t, k, w.clone());
    let log_norm = log_total(&right_mul(&xi, lv)?);
    let lk = v_now.point.log_coords()[k];
    let alternate: Vec<f64> = w.iter().map(|x| (x - log_norm - lk).exp()).collect();
    let agreement = row.probs().iter().zip(&alternate).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let bound = hilbert_radius(v_next.bound).exp_m1() + ROUNDING_FLOOR;
    Ok(InfiniteTransition { row, alternate, agreement, bound })
}

/// Full kernel `P(ℓ | k)` at time `t`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionKernel {
    pub t: i64,
    pub n: usize,
    pub probs: Vec<f64>,
}

impl TransitionKernel {
    pub fn row(&self, k: usize) -> &[f64] {
        &self.probs[k * self.n..(k + 1) * self.n]
    }

    /// `μ P`.
    pub fn push_forward(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (k, &m) in mu.iter().enumerate() {
            for (o, p) in out.iter_mut().zip(self.row(k)) {
                *o += m * p;
            }
        }
        out
    }
}

fn kernel_from(t: i64, xi: &EnvironmentMatrix, log_v_next: &[f64]) -> TransitionKernel {
    let n = xi.n();
    let mut probs = Vec::with_capacity(n * n);
    for k in 0..n {
        let w: Vec<f64> = xi.row(k).iter().zip(log_v_next).map(|(a, b)| a + b).collect();
        probs.extend(normalized(&w));
    }
    TransitionKernel { t, n, probs }
}

/// Infinite-volume kernel at time `t` and the `d`-bound of the `V(t+1)` used.
pub fn infinite_kernel(env: &dyn Environment, t: i64, opts: LimitOptions) -> Result<(TransitionKernel, f64)> {
    let v_next = forward_limit(env, t + 1, 1.0, opts)?;
    Ok((kernel_from(t, &env.matrix(t + 1), v_next.point.log_coords()), v_next.bound))
}

/// `ν(t, ·)` with a sup-norm error bound.
#[derive(Clone, Debug, PartialEq)]
pub struct CovariantLaw {
    pub t: i64,
    pub probs: Vec<f64>,
    pub bound: f64,
}

/// `ν(t, j) ∝ V̄(t, j) V(t, j)`, using α-`representatives of both limits.
/// The result does not depend on `alpha` beyond truncation error.
pub fn covariant_law_with_alpha(env: &dyn Environment, t: i64, alpha: f64, opts: LimitOptions) -> Result<CovariantLaw> {
    let fwd = forward_limit(env, t, alpha, opts)?;
    let bwd = backward_limit(env, t, alpha, opts)?;
    let w: Vec<f64> = fwd.point.log_coords().iter().zip(bwd.point.log_coords()).map(|(a, b)| a + b).collect();
    let h = hilbert_radius(fwd.bound) + hilbert_radius(bwd.bound);
    Ok(CovariantLaw { t, probs: normalized(&w), bound: h.exp_m1() + ROUNDING_FLOOR })
}

pub fn covariant_law(env: &dyn Environment, t: i64, opts: LimitOptions) -> Result<CovariantLaw> {
    covariant_law_with_alpha(env, t, 1.0, opts)
}

/// Residual of an identity that holds exactly for the true limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residual {
    pub residual: f64,
    /// Combined certified truncation bound.
    pub bound: f64,
}

impl Residual {
    /// `residual ≤ factor · bound`.
    pub fn within(&self, factor: f64) -> bool {
        self.residual <= factor * self.bound
    }
}

/// Window tolerance so that each limit's certified bound is at most `tol/4`.
fn quarter(tol: f64) -> LimitOptions {
    LimitOptions::with_tol(tol / 4.0)
}

/// `max_ℓ |ν(t+1, ℓ) - Σ_k ν(t, k) P(ℓ | k)|`.
pub fn covariance_check(env: &dyn Environment, t: i64, tol: f64) -> Result<Residual> {
    let opts = quarter(tol);
    let nu_t = covariant_law(env, t, opts)?;
    let nu_next = covariant_law(env, t + 1, opts)?;
    let (kernel, vb) = infinite_kernel(env, t, opts)?;
    let pushed = kernel.push_forward(&nu_t.probs);
    let residual = pushed.iter().zip(&nu_next.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let bound = nu_t.bound + nu_next.bound + hilbert_radius(vb).exp_m1() + ROUNDING_FLOOR;
    Ok(Residual { residual, bound })
}

/// `P̄(k | ℓ) ∝ ω_{k,ℓ}(t+1) V̄(t, k)`: the reversed chain stepping from
/// site `ℓ` at time `t+1` back to time `t`.
pub fn time_reversed_transition(env: &dyn Environment, t: i64, l: usize, opts: LimitOptions) -> Result<TransitionRow> {
    check_state(l, env.n())?;
    let bwd = backward_limit(env, t, 1.0, opts)?;
    let xi = env.matrix(t + 1);
    let w = (0..env.n()).map(|k| xi.log_entry(k, l) + bwd.point.log_coords()[k]).collect();
    Ok(TransitionRow::from_log_weights(t, l, w))
}

/// `max_{k,ℓ} |ν(t, k) P(ℓ | k) - ν(t+1, ℓ) P̄(k | ℓ)|`.
pub fn reversal_balance_check(env: &dyn Environment, t: i64, tol: f64) -> Result<Residual> {
    let opts = quarter(tol);
    let n = env.n();
    let nu_t = covariant_law(env, t, opts)?;
    let nu_next = covariant_law(env, t + 1, opts)?;
    let (kernel, vb) = infinite_kernel(env, t, opts)?;
    let bwd = backward_limit(env, t, 1.0, opts)?;
    let xi = env.matrix(t + 1);
    let mut residual: f64 = 0.0;
    for l in 0..n {
        let w: Vec<f64> = (0..n).map(|k| xi.log_entry(k, l) + bwd.point.log_coords()[k]).collect();
        let rev = normalized(&w);
        for k in 0..n {
            let lhs = nu_t.probs[k] * kernel.row(k)[l];
            let rhs = nu_next.probs[l] * rev[k];
            residual = residual.max((lhs - rhs).abs());
        }
    }
    let bound = nu_t.bound + nu_next.bound + hilbert_radius(vb).exp_m1() + hilbert_radius(bwd.bound).exp_m1() + ROUNDING_FLOOR;
    Ok(Residual { residual, bound })
}

/// Sites `j_s, j_{s+1}, …` visited from time `start`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolymerPath {
    pub start: i64,
    pub sites: Vec<usize>,
}

fn draw<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut c = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        c += p;
        if u < c {
            return i;
        }
    }
    probs.len() - 1
}

/// Samples a path of `kernels.len()` steps with `j_start ~ start_law`;
/// `kernels[m]` moves the path from time `start + m` to `start + m + 1`.
pub fn sample_polymer_path<R: Rng>(kernels: &[TransitionKernel], start_law: &[f64], start: i64, rng: &mut R) -> Result<PolymerPath> {
    let n = start_law.len();
    if let Some(k) = kernels.iter().find(|k| k.n != n) {
        return Err(Error::DimensionMismatch { expected: n, got: k.n });
    }
    let mut sites = Vec::with_capacity(kernels.len() + 1);
    let mut j = draw(start_law, rng);
    sites.push(j);
    for k in kernels {
        j = draw(k.row(j), rng);
        sites.push(j);
    }
    Ok(PolymerPath { start, sites })
}
