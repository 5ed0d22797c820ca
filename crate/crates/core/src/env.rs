//! Disorder environments: the law of a single weight `ω_{i,j}(t)` and the
//! `N × N` time slices `ξ(t)` built from it.

use crate::error::{Error, Result};
use crate::rng::{derive_substream, StreamRng};
use crate::stable::{sample_log_stable, StableParams};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// Log-weight sampler for [`EnvSpec::Custom`].
pub type LogWeightFn = dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync;

/// Law of one positive weight.
#[derive(Clone)]
pub enum EnvSpec {
    /// `ω ~ S_α`.
    Stable { alpha: f64 },
    /// `P[ω > x] = min(1, x^{-α} / Γ(1-α))`, tail-equivalent to `S_α`.
    Pareto { alpha: f64 },
    /// `log ω ~ N(μ, σ²)`.
    LogNormal { mu: f64, sigma: f64 },
    /// `ω ≡ 1`.
    ConstantOnes,
    /// User-supplied sampler returning `log ω`; it must return finite values.
    Custom { name: String, sampler: Arc<LogWeightFn> },
}

impl fmt::Debug for EnvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EnvSpec({self})")
    }
}

impl PartialEq for EnvSpec {
    fn eq(&self, other: &Self) -> bool {
        use EnvSpec::*;
        match (self, other) {
            (Stable { alpha: a }, Stable { alpha: b }) => a == b,
            (Pareto { alpha: a }, Pareto { alpha: b }) => a == b,
            (LogNormal { mu: m1, sigma: s1 }, LogNormal { mu: m2, sigma: s2 }) => m1 == m2 && s1 == s2,
            (ConstantOnes, ConstantOnes) => true,
            (Custom { sampler: a, .. }, Custom { sampler: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl fmt::Display for EnvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvSpec::Stable { alpha } => write!(f, "stable({alpha})"),
            EnvSpec::Pareto { alpha } => write!(f, "pareto({alpha})"),
            EnvSpec::LogNormal { mu, sigma } => write!(f, "lognormal({mu},{sigma})"),
            EnvSpec::ConstantOnes => write!(f, "ones"),
            EnvSpec::Custom { name, .. } => write!(f, "custom({name})"),
        }
    }
}

impl FromStr for EnvSpec {
    type Err = Error;

    /// Accepts `stable(0.5)`, `pareto(0.5)`, `lognormal(0,1)`, `ones` and
    /// `constantOnes` (case-insensitive). `:` may replace the parentheses.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, args) = match s.find(['(', ':']) {
            Some(p) => {
                let rest = s[p + 1..].trim_end_matches(')');
                (&s[..p], rest)
            }
            None => (s, ""),
        };
        let nums: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| a.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::param("dist", format!("cannot parse `{s}`: {e}")))?
        };
        let want = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(Error::param("dist", format!("`{head}` takes {k} parameter(s), got {}", nums.len())))
            }
        };
        let spec = match head.trim().to_ascii_lowercase().as_str() {
            "stable" => {
                want(1)?;
                EnvSpec::Stable { alpha: nums[0] }
            }
            "pareto" => {
                want(1)?;
                EnvSpec::Pareto { alpha: nums[0] }
            }
            "lognormal" => {
                want(2)?;
                EnvSpec::LogNormal { mu: nums[0], sigma: nums[1] }
            }
            "ones" | "constantones" | "constant" => {
                want(0)?;
                EnvSpec::ConstantOnes
            }
            other => return Err(Error::param("dist", format!("unknown distribution `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl EnvSpec {
    pub fn custom<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&mut dyn RngCore) -> f64 + Send + Sync + 'static,
    {
        EnvSpec::Custom { name: name.into(), sampler: Arc::new(f) }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EnvSpec::Stable { alpha } | EnvSpec::Pareto { alpha } => {
                StableParams::new(alpha)?;
            }
            EnvSpec::LogNormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::param("mu", format!("{mu} is not finite")));
                }
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(Error::param("sigma", format!("{sigma} is not a finite nonnegative number")));
                }
            }
            EnvSpec::ConstantOnes | EnvSpec::Custom { .. } => {}
        }
        Ok(())
    }

    /// The stable index when the law is in the domain of attraction of `S_α`.
    pub fn tail_index(&self) -> Option<f64> {
        match *self {
            EnvSpec::Stable { alpha } | EnvSpec::Pareto { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, EnvSpec::ConstantOnes | EnvSpec::LogNormal { sigma: 0.0, .. })
    }

    /// Returns a sampler with parameters checked once up front.
    pub fn sampler(&self) -> Result<WeightSampler> {
        self.validate()?;
        Ok(match self {
            EnvSpec::Stable { alpha } => WeightSampler::Stable(StableParams::new(*alpha)?),
            EnvSpec::Pareto { alpha } => {
                let ln_c = -statrs::function::gamma::ln_gamma(1.0 - alpha);
                WeightSampler::Pareto { ln_c, inv_alpha: 1.0 / alpha }
            }
            EnvSpec::LogNormal { mu, sigma } => WeightSampler::LogNormal { mu: *mu, sigma: *sigma },
            EnvSpec::ConstantOnes => WeightSampler::Ones,
            EnvSpec::Custom { sampler, .. } => WeightSampler::Custom(sampler.clone()),
        })
    }
}

/// Validated per-draw sampler of `log ω`.
#[derive(Clone)]
pub enum WeightSampler {
    Stable(StableParams),
    Pareto { ln_c: f64, inv_alpha: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Ones,
    Custom(Arc<LogWeightFn>),
}

impl WeightSampler {
    #[inline]
    pub fn sample_log<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            WeightSampler::Stable(p) => sample_log_stable(p, rng),
            WeightSampler::Pareto { ln_c, inv_alpha } => {
                // inverse CDF on U ∈ (0, 1]
                let u: f64 = 1.0 - rng.random::<f64>();
                (ln_c - u.ln()) * inv_alpha
            }
            WeightSampler::LogNormal { mu, sigma } => {
                let g: f64 = rng.sample(StandardNormal);
                mu + sigma * g
            }
            WeightSampler::Ones => 0.0,
            WeightSampler::Custom(f) => {
                let v = f(rng);
                assert!(v.is_finite(), "custom environment produced a non-finite log weight");
                v
            }
        }
    }
}

/// One time slice `ξ(t) = [ω_{i,j}(t)]`, stored row-major as natural logs.
/// Entry `(i, j)` weighs the step from site `i` to site `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentMatrix {
    n: usize,
    log_w: Vec<f64>,
}

impl EnvironmentMatrix {
    pub fn from_log_entries(n: usize, log_w: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", format!("{n} < 2")));
        }
        if log_w.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: log_w.len() });
        }
        if let Some(bad) = log_w.iter().find(|x| !x.is_finite()) {
            return Err(Error::param("entries", format!("log weight {bad} is not finite")));
        }
        Ok(EnvironmentMatrix { n, log_w })
    }

    /// From strictly positive linear weights given row by row.
    pub fn from_linear(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut log_w = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: r.len() });
            }
            for &x in r {
                if !(x > 0.0) {
                    return Err(Error::param("entries", format!("weight {x} is not strictly positive")));
                }
                log_w.push(x.ln());
            }
        }
        Self::from_log_entries(n, log_w)
    }

    pub fn ones(n: usize) -> Result<Self> {
        Self::from_log_entries(n, vec![0.0; n * n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn log_entry(&self, i: usize, j: usize) -> f64 {
        self.log_w[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.log_w[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.log_w
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = self.log_w[i * n + j];
            }
        }
        EnvironmentMatrix { n, log_w: t }
    }

    /// `log (self · other)` by log-domain matrix multiplication.
    pub fn log_matmul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        let n = self.n;
        let ot = other.transpose();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            let r = self.row(i);
            for j in 0..n {
                let c = ot.row(j);
                let mut acc = crate::logspace::LogAccumulator::EMPTY;
                for k in 0..n {
                    acc.push(r[k] + c[k]);
                }
                out.push(acc.value());
            }
        }
        Ok(EnvironmentMatrix { n, log_w: out })
    }
}

/// Draws an `n × n` slice row by row.
pub fn sample_environment<R: Rng>(spec: &EnvSpec, n: usize, rng: &mut R) -> Result<EnvironmentMatrix> {
    if n < 2 {
        return Err(Error::param("n", format!("{n} < 2")));
    }
    let s = spec.sampler()?;
    let log_w = (0..n * n).map(|_| s.sample_log(rng)).collect();
    Ok(EnvironmentMatrix { n, log_w })
}

/// Random access to `ξ(t)` for every integer time.
pub trait Environment: Sync {
    fn n(&self) -> usize;
    fn matrix(&self, t: i64) -> EnvironmentMatrix;
}

/// `ξ(t)` drawn from its own substream `(seed, t, label)`, so any window of
/// times can be rebuilt in any order.
#[derive(Clone, Debug)]
pub struct SeededEnvironment {
    spec: EnvSpec,
    n: usize,
    seed: u64,
    label: &'static str,
}

impl SeededEnvironment {
    pub fn new(spec: EnvSpec, n: usize, seed: u64) -> Result<Self> {
        Self::with_label(spec, n, seed, "env")
    }

    pub fn with_label(spec: EnvSpec, n: usize, seed: u64, label: &'static str) -> Result<Self> {
        spec.validate()?;
        if n < 2 {
            return Err(Error::param("n", format!("{n} < 2")));
        }
        Ok(SeededEnvironment { spec, n, seed, label })
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn stream(&self, t: i64) -> StreamRng {
        derive_substream(self.seed, t as u64, self.label)
    }
}

impl Environment for SeededEnvironment {
    fn n(&self) -> usize {
        self.n
    }

    fn matrix(&self, t: i64) -> EnvironmentMatrix {
        sample_environment(&self.spec, self.n, &mut self.stream(t)).expect("validated at construction")
    }
}

/// The same matrix at every time.
#[derive(Clone, Debug)]
pub struct ConstantEnvironment {
    matrix: EnvironmentMatrix,
}

impl ConstantEnvironment {
    pub fn new(matrix: EnvironmentMatrix) -> Self {
        ConstantEnvironment { matrix }
    }
}

impl Environment for ConstantEnvironment {
    fn n(&self) -> usize {
        self.matrix.n
    }

    fn matrix(&self, _t: i64) -> EnvironmentMatrix {
        self.matrix.clone()
    }
}

/// Explicit matrices on a window of times `[start, start + len)`;
/// times outside the window wrap around periodically.
#[derive(Clone, Debug)]
pub struct TableEnvironment {
    start: i64,
    matrices: Vec<EnvironmentMatrix>,
}

impl TableEnvironment {
    pub fn new(start: i64, matrices: Vec<EnvironmentMatrix>) -> Result<Self> {
        let n = matrices.first().ok_or(Error::EmptyReduction)?.n;
        if let Some(m) = matrices.iter().find(|m| m.n != n) {
            return Err(Error::DimensionMismatch { expected: n, got: m.n });
        }
        Ok(TableEnvironment { start, matrices })
    }
}

impl Environment for TableEnvironment {
    fn n(&self) -> usize {
        self.matrices[0].n
    }

    fn matrix(&self, t: i64) -> EnvironmentMatrix {
        let len = self.matrices.len() as i64;
        self.matrices[(t - self.start).rem_euclid(len) as usize].clone()
    }
}
