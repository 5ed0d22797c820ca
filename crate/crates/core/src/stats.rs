//! Goodness-of-fit and Monte Carlo error tools shared by the experiments.

use crate::error::{Error, Result};
use num_complex::Complex64;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Outcome of a hypothesis test; `pass` is `statistic < critical_value`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub pass: bool,
    pub level: f64,
}

impl TestResult {
    pub fn new(statistic: f64, critical_value: f64, level: f64) -> Self {
        TestResult { statistic, critical_value, pass: statistic < critical_value, level }
    }
}

/// Smallest sample size for which asymptotic KS critical values are used.
pub const KS_MIN_SAMPLES: usize = 50;

/// Empirical distribution function.
#[derive(Clone, Debug)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyReduction);
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::param("samples", "NaN sample"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// `#{x_k ≤ x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", format!("{level} is outside (0, 1)")));
    }
    Ok(())
}

/// Asymptotic Kolmogorov coefficient `c(level)`: tabulated at 5% and 1%,
/// `sqrt(-ln(level/2)/2)` otherwise.
pub fn ks_coefficient(level: f64) -> Result<f64> {
    check_level(level)?;
    Ok(if level == 0.05 {
        1.358
    } else if level == 0.01 {
        1.628
    } else {
        (-0.5 * (0.5 * level).ln()).sqrt()
    })
}

/// One-sample statistic `sup_x |F_n(x) - F(x)|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    let e = Ecdf::new(samples)?;
    let n = e.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &x) in e.sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((k + 1) as f64 / n - f).max(f - k as f64 / n);
    }
    Ok(d)
}

pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, level: f64) -> Result<TestResult> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: KS_MIN_SAMPLES, got: samples.len() });
    }
    let d = ks_statistic(samples, cdf)?;
    let crit = ks_coefficient(level)? / (samples.len() as f64).sqrt();
    Ok(TestResult::new(d, crit, level))
}

/// Two-sample statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    let ea = Ecdf::new(a)?;
    let eb = Ecdf::new(b)?;
    let (xa, xb) = (ea.sorted(), eb.sorted());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<TestResult> {
    for s in [a, b] {
        if s.len() < KS_MIN_SAMPLES {
            return Err(Error::TooFewSamples { needed: KS_MIN_SAMPLES, got: s.len() });
        }
    }
    let d = ks_two_sample_statistic(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let crit = ks_coefficient(level)? / (n * m / (n + m)).sqrt();
    Ok(TestResult::new(d, crit, level))
}

/// `(1/n) Σ_k exp(i u X_k)` for each `u`.
pub fn empirical_cf(samples: &[f64], us: &[f64]) -> Vec<Complex64> {
    let n = samples.len() as f64;
    us.iter()
        .map(|&u| {
            if u == 0.0 {
                return Complex64::new(1.0, 0.0);
            }
            let (mut c, mut s) = (0.0, 0.0);
            for &x in samples {
                let (sn, cs) = (u * x).sin_cos();
                c += cs;
                s += sn;
            }
            Complex64::new(c / n, s / n)
        })
        .collect()
}

/// Degrees of freedom for [`chi_square_counts`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChiSquareDof {
    /// Expected counts were rescaled to the observed total: `k - 1`.
    Constrained,
    /// Expected counts are fixed in advance: `k`.
    Free,
}

/// Pearson statistic `Σ (O - E)² / E` against the χ² quantile at `1 - level`.
pub fn chi_square_counts(observed: &[f64], expected: &[f64], dof: ChiSquareDof, level: f64) -> Result<TestResult> {
    check_level(level)?;
    if observed.len() != expected.len() {
        return Err(Error::DimensionMismatch { expected: expected.len(), got: observed.len() });
    }
    if observed.is_empty() {
        return Err(Error::EmptyReduction);
    }
    if let Some((bin, &e)) = expected.iter().enumerate().find(|(_, &e)| !(e >= 5.0)) {
        return Err(Error::BinUnderflow { bin, expected: e });
    }
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let k = observed.len();
    let df = match dof {
        ChiSquareDof::Constrained => k.checked_sub(1).filter(|&d| d > 0).ok_or_else(|| Error::param("bins", "need at least two bins"))?,
        ChiSquareDof::Free => k,
    };
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::Degenerate(e.to_string()))?;
    Ok(TestResult::new(stat, dist.inverse_cdf(1.0 - level), level))
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: xs.len() });
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var))
}

/// Batch-means summary of a stationary series.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchMeans {
    pub mean: f64,
    pub std_err: f64,
    pub batch_size: usize,
    pub batch_means: Vec<f64>,
}

impl BatchMeans {
    /// Estimated variance of a sum of `batch_size` consecutive terms.
    pub fn batch_sum_variance(&self) -> f64 {
        let (_, v) = mean_var(&self.batch_means).expect("at least two batches");
        v * (self.batch_size * self.batch_size) as f64
    }
}

/// Splits the series into `n_batches` equal consecutive batches. Leading
/// terms that do not fill a batch are dropped.
pub fn batch_means(series: &[f64], n_batches: usize) -> Result<BatchMeans> {
    if n_batches < 2 {
        return Err(Error::param("n_batches", "need at least two batches"));
    }
    let b = series.len() / n_batches;
    if b == 0 {
        return Err(Error::TooFewSamples { needed: n_batches, got: series.len() });
    }
    let tail = &series[series.len() - b * n_batches..];
    let means: Vec<f64> = tail.chunks_exact(b).map(|c| c.iter().sum::<f64>() / b as f64).collect();
    let (mean, var) = mean_var(&means)?;
    Ok(BatchMeans { mean, std_err: (var / n_batches as f64).sqrt(), batch_size: b, batch_means: means })
}

/// Standard error of the series mean by batch means.
pub fn batch_means_se(series: &[f64], n_batches: usize) -> Result<f64> {
    Ok(batch_means(series, n_batches)?.std_err)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Pearson correlation coefficient.
pub fn correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let (mx, vx) = mean_var(x)?;
    let (my, vy) = mean_var(y)?;
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::Degenerate("zero variance in correlation".into()));
    }
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() as f64 - 1.0);
    Ok(cov / (vx * vy).sqrt())
}

/// Median (mean of the two middle values for even lengths).
pub fn median(xs: &[f64]) -> Result<f64> {
    let e = Ecdf::new(xs)?;
    let s = e.sorted();
    let m = s.len() / 2;
    Ok(if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) })
}

/// Mann–Kendall trend statistic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MannKendall {
    /// `Σ_{i<j} sign(x_j - x_i)`.
    pub s: f64,
    /// Normal score with continuity correction (no tie adjustment).
    pub z: f64,
}

impl MannKendall {
    /// `true` when an upward trend is significant at one-sided `level`.
    pub fn upward(&self, level: f64) -> bool {
        1.0 - normal_cdf(self.z) < level
    }
}

pub fn mann_kendall(series: &[f64]) -> Result<MannKendall> {
    let n = series.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match series[j].partial_cmp(&series[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let nf = n as f64;
    let var = nf * (nf - 1.0) * (2.0 * nf + 5.0) / 18.0;
    let s = s as f64;
    let z = if s > 0.0 {
        (s - 1.0) / var.sqrt()
    } else if s < 0.0 {
        (s + 1.0) / var.sqrt()
    } else {
        0.0
    };
    Ok(MannKendall { s, z })
}
