//! The one-sided α-stable law `S_α`, `0 < α < 1`, normalized by
//! `E exp(-λ S) = exp(-λ^α)`, and the index-1 totally asymmetric stable law.
//!
//! Sampling uses Kanter's representation
//! `S = (A(θ)/W)^{(1-α)/α}` with `θ ~ U(0, π)`, `W ~ Exp(1)` and
//!
//! ```text
//! A(θ) = sin((1-α)θ) · sin(αθ)^{α/(1-α)} / sin(θ)^{1/(1-α)}.
//! ```
//!
//! The same representation gives the distribution function as a smooth
//! integral over θ, because `S ≤ x` exactly when `W ≥ A(θ) x^{-α/(1-α)}`.

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_breakpoints, QuadOptions};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::Exp1;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableParams {
    alpha: f64,
}

impl StableParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param("alpha", format!("{alpha} is outside (0, 1)")));
        }
        Ok(StableParams { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exponent `α/(1-α)` applied to `x` in the distribution function.
    fn kappa(&self) -> f64 {
        self.alpha / (1.0 - self.alpha)
    }
}

fn cdf_quad() -> QuadOptions {
    QuadOptions { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 4000 }
}

/// `log A(θ)`; no range check.
#[inline]
fn log_kanter_a_unchecked(theta: f64, alpha: f64) -> f64 {
    let one_minus = 1.0 - alpha;
    ((one_minus * theta).sin()).ln() + (alpha / one_minus) * ((alpha * theta).sin()).ln()
        - ((theta.sin()).ln()) / one_minus
}

/// Kanter's function `A(θ)` for `θ ∈ (0, π)`.
pub fn kanter_a(theta: f64, alpha: f64) -> Result<f64> {
    StableParams::new(alpha)?;
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::param("theta", format!("{theta} is outside the open interval (0, π)")));
    }
    Ok(log_kanter_a_unchecked(theta, alpha).exp())
}

/// `θ ~ U(0, π)` excluding both endpoints.
#[inline]
fn open_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return PI * u;
        }
    }
}

/// `log S` for one draw of `S_α`.
#[inline]
pub fn sample_log_stable<R: Rng + ?Sized>(params: &StableParams, rng: &mut R) -> f64 {
    let theta = open_angle(rng);
    let w: f64 = rng.sample(Exp1);
    let alpha = params.alpha;
    if alpha == 0.5 {
        // A(θ) = 1 / (4 cos²(θ/2)) here, and the exponent (1-α)/α is 1
        let c = (0.5 * theta).cos();
        return -(4.0 * w * c * c).ln();
    }
    let one_minus = 1.0 - alpha;
    // ((1-α)/α)(log A(θ) - log W) with log sin((1-α)θ) - log W merged
    (one_minus * ((one_minus * theta).sin() / w).ln() + alpha * (alpha * theta).sin().ln() - theta.sin().ln()) / alpha
}

/// One draw of `S_α`.
pub fn sample_stable<R: Rng + ?Sized>(params: &StableParams, rng: &mut R) -> f64 {
    sample_log_stable(params, rng).exp()
}

/// `P[S_α ≤ x]`.
pub fn stable_cdf(x: f64, params: &StableParams) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::param("x", format!("{x} is not a positive number")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    let shift = -params.kappa() * x.ln();
    let alpha = params.alpha;
    let r = integrate(|th: f64| (-(log_kanter_a_unchecked(th, alpha) + shift).exp()).exp(), 0.0, PI, cdf_quad())?;
    Ok((r.value / PI).clamp(0.0, 1.0))
}

/// `u_α(y) = P[S_α > e^y]`, computed directly from the survival integrand so
/// that the upper tail keeps full relative accuracy.
pub fn u_alpha(y: f64, params: &StableParams) -> Result<f64> {
    if y == f64::INFINITY {
        return Ok(0.0);
    }
    if y == f64::NEG_INFINITY {
        return Ok(1.0);
    }
    if y.is_nan() {
        return Err(Error::param("y", "NaN"));
    }
    let shift = -params.kappa() * y;
    let alpha = params.alpha;
    let r = integrate(
        |th: f64| -(-(log_kanter_a_unchecked(th, alpha) + shift).exp()).exp_m1(),
        0.0,
        PI,
        cdf_quad(),
    )?;
    Ok((r.value / PI).clamp(0.0, 1.0))
}

/// Survival function `P[S_α > x]`.
pub fn stable_survival(x: f64, params: &StableParams) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::param("x", format!("{x} is not a positive number")));
    }
    u_alpha(x.ln(), params)
}

/// `d u_α(y) / dy`, by differentiating under the integral sign.
pub fn u_alpha_derivative(y: f64, params: &StableParams) -> Result<f64> {
    let kappa = params.kappa();
    let alpha = params.alpha;
    let r = integrate(
        |th: f64| {
            let la = log_kanter_a_unchecked(th, alpha) - kappa * y;
            let a = la.exp();
            -kappa * (la - a).exp()
        },
        0.0,
        PI,
        cdf_quad(),
    )?;
    Ok(r.value / PI)
}

/// Closed form for `α = 1/2` (Lévy law): `P[S_{1/2} ≤ x] = erfc(1/(2√x))`.
pub fn levy_half_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::erf::erfc(0.5 / x.sqrt())
}

/// Closed-form `u_{1/2}(y) = erf(e^{-y/2}/2)`.
pub fn levy_half_u(y: f64) -> f64 {
    statrs::function::erf::erf(0.5 * (-0.5 * y).exp())
}

/// Draw with the law of `S_{1/2}` built from a standard normal, `1/(2G²)`.
/// Used only as an independent cross-check of the Kanter sampler.
pub fn sample_levy_half<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let g: f64 = rng.sample(rand_distr::StandardNormal);
    0.5 / (g * g)
}

/// Tail constant: `P[S_α > x] ~ x^{-α} / Γ(1-α)`.
pub fn tail_constant(params: &StableParams) -> f64 {
    1.0 / statrs::function::gamma::gamma(1.0 - params.alpha)
}

// ---------------------------------------------------------------------------
// Index-1 totally asymmetric law

/// `(e^{iux} - 1 - iux) / x²` with series near `ux = 0`.
fn compensated_integrand(u: f64, x: f64) -> Complex64 {
    let ux = u * x;
    let re = {
        let s = (0.5 * ux).sin();
        -2.0 * s * s / (x * x)
    };
    let im = if ux.abs() < 0.1 {
        // (sin(ux) - ux)/x² = -u³x/6 + u⁵x³/120 - u⁷x⁵/5040 + u⁹x⁷/362880
        let u2x2 = ux * ux;
        u * u * ux * (-1.0 / 6.0 + u2x2 * (1.0 / 120.0 + u2x2 * (-1.0 / 5040.0 + u2x2 / 362_880.0)))
    } else {
        (ux.sin() - ux) / (x * x)
    };
    Complex64::new(re, im)
}

/// `∫_X^∞ e^{iux} x^{-2} dx` by its asymptotic expansion, valid for `|u| X ≫ 1`.
fn oscillatory_tail(u: f64, x: f64) -> Complex64 {
    let iu = Complex64::new(0.0, u);
    let mut term = -Complex64::new(0.0, u * x).exp() / (iu * x * x);
    let mut sum = term;
    for m in 2..14 {
        term = term * (m as f64) / (iu * x);
        sum += term;
    }
    sum
}

fn levy_quad() -> QuadOptions {
    QuadOptions { abs_tol: 1e-13, rel_tol: 1e-13, max_intervals: 8000 }
}

/// `ψ(u) = ∫_1^∞ (e^{iux} - 1) x^{-2} dx + ∫_0^1 (e^{iux} - 1 - iux) x^{-2} dx`,
/// evaluated by quadrature.
pub fn levy_exponent(u: f64) -> Result<Complex64> {
    if u == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if !u.is_finite() {
        return Err(Error::param("u", "must be finite"));
    }
    let inner = integrate(|x: f64| compensated_integrand(u, x), 0.0, 1.0, levy_quad())?;
    // [1, X] split at half periods, then the asymptotic tail beyond X
    let x_max = (200.0 / u.abs()).max(2.0);
    let segments = (((x_max - 1.0) * u.abs() / PI).ceil() as usize).max(1);
    let points: Vec<f64> = (0..=segments).map(|k| 1.0 + (x_max - 1.0) * k as f64 / segments as f64).collect();
    let mut outer_f = |x: f64| (Complex64::new(0.0, u * x).exp() - 1.0) / (x * x);
    let outer = integrate_breakpoints(&mut outer_f, &points, levy_quad())?;
    let tail = oscillatory_tail(u, x_max) - 1.0 / x_max;
    Ok(inner.value + outer.value + tail)
}

/// Closed form of the real part, `Re ψ(u) = -π|u|/2`.
pub fn levy_exponent_re(u: f64) -> f64 {
    -0.5 * PI * u.abs()
}

/// Shift constant `C` in
/// `ψ(u) = iCu - (π/2)|u| (1 + i (2/π) sign(u) ln|u|)`, i.e. `C = Im ψ(1)`.
#[derive(Clone, Copy, Debug)]
pub struct Stable1Constants {
    pub c: f64,
    pub quad_tolerance: f64,
}

impl Stable1Constants {
    /// `C = ∫_1^∞ sin(x) x^{-2} dx + ∫_0^1 (sin(x) - x) x^{-2} dx`.
    pub fn compute() -> Result<Self> {
        let psi = levy_exponent(1.0)?;
        Ok(Stable1Constants { c: psi.im, quad_tolerance: levy_quad().abs_tol })
    }

    /// `ψ(u)` from the closed-form decomposition.
    pub fn exponent(&self, u: f64) -> Complex64 {
        if u == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let a = u.abs();
        Complex64::new(-0.5 * PI * a, self.c * u - u.signum() * a * a.ln())
    }
}

/// One row of a Laplace-transform validation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceRow {
    pub lambda: f64,
    pub mean: f64,
    pub std_err: f64,
    pub target: f64,
    /// `(mean - target) / std_err`; zero when the estimate is exact.
    pub z_score: f64,
}

/// Monte Carlo check of `E exp(-λ S) = exp(-λ^α)` on a grid of `λ`.
pub fn validate_laplace<R: Rng + ?Sized>(
    params: &StableParams,
    lambdas: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<LaplaceRow>> {
    if n_samples < 10_000 {
        return Err(Error::TooFewSamples { needed: 10_000, got: n_samples });
    }
    if let Some(&l) = lambdas.iter().find(|&&l| !(l >= 0.0) || !l.is_finite()) {
        return Err(Error::param("lambda", format!("{l} is not a finite nonnegative number")));
    }
    let draws: Vec<f64> = (0..n_samples).map(|_| sample_stable(params, rng)).collect();
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let target = (-lambda.powf(params.alpha)).exp();
            if lambda == 0.0 {
                return LaplaceRow { lambda, mean: 1.0, std_err: 0.0, target, z_score: 0.0 };
            }
            let n = draws.len() as f64;
            let (mut s, mut s2) = (0.0, 0.0);
            for &x in &draws {
                let v = (-lambda * x).exp();
                s += v;
                s2 += v * v;
            }
            let mean = s / n;
            let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
            let std_err = (var / n).sqrt();
            let z_score = if std_err > 0.0 { (mean - target) / std_err } else { 0.0 };
            LaplaceRow { lambda, mean, std_err, target, z_score }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_substream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kanter_hand_value_at_half() {
        // sin(π/4)·sin(π/4)/sin(π/2) = 1/2
        assert_abs_diff_eq!(kanter_a(PI / 2.0, 0.5).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn kanter_small_angle_limit() {
        for &alpha in &[0.2f64, 0.5, 0.8] {
            let limit = (1.0 - alpha) * alpha.powf(alpha / (1.0 - alpha));
            let got = kanter_a(1e-8, alpha).unwrap();
            assert!((got - limit).abs() < 1e-7 * limit, "alpha {alpha}: {got} vs {limit}");
        }
    }

    #[test]
    fn kanter_blows_up_at_pi() {
        let vals: Vec<f64> = [3.0, 3.1, 3.14, 3.1415, 3.141_592].iter().map(|&t| kanter_a(t, 0.4).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
        assert!(vals[4] > 1e6);
    }

    #[test]
    fn kanter_rejects_endpoints() {
        assert!(kanter_a(0.0, 0.5).is_err());
        assert!(kanter_a(PI, 0.5).is_err());
        assert!(kanter_a(1.0, 1.5).is_err());
    }

    #[test]
    fn params_range() {
        assert!(StableParams::new(0.0).is_err());
        assert!(StableParams::new(1.0).is_err());
        assert!(StableParams::new(f64::NAN).is_err());
        assert!(StableParams::new(0.3).is_ok());
    }

    #[test]
    fn cdf_matches_levy_closed_form() {
        let p = StableParams::new(0.5).unwrap();
        for &x in &[1e-3, 0.05, 0.3, 1.0, 4.0, 50.0, 1e4] {
            assert_abs_diff_eq!(stable_cdf(x, &p).unwrap(), levy_half_cdf(x), epsilon = 1e-10);
        }
        // u_{1/2}(0) = erf(1/2)
        assert_abs_diff_eq!(u_alpha(0.0, &p).unwrap(), 0.520_499_877_813_046_5, epsilon = 1e-10);
    }

    #[test]
    fn cdf_is_monotone_with_correct_limits() {
        for &alpha in &[0.3, 0.7] {
            let p = StableParams::new(alpha).unwrap();
            let xs: Vec<f64> = (-30..=30).map(|k| (0.5 * k as f64).exp()).collect();
            let fs: Vec<f64> = xs.iter().map(|&x| stable_cdf(x, &p).unwrap()).collect();
            assert!(fs.windows(2).all(|w| w[1] >= w[0] - 1e-12));
            assert!(fs[0] < 1e-6);
            assert!(fs[fs.len() - 1] > 0.99);
            assert_eq!(stable_cdf(0.0, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn survival_tail_matches_power_law() {
        let p = StableParams::new(0.5).unwrap();
        let x: f64 = 1e4;
        let approx = x.powf(-0.5) * tail_constant(&p);
        let got = stable_survival(x, &p).unwrap();
        assert!((got / approx - 1.0).abs() < 0.05, "{got} vs {approx}");
    }

    #[test]
    fn u_alpha_derivative_at_half() {
        let p = StableParams::new(0.5).unwrap();
        // -e^{-1/4} / (2√π)
        let exact = -(-0.25f64).exp() / (2.0 * PI.sqrt());
        assert_abs_diff_eq!(u_alpha_derivative(0.0, &p).unwrap(), exact, epsilon = 1e-9);
        assert_abs_diff_eq!(exact, -0.219_70, epsilon = 1e-5);
        // finite difference cross-check at another α
        let q = StableParams::new(0.3).unwrap();
        let h = 1e-4;
        let fd = (u_alpha(0.7 + h, &q).unwrap() - u_alpha(0.7 - h, &q).unwrap()) / (2.0 * h);
        assert_abs_diff_eq!(u_alpha_derivative(0.7, &q).unwrap(), fd, epsilon = 1e-6);
    }

    #[test]
    fn levy_exponent_values() {
        assert_eq!(levy_exponent(0.0).unwrap(), Complex64::new(0.0, 0.0));
        let psi1 = levy_exponent(1.0).unwrap();
        assert_abs_diff_eq!(psi1.re, -PI / 2.0, epsilon = 1e-6);
        let c = Stable1Constants::compute().unwrap();
        assert_abs_diff_eq!(c.c, 0.422_784, epsilon = 1e-4);
        for &u in &[-3.0, -0.2, 0.01, 0.5, 2.0, 7.0] {
            let q = levy_exponent(u).unwrap();
            assert_abs_diff_eq!(q.re, levy_exponent_re(u), epsilon = 1e-8);
            let closed = c.exponent(u);
            assert_abs_diff_eq!(q.im, closed.im, epsilon = 1e-8);
        }
    }

    #[test]
    fn laplace_at_zero_is_exact() {
        let p = StableParams::new(0.3).unwrap();
        let mut rng = derive_substream(1, 0, "laplace");
        let rows = validate_laplace(&p, &[0.0, 2.0], 20_000, &mut rng).unwrap();
        assert_eq!(rows[0].mean, 1.0);
        assert_abs_diff_eq!(rows[1].target, (-(2f64.powf(0.3))).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(rows[1].target, 0.29195, epsilon = 1e-5);
        assert!(rows[1].z_score.abs() < 4.0);
        assert!(validate_laplace(&p, &[1.0], 10, &mut rng).is_err());
    }

    #[test]
    fn half_kanter_simplification() {
        for k in 1..200 {
            let theta = PI * k as f64 / 200.0;
            let w = 0.01 * k as f64;
            let general = log_kanter_a_unchecked(theta, 0.5) - w.ln();
            let c = (0.5 * theta).cos();
            assert_abs_diff_eq!(general, -(4.0 * w * c * c).ln(), epsilon = 1e-12 * (1.0 + general.abs()));
        }
    }
}
