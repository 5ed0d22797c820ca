//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Tolerances for [`integrate`]. Converged when the error estimate is below
/// `max(abs, rel·|I|)`.
#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-10, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

fn kronrod<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let dx = h * x;
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        let pair = f1 + f2;
        kron = kron + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let value = kron * h;
    let error = ((kron - gauss) * h).magnitude();
    (value, error)
}

/// Integrates `f` over `[a, b]`. The integrand is never evaluated at the
/// endpoints.
pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<QuadResult<T>> {
    integrate_breakpoints(&mut f, &[a, b], opts)
}

/// As [`integrate`], starting from the partition given by `points`
/// (ascending, at least two entries).
pub fn integrate_breakpoints<T: QuadValue, F: FnMut(f64) -> T>(
    f: &mut F,
    points: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult<T>> {
    if points.len() < 2 {
        return Err(Error::param("points", "need at least two breakpoints"));
    }
    let mut segs: Vec<Segment<T>> = points
        .windows(2)
        .map(|w| {
            let (value, error) = kronrod(f, w[0], w[1]);
            Segment { a: w[0], b: w[1], value, error }
        })
        .collect();
    loop {
        let total = segs.iter().fold(T::zero(), |acc, s| acc + s.value);
        let err: f64 = segs.iter().map(|s| s.error).sum();
        if err <= opts.abs_tol.max(opts.rel_tol * total.magnitude()) {
            return Ok(QuadResult { value: total, error: err, intervals: segs.len() });
        }
        if segs.len() >= opts.max_intervals {
            return Err(Error::QuadratureFailure { achieved: err });
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, s)| if s.error > be { (i, s.error) } else { (bi, be) });
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            return Err(Error::QuadratureFailure { achieved: err });
        }
        let (v1, e1) = kronrod(f, s.a, mid);
        let (v2, e2) = kronrod(f, mid, s.b);
        segs.push(Segment { a: s.a, b: mid, value: v1, error: e1 });
        segs.push(Segment { a: mid, b: s.b, value: v2, error: e2 });
    }
}
