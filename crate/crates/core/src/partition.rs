//! Partition vectors, α-norms, the basic recursion `Z(t)* = Z(t-1)* ξ(t)` and
//! the path-enumeration oracle.
//!
//! Sites are indexed `0..n`. Every reduction runs over the source index in
//! ascending order through the same streaming accumulator, so a stored
//! matrix and a streamed one give bit-identical results.

use crate::env::{EnvSpec, EnvironmentMatrix, WeightSampler};
use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp_nonempty, LogAccumulator};
use rand::Rng;

/// Nonnegative vector stored as natural logs; at least one coordinate is
/// strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionVector {
    coords: Vec<f64>,
}

impl PartitionVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(Error::param("coords", "NaN or +∞ log coordinate"));
        }
        if !coords.iter().any(|x| x.is_finite()) {
            return Err(Error::NoFiniteCoordinate);
        }
        Ok(PartitionVector { coords })
    }

    /// The all-ones vector (logs all zero).
    pub fn ones(n: usize) -> Self {
        PartitionVector { coords: vec![0.0; n] }
    }

    pub fn from_linear(v: &[f64]) -> Result<Self> {
        if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::param("coords", "entries must be finite and nonnegative"));
        }
        Self::new(v.iter().map(|x| x.ln()).collect())
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    /// Multiplies the underlying vector by `e^c`.
    pub fn shifted(&self, c: f64) -> Self {
        PartitionVector { coords: self.coords.iter().map(|x| x + c).collect() }
    }
}

/// Point of the α-simplex `{x ≥ 0 : Σ x_i^α = 1}` stored as logs.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexPoint {
    alpha: f64,
    log_coords: Vec<f64>,
}

impl SimplexPoint {
    /// Checks membership to within `1e-12`.
    pub fn new(alpha: f64, log_coords: Vec<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        let s = log_sum_exp_nonempty(&log_coords.iter().map(|x| alpha * x).collect::<Vec<_>>());
        if !(s.abs() <= 1e-12) {
            return Err(Error::param("log_coords", format!("not on the α-simplex: log Σ x^α = {s}")));
        }
        Ok(SimplexPoint { alpha, log_coords })
    }

    pub fn uniform(n: usize, alpha: f64) -> Result<Self> {
        project_simplex(&PartitionVector::ones(n), alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.log_coords.len()
    }

    pub fn log_coords(&self) -> &[f64] {
        &self.log_coords
    }

    pub fn linear(&self) -> Vec<f64> {
        self.log_coords.iter().map(|x| x.exp()).collect()
    }

    /// `Ψ_β` applied to this point.
    pub fn reproject(&self, beta: f64) -> Result<SimplexPoint> {
        project_log(&self.log_coords, beta)
    }

    /// `log Σ x_i^α - 0`, the membership defect.
    pub fn defect(&self) -> f64 {
        log_sum_exp_nonempty(&self.log_coords.iter().map(|x| self.alpha * x).collect::<Vec<_>>())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("{alpha} is not a positive number")));
    }
    Ok(())
}

/// `log ‖v‖_α = (1/α) log Σ_i exp(α v_i)` for a log-coordinate slice.
pub fn alpha_norm_log_slice(v: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if v.is_empty() {
        return Err(Error::EmptyReduction);
    }
    let mut acc = LogAccumulator::EMPTY;
    for &x in v {
        acc.push(alpha * x);
    }
    Ok(acc.value() / alpha)
}

/// `log ‖v‖_α`.
pub fn alpha_norm_log(v: &PartitionVector, alpha: f64) -> Result<f64> {
    alpha_norm_log_slice(&v.coords, alpha)
}

fn project_log(v: &[f64], alpha: f64) -> Result<SimplexPoint> {
    let norm = alpha_norm_log_slice(v, alpha)?;
    if !norm.is_finite() {
        return Err(Error::NoFiniteCoordinate);
    }
    Ok(SimplexPoint { alpha, log_coords: v.iter().map(|x| x - norm).collect() })
}

/// `Ψ_α(v) = v / ‖v‖_α`.
pub fn project_simplex(v: &PartitionVector, alpha: f64) -> Result<SimplexPoint> {
    project_log(&v.coords, alpha)
}

/// Projects raw log coordinates; errors when every coordinate is `-∞`.
pub fn project_log_coords(v: &[f64], alpha: f64) -> Result<SimplexPoint> {
    project_log(v, alpha)
}

/// Row vector times matrix: `out_j = log Σ_i exp(z_i + ξ_{i,j})`.
pub fn left_mul(z: &[f64], xi: &EnvironmentMatrix) -> Result<Vec<f64>> {
    let n = xi.n();
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z.len() });
    }
    let mut acc = vec![LogAccumulator::EMPTY; n];
    for (i, &zi) in z.iter().enumerate() {
        for (a, &w) in acc.iter_mut().zip(xi.row(i)) {
            a.push(zi + w);
        }
    }
    Ok(acc.iter().map(|a| a.value()).collect())
}

/// Matrix times column vector: `out_i = log Σ_j exp(ξ_{i,j} + v_j)`.
pub fn right_mul(xi: &EnvironmentMatrix, v: &[f64]) -> Result<Vec<f64>> {
    let n = xi.n();
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    Ok((0..n)
        .map(|i| {
            let mut acc = LogAccumulator::EMPTY;
            for (&w, &vj) in xi.row(i).iter().zip(v) {
                acc.push(w + vj);
            }
            acc.value()
        })
        .collect())
}

/// One step of the recursion, `Z' = Z ξ`.
pub fn step_recursion(z: &PartitionVector, xi: &EnvironmentMatrix) -> Result<PartitionVector> {
    Ok(PartitionVector { coords: left_mul(&z.coords, xi)? })
}

/// As [`step_recursion`] with `ξ` drawn on the fly, row by row, from
/// `sampler`. The matrix is never stored, so memory stays `O(n)`.
pub fn step_streaming<R: Rng>(z: &[f64], sampler: &WeightSampler, rng: &mut R) -> Vec<f64> {
    let mut acc = vec![LogAccumulator::EMPTY; z.len()];
    for &zi in z {
        for a in acc.iter_mut() {
            a.push(zi + sampler.sample_log(rng));
        }
    }
    acc.iter().map(|a| a.value()).collect()
}

/// Heights `Z(0..=t)` and `φ(s) = log ‖Z(s)‖_α`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub alpha: f64,
    pub z: Vec<PartitionVector>,
    pub phi: Vec<f64>,
}

impl Trajectory {
    pub fn t(&self) -> usize {
        self.z.len() - 1
    }

    /// `φ(s) - φ(s-1)` for `s = 1..=t`.
    pub fn increments(&self) -> Vec<f64> {
        self.phi.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `log Z(s, j) - φ(s-1)` for all `j`; `s ≥ 1`.
    pub fn centered_heights(&self, s: usize) -> Vec<f64> {
        assert!(s >= 1 && s <= self.t(), "time {s} outside 1..={}", self.t());
        self.z[s].as_slice().iter().map(|x| x - self.phi[s - 1]).collect()
    }

    /// α-simplex coordinates of `Z(s)`; with [`Self::phi`] they recompose
    /// `log Z(s, i) = φ(s) + log X(s, i)`.
    pub fn direction(&self, s: usize) -> SimplexPoint {
        let phi = self.phi[s];
        SimplexPoint { alpha: self.alpha, log_coords: self.z[s].as_slice().iter().map(|x| x - phi).collect() }
    }
}

/// Runs `t` steps of the recursion from `z0` (all-ones when `None`), drawing
/// each `ξ(s)` row-major from `rng`.
pub fn run_partition<R: Rng>(
    spec: &EnvSpec,
    n: usize,
    t: usize,
    alpha: f64,
    z0: Option<&PartitionVector>,
    rng: &mut R,
) -> Result<Trajectory> {
    if t < 1 {
        return Err(Error::param("t", "must be at least 1"));
    }
    if n < 2 {
        return Err(Error::param("n", format!("{n} < 2")));
    }
    check_alpha(alpha)?;
    let sampler = spec.sampler()?;
    let start = match z0 {
        Some(z) if z.n() != n => return Err(Error::DimensionMismatch { expected: n, got: z.n() }),
        Some(z) => z.clone(),
        None => PartitionVector::ones(n),
    };
    let mut phi = Vec::with_capacity(t + 1);
    phi.push(alpha_norm_log(&start, alpha)?);
    let mut z = Vec::with_capacity(t + 1);
    z.push(start);
    for _ in 0..t {
        let next = step_streaming(z.last().expect("nonempty").as_slice(), &sampler, rng);
        phi.push(alpha_norm_log_slice(&next, alpha)?);
        z.push(PartitionVector { coords: next });
    }
    Ok(Trajectory { alpha, z, phi })
}

/// Largest path count the enumeration oracle accepts.
pub const ORACLE_PATH_LIMIT: u128 = 10_000_000;

fn check_window(xis: &[EnvironmentMatrix], i: usize, j: usize, t: usize) -> Result<usize> {
    if t < 1 {
        return Err(Error::param("t", "must be at least 1"));
    }
    if xis.len() < t {
        return Err(Error::param("xis", format!("{} matrices supplied for t = {t}", xis.len())));
    }
    let n = xis[0].n();
    if let Some(m) = xis[..t].iter().find(|m| m.n() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: m.n() });
    }
    for idx in [i, j] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, n });
        }
    }
    Ok(n)
}

/// Log point-to-point partition function `log Z(0, i; t, j)` by enumerating
/// every path `i = j_0, j_1, …, j_t = j`. `xis[s - 1]` is `ξ(s)`.
pub fn p2p_bruteforce(xis: &[EnvironmentMatrix], i: usize, j: usize, t: usize) -> Result<f64> {
    let n = check_window(xis, i, j, t)?;
    let paths = (n as u128).checked_pow((t - 1) as u32).unwrap_or(u128::MAX);
    if paths > ORACLE_PATH_LIMIT {
        return Err(Error::OracleTooLarge { paths, limit: ORACLE_PATH_LIMIT });
    }
    let mut inner = vec![0usize; t - 1];
    let mut acc = LogAccumulator::EMPTY;
    loop {
        let mut prev = i;
        let mut w = 0.0;
        for (s, &site) in inner.iter().enumerate() {
            w += xis[s].log_entry(prev, site);
            prev = site;
        }
        w += xis[t - 1].log_entry(prev, j);
        acc.push(w);
        // odometer increment, last position fastest
        let mut k = inner.len();
        loop {
            if k == 0 {
                return Ok(acc.value());
            }
            k -= 1;
            inner[k] += 1;
            if inner[k] < n {
                break;
            }
            inner[k] = 0;
        }
    }
}

/// `log Π(t)_{i,j}` with `Π(t) = ξ(1) ⋯ ξ(t)`, by `t - 1` log-domain
/// vector-matrix products starting from row `i` of `ξ(1)`.
pub fn p2p_matrix(xis: &[EnvironmentMatrix], i: usize, j: usize, t: usize) -> Result<f64> {
    check_window(xis, i, j, t)?;
    let mut r = xis[0].row(i).to_vec();
    for xi in &xis[1..t] {
        r = left_mul(&r, xi)?;
    }
    Ok(r[j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::sample_environment;
    use crate::rng::derive_substream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn alpha_norm_examples() {
        let ones = PartitionVector::ones(4);
        assert_abs_diff_eq!(alpha_norm_log(&ones, 0.5).unwrap(), 16f64.ln(), epsilon = 1e-14);
        let v = PartitionVector::from_linear(&[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(alpha_norm_log(&v, 2.0).unwrap(), 5f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(
            alpha_norm_log(&v, 1.0).unwrap(),
            crate::logspace::log_sum_exp(v.as_slice()).unwrap(),
            epsilon = 1e-14
        );
        assert!(alpha_norm_log(&v, 0.0).is_err());
        assert!(alpha_norm_log(&v, -1.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let p = project_simplex(&PartitionVector::from_linear(&[2.0, 2.0]).unwrap(), 1.0).unwrap();
        for &x in p.log_coords() {
            assert_abs_diff_eq!(x, 0.5f64.ln(), epsilon = 1e-15);
        }
        let q = project_simplex(&PartitionVector::new(vec![0.0, 3f64.ln()]).unwrap(), 1.0).unwrap();
        assert_abs_diff_eq!(q.log_coords()[0], 0.25f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(q.log_coords()[1], 0.75f64.ln(), epsilon = 1e-15);
        let again = q.reproject(1.0).unwrap();
        for (a, b) in again.log_coords().iter().zip(q.log_coords()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        assert!(PartitionVector::new(vec![f64::NEG_INFINITY; 3]).is_err());
        assert!(project_log_coords(&[f64::NEG_INFINITY; 2], 1.0).is_err());
    }

    #[test]
    fn recursion_with_ones() {
        let xi = EnvironmentMatrix::ones(3).unwrap();
        let z = step_recursion(&PartitionVector::ones(3), &xi).unwrap();
        for &x in z.as_slice() {
            assert_abs_diff_eq!(x, 3f64.ln(), epsilon = 1e-15);
        }
        let mut rng = derive_substream(0, 0, "t");
        let tr = run_partition(&EnvSpec::ConstantOnes, 3, 7, 0.5, None, &mut rng).unwrap();
        for s in 0..=7 {
            for &x in tr.z[s].as_slice() {
                assert_abs_diff_eq!(x, s as f64 * 3f64.ln(), epsilon = 1e-12);
            }
            assert_abs_diff_eq!(tr.phi[s], (s as f64 + 2.0) * 3f64.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let xi = EnvironmentMatrix::ones(3).unwrap();
        assert!(matches!(
            step_recursion(&PartitionVector::ones(2), &xi),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn streaming_matches_stored_matrices() {
        let spec = EnvSpec::LogNormal { mu: 0.0, sigma: 1.0 };
        let tr = run_partition(&spec, 5, 4, 0.7, None, &mut derive_substream(1, 0, "t")).unwrap();
        let mut rng = derive_substream(1, 0, "t");
        let mut z = PartitionVector::ones(5);
        for s in 1..=4 {
            z = step_recursion(&z, &sample_environment(&spec, 5, &mut rng).unwrap()).unwrap();
            assert_eq!(z, tr.z[s]);
        }
    }

    #[test]
    fn decomposition_is_exact() {
        let spec = EnvSpec::Stable { alpha: 0.5 };
        let tr = run_partition(&spec, 6, 5, 0.5, None, &mut derive_substream(2, 0, "t")).unwrap();
        for s in 1..=5 {
            let x = tr.direction(s);
            assert!(x.defect().abs() < 1e-12);
            for (k, &lx) in x.log_coords().iter().enumerate() {
                assert_abs_diff_eq!(tr.phi[s] + lx, tr.z[s].as_slice()[k], epsilon = 1e-12);
            }
            let c = tr.centered_heights(s);
            for (k, &h) in c.iter().enumerate() {
                assert_abs_diff_eq!(h + tr.phi[s - 1], tr.z[s].as_slice()[k], epsilon = 1e-12);
            }
        }
        assert_eq!(tr.increments().len(), 5);
    }

    #[test]
    fn oracle_examples() {
        let ones = vec![EnvironmentMatrix::ones(2).unwrap(); 2];
        assert_abs_diff_eq!(p2p_bruteforce(&ones, 0, 1, 2).unwrap(), 2f64.ln(), epsilon = 1e-15);
        let mut rng = derive_substream(5, 0, "t");
        let xis: Vec<_> = (0..3)
            .map(|_| sample_environment(&EnvSpec::LogNormal { mu: 0.0, sigma: 1.0 }, 3, &mut rng).unwrap())
            .collect();
        assert_eq!(p2p_bruteforce(&xis, 1, 2, 1).unwrap(), xis[0].log_entry(1, 2));
        assert_eq!(p2p_matrix(&xis, 1, 2, 1).unwrap(), xis[0].log_entry(1, 2));
        let b = p2p_bruteforce(&xis, 2, 0, 3).unwrap();
        let m = p2p_matrix(&xis, 2, 0, 3).unwrap();
        assert_abs_diff_eq!(b, m, epsilon = 1e-12);
    }

    #[test]
    fn oracle_guard() {
        let xis = vec![EnvironmentMatrix::ones(10).unwrap(); 9];
        assert!(matches!(p2p_bruteforce(&xis, 0, 0, 9), Err(Error::OracleTooLarge { .. })));
        assert!(matches!(p2p_bruteforce(&xis, 0, 10, 2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn summed_oracle_matches_recursion() {
        let mut rng = derive_substream(8, 0, "t");
        let xis: Vec<_> = (0..3)
            .map(|_| sample_environment(&EnvSpec::Stable { alpha: 0.6 }, 2, &mut rng).unwrap())
            .collect();
        let mut z = PartitionVector::ones(2);
        for xi in &xis {
            z = step_recursion(&z, xi).unwrap();
        }
        for j in 0..2 {
            let per_start: Vec<f64> = (0..2).map(|i| p2p_bruteforce(&xis, i, j, 3).unwrap()).collect();
            assert_abs_diff_eq!(log_sum_exp_nonempty(&per_start), z.as_slice()[j], epsilon = 1e-12);
        }
    }
}
