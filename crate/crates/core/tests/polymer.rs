use polymer_core::env::{sample_environment, Environment, SeededEnvironment, TableEnvironment};
use polymer_core::polymer::{
    covariant_law, finite_horizon_transition, infinite_kernel, infinite_transition, sample_polymer_path, TransitionKernel,
};
use polymer_core::projective::{contraction_log_coeff, LimitOptions};
use polymer_core::{derive_substream, EnvSpec};

/// Sum of path weights from site `k` at time `t` through `l` at `t+1` to any
/// endpoint at `horizon`, by enumerating every path.
fn path_mass(env: &dyn Environment, t: i64, horizon: i64, k: usize, l: usize) -> f64 {
    fn rec(env: &dyn Environment, s: i64, horizon: i64, site: usize, w: f64) -> f64 {
        if s == horizon {
            return w;
        }
        let xi = env.matrix(s + 1);
        (0..env.n()).map(|j| rec(env, s + 1, horizon, j, w * xi.log_entry(site, j).exp())).sum()
    }
    let w = env.matrix(t + 1).log_entry(k, l).exp();
    rec(env, t + 1, horizon, l, w)
}

#[test]
fn transition_rows_match_path_enumeration() {
    for seed in 0..10u64 {
        for n in [2usize, 3] {
            let mut rng = derive_substream(seed, n as u64, "paths");
            let mats = (0..4).map(|_| sample_environment(&EnvSpec::LogNormal { mu: 0.0, sigma: 1.0 }, n, &mut rng).unwrap()).collect();
            let env = TableEnvironment::new(1, mats).unwrap();
            for horizon in 1..=4i64 {
                for t in 0..horizon {
                    for k in 0..n {
                        let masses: Vec<f64> = (0..n).map(|l| path_mass(&env, t, horizon, k, l)).collect();
                        let total: f64 = masses.iter().sum();
                        let row = finite_horizon_transition(&env, t, horizon, k).unwrap().probs();
                        for (p, m) in row.iter().zip(&masses) {
                            assert!((p - m / total).abs() <= 1e-12, "seed {seed} n {n} T {horizon} t {t}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn finite_rows_converge_within_contraction_product() {
    let n = 5;
    for seed in 0..5 {
        let env = SeededEnvironment::new(EnvSpec::Stable { alpha: 0.5 }, n, seed).unwrap();
        let inf = infinite_transition(&env, 0, 1, LimitOptions::with_tol(1e-14)).unwrap();
        let exact = inf.row.log_probs.clone();
        for horizon in 2..=25i64 {
            // rows differ only through Z(1, ·; T, ⋆) ∈ ξ(2)⋯ξ(T)·cone, so their
            // Hilbert spread is bounded by that of the product's columns
            let log_c: f64 = (2..=horizon).map(|s| contraction_log_coeff(&env.matrix(s))).sum();
            let d_bound = log_c.exp() + inf.bound;
            let row = finite_horizon_transition(&env, 0, horizon, 1).unwrap();
            let h = row.log_probs.iter().zip(&exact).map(|(a, b)| a - b).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
            let d = ((h.1 - h.0) / 2.0).tanh();
            assert!(d <= d_bound + 1e-12, "seed {seed} T {horizon}: {d} > {d_bound}");
        }
    }
}

#[test]
fn sampled_paths_have_the_covariant_marginals() {
    let n = 4;
    let env = SeededEnvironment::new(EnvSpec::LogNormal { mu: 0.0, sigma: 1.0 }, n, 8).unwrap();
    let opts = LimitOptions::with_tol(1e-12);
    let steps = 6i64;
    let kernels: Vec<TransitionKernel> = (0..steps).map(|t| infinite_kernel(&env, t, opts).unwrap().0).collect();
    let nu0 = covariant_law(&env, 0, opts).unwrap();
    let paths = 20_000;
    let mut counts = vec![0usize; n];
    let mut rng = derive_substream(8, 0, "paths");
    for _ in 0..paths {
        let p = sample_polymer_path(&kernels, &nu0.probs, 0, &mut rng).unwrap();
        counts[p.sites[steps as usize]] += 1;
    }
    let nu = covariant_law(&env, steps, opts).unwrap();
    for (c, p) in counts.iter().zip(&nu.probs) {
        let freq = *c as f64 / paths as f64;
        let se = (p * (1.0 - p) / paths as f64).sqrt();
        assert!((freq - p).abs() <= 4.0 * se + 1e-9, "{freq} vs {p}");
    }
}
