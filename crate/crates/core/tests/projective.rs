use polymer_core::env::{sample_environment, Environment, SeededEnvironment};
use polymer_core::partition::{project_log_coords, right_mul};
use polymer_core::projective::{
    chain_step, contraction_coeff, contraction_log_coeff, forward_limit, proj_distance, proj_distance_log,
    sampled_contraction, LimitOptions,
};
use polymer_core::rng::par_replicas;
use polymer_core::stats::ks_two_sample;
use polymer_core::{derive_substream, EnvSpec, EnvironmentMatrix, SimplexPoint};
use proptest::prelude::*;

const N: usize = 4;

fn log_point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-8.0f64..8.0, N)
}

fn matrix() -> impl Strategy<Value = EnvironmentMatrix> {
    prop::collection::vec(-4.0f64..4.0, N * N).prop_map(|m| EnvironmentMatrix::from_log_entries(N, m).unwrap())
}

fn simplex(v: &[f64]) -> SimplexPoint {
    project_log_coords(v, 1.0).unwrap()
}

proptest! {
    #[test]
    fn metric_axioms(x in log_point(), y in log_point(), z in log_point()) {
        let dxy = proj_distance_log(&x, &y);
        prop_assert!((0.0..=1.0).contains(&dxy));
        prop_assert_eq!(proj_distance_log(&x, &x), 0.0);
        prop_assert_eq!(dxy, proj_distance_log(&y, &x));
        let via = proj_distance_log(&x, &z) + proj_distance_log(&z, &y);
        prop_assert!(dxy <= via + 1e-12, "{dxy} > {via}");
    }

    #[test]
    fn distance_dominates_euclidean(x in log_point(), y in log_point()) {
        let (px, py) = (simplex(&x), simplex(&y));
        let e: f64 = px.linear().iter().zip(py.linear()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!(e <= 2.0 * proj_distance(&px, &py) + 1e-12);
    }

    #[test]
    fn positive_matrices_contract(g in matrix(), x in log_point(), y in log_point()) {
        let c = contraction_coeff(&g);
        prop_assert!(c < 1.0 || contraction_log_coeff(&g) < 0.0);
        let gx = right_mul(&g, &x).unwrap();
        let gy = right_mul(&g, &y).unwrap();
        prop_assert!(proj_distance_log(&gx, &gy) <= c * proj_distance_log(&x, &y) + 1e-12);
    }
}

#[test]
fn vertex_pairs_attain_the_contraction_coefficient() {
    let mut rng = derive_substream(11, 0, "vertex");
    for spec in [EnvSpec::LogNormal { mu: 0.0, sigma: 1.0 }, EnvSpec::Stable { alpha: 0.5 }] {
        for _ in 0..50 {
            let g = sample_environment(&spec, N, &mut rng).unwrap();
            let sampled = sampled_contraction(&g, 200, &mut rng).unwrap();
            assert!(sampled <= contraction_coeff(&g) + 1e-12);
        }
    }
}

#[test]
fn products_approach_the_limit_within_the_certified_bound() {
    for seed in 0..5 {
        let env = SeededEnvironment::new(EnvSpec::LogNormal { mu: 0.0, sigma: 1.0 }, N, seed).unwrap();
        let lim = forward_limit(&env, 0, 1.0, LimitOptions::with_tol(1e-14)).unwrap();
        let mut rng = derive_substream(seed, 1, "start");
        for t in 1..=20i64 {
            let v: Vec<f64> = (0..N).map(|_| rand::Rng::random_range(&mut rng, -5.0..5.0)).collect();
            let mut w = v;
            let mut log_bound = 0.0;
            for s in (1..=t).rev() {
                let xi = env.matrix(s);
                w = right_mul(&xi, &w).unwrap();
                log_bound += contraction_log_coeff(&xi);
            }
            let d = proj_distance_log(&w, lim.point.log_coords());
            assert!(d <= log_bound.exp() + lim.bound + 1e-12, "seed {seed} t {t}: {d} > {}", log_bound.exp());
        }
    }
}

#[test]
fn chains_from_different_starts_share_one_invariant_law() {
    let spec = EnvSpec::LogNormal { mu: 0.0, sigma: 1.0 };
    let run = |start: Vec<f64>, label: &str| -> Vec<f64> {
        par_replicas(21, label, 400, |_, rng| {
            let mut x = simplex(&start);
            for _ in 0..30 {
                x = chain_step(&x, &sample_environment(&spec, N, rng).unwrap()).unwrap();
            }
            x.linear()[0]
        })
    };
    let a = run(vec![0.0; N], "uniform");
    let b = run(vec![10.0, -10.0, -10.0, -10.0], "vertex");
    assert!(ks_two_sample(&a, &b, 0.05).unwrap().pass);
}
