use polymer_core::partition::{
    alpha_norm_log, p2p_bruteforce, p2p_matrix, run_partition, step_recursion,
};
use polymer_core::{derive_substream, EnvSpec, EnvironmentMatrix, PartitionVector};
use proptest::prelude::*;

fn matrices(n: usize, count: usize) -> impl Strategy<Value = Vec<EnvironmentMatrix>> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, n * n), count)
        .prop_map(move |ms| ms.into_iter().map(|m| EnvironmentMatrix::from_log_entries(n, m).unwrap()).collect())
}

fn window() -> impl Strategy<Value = (usize, usize, Vec<EnvironmentMatrix>)> {
    (2usize..=3, 1usize..=4).prop_flat_map(|(n, t)| (Just(n), Just(t), matrices(n, t)))
}

proptest! {
    #[test]
    fn matrix_product_matches_path_enumeration((n, t, xis) in window(), i in 0usize..3, j in 0usize..3) {
        let (i, j) = (i % n, j % n);
        let a = p2p_matrix(&xis, i, j, t).unwrap();
        let b = p2p_bruteforce(&xis, i, j, t).unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn shift_commutes_with_recursion(
        z in prop::collection::vec(-20.0f64..20.0, 3),
        c in -50.0f64..50.0,
        xi in matrices(3, 1),
    ) {
        let z = PartitionVector::new(z).unwrap();
        let a = step_recursion(&z.shifted(c), &xi[0]).unwrap();
        let b = step_recursion(&z, &xi[0]).unwrap().shifted(c);
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn height_splits_into_norm_and_direction(seed in any::<u64>(), alpha in 0.1f64..1.0) {
        let traj = run_partition(&EnvSpec::LogNormal { mu: 0.0, sigma: 2.0 }, 5, 6, alpha, None, &mut derive_substream(seed, 0, "d")).unwrap();
        for s in 0..=traj.t() {
            prop_assert_eq!(traj.phi[s], alpha_norm_log(&traj.z[s], alpha).unwrap());
            let x = traj.direction(s);
            for (h, l) in traj.z[s].as_slice().iter().zip(x.log_coords()) {
                prop_assert!((traj.phi[s] + l - h).abs() <= 1e-12 * (1.0 + h.abs()));
            }
            prop_assert!(x.defect().abs() <= 1e-12);
        }
    }
}

#[test]
fn oracle_agreement_on_seeded_windows() {
    for seed in 0..20u64 {
        for n in [2usize, 3] {
            for t in [2usize, 3, 4] {
                let mut rng = derive_substream(seed, (n * 10 + t) as u64, "oracle");
                let xis: Vec<_> = (0..t)
                    .map(|_| polymer_core::env::sample_environment(&EnvSpec::Stable { alpha: 0.5 }, n, &mut rng).unwrap())
                    .collect();
                for i in 0..n {
                    for j in 0..n {
                        let a = p2p_matrix(&xis, i, j, t).unwrap();
                        let b = p2p_bruteforce(&xis, i, j, t).unwrap();
                        assert!((a - b).abs() <= 1e-9, "seed {seed} n {n} t {t}: {a} vs {b}");
                    }
                }
            }
        }
    }
}

#[test]
fn all_ones_heights_are_powers_of_n() {
    for n in [2usize, 3, 7] {
        let traj = run_partition(&EnvSpec::ConstantOnes, n, 40, 1.0, None, &mut derive_substream(0, 0, "ones")).unwrap();
        for (s, z) in traj.z.iter().enumerate() {
            for h in z.as_slice() {
                assert!((h - s as f64 * (n as f64).ln()).abs() <= 1e-12 * (1.0 + h.abs()));
            }
        }
    }
}
