use polymer_core::rng::par_replicas;
use polymer_core::stable::{levy_half_cdf, sample_stable, stable_cdf, u_alpha, StableParams};
use polymer_core::stats::{ks_coefficient, ks_one_sample, ks_statistic};
use proptest::prelude::*;

#[test]
fn sampler_agrees_with_cdf() {
    for (k, alpha) in [0.3, 0.5, 0.7].into_iter().enumerate() {
        let p = StableParams::new(alpha).unwrap();
        let draws: Vec<f64> = par_replicas(k as u64, "sampler-cdf", 100, |_, r| (0..1000).map(|_| sample_stable(&p, r)).collect::<Vec<_>>()).concat();
        let d = ks_statistic(&draws, |x| stable_cdf(x, &p).unwrap()).unwrap();
        let crit = ks_coefficient(0.01).unwrap() / (draws.len() as f64).sqrt();
        assert!(d < crit, "alpha {alpha}: D = {d}, critical {crit}");
    }
}

#[test]
fn half_sampler_agrees_with_closed_form() {
    let p = StableParams::new(0.5).unwrap();
    let draws: Vec<f64> = par_replicas(99, "levy", 100, |_, r| (0..1000).map(|_| sample_stable(&p, r)).collect::<Vec<_>>()).concat();
    assert!(ks_one_sample(&draws, levy_half_cdf, 0.01).unwrap().pass);
}

#[test]
fn normalized_sums_are_stable() {
    for alpha in [0.3, 0.5, 0.7] {
        let p = StableParams::new(alpha).unwrap();
        let n = 100usize;
        let scale = (n as f64).powf(-1.0 / alpha);
        let sums = par_replicas(7, "scaling", 3000, |_, r| scale * (0..n).map(|_| sample_stable(&p, r)).sum::<f64>());
        let ks = ks_one_sample(&sums, |x| stable_cdf(x, &p).unwrap(), 0.01).unwrap();
        assert!(ks.pass, "alpha {alpha}: {ks:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn front_limit_is_decreasing(alpha in 0.05f64..0.95, y in -30.0f64..30.0, dy in 0.01f64..5.0) {
        let p = StableParams::new(alpha).unwrap();
        let a = u_alpha(y, &p).unwrap();
        let b = u_alpha(y + dy, &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b <= a);
    }
}

#[test]
fn front_limit_end_values() {
    for alpha in [0.3, 0.5, 0.7] {
        let p = StableParams::new(alpha).unwrap();
        assert!(u_alpha(-200.0, &p).unwrap() > 1.0 - 1e-10);
        assert!(u_alpha(200.0, &p).unwrap() < 1e-10);
    }
}
