use decay_erw::exact::{
    asymptotic_m2_t, exact_t_distribution, gamma_factors, limit_mean_s, mean_s, mean_t,
    second_moment_t, ExactError,
};
use decay_erw::regime::gamma_c;
use decay_erw::ModelParams;
use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;

/// `Γ(n+α) / (Γ(n) Γ(1+α))`, valid for α > −1.
fn gamma_ratio(alpha: f64, n: usize) -> f64 {
    let n = n as f64;
    (ln_gamma(n + alpha) - ln_gamma(n) - ln_gamma(1.0 + alpha)).exp()
}

#[test]
fn product_factors_match_gamma_ratio() {
    for i in 1..=40 {
        let alpha = -1.0 + i as f64 / 20.0;
        let a = gamma_factors(alpha, 50);
        for n in 1..=50 {
            let expected = gamma_ratio(alpha, n);
            let rel = (a.get(n) - expected).abs() / expected.abs();
            assert!(rel <= 1e-10, "alpha {alpha} n {n}: {} vs {expected}", a.get(n));
        }
    }
}

#[test]
fn distribution_moments_match_recursion() {
    for alpha in [-1.0, -0.5, 0.0, 0.4, 0.5, 0.75, 1.0] {
        for beta in [-1.0, 0.3, 1.0] {
            let p = ModelParams::new(alpha, beta, 0.5).unwrap();
            for n in (1..=200).step_by(7) {
                let d = exact_t_distribution(&p, n);
                assert!((d.total() - 1.0).abs() <= 1e-12);
                assert!((d.mean() - mean_t(&p, n)).abs() <= 1e-12, "{alpha} {beta} {n}");
                let m2 = second_moment_t(&p, n);
                assert!((d.second_moment() - m2).abs() <= 1e-12 * m2.max(1.0), "{alpha} {beta} {n}");
            }
        }
    }
}

#[test]
fn second_moment_ratio_moves_toward_one() {
    for alpha in [0.2, 0.5, 0.75] {
        let p = ModelParams::new(alpha, 0.0, 1.0).unwrap();
        let ratio = |n| second_moment_t(&p, n) / asymptotic_m2_t(alpha, n);
        let (r5, r6) = (ratio(100_000), ratio(1_000_000));
        assert!((r6 - 1.0).abs() < (r5 - 1.0).abs(), "alpha {alpha}: {r5} -> {r6}");
    }
}

#[test]
fn limit_outside_convergent_regime_is_rejected() {
    let p = ModelParams::new(0.8, 1.0, 0.7).unwrap();
    assert!(matches!(
        limit_mean_s(&p, 1e-8),
        Err(ExactError::NotConvergentRegime { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partial_means_settle_on_the_limit(
        alpha in -1.0f64..=1.0,
        beta in -1.0f64..=1.0,
        excess in 0.1f64..1.0,
    ) {
        let gamma = gamma_c(alpha) + excess;
        let p = ModelParams::new(alpha, beta, gamma).unwrap();
        let limit = limit_mean_s(&p, 1e-9).unwrap();
        let tail = |n: u64| (mean_s(&p, n) - limit.value).abs();
        // the gap to the limit is O(n^(α−γ)), so it shrinks and the
        // successive partial means agree ever more closely
        let (a, b, c) = (mean_s(&p, 1_000), mean_s(&p, 10_000), mean_s(&p, 100_000));
        prop_assert!((c - b).abs() <= (b - a).abs() + 1e-12);
        let bound = 2.0 * (alpha * beta).abs() * 100_000f64.powf(alpha.max(0.0) - gamma) / (gamma - alpha.max(0.0))
            + limit.tail_bound + 1e-9;
        prop_assert!(tail(100_000) <= bound, "gap {} bound {}", tail(100_000), bound);
    }
}
