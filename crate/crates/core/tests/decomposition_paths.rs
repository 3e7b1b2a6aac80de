use decay_erw::decomposition::{remainder_bound, variations, Decomposition};
use decay_erw::exact::MomentRecursion;
use decay_erw::model::{draw_step, simulate_path, StepObserver};
use decay_erw::montecarlo::{run_ensemble, EnsembleConfig, Observables, SeedSpec};
use decay_erw::{ModelParams, Step, WalkState};
use proptest::prelude::*;
use rand::Rng;

fn params(a: f64, b: f64, g: f64) -> ModelParams {
    ModelParams::new(a, b, g).unwrap()
}

#[test]
fn decomposition_identity_over_a_million_steps() {
    for (i, p) in [params(0.9, 0.1, 0.3), params(-0.6, 0.5, 0.7), params(0.5, -1.0, 0.5)]
        .into_iter()
        .enumerate()
    {
        let mut dec = Decomposition::with_bound(p, remainder_bound(&p));
        let mut rng = SeedSpec::new(31, i as u64).rng();
        let end = simulate_path(&p, 1_000_000, &mut rng, &[1_000_000], &mut dec)[0];
        assert!(dec.max_identity_gap <= 1e-9, "{p:?}: {}", dec.max_identity_gap);
        assert!((end.s - dec.m - dec.a).abs() <= 1e-9);
        assert_eq!(dec.violations, 0);
        assert!(dec.max_resid22_gap <= 1e-9);
    }
}

#[test]
fn remainder_stays_within_its_bound() {
    let p = params(0.6, 0.4, 0.8);
    let bound = remainder_bound(&p);
    for trial in 0..20 {
        let mut dec = Decomposition::with_bound(p, bound);
        let mut rng = SeedSpec::new(32, trial).rng();
        simulate_path(&p, 100_000, &mut rng, &[], &mut dec);
        assert!(dec.checked_r().is_ok());
        assert!(dec.max_abs_r <= bound);
    }
}

#[test]
fn expected_variation_matches_exact_moments() {
    let p = params(0.7, 0.3, 0.4);
    let n = 5_000u64;
    // Σ E[d_k²] with E[e_k²] = α² E[T_{k−1}²] / (k−1)² taken from the moment recursion
    let mut rows = MomentRecursion::new(p);
    let mut expected = 0.0;
    for k in 1..=n {
        let prev = rows.row();
        rows.step();
        let w2 = p.step_weight(k).powi(2);
        let e2 = if k == 1 {
            p.beta().powi(2)
        } else {
            p.alpha().powi(2) * prev.m2_t / ((k - 1) as f64).powi(2)
        };
        expected += (1.0 - e2) * w2;
    }
    let mut rng = SeedSpec::new(33, 0).rng();
    let mut path = Vec::new();
    struct Record<'a>(&'a mut Vec<Step>);
    impl StepObserver for Record<'_> {
        fn observe(&mut self, _: &WalkState, x: Step, _: f64, _: &WalkState) {
            self.0.push(x);
        }
    }
    simulate_path(&p, n, &mut rng, &[], &mut Record(&mut path));
    let s2 = variations(&p, &path, &[n])[0].s2;
    assert!((s2 - expected).abs() <= 1e-10 * expected, "{s2} vs {expected}");
}

#[test]
fn predictable_variation_tracks_its_deterministic_scale() {
    let p = params(0.3, 0.0, 0.25);
    let n = 100_000u64;
    let scale: f64 = (1..=n).rev().map(|k| (k as f64).powf(-0.5)).sum();
    for trial in 0..100 {
        let mut dec = Decomposition::with_bound(p, f64::INFINITY);
        let mut rng = SeedSpec::new(34, trial).rng();
        simulate_path(&p, n, &mut rng, &[], &mut dec);
        let ratio = dec.v2 / scale;
        assert!((0.95..=1.05).contains(&ratio), "trial {trial}: {ratio}");
    }
}

#[test]
fn martingale_variance_settles_when_steps_decay_fast() {
    let p = params(0.3, 0.0, 0.8);
    let cfg = EnsembleConfig::new(p, 100_000, 10_000, 35)
        .with_checkpoints(&[10_000, 100_000])
        .with_observables(Observables {
            decomposition: true,
            per_trial: false,
        });
    let res = run_ensemble(&cfg).unwrap();
    let var = |i: usize| res.checkpoints[i].decomp.unwrap().m.variance();
    let (early, late) = (var(0), var(1));
    assert!(early > 0.0 && late > 0.0);
    assert!((late / early - 1.0).abs() <= 0.1, "{early} -> {late}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn variations_are_nonnegative_and_nondecreasing(
        alpha in -1.0f64..=1.0,
        beta in -1.0f64..=1.0,
        gamma in 0.05f64..2.0,
        seed in any::<u64>(),
    ) {
        let p = params(alpha, beta, gamma);
        let mut path = Vec::new();
        let mut state = WalkState::origin();
        let mut rng = SeedSpec::new(seed, 0).rng();
        for k in 1..=400u64 {
            let x = draw_step(&p, &state, rng.random());
            state = state.push(x, p.step_weight(k));
            path.push(x);
        }
        let cps: Vec<u64> = (1..=400).collect();
        let triples = variations(&p, &path, &cps);
        for w in triples.windows(2) {
            prop_assert!(w[0].s2 >= 0.0 && w[0].v2 >= 0.0 && w[0].u2 >= 0.0);
            prop_assert!(w[1].s2 >= w[0].s2 && w[1].v2 >= w[0].v2 && w[1].u2 >= w[0].u2);
        }
    }
}
