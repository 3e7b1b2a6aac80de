use decay_erw::exact::MomentTable;
use decay_erw::model::StepWeights;
use decay_erw::montecarlo::{
    run_ensemble, simulate_trial, EnsembleConfig, EnsembleStats, Observables, SeedSpec,
};
use decay_erw::ModelParams;

const TRIPLES: [(f64, f64, f64); 6] = [
    (0.0, 0.0, 0.3),
    (0.3, 1.0, 0.5),
    (0.5, -0.5, 0.25),
    (0.8, 0.4, 0.6),
    (-0.6, 0.7, 1.0),
    (1.0, 0.0, 0.9),
];

#[test]
fn sample_moments_match_exact_moments() {
    let cps = [10, 100, 1_000, 5_000];
    for (i, (a, b, g)) in TRIPLES.into_iter().enumerate() {
        let p = ModelParams::new(a, b, g).unwrap();
        let cfg = EnsembleConfig::new(p, 5_000, 20_000, 40 + i as u64).with_checkpoints(&cps);
        let res = run_ensemble(&cfg).unwrap();
        let exact = MomentTable::compute(&p, &cps);
        for (c, row) in res.checkpoints.iter().zip(&exact.rows) {
            let ctx = format!("({a}, {b}, {g}) n = {}", c.n);
            assert!((c.t.mean - row.mean_t).abs() <= 4.0 * c.t.std_error(), "T mean {ctx}");
            assert!((c.s.mean - row.mean_s).abs() <= 4.0 * c.s.std_error(), "S mean {ctx}");
            assert!(
                (c.s.variance() - row.var_s()).abs() <= 4.0 * c.s.variance_std_error(),
                "S var {ctx}: {} vs {}",
                c.s.variance(),
                row.var_s()
            );
        }
    }
}

#[test]
fn trials_are_reproducible_in_isolation() {
    let p = ModelParams::new(0.4, 0.1, 0.45).unwrap();
    let cps = [50, 700];
    let cfg = EnsembleConfig::new(p, 700, 150, 77)
        .with_checkpoints(&cps)
        .with_observables(Observables {
            decomposition: false,
            per_trial: true,
        });
    let res = run_ensemble(&cfg).unwrap();
    let table = StepWeights::new(&p, 700);
    for rec in res.trials.as_ref().unwrap().iter().rev().step_by(13) {
        let alone = simulate_trial(&p, &table, &cps, SeedSpec::new(77, rec.trial), None);
        assert_eq!(alone, rec.snapshots);
    }
    // a longer run is the same trials plus more
    let more = run_ensemble(&EnsembleConfig { trials: 300, ..cfg.clone() }).unwrap();
    assert_eq!(&more.trials.unwrap()[..150], &res.trials.unwrap()[..]);
}

#[test]
fn folding_order_does_not_matter() {
    let p = ModelParams::new(0.6, 0.0, 0.35).unwrap();
    let cfg = EnsembleConfig::new(p, 2_000, 500, 8).with_observables(Observables {
        decomposition: false,
        per_trial: true,
    });
    let res = run_ensemble(&cfg).unwrap();
    let values: Vec<f64> = res.trials.unwrap().iter().map(|r| r.snapshots[0].s).collect();
    let forward = EnsembleStats::from_slice(&values);
    let mut parts: Vec<EnsembleStats> = values.chunks(37).map(EnsembleStats::from_slice).collect();
    parts.reverse();
    let folded = parts.iter().fold(EnsembleStats::new(), |acc, s| s.merge(&acc));
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
    assert_eq!(forward.count, folded.count);
    assert!(rel(forward.mean, folded.mean) <= 1e-9);
    assert!(rel(forward.m2, folded.m2) <= 1e-9);
    assert_eq!(res.checkpoints[0].s.count, 500);
    assert!(rel(res.checkpoints[0].s.m2, forward.m2) <= 1e-9);
}
