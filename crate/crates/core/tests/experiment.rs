use voroscape::experiment::{run_experiment, run_trial, ExperimentKind, ExperimentResult, ExperimentSpec};
use voroscape::pointproc::trial_seed;

fn run_with_threads(spec: &ExperimentSpec, threads: usize) -> ExperimentResult {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| run_experiment(spec).unwrap())
}

#[test]
fn results_do_not_depend_on_the_worker_count() {
    for spec in [
        ExperimentSpec::path(2, 500.0, 0.3, 8, 3),
        ExperimentSpec::scape(3, 2, 1000.0, 0.2, 4, 3),
        ExperimentSpec::mixedvol(2, 1, 500.0, 0.4, 4, 3),
        ExperimentSpec::moments(2, 4, 1, 1000, 4, 3),
    ] {
        let a = run_with_threads(&spec, 1);
        let b = run_with_threads(&spec, 3);
        let bits = |r: &ExperimentResult| r.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b), "{:?}", spec.kind);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.reports, b.reports);
    }
}

#[test]
fn any_trial_replays_alone() {
    let spec = ExperimentSpec::path(2, 500.0, 0.3, 6, 11);
    let full = run_experiment(&spec).unwrap();
    assert_eq!(full.trial_seeds, (0..6).map(|i| trial_seed(11, i)).collect::<Vec<_>>());
    for i in [0, 5, 2] {
        assert_eq!(run_trial(&spec, i).unwrap().value.to_bits(), full.values[i].to_bits());
    }
}

#[test]
fn result_json_carries_the_spec_and_seeds() {
    let spec = ExperimentSpec::mixedvol(2, 1, 500.0, 0.4, 3, 21);
    let r = run_experiment(&spec).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    assert_eq!(v["spec"]["kind"], "mixedvol");
    assert_eq!(v["spec"]["seed"], 21);
    assert_eq!(v["trial_seeds"].as_array().unwrap().len(), 3);
    assert_eq!(v["predicted"], 1.0);
    let rep = &v["reports"][0];
    for key in ["d", "p", "R", "sum_interior", "sum_boundary", "predicted", "ratio", "n_cells", "n_boundary", "seed"] {
        assert!(!rep[key].is_null(), "missing {key}");
    }
    assert_eq!(rep["seed"], trial_seed(21, 0));
    let back: ExperimentResult = serde_json::from_value(v).unwrap();
    assert_eq!(back.spec.kind, ExperimentKind::Mixedvol);
    assert_eq!(back.values, r.values);
}

#[test]
fn z_score_needs_two_trials() {
    let one = run_experiment(&ExperimentSpec::path(2, 500.0, 0.3, 1, 4)).unwrap();
    assert!(one.stderr.is_none() && one.z.is_none());
    assert!(one.passes(4.0));
    let two = run_experiment(&ExperimentSpec::path(2, 500.0, 0.3, 2, 4)).unwrap();
    assert!(two.z.unwrap().is_finite());
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(run_experiment(&ExperimentSpec::path(2, 500.0, 0.3, 0, 1)).is_err());
    // segment longer than the core window
    assert!(run_experiment(&ExperimentSpec::path(2, 500.0, 0.95, 2, 1)).is_err());
    assert!(run_experiment(&ExperimentSpec::scape(3, 3, 500.0, 0.3, 2, 1)).is_err());
    let mut s = ExperimentSpec::path(2, 500.0, 0.3, 2, 1);
    s.margin = 0.0;
    assert!(run_experiment(&s).is_err());
}

#[test]
fn trivial_moments_are_exact() {
    let r = run_experiment(&ExperimentSpec::moments(3, 3, 2, 1000, 2, 1)).unwrap();
    assert_eq!(r.mean, 1.0);
    assert_eq!(r.stderr, Some(0.0));
}
