use super::*;
use crate::ensembles::EnsembleSpec;

fn small(mode: Mode) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(EnsembleSpec::gaussian(30, 60, BetaField::REAL).unwrap(), 5, 200, 17);
    cfg.mode = mode;
    cfg.algorithms = vec![Algorithm::CgResidual, Algorithm::CgError, Algorithm::MinresResidual, Algorithm::CgneRelative];
    cfg.eps = Some(1e-2);
    cfg
}

#[test]
fn deterministic_across_workers() {
    for mode in [Mode::Full, Mode::Chi] {
        let mut a = small(mode);
        a.jobs = 1;
        let mut b = a.clone();
        b.jobs = 3;
        let (ta, tb) = (run_experiment(&a).unwrap(), run_experiment(&b).unwrap());
        assert_eq!(ta.rows.len(), tb.rows.len());
        for (x, y) in ta.rows.iter().zip(&tb.rows) {
            assert_eq!(x.sample_mean.to_bits(), y.sample_mean.to_bits());
            assert_eq!(x.rescaled_var.to_bits(), y.rescaled_var.to_bits());
        }
        assert_eq!(ta.halting, tb.halting);
    }
}

#[test]
fn halting_counts_sum_to_trials() {
    for mode in [Mode::Full, Mode::Chi] {
        let t = run_experiment(&small(mode)).unwrap();
        for alg in Algorithm::ALL {
            let hist = t.halting_histogram(alg);
            assert_eq!(hist.values().sum::<usize>(), 200);
            assert!(!hist.contains_key(&None));
        }
    }
}

#[test]
fn rows_are_consistent() {
    let t = run_experiment(&small(Mode::Full)).unwrap();
    let r0 = t.row(Algorithm::CgResidual, 0).unwrap();
    assert_eq!(r0.sample_mean, 1.0);
    assert_eq!(r0.stderr, 0.0);
    assert_eq!(r0.predicted_mean, 1.0);
    let r = t.row(Algorithm::CgneRelative, 0).unwrap();
    assert!((r.sample_mean - 1.0).abs() < 1e-12);
    for row in &t.rows {
        assert_eq!(row.trials, 200);
        assert!(row.sample_mean.is_finite() && row.stderr >= 0.0);
    }
}

#[test]
fn kept_traces_match_summary() {
    let mut cfg = small(Mode::Chi);
    cfg.keep_traces = true;
    let t = run_experiment(&cfg).unwrap();
    let xs = t.samples(Algorithm::MinresResidual, 3).unwrap();
    let (mean, var) = mean_var(&xs);
    let row = t.row(Algorithm::MinresResidual, 3).unwrap();
    assert_eq!(mean, row.sample_mean);
    assert_eq!((var / 200.0).sqrt(), row.stderr);
    let halts: Vec<_> = t.traces.as_ref().unwrap().iter().map(|tr| tr.halts[0]).collect();
    for (tr, h) in t.traces.unwrap().iter().zip(halts) {
        let k = h.unwrap();
        if k <= cfg.kmax {
            assert!(tr.stats[0][k].sqrt() < 1e-2);
        }
    }
}

#[test]
fn halting_is_first_crossing_in_full_mode() {
    let mut cfg = small(Mode::Full);
    cfg.kmax = 29;
    cfg.keep_traces = true;
    cfg.trials = 20;
    let t = run_experiment(&cfg).unwrap();
    for tr in t.traces.as_ref().unwrap() {
        for (i, _) in cfg.algorithms.iter().enumerate() {
            let first = tr.stats[i].iter().position(|v| v.sqrt() < 1e-2);
            assert_eq!(first, tr.halts[i]);
        }
    }
}

#[test]
fn validation_and_budget() {
    let mut cfg = small(Mode::Full);
    cfg.trials = 0;
    assert!(run_experiment(&cfg).unwrap_err().is_validation());
    let mut cfg = small(Mode::Full);
    cfg.budget_flops = 1e3;
    assert!(matches!(run_experiment(&cfg), Err(Error::BudgetExceeded { .. })));
    let mut cfg = small(Mode::Chi);
    cfg.ensemble = EnsembleSpec::new(EnsembleKind::Bernoulli, 30, 60, BetaField::REAL).unwrap();
    assert!(run_experiment(&cfg).is_err());
    let mut cfg = small(Mode::Chi);
    cfg.kmax = 30;
    assert!(run_experiment(&cfg).is_err());
    let mut cfg = small(Mode::Chi);
    cfg.algorithms.push(Algorithm::CgError);
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn complex_and_random_rhs_run() {
    let mut cfg = small(Mode::Full);
    cfg.ensemble = EnsembleSpec::gaussian(20, 30, BetaField::COMPLEX).unwrap();
    cfg.rhs = RhsKind::RandomUnit;
    cfg.trials = 20;
    let t = run_experiment(&cfg).unwrap();
    assert_eq!(t.rows.len(), 4 * 6);
}

#[test]
fn oracle_small_instances() {
    let spec = EnsembleSpec::gaussian(50, 100, BetaField::REAL).unwrap();
    let r = oracle_check(&spec, RhsKind::FirstBasis, 7, 1e-6).unwrap();
    assert!(r.max_rel() < 1e-6, "{r:?}");
    assert!(r.compared.iter().all(|&c| c > 5));
    let spec = EnsembleSpec::gaussian(40, 90, BetaField::COMPLEX).unwrap();
    let r = oracle_check(&spec, RhsKind::RandomUnit, 8, 1e-6).unwrap();
    assert!(r.max_rel() < 1e-6, "{r:?}");
}

#[test]
fn full_and_chi_modes_agree_in_mean() {
    let mut cfg = small(Mode::Full);
    cfg.eps = None;
    cfg.trials = 3000;
    let full = run_experiment(&cfg).unwrap();
    cfg.mode = Mode::Chi;
    cfg.seed += 1;
    let chi = run_experiment(&cfg).unwrap();
    for (a, b) in full.rows.iter().zip(&chi.rows) {
        let se = a.stderr.hypot(b.stderr);
        assert!((a.sample_mean - b.sample_mean).abs() <= 4.0 * se.max(1e-12), "{a:?} vs {b:?}");
    }
}
