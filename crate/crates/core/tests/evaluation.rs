use std::time::Instant;

use rfsel_core::evaluation::*;
use rfsel_core::rng::{self, stream};
use rfsel_core::selectors::*;
use rfsel_core::*;

struct WallClock(Instant);

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

fn labelled(n: usize, p: usize, seed: u64, copy: bool) -> Dataset {
    let mut r = stream(seed, 600, 0);
    let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let cols = (0..p)
        .map(|f| (0..n).map(|i| if copy && f == 0 { y[i] as f64 } else { rng::standard_normal(&mut r) }).collect())
        .collect();
    Dataset::new(cols, y, vec!["a".into(), "b".into()], (0..p).map(|f| format!("g{f}")).collect()).unwrap()
}

fn matrix_from(p: usize, selections: Vec<Vec<usize>>) -> SelectionMatrix {
    let reps = selections
        .into_iter()
        .enumerate()
        .map(|(r, s)| Replicate {
            resample: replicate_resample(10, 0, r).unwrap(),
            selection: Selection::from_selected(p, &s, 1),
        })
        .collect();
    SelectionMatrix::new(p, reps).unwrap()
}

fn boruta_ferns() -> SelectorConfig {
    SelectorConfig::Boruta {
        source: ImportanceSource::ferns(2, 300),
        params: BorutaParams { max_iter: 30, ..Default::default() },
    }
}

#[test]
fn two_replicates_find_separating_feature() {
    let d = labelled(40, 15, 1, true);
    let m = run_bootstrap_experiment(&d, &boruta_ferns(), 2, 7, &NullClock).unwrap();
    assert_eq!(m.n_replicates(), 2);
    assert!(m.is_selected(0, 0) && m.is_selected(1, 0));
    assert!(run_bootstrap_experiment(&d, &boruta_ferns(), 1, 7, &NullClock).is_err());
}

#[test]
fn experiment_is_deterministic() {
    let d = labelled(40, 15, 2, true);
    let a = run_bootstrap_experiment(&d, &boruta_ferns(), 4, 3, &NullClock).unwrap();
    let b = run_bootstrap_experiment(&d, &boruta_ferns(), 4, 3, &NullClock).unwrap();
    assert_eq!(a, b);
}

#[test]
fn replicate_failure_names_the_replicate() {
    let d = labelled(20, 3, 3, false);
    let rfe = SelectorConfig::Rfe { source: ImportanceSource::ferns(1, 10), params: RfeParams::default() };
    match run_bootstrap_experiment(&d, &rfe, 3, 1, &NullClock) {
        Err(Error::Replicate { index, .. }) => assert_eq!(index, 0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn timing_sums_to_experiment_total() {
    let d = labelled(60, 200, 4, true);
    let sel = SelectorConfig::Boruta {
        source: ImportanceSource::forest(ForestMeasure::Raw, 100),
        params: BorutaParams { max_iter: 10, ..Default::default() },
    };
    let clock = WallClock(Instant::now());
    let start = clock.now();
    let m = run_bootstrap_experiment(&d, &sel, 3, 5, &clock).unwrap();
    let total = clock.now() - start;
    assert!(m.replicates().iter().all(|r| r.selection.wall_clock > 0.0));
    assert!((m.total_seconds() - total).abs() <= 0.05 * total, "{} vs {total}", m.total_seconds());
}

#[test]
fn constant_selector_is_fully_consistent() {
    let m = matrix_from(100, vec![vec![3, 14, 15, 92, 65]; 30]);
    let s = scs_analysis(&m, 0.01).unwrap();
    assert_eq!(s.scs_set, vec![3, 14, 15, 65, 92]);
    assert_eq!((s.c, s.f, s.ratio), (5.0, 5.0, 1.0));
}

#[test]
fn random_selector_has_no_consistent_features() {
    let (p, b, rate) = (100, 30, 0.1);
    let mut total = 0;
    for trial in 0..50u64 {
        let mut r = stream(trial, 601, 0);
        let sels = (0..b).map(|_| (0..p).filter(|_| rng::unit(&mut r) < rate).collect()).collect();
        total += scs_analysis(&matrix_from(p, sels), 0.01).unwrap().scs_set.len();
    }
    assert!((total as f64 / 50.0) < 0.2, "mean |scs| {}", total as f64 / 50.0);
}

#[test]
fn scs_properties() {
    let mut r = stream(9, 602, 0);
    for _ in 0..40 {
        let p = 30;
        let sels: Vec<Vec<usize>> = (0..12)
            .map(|_| {
                let rate = rng::unit(&mut r);
                (0..p).filter(|&g| rng::unit(&mut r) < rate * (1.0 - g as f64 / p as f64)).collect()
            })
            .collect();
        let m = matrix_from(p, sels.clone());
        let s = scs_analysis(&m, 0.01).unwrap();
        assert!(s.c <= s.f && (0.0..=1.0).contains(&s.ratio));
        let counts = m.selection_counts();
        assert!(s.scs_set.iter().all(|&g| counts[g] >= 1));
        let mut reversed = sels.clone();
        reversed.reverse();
        let s_rev = scs_analysis(&matrix_from(p, reversed), 0.01).unwrap();
        assert_eq!((s.scs_set.clone(), s.c, s.f), (s_rev.scs_set, s_rev.c, s_rev.f));
        let wider = scs_analysis(&m, 0.2).unwrap();
        assert!(s.scs_set.iter().all(|g| wider.scs_set.contains(g)));
    }
    let empty = scs_analysis(&matrix_from(5, vec![vec![]; 4]), 0.01).unwrap();
    assert!(empty.scs_set.is_empty() && empty.c == 0.0 && empty.f == 0.0);
}

fn errors_for(d: &Dataset, selected: &[usize], seed: u64) -> Vec<Option<f64>> {
    let validation = ForestParams::with_trees(100);
    (0..30)
        .map(|r| {
            let resample = replicate_resample(d.n_objects(), 1, r).unwrap();
            replicate_error(d, &resample, selected, &validation, seed, r).unwrap()
        })
        .collect()
}

#[test]
fn post_selection_error_examples() {
    let d = labelled(60, 30, 5, true);
    let copy = errors_for(&d, &[0], 1);
    assert!(copy.iter().flatten().all(|&e| e == 0.0));

    let noise: Vec<usize> = (1..30).collect();
    let report = ErrorReport { method: "noise".into(), errors: errors_for(&d, &noise, 1) };
    assert!((report.mean() - 0.5).abs() <= 0.1, "{}", report.mean());

    let none = errors_for(&d, &[], 1);
    assert!(none.iter().flatten().all(|&e| (0.0..=1.0).contains(&e)));
}

#[test]
fn all_features_match_full_baseline() {
    let d = labelled(60, 30, 6, false);
    let mut cols = d.columns().to_vec();
    let y: Vec<f64> = d.labels().iter().map(|&l| l as f64).collect();
    cols[0] = cols[0].iter().zip(&y).map(|(x, l)| x + 1.5 * l).collect();
    let d = Dataset::new(cols, d.labels().to_vec(), d.classes().to_vec(), d.feature_names().to_vec()).unwrap();
    let all: Vec<usize> = (0..30).collect();
    let reports = [
        ErrorReport { method: "selected-all".into(), errors: errors_for(&d, &all, 1) },
        ErrorReport { method: "baseline".into(), errors: errors_for(&d, &all, 2) },
    ];
    let cmp = compare_methods(&reports, 0.01).unwrap();
    assert!(cmp.iter().all(|c| !c.significantly_worse), "{cmp:?}");
}

#[test]
fn interleaved_methods_are_equivalent() {
    let mut r = stream(7, 603, 0);
    let base: Vec<f64> = (0..30).map(|_| 0.2 + 0.05 * rng::standard_normal(&mut r)).collect();
    let a: Vec<Option<f64>> = base.iter().enumerate().map(|(i, e)| Some(e + if i % 2 == 0 { 0.01 } else { 0.0 })).collect();
    let b: Vec<Option<f64>> = base.iter().enumerate().map(|(i, e)| Some(e + if i % 2 == 1 { 0.01 } else { 0.0 })).collect();
    let cmp = compare_methods(&[ErrorReport { method: "a".into(), errors: a }, ErrorReport { method: "b".into(), errors: b }], 0.01)
        .unwrap();
    assert!(cmp.iter().all(|c| !c.significantly_worse));
    assert_eq!(cmp.iter().filter(|c| c.best).count(), 1);
}

#[test]
fn unpaired_reports_rejected() {
    let a = ErrorReport { method: "a".into(), errors: vec![Some(0.1), None, Some(0.2)] };
    let b = ErrorReport { method: "b".into(), errors: vec![Some(0.1), Some(0.3), Some(0.2)] };
    assert!(matches!(compare_methods(&[a, b], 0.01), Err(Error::Unpaired(_))));
}
