mod common;

use std::collections::{BTreeSet, HashMap};

use caliper_core::binning::{bin_stats, compute_edges, histogram, BinSpec};
use caliper_core::dataset::{
    ingest_features, ingest_predictions, project_class_view, write_labels_csv, write_probs_csv, Cell, ClassView,
    ViewMode,
};
use caliper_core::metrics::{accuracy, brier_score, confusion_matrix, ece, log_loss, mce};
use caliper_core::selection::{filter_by_predicate, FeatureConstraint, SubgroupPredicate};
use caliper_core::synth::age_subgroup_fixture;
use common::*;
use proptest::prelude::*;

fn view_strategy(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = ClassView> {
    proptest::collection::vec((0.0f64..=1.0, any::<bool>()), n).prop_map(|pairs| {
        let (s, o) = pairs.into_iter().unzip();
        ClassView::from_scores(s, o).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn classwise_scores_sum_to_one(m in model_strategy(1..=40, 2..=6)) {
        let views: Vec<ClassView> = (0..m.classes())
            .map(|i| project_class_view(&m, ViewMode::ClassWise(i)).unwrap())
            .collect();
        for j in 0..m.n() {
            let s: f64 = views.iter().map(|v| v.scores[j]).sum();
            prop_assert!((s - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn confidence_accuracy_is_argmax_accuracy(m in model_strategy(1..=40, 2..=6)) {
        let v = project_class_view(&m, ViewMode::Confidence).unwrap();
        let direct = (0..m.n())
            .filter(|&j| naive_argmax(m.row(j)) == m.labels()[j])
            .count() as f64 / m.n() as f64;
        prop_assert_eq!(accuracy(&v).unwrap(), direct);
        let all: Vec<usize> = (0..m.n()).collect();
        let cm = confusion_matrix(&m, &all).unwrap();
        prop_assert!((accuracy(&v).unwrap() - cm.trace() as f64 / m.n() as f64).abs() <= 1e-12);
    }

    #[test]
    fn prediction_csv_round_trip(m in model_strategy(1..=30, 2..=5)) {
        let (mut p, mut l) = (Vec::new(), Vec::new());
        write_probs_csv(&mut p, m.probs(), m.classes()).unwrap();
        write_labels_csv(&mut l, m.labels()).unwrap();
        let back = ingest_predictions(p.as_slice(), l.as_slice()).unwrap();
        prop_assert_eq!(back.labels.as_slice(), m.labels());
        for (a, b) in back.probs.iter().zip(m.probs()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn feature_csv_round_trip(
        rows in proptest::collection::vec((-1e6f64..1e6, 0usize..3, -5i32..5), 1..30)
    ) {
        let cats = ["red", "green", "blue"];
        let mut text = String::from("x,colour,k\n");
        for (x, c, k) in &rows {
            text.push_str(&format!("{x},{},{k}\n", cats[*c]));
        }
        let t = ingest_features(text.as_bytes(), &HashMap::new()).unwrap();
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        let back = ingest_features(out.as_slice(), &HashMap::new()).unwrap();
        prop_assert_eq!(back.column_names(), t.column_names());
        prop_assert_eq!(back.column_kinds(), t.column_kinds());
        for j in 0..t.n_rows() {
            for c in 0..t.n_columns() {
                match (t.cell(j, c), back.cell(j, c)) {
                    (Cell::Number(a), Cell::Number(b)) => prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0)),
                    (a, b) => prop_assert_eq!(a, b),
                }
            }
        }
    }

    #[test]
    fn strategies_share_global_means(v in view_strategy(1..=60), w in 1usize..=12) {
        let n = v.len() as f64;
        let ms = mean(&v.scores);
        let mo = v.outcome_values().sum::<f64>() / n;
        for spec in [BinSpec::uniform(w).unwrap(), BinSpec::quantile(w).unwrap()] {
            let d = bin_stats(&v, spec).unwrap();
            let s: f64 = d.bins.iter().map(|b| b.count as f64 * b.conf).sum::<f64>() / n;
            let a: f64 = d.bins.iter().map(|b| b.count as f64 * b.acc).sum::<f64>() / n;
            prop_assert!((s - ms).abs() <= 1e-12);
            prop_assert!((a - mo).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_bin_is_the_global_mean(v in view_strategy(1..=60)) {
        let d = bin_stats(&v, BinSpec::uniform(1).unwrap()).unwrap();
        prop_assert_eq!(d.bins.len(), 1);
        let n = v.len() as f64;
        prop_assert_eq!(d.bins[0].conf, v.scores.iter().sum::<f64>() / n);
        prop_assert_eq!(d.bins[0].acc, v.outcome_values().sum::<f64>() / n);
        let e = ((v.scores.iter().sum::<f64>() / n) - (v.outcome_values().sum::<f64>() / n)).abs();
        prop_assert_eq!(ece(&d), e);
    }

    #[test]
    fn merging_doubled_bins_recovers_coarse_bins(v in view_strategy(1..=60), w in 1usize..=20) {
        let coarse = bin_stats(&v, BinSpec::uniform(w).unwrap()).unwrap();
        let fine = bin_stats(&v, BinSpec::uniform(2 * w).unwrap()).unwrap();
        let mut merged: Vec<(usize, f64, f64)> = Vec::new();
        for pair in 0..w {
            let parts: Vec<_> = fine.bins.iter().filter(|b| {
                let k = (b.lo * (2 * w) as f64).round() as usize;
                k / 2 == pair
            }).collect();
            let c: usize = parts.iter().map(|b| b.count).sum();
            if c > 0 {
                let conf = parts.iter().map(|b| b.count as f64 * b.conf).sum::<f64>() / c as f64;
                let acc = parts.iter().map(|b| b.count as f64 * b.acc).sum::<f64>() / c as f64;
                merged.push((c, conf, acc));
            }
        }
        prop_assert_eq!(merged.len(), coarse.bins.len());
        for (m, b) in merged.iter().zip(&coarse.bins) {
            prop_assert_eq!(m.0, b.count);
            prop_assert!((m.1 - b.conf).abs() <= 1e-12);
            prop_assert!((m.2 - b.acc).abs() <= 1e-12);
        }
    }

    #[test]
    fn ece_bounded_by_mce(v in view_strategy(1..=60), w in 1usize..=15, quantile in any::<bool>()) {
        let spec = if quantile { BinSpec::quantile(w) } else { BinSpec::uniform(w) }.unwrap();
        let d = bin_stats(&v, spec).unwrap();
        let (e, m) = (ece(&d), mce(&d));
        prop_assert!(e <= m + 1e-15);
        prop_assert!((0.0..=1.0).contains(&e) && (0.0..=1.0).contains(&m));
        prop_assert!((e - naive_ece(&v.scores, &v.outcomes, &d.edges)).abs() <= 1e-12);
        prop_assert!((m - naive_mce(&v.scores, &v.outcomes, &d.edges)).abs() <= 1e-12);
    }

    #[test]
    fn scoring_rules_match_naive_loops(m in model_strategy(1..=50, 2..=5)) {
        let k = m.classes();
        prop_assert!((brier_score(m.probs(), m.labels()) - naive_brier(m.probs(), m.labels(), k)).abs() <= 1e-12);
        prop_assert!((log_loss(m.probs(), m.labels()) - naive_log_loss(m.probs(), m.labels(), k)).abs() <= 1e-12);
        let all: Vec<usize> = (0..m.n()).collect();
        prop_assert_eq!(confusion_matrix(&m, &all).unwrap().counts, naive_confusion(m.probs(), m.labels(), k));
    }

    #[test]
    fn histogram_over_any_partition_counts_everything(
        v in view_strategy(1..=80),
        cuts in proptest::collection::vec(0.0f64..1.0, 0..12),
    ) {
        let mut inner: Vec<f64> = cuts.into_iter().filter(|c| *c > 0.0).collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        let mut edges = vec![0.0];
        edges.extend(inner);
        edges.push(1.0);
        let counts = histogram(&v.scores, &edges).unwrap();
        prop_assert_eq!(counts.iter().sum::<usize>(), v.len());
    }

    #[test]
    fn quantile_edges_are_strictly_increasing(v in view_strategy(1..=60), w in 1usize..=30) {
        let e = compute_edges(&v.scores, BinSpec::quantile(w).unwrap());
        prop_assert_eq!(e[0], 0.0);
        prop_assert_eq!(*e.last().unwrap(), 1.0);
        prop_assert!(e.windows(2).all(|p| p[0] < p[1]));
        prop_assert!(e.len() <= w + 1);
    }
}

fn predicate_strategy() -> impl Strategy<Value = Vec<FeatureConstraint>> {
    let age = (10.0f64..80.0, 0.0f64..40.0).prop_map(|(lo, span)| FeatureConstraint::range("age", lo, lo + span));
    let sex = proptest::sample::subsequence(vec!["M", "F"], 1..=2).prop_map(|c| FeatureConstraint::categories("sex", c));
    (proptest::option::of(age), proptest::option::of(sex))
        .prop_map(|(a, s)| a.into_iter().chain(s).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conjunction_is_intersection(a in predicate_strategy(), b in predicate_strategy(), seed in 0u64..1000) {
        // a conjunction may constrain each column at most once
        let (table, _) = age_subgroup_fixture(300, seed).unwrap();
        let cols_a: BTreeSet<&str> = a.iter().map(|c| c.column.as_str()).collect();
        prop_assume!(b.iter().all(|c| !cols_a.contains(c.column.as_str())));
        let pa = SubgroupPredicate::new("a", a.clone());
        let pb = SubgroupPredicate::new("b", b.clone());
        let both = SubgroupPredicate::new("ab", a.into_iter().chain(b).collect());
        let ra: BTreeSet<usize> = filter_by_predicate(&table, &pa).unwrap().into_iter().collect();
        let rb: BTreeSet<usize> = filter_by_predicate(&table, &pb).unwrap().into_iter().collect();
        let rab = filter_by_predicate(&table, &both).unwrap();
        let expected: Vec<usize> = ra.intersection(&rb).copied().collect();
        prop_assert_eq!(rab, expected);
    }
}
