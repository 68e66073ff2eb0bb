use confpred::classifiers::{fit, ClassifierSpec, ProbabilisticClassifier, ProbabilityVector};
use confpred::conformal::{
    calibrate, combine_ip_m, score, CalibrationTable, IpMPredictor, NonconformityKind, PredictionSet, SignificanceLevel,
};
use confpred::dataset::{make_splits, Dataset, SplitPlan};
use confpred::evaluation::{build_matrix, FoldResult, Metric, NcfId, Sign};
use confpred::metrics::{avg_c, effective_one_c, empirical_error, one_c, pearson_correlation, BatchOutcome, MetricRecord};
use proptest::prelude::*;

fn labelled_points(n_classes: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    prop::collection::vec((prop::collection::vec(-5.0f64..5.0, 2), 0..n_classes), 8..40)
        .prop_map(|pairs| pairs.into_iter().unzip())
}

fn dataset(n_classes: usize) -> impl Strategy<Value = Dataset> {
    labelled_points(n_classes).prop_map(move |(rows, labels)| {
        let names = (0..n_classes).map(|c| c.to_string()).collect();
        Dataset::new(rows, labels, names).unwrap()
    })
}

fn prob_vector(n: usize) -> impl Strategy<Value = ProbabilityVector> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter_map("all zero", |w| {
        let total: f64 = w.iter().sum();
        (total > 0.0).then(|| ProbabilityVector::new(w.iter().map(|v| v / total).collect()).ok())?
    })
}

fn all_specs() -> [ClassifierSpec; 3] {
    [ClassifierSpec::knn(), ClassifierSpec::gnb(), ClassifierSpec::dtree()]
}

fn sample_set(n_classes: usize) -> impl Strategy<Value = PredictionSet> {
    prop::collection::btree_set(0..n_classes, 0..=n_classes).prop_map(PredictionSet::from_labels)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn splits_partition_every_instance(
        counts in prop::collection::vec(5usize..30, 2..5),
        folds in 2usize..6,
        repeats in 1usize..3,
        fraction in 0.1f64..0.5,
        seed in any::<u64>(),
    ) {
        let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
        let rows = labels.iter().map(|&l| vec![l as f64]).collect();
        let names = (0..counts.len()).map(|c| c.to_string()).collect();
        let data = Dataset::new(rows, labels.clone(), names).unwrap();
        let plan = SplitPlan::new(repeats, folds, fraction, seed).unwrap();
        let splits = make_splits(&data, &plan).unwrap();
        prop_assert_eq!(splits.len(), repeats * folds);

        for repeat in 0..repeats {
            let mut tested = vec![0usize; data.len()];
            for s in splits.iter().filter(|s| s.repeat == repeat) {
                let mut all: Vec<usize> = s.proper_train_idx.iter().chain(&s.calibration_idx).chain(&s.test_idx).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..data.len()).collect::<Vec<_>>());
                prop_assert!(!s.calibration_idx.is_empty() && !s.proper_train_idx.is_empty());
                for &i in &s.test_idx {
                    tested[i] += 1;
                }
                // Every class has within one test instance of its share.
                for (c, &n) in counts.iter().enumerate() {
                    let in_test = s.test_idx.iter().filter(|&&i| labels[i] == c).count() as f64;
                    prop_assert!((in_test - n as f64 / folds as f64).abs() < 1.0 + 1e-9);
                }
            }
            prop_assert!(tested.iter().all(|&t| t == 1));
        }
    }

    #[test]
    fn classifiers_output_probability_vectors(data in dataset(3), x in prop::collection::vec(-6.0f64..6.0, 2)) {
        let idx: Vec<usize> = (0..data.len()).collect();
        for spec in all_specs() {
            let model = fit(&spec, data.view(&idx)).unwrap();
            let p = model.predict_proba(&x).unwrap();
            prop_assert_eq!(p.n_classes(), 3);
            prop_assert!(p.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn knn_ignores_training_order(
        (rows, labels) in labelled_points(3),
        perm_seed in any::<u64>(),
        x in prop::collection::vec(-6.0f64..6.0, 2),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let names: Vec<String> = (0..3).map(|c| c.to_string()).collect();
        let data = Dataset::new(rows.clone(), labels.clone(), names.clone()).unwrap();
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
        let shuffled = Dataset::new(
            order.iter().map(|&i| rows[i].clone()).collect(),
            order.iter().map(|&i| labels[i]).collect(),
            names,
        ).unwrap();

        // Skip queries whose k-th and (k+1)-th neighbours are equidistant.
        let mut d: Vec<f64> = rows.iter().map(|r| (r[0] - x[0]).powi(2) + (r[1] - x[1]).powi(2)).collect();
        d.sort_by(f64::total_cmp);
        prop_assume!(d.len() <= 5 || d[4] != d[5]);

        let idx: Vec<usize> = (0..rows.len()).collect();
        let a = fit(&ClassifierSpec::knn(), data.view(&idx)).unwrap().predict_proba(&x).unwrap();
        let b = fit(&ClassifierSpec::knn(), shuffled.view(&idx)).unwrap().predict_proba(&x).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn gnb_is_translation_invariant(
        data in dataset(3),
        shift in prop::collection::vec(-20.0f64..20.0, 2),
        x in prop::collection::vec(-6.0f64..6.0, 2),
    ) {
        let idx: Vec<usize> = (0..data.len()).collect();
        let moved = Dataset::new(
            (0..data.len()).map(|i| data.row(i).iter().zip(&shift).map(|(v, s)| v + s).collect()).collect(),
            data.labels().to_vec(),
            data.class_names().to_vec(),
        ).unwrap();
        let x_moved: Vec<f64> = x.iter().zip(&shift).map(|(v, s)| v + s).collect();
        let a = fit(&ClassifierSpec::gnb(), data.view(&idx)).unwrap().predict_proba(&x).unwrap();
        let b = fit(&ClassifierSpec::gnb(), moved.view(&idx)).unwrap().predict_proba(&x_moved).unwrap();
        for (pa, pb) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((pa - pb).abs() < 1e-6, "{:?} vs {:?}", a, b);
        }
    }

    #[test]
    fn p_values_lie_in_range_and_decrease(
        scores in prop::collection::vec(-1.0f64..1.0, 1..50),
        s1 in -1.5f64..1.5,
        s2 in -1.5f64..1.5,
    ) {
        let q = scores.len() as f64;
        let table = CalibrationTable::new(scores).unwrap();
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let (p_lo, p_hi) = (table.p_value(lo), table.p_value(hi));
        prop_assert!(p_lo >= p_hi);
        for p in [p_lo, p_hi] {
            prop_assert!(p >= 1.0 / (q + 1.0) && p <= 1.0);
        }
    }

    #[test]
    fn sets_shrink_as_epsilon_grows(
        cal in prop::collection::vec(prob_vector(4), 5..30),
        cal_labels in prop::collection::vec(0usize..4, 30),
        probs in prob_vector(4),
    ) {
        for kind in [NonconformityKind::InverseProbability, NonconformityKind::Margin] {
            let table = CalibrationTable::new(
                cal.iter().zip(&cal_labels).map(|(p, &y)| score(kind, p, y).unwrap()).collect(),
            ).unwrap();
            let p_values: Vec<f64> = (0..4).map(|y| table.p_value(score(kind, &probs, y).unwrap())).collect();
            let sets: Vec<PredictionSet> = SignificanceLevel::default_grid()
                .into_iter()
                .map(|e| PredictionSet::from_p_values(&p_values, e))
                .collect();
            for w in sets.windows(2) {
                prop_assert!(w[1].is_subset(&w[0]));
            }
        }
    }

    #[test]
    fn ip_m_is_never_less_efficient(ip in sample_set(4), m in sample_set(4)) {
        let combined = combine_ip_m(ip.clone(), m.clone());
        prop_assert!(combined.is_singleton() || !ip.is_singleton());
        if ip.is_singleton() {
            prop_assert_eq!(&combined, &ip);
        }
        if !ip.is_empty() {
            prop_assert!(combined.len() <= ip.len());
        }
    }

    #[test]
    fn binary_margin_and_hinge_sets_coincide(
        cal in prop::collection::vec(0.0f64..=1.0, 1..40),
        cal_labels in prop::collection::vec(0usize..2, 40),
        p0 in 0.0f64..=1.0,
    ) {
        let pv = |p: f64| ProbabilityVector::new(vec![p, 1.0 - p]).unwrap();
        let p_values = |kind| {
            let table = CalibrationTable::new(
                cal.iter().zip(&cal_labels).map(|(&p, &y)| score(kind, &pv(p), y).unwrap()).collect(),
            ).unwrap();
            (0..2).map(|y| table.p_value(score(kind, &pv(p0), y).unwrap())).collect::<Vec<f64>>()
        };
        let ip = p_values(NonconformityKind::InverseProbability);
        let m = p_values(NonconformityKind::Margin);
        for e in SignificanceLevel::default_grid() {
            prop_assert_eq!(PredictionSet::from_p_values(&ip, e), PredictionSet::from_p_values(&m, e));
        }
    }

    #[test]
    fn metrics_stay_in_bounds(
        sets in prop::collection::vec(sample_set(3), 1..40),
        truths in prop::collection::vec(0usize..3, 40),
    ) {
        let truths = truths[..sets.len()].to_vec();
        let batch = BatchOutcome::new(sets, truths, 3).unwrap();
        prop_assert!((0.0..=1.0).contains(&one_c(&batch)));
        prop_assert!((0.0..=3.0).contains(&avg_c(&batch)));
        prop_assert!((0.0..=1.0).contains(&empirical_error(&batch)));
        match effective_one_c(&batch) {
            Some(e) => prop_assert!((0.0..=1.0).contains(&e)),
            None => prop_assert_eq!(one_c(&batch), 0.0),
        }
    }

    #[test]
    fn pearson_is_affine_invariant(
        pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..30),
        a in 0.5f64..5.0,
        b in -10.0f64..10.0,
    ) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let base = pearson_correlation(&xs, &ys);
        let scaled: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        match (base, pearson_correlation(&scaled, &ys)) {
            (Some(r), Some(s)) => {
                prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&r));
                prop_assert!((r - s).abs() < 1e-6);
            }
            (None, None) => {}
            (r, s) => prop_assert!(false, "{:?} vs {:?}", r, s),
        }
    }

    #[test]
    fn comparison_matrices_are_antisymmetric(values in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 2..12)) {
        let mut results = Vec::new();
        for (fold, v) in values.iter().enumerate() {
            for (ncf, x) in NcfId::ALL.into_iter().zip([v.0, v.1, v.2]) {
                results.push(FoldResult {
                    dataset: "d".into(),
                    classifier: "c".into(),
                    ncf,
                    epsilon: 0.1,
                    repeat: 0,
                    fold,
                    n_test: 10,
                    metrics: MetricRecord { err: 0.1, one_c: x, avg_c: 1.0 + 2.0 * x, e_one_c: None, n_singletons: 0 },
                });
            }
        }
        for metric in [Metric::OneC, Metric::AvgC] {
            let m = build_matrix(&results, metric, 3).unwrap();
            for r in NcfId::ALL {
                prop_assert_eq!(m.cell(r, r).sign, None);
                for c in NcfId::ALL {
                    let (a, b) = (m.cell(r, c), m.cell(c, r));
                    prop_assert_eq!(a.starred, b.starred);
                    match a.sign {
                        Some(Sign::Plus) => prop_assert_eq!(b.sign, Some(Sign::Minus)),
                        Some(Sign::Minus) => prop_assert_eq!(b.sign, Some(Sign::Plus)),
                        None => prop_assert_eq!(b.sign, None),
                    }
                }
            }
        }
    }
}

#[test]
fn calibrated_predictors_nest_on_real_models() {
    let data = confpred::dataset::generate_synthetic(0.8, 60, 11).unwrap();
    let plan = SplitPlan::new(1, 3, 0.3, 5).unwrap();
    let split = &make_splits(&data, &plan).unwrap()[0];
    for spec in all_specs() {
        let model = fit(&spec, data.view(&split.proper_train_idx)).unwrap();
        let ip = calibrate(&model, NonconformityKind::InverseProbability, data.view(&split.calibration_idx)).unwrap();
        let joint = IpMPredictor::calibrate(&model, data.view(&split.calibration_idx)).unwrap();
        for &i in &split.test_idx {
            let grid = SignificanceLevel::default_grid();
            let ip_sets: Vec<_> = grid.iter().map(|&e| ip.predict_set(data.row(i), e).unwrap()).collect();
            assert!(ip_sets.windows(2).all(|w| w[1].is_subset(&w[0])));
            for (&e, ip_set) in grid.iter().zip(&ip_sets) {
                let combined = joint.predict(data.row(i), e).unwrap();
                assert!(combined.is_singleton() || !ip_set.is_singleton());
            }
        }
    }
}
