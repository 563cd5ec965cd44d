use std::collections::{BTreeMap, HashSet};

use proptest::prelude::*;

use curriculum_core::aggregation::{dawid_skene, minmax_entropy, DawidSkeneConfig, MinmaxConfig};
use curriculum_core::curriculum::{bin_sizes, make_bins};
use curriculum_core::data::{random_split, AnnotationSet, LabelSpace};
use curriculum_core::difficulty::{criterion2_regression, Criterion, DifficultyScore, Task};
use curriculum_core::metrics::{ccc, macro_f1, one_tailed_t_test};

/// (item, worker, class) triples with unique (item, worker) pairs.
fn annotation_table(k: usize) -> impl Strategy<Value = Vec<(usize, usize, usize)>> {
    (2usize..8, 2usize..5).prop_flat_map(move |(n, m)| {
        prop::collection::vec(prop::option::weighted(0.8, 0..k), n * m).prop_map(move |cells| {
            let mut rows = Vec::new();
            for (idx, cell) in cells.into_iter().enumerate() {
                if let Some(c) = cell {
                    rows.push((idx / m, idx % m, c));
                }
            }
            if rows.is_empty() {
                rows.push((0, 0, 0));
            }
            rows
        })
    })
}

fn build(k: usize, rows: &[(usize, usize, usize)]) -> AnnotationSet {
    AnnotationSet::new(
        LabelSpace::with_classes(k).unwrap(),
        rows.iter()
            .map(|&(i, j, c)| (format!("i{i}"), format!("w{j}"), c as f64)),
    )
    .unwrap()
}

fn assert_row_stochastic(q: &ndarray::Array2<f64>) {
    for row in q.rows() {
        assert!((row.sum() - 1.0).abs() < 1e-9, "row sums to {}", row.sum());
        assert!(row.iter().all(|v| *v >= 0.0 && v.is_finite()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn posteriors_are_row_stochastic(rows in annotation_table(3)) {
        let ann = build(3, &rows);
        let ds = dawid_skene(&ann, DawidSkeneConfig::default()).unwrap();
        assert_row_stochastic(ds.consensus.posterior.as_ref().unwrap());
        let cfg = MinmaxConfig { outer_iters: 5, inner_iters: 5, ..MinmaxConfig::default() };
        let mm = minmax_entropy(&ann, cfg).unwrap();
        assert_row_stochastic(mm.consensus.posterior.as_ref().unwrap());
        for item in &mm.items {
            for sigma in mm.workers.sigma.as_ref().unwrap() {
                for c in 0..3 {
                    let p: f64 = item.conditional(sigma, c).iter().sum();
                    prop_assert!((p - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn dawid_skene_ignores_row_order(rows in annotation_table(3), rotate in 0usize..50) {
        let ann = build(3, &rows);
        let mut shuffled = rows.clone();
        let len = shuffled.len();
        shuffled.rotate_left(rotate % len);
        shuffled.reverse();
        let other = build(3, &shuffled);
        let a = dawid_skene(&ann, DawidSkeneConfig::default()).unwrap();
        let b = dawid_skene(&other, DawidSkeneConfig::default()).unwrap();
        let (qa, qb) = (a.consensus.posterior.unwrap(), b.consensus.posterior.unwrap());
        for (i, id) in ann.item_ids().iter().enumerate() {
            let j = other.item_index(id).unwrap();
            for c in 0..3 {
                prop_assert!((qa[[i, c]] - qb[[j, c]]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn random_split_partitions(n in 10usize..300, seed in any::<u64>()) {
        let ids: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let split = random_split(&ids, (0.6, 0.2, 0.2), seed).unwrap();
        let all: Vec<&String> = split.train.iter().chain(&split.dev).chain(&split.test).collect();
        let unique: HashSet<&String> = all.iter().copied().collect();
        prop_assert_eq!(all.len(), n);
        prop_assert_eq!(unique.len(), n);
        prop_assert_eq!(split.dev.len(), n * 2 / 10);
    }

    #[test]
    fn ccc_is_symmetric_and_bounded(
        xy in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
        offset in 0.1f64..5.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-6));
        let a = ccc(&x, &y).unwrap();
        let b = ccc(&y, &x).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!(a.abs() <= 1.0 + 1e-12);
        prop_assert!((ccc(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let shifted: Vec<f64> = x.iter().map(|v| v + offset).collect();
        prop_assert!(ccc(&x, &shifted).unwrap() < 1.0);
    }

    #[test]
    fn macro_f1_is_invariant_to_relabelling(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60),
        perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let (pred, truth): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let f = macro_f1(&pred, &truth, 4).unwrap();
        let p2: Vec<usize> = pred.iter().map(|&c| perm[c]).collect();
        let t2: Vec<usize> = truth.iter().map(|&c| perm[c]).collect();
        prop_assert!((f - macro_f1(&p2, &t2, 4).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn swapping_t_test_samples_complements_p(
        a in prop::collection::vec(0.0f64..1.0, 2..12),
        b in prop::collection::vec(0.0f64..1.0, 2..12),
    ) {
        let ab = one_tailed_t_test(&a, &b).unwrap();
        let ba = one_tailed_t_test(&b, &a).unwrap();
        prop_assert!((ab.p_value + ba.p_value - 1.0).abs() < 1e-9);
        prop_assert_eq!(ab.significant, ab.p_value <= 0.05);
    }

    #[test]
    fn disagreement_ignores_a_common_shift(rows in annotation_table(6)) {
        // Ordinal levels 1..=6 shifted to 2..=7.
        let space = LabelSpace::ordinal(7).unwrap();
        let make = |shift: f64| {
            AnnotationSet::new(
                space.clone(),
                rows.iter().map(|&(i, j, c)| (format!("i{i}"), format!("w{j}"), c as f64 + 1.0 + shift)),
            )
            .unwrap()
        };
        let a = criterion2_regression(&make(0.0)).unwrap();
        let b = criterion2_regression(&make(1.0)).unwrap();
        for (id, v) in &a.scores {
            prop_assert!((v - b.scores[id]).abs() < 1e-9);
        }
    }

    #[test]
    fn bins_partition_in_difficulty_order(
        scores in prop::collection::vec(0.0f64..1.0, 1..80),
        n_bins in 1usize..8,
    ) {
        prop_assume!(n_bins <= scores.len());
        let map: BTreeMap<String, f64> =
            scores.iter().enumerate().map(|(i, s)| (format!("x{i:03}"), *s)).collect();
        let ids: Vec<String> = map.keys().cloned().collect();
        let difficulty = DifficultyScore { criterion: Criterion::C2Disagreement, task: Task::Multiclass, scores: map };
        let bins = make_bins(&difficulty, &ids, n_bins).unwrap();
        let sizes: Vec<usize> = bins.iter().map(Vec::len).collect();
        prop_assert_eq!(&sizes, &bin_sizes(ids.len(), n_bins));
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1] && w[0] - w[1] <= 1));
        let order: Vec<f64> = bins.iter().flatten().map(|id| difficulty.get(id).unwrap()).collect();
        prop_assert!(order.windows(2).all(|w| w[0] <= w[1]));
    }
}
