//! Aggregators and metrics against values computed by independent scripts.

use curriculum_core::aggregation::{dawid_skene, minmax_entropy, DawidSkeneConfig, MinmaxConfig};
use curriculum_core::data::{AnnotationSet, LabelSpace};
use curriculum_core::metrics::spearman;

/// Rows are items, columns workers, -1 marks a missing label.
fn table(k: usize, labels: &[&[i64]]) -> AnnotationSet {
    let mut rows = Vec::new();
    for (i, row) in labels.iter().enumerate() {
        for (j, &l) in row.iter().enumerate() {
            if l >= 0 {
                rows.push((format!("i{i}"), format!("w{j}"), l as f64));
            }
        }
    }
    AnnotationSet::new(LabelSpace::with_classes(k).unwrap(), rows).unwrap()
}

fn sparse_table() -> AnnotationSet {
    table(
        3,
        &[
            &[0, 0, 1, -1],
            &[1, -1, 1, 2],
            &[2, 2, -1, 0],
            &[0, 1, 0, 0],
            &[1, 2, 2, -1],
            &[-1, 0, 0, 1],
            &[2, -1, 1, 2],
            &[1, 1, 0, 1],
        ],
    )
}

#[test]
fn dawid_skene_two_iterations_on_sparse_table() {
    #[rustfmt::skip]
    let expected = [
        [0.8635323399933761, 0.13646766000585758, 7.66258328837278e-13],
        [5.7603465449858976e-08, 0.32221119196735515, 0.6777887504291793],
        [0.0010758612661270104, 0.0004818604446127281, 0.9984422782892602],
        [0.9892698725072109, 0.01073012749278905, 2.5297522349166397e-19],
        [3.362739944125543e-09, 0.006772343821473003, 0.9932276528157871],
        [0.620433995265545, 0.3795660047344551, 4.474834714659901e-19],
        [2.009491051674613e-08, 0.03537650658933293, 0.9646234733157565],
        [0.09028795730172691, 0.9097120426982731, 4.105110053858973e-19],
    ];
    let fit = dawid_skene(
        &sparse_table(),
        DawidSkeneConfig {
            max_iter: 2,
            tol: 1e-300,
        },
    )
    .unwrap();
    assert_eq!(fit.iterations, 2);
    let q = fit.consensus.posterior.unwrap();
    for (i, row) in expected.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            assert!((q[[i, c]] - v).abs() < 1e-10, "Q[{i},{c}] = {} vs {v}", q[[i, c]]);
        }
    }
}

#[test]
fn dawid_skene_thirty_iterations_on_sparse_table() {
    #[rustfmt::skip]
    let expected = [
        [0.9999999999983333, 9.99999526355859e-13, 6.666667101749912e-13],
        [5.624985484323049e-13, 5.624993773525305e-13, 0.999999999998875],
        [7.499979572725938e-13, 7.49998138558942e-19, 0.9999999999992499],
        [0.999999999999, 1.0000020361400296e-12, 1.111113260816883e-19],
        [3.749992734392469e-19, 7.499987010537977e-13, 0.9999999999992499],
        [1.0180706536459484e-06, 0.9999989819293463, 2.2222215216483664e-19],
        [5.624986788903859e-13, 5.62498814854165e-19, 0.9999999999994374],
        [5.090355947579404e-13, 0.999999999999491, 1.1111119444469977e-19],
    ];
    let fit = dawid_skene(
        &sparse_table(),
        DawidSkeneConfig {
            max_iter: 30,
            tol: 1e-300,
        },
    )
    .unwrap();
    assert_eq!(fit.iterations, 30);
    let q = fit.consensus.posterior.unwrap();
    for (i, row) in expected.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            assert!((q[[i, c]] - v).abs() < 1e-10, "Q[{i},{c}] = {} vs {v}", q[[i, c]]);
        }
    }
}

#[test]
fn dissenting_worker_is_recognized() {
    let ann = table(3, &[&[0, 0, 1], &[1, 1, 2], &[2, 2, 0], &[0, 0, 2], &[1, 1, 0]]);
    let fit = dawid_skene(&ann, DawidSkeneConfig::default()).unwrap();
    assert_eq!(fit.consensus.classes().unwrap(), &[0, 1, 2, 0, 1]);
    let confusion = &fit.workers.confusion.as_ref().unwrap()[2];
    for c in 0..3 {
        assert!(confusion[[c, c]] < 0.5);
    }
}

#[test]
fn unanimous_workers_give_confident_posteriors() {
    let ann = table(3, &[&[0, 0, 0], &[1, 1, 1], &[2, 2, 2], &[1, 1, 1]]);
    let fit = dawid_skene(&ann, DawidSkeneConfig::default()).unwrap();
    let q = fit.consensus.posterior.unwrap();
    for (i, c) in [0, 1, 2, 1].into_iter().enumerate() {
        assert!(q[[i, c]] >= 1.0 - 1e-3);
    }
}

#[test]
fn heavily_regularized_minmax_follows_single_votes() {
    let ann = table(4, &[&[2], &[0], &[3], &[1], &[1], &[2]]);
    let cfg = MinmaxConfig {
        alpha: 1e6,
        beta: 1e6,
        ..MinmaxConfig::default()
    };
    let fit = minmax_entropy(&ann, cfg).unwrap();
    assert_eq!(fit.consensus.classes().unwrap(), &[2, 0, 3, 1, 1, 2]);
}

#[test]
fn spearman_with_ties_matches_scipy() {
    let rho = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
    assert!((rho - 0.9486832980505139).abs() < 1e-12);
}
