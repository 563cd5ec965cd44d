use ndarray::Array2;

use super::{max_abs_diff, softmax_in_place, vote_proportions, Consensus, ConsensusResult, Method, WorkerModel};
use crate::data::AnnotationSet;
use crate::error::{Error, Result};

/// Additive smoothing of the confusion counts.
pub const CONFUSION_SMOOTHING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DawidSkeneConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for DawidSkeneConfig {
    fn default() -> Self {
        DawidSkeneConfig {
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DawidSkeneFit {
    pub consensus: ConsensusResult,
    pub workers: WorkerModel,
    pub priors: Vec<f64>,
    pub iterations: usize,
}

/// Dawid-Skene EM. Starts from vote proportions, then alternates the M-step
/// (class priors and smoothed per-worker confusion rows from the posterior)
/// with the E-step until the posterior moves less than `tol` or `max_iter`
/// rounds have run.
pub fn dawid_skene(ann: &AnnotationSet, cfg: DawidSkeneConfig) -> Result<DawidSkeneFit> {
    if ann.is_empty() {
        return Err(Error::Empty("annotation set".into()));
    }
    if cfg.max_iter == 0 || !(cfg.tol > 0.0) {
        return Err(Error::config("dawid_skene needs max_iter >= 1 and tol > 0"));
    }
    let view = ann.class_view();
    let (n, k, m) = (view.num_items(), view.num_classes, view.num_workers);

    let mut q = vote_proportions(&view);
    let mut priors = vec![0.0; k];
    let mut confusion = vec![Array2::<f64>::zeros((k, k)); m];
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;

        // M-step
        for (c, p) in priors.iter_mut().enumerate() {
            *p = q.column(c).sum() / n as f64;
        }
        for conf in confusion.iter_mut() {
            conf.fill(CONFUSION_SMOOTHING);
        }
        for (i, labels) in view.per_item.iter().enumerate() {
            for &(j, label) in labels {
                for c in 0..k {
                    confusion[j][[c, label]] += q[[i, c]];
                }
            }
        }
        for conf in confusion.iter_mut() {
            for mut row in conf.rows_mut() {
                let total = row.sum();
                row.mapv_inplace(|v| v / total);
            }
        }

        // E-step, in log space
        let mut next = Array2::zeros((n, k));
        let mut scores = vec![0.0; k];
        for (i, labels) in view.per_item.iter().enumerate() {
            for (c, s) in scores.iter_mut().enumerate() {
                *s = priors[c].ln()
                    + labels
                        .iter()
                        .map(|&(j, label)| confusion[j][[c, label]].ln())
                        .sum::<f64>();
            }
            softmax_in_place(&mut scores);
            for (c, s) in scores.iter().enumerate() {
                next[[i, c]] = *s;
            }
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite Dawid-Skene posterior".into()));
        }
        let delta = max_abs_diff(&next, &q);
        q = next;
        if delta < cfg.tol {
            break;
        }
    }

    let classes = argmax_rows(&q);
    Ok(DawidSkeneFit {
        consensus: ConsensusResult {
            method: Method::DawidSkene,
            item_ids: ann.item_ids().to_vec(),
            consensus: Consensus::Classes(classes),
            posterior: Some(q),
            dropped: Vec::new(),
        },
        workers: WorkerModel {
            worker_ids: ann.worker_ids().to_vec(),
            sigma: None,
            confusion: Some(confusion),
        },
        priors,
        iterations,
    })
}

/// First index of the row maximum.
pub(crate) fn argmax_rows(q: &Array2<f64>) -> Vec<usize> {
    q.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabelSpace;

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

    #[test]
    fn unanimous_workers_give_confident_posterior() {
        let ann = table(3, &[&[0, 0, 0], &[2, 2, 2], &[1, 1, 1], &[2, 2, 2]]);
        let fit = dawid_skene(&ann, DawidSkeneConfig::default()).unwrap();
        let q = fit.consensus.posterior.as_ref().unwrap();
        for (i, &c) in [0usize, 2, 1, 2].iter().enumerate() {
            assert!(q[[i, c]] >= 1.0 - 1e-3);
        }
    }

    #[test]
    fn single_label_dominates() {
        let ann = table(3, &[&[1]]);
        let fit = dawid_skene(&ann, DawidSkeneConfig::default()).unwrap();
        let q = fit.consensus.posterior.unwrap();
        assert_eq!(q.row(0).to_vec(), vec![0.0, 1.0, 0.0]);
        assert_eq!(fit.consensus.consensus, Consensus::Classes(vec![1]));
    }

    #[test]
    fn confusion_rows_are_stochastic() {
        let ann = table(3, &[&[0, 1, -1], &[1, 1, 2], &[2, -1, 2], &[0, 0, 1]]);
        let fit = dawid_skene(&ann, DawidSkeneConfig::default()).unwrap();
        for conf in fit.workers.confusion.unwrap() {
            for row in conf.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_config_and_empty_input() {
        let ann = table(2, &[&[0]]);
        let bad = DawidSkeneConfig { max_iter: 0, tol: 1e-6 };
        assert!(dawid_skene(&ann, bad).is_err());
        let empty = AnnotationSet::new(
            LabelSpace::with_classes(2).unwrap(),
            Vec::<(String, String, f64)>::new(),
        )
        .unwrap();
        assert!(matches!(
            dawid_skene(&empty, DawidSkeneConfig::default()),
            Err(Error::Empty(_))
        ));
    }
}
