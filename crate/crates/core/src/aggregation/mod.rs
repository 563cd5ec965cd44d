//! Consensus labels from redundant crowd annotations.
//!
//! Four aggregators are provided: per-item mean of numeric scores, majority
//! vote, Dawid-Skene EM, and regularized minimax conditional entropy. The two
//! probabilistic methods also return a row-stochastic posterior over classes.

mod dawid_skene;
mod minmax;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::AnnotationSet;
use crate::error::{Error, Result};

pub use dawid_skene::{dawid_skene, DawidSkeneConfig, DawidSkeneFit};
pub use minmax::{minmax_entropy, ItemConfusion, MinmaxConfig, MinmaxFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mean,
    Majority,
    DawidSkene,
    MinmaxEntropy,
}

/// Per-item consensus value.
#[derive(Debug, Clone, PartialEq)]
pub enum Consensus {
    /// Real-valued mean score per item.
    Scores(Vec<f64>),
    /// Class index per item.
    Classes(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusResult {
    pub method: Method,
    pub item_ids: Vec<String>,
    pub consensus: Consensus,
    /// N×K posterior, probabilistic methods only.
    pub posterior: Option<Array2<f64>>,
    /// Items without a unique majority class (majority vote with tie dropping).
    pub dropped: Vec<usize>,
}

impl ConsensusResult {
    pub fn classes(&self) -> Option<&[usize]> {
        match &self.consensus {
            Consensus::Classes(c) => Some(c),
            Consensus::Scores(_) => None,
        }
    }

    pub fn scores(&self) -> Option<&[f64]> {
        match &self.consensus {
            Consensus::Scores(s) => Some(s),
            Consensus::Classes(_) => None,
        }
    }

    pub fn dropped_ids(&self) -> Vec<&str> {
        self.dropped.iter().map(|&i| self.item_ids[i].as_str()).collect()
    }

    pub fn is_dropped(&self, item: usize) -> bool {
        self.dropped.binary_search(&item).is_ok()
    }

    /// Writes `item_id,label[,q_0..q_{K-1}]`; dropped items are omitted.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["item_id".to_string(), "label".to_string()];
        if let Some(q) = &self.posterior {
            header.extend((0..q.ncols()).map(|c| format!("q_{c}")));
        }
        w.write_record(&header)?;
        for (i, id) in self.item_ids.iter().enumerate() {
            if self.is_dropped(i) {
                continue;
            }
            let mut rec = vec![id.clone()];
            rec.push(match &self.consensus {
                Consensus::Scores(s) => format!("{}", s[i]),
                Consensus::Classes(c) => c[i].to_string(),
            });
            if let Some(q) = &self.posterior {
                rec.extend(q.row(i).iter().map(|v| format!("{v}")));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-worker parameters estimated by the probabilistic aggregators.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorkerModel {
    pub worker_ids: Vec<String>,
    /// Minimax ability matrices σ_j(c, k).
    pub sigma: Option<Vec<Array2<f64>>>,
    /// Dawid-Skene confusion matrices, rows indexed by true class.
    pub confusion: Option<Vec<Array2<f64>>>,
}

#[derive(Serialize)]
struct WorkerEntry<'a> {
    id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    confusion: Option<Vec<Vec<f64>>>,
}

pub(crate) fn matrix_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

impl WorkerModel {
    /// Merges the non-empty parts of `other` into `self`.
    pub fn merge(mut self, other: WorkerModel) -> Self {
        if self.worker_ids.is_empty() {
            self.worker_ids = other.worker_ids;
        }
        self.sigma = self.sigma.or(other.sigma);
        self.confusion = self.confusion.or(other.confusion);
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        let workers: Vec<WorkerEntry> = self
            .worker_ids
            .iter()
            .enumerate()
            .map(|(j, id)| WorkerEntry {
                id,
                sigma: self.sigma.as_ref().map(|s| matrix_rows(&s[j])),
                confusion: self.confusion.as_ref().map(|c| matrix_rows(&c[j])),
            })
            .collect();
        serde_json::json!({ "workers": workers })
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &self.to_json())?;
        w.write_all(b"\n")?;
        Ok(())
    }
}

/// ȳ_i = (1/N_i) Σ_j y_ij for numeric label spaces.
pub fn aggregate_mean(ann: &AnnotationSet) -> Result<ConsensusResult> {
    if !ann.label_space().is_numeric() {
        return Err(Error::LabelSpace(
            "mean aggregation needs numeric (ordinal) labels".into(),
        ));
    }
    let scores = (0..ann.num_items())
        .map(|i| {
            let labels = ann.labels_of(i);
            labels.iter().sum::<f64>() / labels.len() as f64
        })
        .collect();
    Ok(ConsensusResult {
        method: Method::Mean,
        item_ids: ann.item_ids().to_vec(),
        consensus: Consensus::Scores(scores),
        posterior: None,
        dropped: Vec::new(),
    })
}

/// Most voted class per item, ties resolved to the lowest class index. With
/// `drop_ties`, tied items are also listed in `dropped`.
pub fn aggregate_majority(ann: &AnnotationSet, drop_ties: bool) -> Result<ConsensusResult> {
    if ann.label_space().is_numeric() {
        return Err(Error::LabelSpace("majority vote needs categorical labels".into()));
    }
    let view = ann.class_view();
    let mut classes = Vec::with_capacity(view.num_items());
    let mut dropped = Vec::new();
    for i in 0..view.num_items() {
        let (winner, tied) = vote_winner(&view.votes(i));
        if tied && drop_ties {
            dropped.push(i);
        }
        classes.push(winner);
    }
    Ok(ConsensusResult {
        method: Method::Majority,
        item_ids: ann.item_ids().to_vec(),
        consensus: Consensus::Classes(classes),
        posterior: None,
        dropped,
    })
}

/// Lowest-index class with the top count, and whether that count is shared.
pub(crate) fn vote_winner(counts: &[usize]) -> (usize, bool) {
    let top = counts.iter().copied().max().unwrap_or(0);
    let winner = counts.iter().position(|&c| c == top).unwrap_or(0);
    let tied = counts.iter().filter(|&&c| c == top).count() > 1;
    (winner, tied)
}

/// Vote proportions per item: the starting posterior of both EM-style solvers.
pub(crate) fn vote_proportions(view: &crate::data::ClassView) -> Array2<f64> {
    let mut q = Array2::zeros((view.num_items(), view.num_classes));
    for (i, labels) in view.per_item.iter().enumerate() {
        for &(_, c) in labels {
            q[[i, c]] += 1.0;
        }
        let n = labels.len() as f64;
        q.row_mut(i).mapv_inplace(|v| v / n);
    }
    q
}

/// Normalizes a row of log-scores into probabilities in place.
pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

pub(crate) fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
