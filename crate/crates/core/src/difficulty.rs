//! Per-item difficulty scores. Larger is harder for every criterion, so an
//! ascending sort always gives easiest-first order.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aggregation::{vote_winner, ItemConfusion};
use crate::data::AnnotationSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Binary,
    Multiclass,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Regression => "regression",
            Task::Binary => "binary",
            Task::Multiclass => "multiclass",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Error of a model trained on the full training set.
    C1Error,
    /// Inter-annotator disagreement.
    C2Disagreement,
    /// Item confusion from minimax conditional entropy.
    C3Minmax,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::C1Error => "c1_error",
            Criterion::C2Disagreement => "c2_disagreement",
            Criterion::C3Minmax => "c3_minmax",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyScore {
    pub criterion: Criterion,
    pub task: Task,
    pub scores: BTreeMap<String, f64>,
}

/// A classifier output: predicted class and its softmax confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassPrediction {
    pub class: usize,
    pub confidence: f64,
}

impl DifficultyScore {
    fn new(criterion: Criterion, task: Task, scores: BTreeMap<String, f64>) -> Result<Self> {
        if let Some((id, v)) = scores.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Numerical(format!("difficulty of `{id}` is {v}")));
        }
        Ok(DifficultyScore {
            criterion,
            task,
            scores,
        })
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.scores.get(id).copied()
    }

    /// Ids sorted by `(score, id)`: easiest first.
    pub fn easiest_first(&self) -> Vec<&str> {
        let mut ids: Vec<(&str, f64)> = self.scores.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        ids.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
        ids.into_iter().map(|(id, _)| id).collect()
    }

    /// Writes `item_id,criterion,task,score`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["item_id", "criterion", "task", "score"])?;
        let (criterion, task) = (self.criterion.to_string(), self.task.to_string());
        for (id, score) in &self.scores {
            w.write_record([id.as_str(), &criterion, &task, &format!("{score}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_keys<A, B>(truth: &BTreeMap<String, A>, preds: &BTreeMap<String, B>) -> Result<()> {
    if truth.len() != preds.len() || truth.keys().zip(preds.keys()).any(|(a, b)| a != b) {
        return Err(Error::Keys(format!(
            "truth has {} items, predictions {} (or the id sets differ)",
            truth.len(),
            preds.len()
        )));
    }
    Ok(())
}

/// `d_i = |y_i - y'_i|`.
pub fn criterion1_regression(truth: &BTreeMap<String, f64>, preds: &BTreeMap<String, f64>) -> Result<DifficultyScore> {
    check_keys(truth, preds)?;
    let scores = truth
        .iter()
        .map(|(id, y)| (id.clone(), (y - preds[id]).abs()))
        .collect();
    DifficultyScore::new(Criterion::C1Error, Task::Regression, scores)
}

/// `-confidence` for correct predictions, `+confidence` for wrong ones.
pub fn criterion1_classification(
    task: Task,
    truth: &BTreeMap<String, usize>,
    preds: &BTreeMap<String, ClassPrediction>,
) -> Result<DifficultyScore> {
    check_keys(truth, preds)?;
    let mut scores = BTreeMap::new();
    for (id, &label) in truth {
        let p = preds[id];
        if !(0.0..=1.0).contains(&p.confidence) {
            return Err(Error::Numerical(format!(
                "confidence {} for `{id}` outside [0, 1]",
                p.confidence
            )));
        }
        let d = if p.class == label { -p.confidence } else { p.confidence };
        scores.insert(id.clone(), d);
    }
    DifficultyScore::new(Criterion::C1Error, task, scores)
}

/// Population variance of each item's scores.
pub fn criterion2_regression(ann: &AnnotationSet) -> Result<DifficultyScore> {
    if !ann.label_space().is_numeric() {
        return Err(Error::LabelSpace("score variance needs numeric labels".into()));
    }
    let scores = (0..ann.num_items())
        .map(|i| {
            let labels = ann.labels_of(i);
            let n = labels.len() as f64;
            let mean = labels.iter().sum::<f64>() / n;
            let var = labels.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
            (ann.item_ids()[i].clone(), var)
        })
        .collect();
    DifficultyScore::new(Criterion::C2Disagreement, Task::Regression, scores)
}

/// One minus the share of votes for the majority class.
fn disagreement(votes: &[usize]) -> f64 {
    let total: usize = votes.iter().sum();
    let (winner, _) = vote_winner(votes);
    1.0 - votes[winner] as f64 / total as f64
}

/// `1 - (votes for the majority class) / N_i` on categorical labels.
pub fn criterion2_categorical(ann: &AnnotationSet) -> Result<DifficultyScore> {
    if ann.label_space().is_numeric() {
        return Err(Error::LabelSpace(
            "vote agreement needs categorical labels; use difficulty_for_binary for scores".into(),
        ));
    }
    let view = ann.class_view();
    let scores = (0..view.num_items())
        .map(|i| (ann.item_ids()[i].clone(), disagreement(&view.votes(i))))
        .collect();
    DifficultyScore::new(Criterion::C2Disagreement, Task::Multiclass, scores)
}

/// Binarizes every individual score against `train_median` (`>=` is high)
/// and scores the binarized votes like [`criterion2_categorical`].
pub fn difficulty_for_binary(ann: &AnnotationSet, train_median: f64) -> Result<DifficultyScore> {
    if !ann.label_space().is_numeric() {
        return Err(Error::LabelSpace("median split needs numeric labels".into()));
    }
    let scores = (0..ann.num_items())
        .map(|i| {
            let mut votes = [0usize; 2];
            for y in ann.labels_of(i) {
                votes[usize::from(y >= train_median)] += 1;
            }
            (ann.item_ids()[i].clone(), disagreement(&votes))
        })
        .collect();
    DifficultyScore::new(Criterion::C2Disagreement, Task::Binary, scores)
}

/// Trace ratio of the row-normalized `exp(τ_i)`.
pub fn trace_ratio(item: &ItemConfusion) -> f64 {
    let m = item.row_normalized();
    let total = m.sum();
    if total > 0.0 {
        m.diag().sum() / total
    } else {
        1.0 / item.num_classes() as f64
    }
}

/// `d_i = 1 - trace ratio` for each item's τ_i.
pub fn criterion3_minmax<S: AsRef<str>>(
    task: Task,
    item_ids: &[S],
    items: &[ItemConfusion],
) -> Result<DifficultyScore> {
    if item_ids.len() != items.len() {
        return Err(Error::Keys(format!(
            "{} item ids for {} confusion matrices",
            item_ids.len(),
            items.len()
        )));
    }
    let scores = item_ids
        .iter()
        .zip(items)
        .map(|(id, item)| (id.as_ref().to_string(), 1.0 - trace_ratio(item)))
        .collect();
    DifficultyScore::new(Criterion::C3Minmax, task, scores)
}
