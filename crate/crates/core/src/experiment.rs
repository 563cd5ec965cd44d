//! End-to-end experiment runs: consensus targets, difficulty, planning,
//! multi-seed training of each condition, significance, and reporting.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aggregation::{aggregate_majority, aggregate_mean, minmax_entropy, MinmaxConfig};
use crate::curriculum::{
    bin_sizes, make_bins, make_random_bins, mix_seed, write_stage_csv, CurriculumSchedule, LabeledSet, Labels, LrGrid,
    StageMetrics, TrainSettings, Trainer, TrialResult, DEFAULT_BINS, DEFAULT_EPOCHS_PER_STAGE, DEFAULT_PLAIN_EPOCHS,
    DEFAULT_PLAIN_LR,
};
use crate::data::{AnnotationSet, DatasetSplit, FeatureMatrix};
use crate::difficulty::{
    criterion1_classification, criterion1_regression, criterion2_categorical, criterion2_regression, criterion3_minmax,
    difficulty_for_binary, Criterion, DifficultyScore, Task,
};
use crate::error::{Error, Result};
use crate::metrics::{one_tailed_t_test, MetricKind, SignificanceResult};
use crate::nn::{NetworkConfig, NetworkState, DEFAULT_BATCH_SIZE};
use crate::par::Execution;

/// Salt separating per-trial random-bin seeds from network seeds.
const RANDOM_BIN_SALT: u64 = 0x5EED_B175;

/// Training regime compared in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// One-pass training without a curriculum.
    None,
    /// Curriculum over randomly formed bins.
    Random,
    C1,
    C2,
    C3,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::None,
        Condition::Random,
        Condition::C1,
        Condition::C2,
        Condition::C3,
    ];

    pub fn criterion(self) -> Option<Criterion> {
        match self {
            Condition::C1 => Some(Criterion::C1Error),
            Condition::C2 => Some(Criterion::C2Disagreement),
            Condition::C3 => Some(Criterion::C3Minmax),
            Condition::None | Condition::Random => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Condition::None => "none",
            Condition::Random => "random",
            Condition::C1 => "c1",
            Condition::C2 => "c2",
            Condition::C3 => "c3",
        }
    }

    /// Row label used in result tables.
    pub fn title(self) -> &'static str {
        match self {
            Condition::None => "w/o curriculum",
            Condition::Random => "Random curriculum",
            Condition::C1 => "Criterion 1-Prediction error",
            Condition::C2 => "Criterion 2-Agreement",
            Condition::C3 => "Criterion 3-Minmax entropy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Condition::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config(format!("unknown condition `{s}` (none|random|c1|c2|c3)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub task: Task,
    pub condition: Condition,
    /// Also run the no-curriculum and random-curriculum baselines.
    pub with_baselines: bool,
    pub n_bins: usize,
    pub epochs_per_stage: usize,
    pub lr_grid: LrGrid,
    pub hidden_sizes: Vec<usize>,
    pub batch_size: usize,
    pub plain_epochs: usize,
    pub plain_lr: f64,
    pub n_trials: usize,
    /// Trial `t` uses seed `seed + t`.
    pub seed: u64,
    /// Seed of the network used for the learning-rate search and criterion 1.
    pub search_seed: u64,
    pub minmax: MinmaxConfig,
    /// Column name in result tables, e.g. an attribute name.
    pub label: Option<String>,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: Task::Multiclass,
            condition: Condition::C3,
            with_baselines: false,
            n_bins: DEFAULT_BINS,
            epochs_per_stage: DEFAULT_EPOCHS_PER_STAGE,
            lr_grid: LrGrid::default(),
            hidden_sizes: NetworkConfig::DEFAULT_HIDDEN.to_vec(),
            batch_size: DEFAULT_BATCH_SIZE,
            plain_epochs: DEFAULT_PLAIN_EPOCHS,
            plain_lr: DEFAULT_PLAIN_LR,
            n_trials: 10,
            seed: 0,
            search_seed: 0,
            minmax: MinmaxConfig::default(),
            label: None,
            exec: Execution::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::config("n_trials must be at least 1"));
        }
        if self.n_bins == 0 {
            return Err(Error::config("n_bins must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be positive"));
        }
        if !(self.plain_lr > 0.0) {
            return Err(Error::config("plain_lr must be positive"));
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_trials as u64).map(|t| self.seed.wrapping_add(t)).collect()
    }

    fn minmax(&self) -> MinmaxConfig {
        MinmaxConfig {
            exec: self.exec,
            ..self.minmax
        }
    }
}

/// Annotations, features and split of one experiment.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentData<'a> {
    pub annotations: &'a AnnotationSet,
    pub features: &'a FeatureMatrix,
    pub split: &'a DatasetSplit,
}

/// Consensus targets for train/dev/test.
#[derive(Debug, Clone)]
pub struct PreparedTask {
    pub task: Task,
    pub train: LabeledSet,
    pub dev: LabeledSet,
    pub test: LabeledSet,
    /// Median of the training consensus means (binary task).
    pub train_median: Option<f64>,
    /// Items without a majority class, left out of every pool (multiclass).
    pub excluded: Vec<String>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Builds consensus targets: mean scores (regression), median split of the
/// mean scores at the training median (binary), or majority vote with
/// no-agreement items removed (multiclass).
pub fn prepare_task(task: Task, data: ExperimentData<'_>) -> Result<PreparedTask> {
    let ann = data.annotations;
    data.split.validate(ann.item_ids().iter().map(String::as_str))?;
    let pick = |ids: &[String], consensus: &dyn Fn(usize) -> Option<f64>| -> Result<Vec<(String, f64)>> {
        let mut out = Vec::with_capacity(ids.len());
        for id in ids {
            let i = ann
                .item_index(id)
                .ok_or_else(|| Error::Keys(format!("no annotations for `{id}`")))?;
            if let Some(v) = consensus(i) {
                out.push((id.clone(), v));
            }
        }
        Ok(out)
    };
    match task {
        Task::Regression | Task::Binary => {
            let means = aggregate_mean(ann)?;
            let scores = means.scores().expect("mean aggregation yields scores").to_vec();
            let get = |i: usize| Some(scores[i]);
            let (train, dev, test) = (
                pick(&data.split.train, &get)?,
                pick(&data.split.dev, &get)?,
                pick(&data.split.test, &get)?,
            );
            if task == Task::Regression {
                let build = |items: Vec<(String, f64)>| LabeledSet::new(data.features, items, Labels::Values);
                return Ok(PreparedTask {
                    task,
                    train: build(train)?,
                    dev: build(dev)?,
                    test: build(test)?,
                    train_median: None,
                    excluded: Vec::new(),
                });
            }
            let threshold = median(&mut train.iter().map(|(_, v)| *v).collect::<Vec<_>>());
            let build = |items: Vec<(String, f64)>| {
                LabeledSet::new(
                    data.features,
                    items.into_iter().map(|(id, v)| (id, usize::from(v >= threshold))),
                    |labels| Labels::Classes { labels, num_classes: 2 },
                )
            };
            Ok(PreparedTask {
                task,
                train: build(train)?,
                dev: build(dev)?,
                test: build(test)?,
                train_median: Some(threshold),
                excluded: Vec::new(),
            })
        }
        Task::Multiclass => {
            let votes = aggregate_majority(ann, true)?;
            let classes = votes.classes().expect("majority yields classes").to_vec();
            let dropped: HashSet<usize> = votes.dropped.iter().copied().collect();
            let get = |i: usize| (!dropped.contains(&i)).then(|| classes[i] as f64);
            let k = ann.label_space().num_classes();
            let build = |items: Vec<(String, f64)>| {
                LabeledSet::new(
                    data.features,
                    items.into_iter().map(|(id, c)| (id, c as usize)),
                    |labels| Labels::Classes { labels, num_classes: k },
                )
            };
            let in_split: HashSet<&str> = data
                .split
                .train
                .iter()
                .chain(&data.split.dev)
                .chain(&data.split.test)
                .map(String::as_str)
                .collect();
            Ok(PreparedTask {
                task,
                train: build(pick(&data.split.train, &get)?)?,
                dev: build(pick(&data.split.dev, &get)?)?,
                test: build(pick(&data.split.test, &get)?)?,
                train_median: None,
                excluded: votes
                    .dropped_ids()
                    .into_iter()
                    .filter(|id| in_split.contains(id))
                    .map(str::to_string)
                    .collect(),
            })
        }
    }
}

impl PreparedTask {
    pub fn network(&self, hidden_sizes: &[usize], seed: u64) -> NetworkConfig {
        let dim = self.train.features.ncols();
        match &self.train.labels {
            Labels::Values(_) => NetworkConfig::regression(dim, hidden_sizes.to_vec(), seed),
            Labels::Classes { num_classes, .. } => {
                NetworkConfig::classifier(dim, hidden_sizes.to_vec(), *num_classes, seed)
            }
        }
    }

    pub fn trainer(&self, cfg: &ExperimentConfig) -> Result<Trainer<'_>> {
        let mut settings = TrainSettings::new(self.network(&cfg.hidden_sizes, cfg.search_seed));
        settings.batch_size = cfg.batch_size;
        settings.exec = cfg.exec;
        Trainer::new(&self.train, &self.dev, &self.test, settings)
    }
}

/// Difficulty of every training item under `criterion`.
///
/// Criterion 1 trains the no-curriculum baseline on the full training set
/// (seeded with `search_seed`) and scores its predictions on that same set.
pub fn training_difficulty(
    criterion: Criterion,
    cfg: &ExperimentConfig,
    data: ExperimentData<'_>,
    prepared: &PreparedTask,
) -> Result<DifficultyScore> {
    let task = prepared.task;
    let train_ids: Vec<&str> = prepared.train.ids.iter().map(String::as_str).collect();
    match criterion {
        Criterion::C1Error => {
            let trainer = prepared.trainer(cfg)?;
            let model = trainer
                .train_plain(cfg.plain_epochs, cfg.plain_lr, &[cfg.search_seed])?
                .remove(0)
                .model;
            let x = prepared.train.features.view();
            match &prepared.train.labels {
                Labels::Values(truth) => {
                    let preds = model.predict_values(x)?;
                    let ids = prepared.train.ids.iter().cloned();
                    criterion1_regression(
                        &ids.clone().zip(truth.iter().copied()).collect(),
                        &ids.zip(preds).collect(),
                    )
                }
                Labels::Classes { labels, .. } => {
                    let preds = model.predict_classes(x)?;
                    let ids = prepared.train.ids.iter().cloned();
                    criterion1_classification(
                        task,
                        &ids.clone().zip(labels.iter().copied()).collect(),
                        &ids.zip(preds).collect(),
                    )
                }
            }
        }
        Criterion::C2Disagreement => {
            let ann = data.annotations.restrict_to(train_ids.iter().copied())?;
            match task {
                Task::Regression => criterion2_regression(&ann),
                Task::Binary => {
                    difficulty_for_binary(&ann, prepared.train_median.expect("binary task carries its median"))
                }
                Task::Multiclass => criterion2_categorical(&ann),
            }
        }
        Criterion::C3Minmax => {
            let fit = minmax_entropy(data.annotations, cfg.minmax())?;
            let all = criterion3_minmax(task, data.annotations.item_ids(), &fit.items)?;
            let scores: BTreeMap<String, f64> = train_ids.iter().map(|id| (id.to_string(), all.scores[*id])).collect();
            Ok(DifficultyScore { scores, ..all })
        }
    }
}

/// Bins and learning rates for one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub condition: Condition,
    pub schedule: CurriculumSchedule,
    /// Development metric of the chosen rate at each stage of the search.
    pub search_dev_metrics: Vec<f64>,
    #[serde(skip)]
    pub difficulty: Option<DifficultyScore>,
}

/// Computes bins and runs the greedy learning-rate search. The
/// no-curriculum condition yields a single bin with the fixed baseline rate.
pub fn plan(
    condition: Condition,
    cfg: &ExperimentConfig,
    data: ExperimentData<'_>,
    prepared: &PreparedTask,
) -> Result<Plan> {
    cfg.validate()?;
    let train_ids = &prepared.train.ids;
    let (bins, difficulty) = match condition {
        Condition::None => {
            return Ok(Plan {
                condition,
                schedule: CurriculumSchedule {
                    bins: vec![train_ids.clone()],
                    rates: vec![cfg.plain_lr],
                    epochs_per_stage: cfg.plain_epochs,
                },
                search_dev_metrics: Vec::new(),
                difficulty: None,
            })
        }
        Condition::Random => (make_random_bins(train_ids, cfg.n_bins, cfg.search_seed)?, None),
        c => {
            let criterion = c.criterion().expect("criterion condition");
            let scores = training_difficulty(criterion, cfg, data, prepared)?;
            (make_bins(&scores, train_ids, cfg.n_bins)?, Some(scores))
        }
    };
    let trainer = prepared.trainer(cfg)?;
    let (rates, metrics) = trainer.greedy_lr_search(&bins, &cfg.lr_grid, cfg.epochs_per_stage, cfg.search_seed)?;
    Ok(Plan {
        condition,
        schedule: CurriculumSchedule {
            bins,
            rates,
            epochs_per_stage: cfg.epochs_per_stage,
        },
        search_dev_metrics: metrics,
        difficulty,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub final_dev: f64,
    pub final_test: f64,
    pub stages: Vec<StageMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub rates: Vec<f64>,
    pub epochs_per_stage: usize,
    pub bin_sizes: Vec<usize>,
    pub mean_final_test: f64,
    pub std_final_test: f64,
    pub trials: Vec<TrialReport>,
}

impl ConditionReport {
    fn new(
        condition: Condition,
        rates: Vec<f64>,
        epochs_per_stage: usize,
        bin_sizes: Vec<usize>,
        trials: &[TrialResult],
    ) -> Self {
        let finals: Vec<f64> = trials.iter().map(TrialResult::final_test).collect();
        let n = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / n;
        let std = if finals.len() > 1 {
            (finals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        ConditionReport {
            condition,
            rates,
            epochs_per_stage,
            bin_sizes,
            mean_final_test: mean,
            std_final_test: std,
            trials: trials
                .iter()
                .enumerate()
                .map(|(t, r)| TrialReport {
                    trial: t,
                    seed: r.seed,
                    final_dev: r.stages.last().map_or(f64::NAN, |s| s.dev_metric),
                    final_test: r.final_test(),
                    stages: r.stages.clone(),
                })
                .collect(),
        }
    }

    pub fn final_tests(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.final_test).collect()
    }

    /// `(trial, stages)` rows for the stage-metric CSV.
    pub fn curve(&self) -> Vec<(usize, Vec<StageMetrics>)> {
        self.trials.iter().map(|t| (t.trial, t.stages.clone())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub created_unix: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: Option<String>,
    pub task: Task,
    pub metric: MetricKind,
    pub primary: Condition,
    pub excluded_items: usize,
    pub conditions: Vec<ConditionReport>,
    /// Primary condition vs. no curriculum (`*`).
    pub vs_no_curriculum: Option<SignificanceResult>,
    /// Primary condition vs. random curriculum (`°`).
    pub vs_random: Option<SignificanceResult>,
    pub markers: String,
    pub meta: ReportMeta,
}

impl EvalReport {
    pub fn condition(&self, c: Condition) -> Option<&ConditionReport> {
        self.conditions.iter().find(|r| r.condition == c)
    }

    /// Report JSON without the `meta` block, for reproducibility checks.
    pub fn without_meta(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("meta");
        }
        v
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
    }

    /// Writes `report.json`, `curve.csv` (primary condition),
    /// `curve_<condition>.csv` for the others, and `table.md`.
    pub fn write_outputs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.save(dir.join("report.json"))?;
        for c in &self.conditions {
            let name = if c.condition == self.primary {
                "curve.csv".to_string()
            } else {
                format!("curve_{}.csv", c.condition.name())
            };
            write_stage_csv(dir.join(name), &c.curve())?;
        }
        std::fs::write(
            dir.join("table.md"),
            render_table(std::slice::from_ref(self), TableFormat::Markdown),
        )?;
        Ok(())
    }
}

/// A report plus the trained networks of the primary condition.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: EvalReport,
    pub plan: Plan,
    pub models: Vec<NetworkState>,
}

fn significance(a: &ConditionReport, b: Option<&ConditionReport>) -> Result<Option<SignificanceResult>> {
    match b {
        Some(b) if a.trials.len() >= 2 && b.trials.len() >= 2 => {
            Ok(Some(one_tailed_t_test(&a.final_tests(), &b.final_tests())?))
        }
        _ => Ok(None),
    }
}

/// Runs the configured condition over `n_trials` seeds and, when requested,
/// both baselines. The random baseline reuses the primary condition's rates.
pub fn run_experiment(cfg: &ExperimentConfig, data: ExperimentData<'_>) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let prepared = prepare_task(cfg.task, data)?;
    let trainer = prepared.trainer(cfg)?;
    let seeds = cfg.seeds();
    let train_ids = prepared.train.ids.clone();
    let random_bins = |seed: u64| make_random_bins(&train_ids, cfg.n_bins, mix_seed(seed, RANDOM_BIN_SALT));

    let plan = plan(cfg.condition, cfg, data, &prepared)?;
    let schedule = &plan.schedule;
    let primary_trials = match cfg.condition {
        Condition::Random => {
            trainer.train_with_bins(&seeds, random_bins, &schedule.rates, schedule.epochs_per_stage)?
        }
        _ => trainer.train_curriculum(schedule, &seeds)?,
    };
    let sizes = |bins: &[Vec<String>]| bins.iter().map(Vec::len).collect::<Vec<_>>();
    let mut conditions = vec![ConditionReport::new(
        cfg.condition,
        schedule.rates.clone(),
        schedule.epochs_per_stage,
        sizes(&schedule.bins),
        &primary_trials,
    )];

    if cfg.with_baselines && cfg.condition != Condition::None {
        let plain = trainer.train_plain(cfg.plain_epochs, cfg.plain_lr, &seeds)?;
        conditions.insert(
            0,
            ConditionReport::new(
                Condition::None,
                vec![cfg.plain_lr],
                cfg.plain_epochs,
                vec![train_ids.len()],
                &plain,
            ),
        );
        if cfg.condition != Condition::Random {
            let random = trainer.train_with_bins(&seeds, random_bins, &schedule.rates, schedule.epochs_per_stage)?;
            conditions.insert(
                1,
                ConditionReport::new(
                    Condition::Random,
                    schedule.rates.clone(),
                    schedule.epochs_per_stage,
                    bin_sizes(train_ids.len(), cfg.n_bins),
                    &random,
                ),
            );
        }
    }

    let find = |c: Condition| conditions.iter().find(|r| r.condition == c);
    let primary = find(cfg.condition).expect("primary condition present");
    let (vs_none, vs_random) = if cfg.condition == Condition::None {
        (None, None)
    } else if cfg.condition == Condition::Random {
        (significance(primary, find(Condition::None))?, None)
    } else {
        (
            significance(primary, find(Condition::None))?,
            significance(primary, find(Condition::Random))?,
        )
    };
    let mut markers = String::new();
    if vs_none.is_some_and(|s| s.significant) {
        markers.push('*');
    }
    if vs_random.is_some_and(|s| s.significant) {
        markers.push('°');
    }

    let report = EvalReport {
        label: cfg.label.clone(),
        task: cfg.task,
        metric: trainer.metric_kind(),
        primary: cfg.condition,
        excluded_items: prepared.excluded.len(),
        conditions,
        vs_no_curriculum: vs_none,
        vs_random,
        markers,
        meta: ReportMeta {
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    };
    Ok(ExperimentOutcome {
        report,
        plan,
        models: primary_trials.into_iter().map(|t| t.model).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

/// Mean final test metric per condition (rows) and report (columns). The
/// primary condition of each report carries its `*` / `°` markers.
pub fn render_table(reports: &[EvalReport], format: TableFormat) -> String {
    let columns: Vec<String> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| r.label.clone().unwrap_or_else(|| format!("{} #{}", r.task, i + 1)))
        .collect();
    let mut rows: Vec<Condition> = reports
        .iter()
        .flat_map(|r| r.conditions.iter().map(|c| c.condition))
        .collect();
    rows.sort();
    rows.dedup();
    let cell = |r: &EvalReport, c: Condition| -> String {
        match r.condition(c) {
            Some(cr) => {
                let marks = if c == r.primary { r.markers.as_str() } else { "" };
                format!("{:.4}{marks}", cr.mean_final_test)
            }
            None => "-".into(),
        }
    };
    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            out.push_str(&format!("| Condition | {} |\n", columns.join(" | ")));
            out.push_str(&format!("|---|{}\n", "---|".repeat(columns.len())));
            for c in rows {
                let cells: Vec<String> = reports.iter().map(|r| cell(r, c)).collect();
                out.push_str(&format!("| {} | {} |\n", c.title(), cells.join(" | ")));
            }
            out.push_str("\n`*` better than w/o curriculum, `°` better than random curriculum (one-tailed Welch t-test, p <= 0.05).\n");
        }
        TableFormat::Csv => {
            let quote = |s: &str| {
                if s.contains(',') {
                    format!("\"{s}\"")
                } else {
                    s.to_string()
                }
            };
            out.push_str(&format!(
                "condition,{}\n",
                columns.iter().map(|c| quote(c)).collect::<Vec<_>>().join(",")
            ));
            for c in rows {
                let cells: Vec<String> = reports.iter().map(|r| cell(r, c)).collect();
                out.push_str(&format!("{},{}\n", c.name(), cells.join(",")));
            }
        }
    }
    out
}
