//! `curriculum`: command-line harness for annotation-driven curriculum learning.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use curriculum_core::aggregation::{
    aggregate_majority, aggregate_mean, dawid_skene, minmax_entropy, DawidSkeneConfig, MinmaxConfig,
};
use curriculum_core::curriculum::LrGrid;
use curriculum_core::data::{
    load_annotations, load_features_for, random_split, write_annotations, write_features_binary, write_features_csv,
    AnnotationSet, DatasetSplit, FeatureMatrix, LabelSpace,
};
use curriculum_core::difficulty::{
    criterion2_categorical, criterion2_regression, criterion3_minmax, difficulty_for_binary, Criterion,
    DifficultyScore, Task,
};
use curriculum_core::experiment::{
    plan, prepare_task, render_table, run_experiment, training_difficulty, Condition, EvalReport, ExperimentConfig,
    ExperimentData, TableFormat,
};
use curriculum_core::nn::save_checkpoint;
use curriculum_core::par::{self, Execution};
use curriculum_core::synth::{simulate, SimConfig};

#[derive(Parser)]
#[command(
    name = "curriculum",
    version,
    about = "Curriculum learning from crowd annotation difficulty"
)]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic crowd-labelled dataset with known ground truth.
    Simulate(SimulateArgs),
    /// Aggregate annotations into consensus labels.
    Aggregate(AggregateArgs),
    /// Score item difficulty.
    Difficulty(DifficultyArgs),
    /// Build difficulty bins and search per-stage learning rates.
    Plan(PlanArgs),
    /// Train and evaluate a curriculum condition over several trials.
    Run(RunArgs),
    /// Render report files as a table.
    Report(ReportArgs),
}

/// Where the dataset lives. `--data DIR` picks up the files written by
/// `simulate`; individual paths override it.
#[derive(Args, Clone, Default)]
struct DataArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    splits: Option<PathBuf>,
    /// Label space JSON (`{"kind":"categorical","class_names":[..]}` or `{"kind":"ordinal","num_levels":L}`).
    #[arg(long)]
    label_space: Option<PathBuf>,
    /// Categorical labels with this many classes.
    #[arg(long, conflicts_with_all = ["levels", "label_space"])]
    classes: Option<usize>,
    /// Ordinal labels 1..=L.
    #[arg(long, conflicts_with = "label_space")]
    levels: Option<u32>,
}

impl DataArgs {
    fn in_data_dir(&self, name: &str) -> Option<PathBuf> {
        self.data.as_ref().map(|d| d.join(name)).filter(|p| p.exists())
    }

    fn annotations_path(&self) -> Result<PathBuf> {
        self.annotations
            .clone()
            .or_else(|| self.in_data_dir("annotations.csv"))
            .context("no annotations file: pass --annotations or --data")
    }

    fn features_path(&self) -> Option<PathBuf> {
        self.features
            .clone()
            .or_else(|| self.in_data_dir("features.csv"))
            .or_else(|| self.in_data_dir("features.bin"))
    }

    fn splits_path(&self) -> Option<PathBuf> {
        self.splits.clone().or_else(|| self.in_data_dir("splits.json"))
    }

    fn label_space(&self) -> Result<LabelSpace> {
        if let Some(k) = self.classes {
            return Ok(LabelSpace::with_classes(k)?);
        }
        if let Some(l) = self.levels {
            return Ok(LabelSpace::ordinal(l)?);
        }
        let path = self
            .label_space
            .clone()
            .or_else(|| self.in_data_dir("label_space.json"))
            .context("no label space: pass --label-space, --classes or --levels")?;
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let space: LabelSpace =
            serde_json::from_str(&text).with_context(|| format!("parsing label space {}", path.display()))?;
        space.validate()?;
        Ok(space)
    }

    fn load_annotations(&self) -> Result<AnnotationSet> {
        let path = self.annotations_path()?;
        load_annotations(&path, &self.label_space()?).with_context(|| format!("loading {}", path.display()))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 200 items, 10 workers (2 weak), 5 classes, 16 features.
    CategoricalSmall,
    /// 3000 items, 20 workers, 5 classes, 64 features, 2000/300/700 split.
    CategoricalLarge,
    /// 300 items, 10 workers, 7-point scale, 16 features.
    OrdinalSmall,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeatureFormat {
    Csv,
    Binary,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "categorical-small")]
    preset: Preset,
    #[arg(long)]
    items: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    labels_per_item: Option<usize>,
    /// Number of classes (categorical presets).
    #[arg(long)]
    classes: Option<usize>,
    /// Number of levels (ordinal presets).
    #[arg(long)]
    levels: Option<u32>,
    #[arg(long)]
    feature_dim: Option<usize>,
    #[arg(long)]
    ability_mean: Option<f64>,
    #[arg(long)]
    ability_std: Option<f64>,
    #[arg(long)]
    low_ability_workers: Option<usize>,
    #[arg(long)]
    noise_scale: Option<f64>,
    /// Train, dev and test fractions.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    split: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "csv")]
    feature_format: FeatureFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mean,
    Majority,
    DawidSkene,
    Minmax,
}

#[derive(Args)]
struct AggregateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Majority vote: leave out items without a unique winner.
    #[arg(long)]
    drop_ties: bool,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Regression,
    Binary,
    Multiclass,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Regression => Task::Regression,
            TaskArg::Binary => Task::Binary,
            TaskArg::Multiclass => Task::Multiclass,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    C1,
    C2,
    C3,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConditionArg {
    None,
    Random,
    C1,
    C2,
    C3,
}

impl From<ConditionArg> for Condition {
    fn from(c: ConditionArg) -> Self {
        match c {
            ConditionArg::None => Condition::None,
            ConditionArg::Random => Condition::Random,
            ConditionArg::C1 => Condition::C1,
            ConditionArg::C2 => Condition::C2,
            ConditionArg::C3 => Condition::C3,
        }
    }
}

/// Experiment settings shared by `plan` and `run`; each flag overrides the
/// config file.
#[derive(Args, Clone, Default)]
struct ExperimentArgs {
    /// JSON config: experiment fields plus optional data paths.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    #[arg(long, value_enum)]
    criterion: Option<ConditionArg>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    epochs_per_stage: Option<usize>,
    /// Candidate learning rates, strictly decreasing.
    #[arg(long, value_delimiter = ',')]
    lr_grid: Option<Vec<f64>>,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Seed of the learning-rate search and of criterion 1's model.
    #[arg(long)]
    search_seed: Option<u64>,
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args)]
struct DifficultyArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    criterion: CriterionArg,
    #[arg(long, value_enum)]
    task: TaskArg,
    /// Config file for criterion 1's baseline model.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Also run the no-curriculum and random-curriculum baselines.
    #[arg(long)]
    with_baselines: bool,
    /// Write one checkpoint per trial of the primary condition.
    #[arg(long)]
    save_models: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Md,
    Csv,
}

#[derive(Args)]
struct ReportArgs {
    /// report.json files, one column each.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "md")]
    format: FormatArg,
}

/// Config file layout: data paths next to the experiment fields.
#[derive(Deserialize, Default)]
#[serde(default)]
struct RunFile {
    annotations: Option<PathBuf>,
    features: Option<PathBuf>,
    splits: Option<PathBuf>,
    label_space: Option<PathBuf>,
    #[serde(flatten)]
    experiment: ExperimentConfig,
}

fn usage_error(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ArgumentConflict, msg).exit()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli.jobs;
    match par::with_jobs(jobs, move || dispatch(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let exec = Execution::from_jobs(cli.jobs);
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&args, cli.seed.unwrap_or(0), &out),
        Command::Aggregate(args) => cmd_aggregate(&args, exec, &out),
        Command::Difficulty(args) => cmd_difficulty(&args, cli.seed, exec, &out),
        Command::Plan(args) => cmd_plan(&args, cli.seed, exec, &out),
        Command::Run(args) => cmd_run(&args, cli.seed, exec, &out),
        Command::Report(args) => cmd_report(&args, cli.out.as_deref()),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn cmd_simulate(args: &SimulateArgs, seed: u64, out: &Path) -> Result<()> {
    let (mut cfg, fractions) = match args.preset {
        Preset::CategoricalSmall => {
            let mut cfg = SimConfig::categorical(200, 10, args.classes.unwrap_or(5), seed)?;
            cfg.low_ability_workers = 2;
            (cfg, (0.7, 0.1, 0.2))
        }
        Preset::CategoricalLarge => {
            let mut cfg = SimConfig::categorical(3000, 20, args.classes.unwrap_or(5), seed)?;
            cfg.feature_dim = 64;
            (cfg, (2.0 / 3.0, 0.1, 7.0 / 30.0))
        }
        Preset::OrdinalSmall => (
            SimConfig::ordinal(300, 10, args.levels.unwrap_or(7), seed)?,
            (0.7, 0.1, 0.2),
        ),
    };
    if args.classes.is_some() && matches!(args.preset, Preset::OrdinalSmall) {
        usage_error("--classes applies to categorical presets; use --levels");
    }
    if args.levels.is_some() && !matches!(args.preset, Preset::OrdinalSmall) {
        usage_error("--levels applies to ordinal presets; use --classes");
    }
    if let Some(n) = args.items {
        cfg.n_items = n;
    }
    if let Some(m) = args.workers {
        cfg.n_workers = m;
        if args.labels_per_item.is_none() {
            cfg.labels_per_item = cfg.labels_per_item.min(m);
        }
    }
    if let Some(l) = args.labels_per_item {
        cfg.labels_per_item = l;
    }
    if cfg.labels_per_item > cfg.n_workers {
        usage_error(format!(
            "--labels-per-item ({}) cannot exceed the number of workers ({})",
            cfg.labels_per_item, cfg.n_workers
        ));
    }
    if let Some(d) = args.feature_dim {
        cfg.feature_dim = d;
    }
    if let Some(v) = args.ability_mean {
        cfg.ability_mean = v;
    }
    if let Some(v) = args.ability_std {
        cfg.ability_std = v;
    }
    if let Some(v) = args.low_ability_workers {
        cfg.low_ability_workers = v;
    }
    if let Some(v) = args.noise_scale {
        cfg.noise_scale = v;
    }
    let fractions = match args.split.as_deref() {
        Some(&[a, b, c]) => (a, b, c),
        _ => fractions,
    };

    let sim = simulate(&cfg)?;
    let split = random_split(sim.annotations.item_ids(), fractions, seed)?;
    create_dir(out)?;
    write_annotations(out.join("annotations.csv"), &sim.annotations)?;
    match args.feature_format {
        FeatureFormat::Csv => write_features_csv(out.join("features.csv"), &sim.features)?,
        FeatureFormat::Binary => write_features_binary(out.join("features.bin"), &sim.features)?,
    }
    split.save(out.join("splits.json"))?;
    sim.truth.save(out.join("truth.json"))?;
    write_json(&out.join("label_space.json"), &cfg.label_space)?;
    println!(
        "simulated {} items, {} workers, {} annotations into {}",
        sim.annotations.num_items(),
        sim.annotations.num_workers(),
        sim.annotations.len(),
        out.display()
    );
    Ok(())
}

fn cmd_aggregate(args: &AggregateArgs, exec: Execution, out: &Path) -> Result<()> {
    let ann = args.data.load_annotations()?;
    create_dir(out)?;
    let consensus_path = out.join("consensus.csv");
    match args.method {
        MethodArg::Mean => aggregate_mean(&ann)?.write_csv(&consensus_path)?,
        MethodArg::Majority => {
            let result = aggregate_majority(&ann, args.drop_ties)?;
            result.write_csv(&consensus_path)?;
            if args.drop_ties {
                let mut text = String::from("item_id\n");
                for id in result.dropped_ids() {
                    text.push_str(id);
                    text.push('\n');
                }
                fs::write(out.join("dropped.csv"), text)?;
                eprintln!("{} tied items dropped", result.dropped.len());
            }
        }
        MethodArg::DawidSkene => {
            let mut cfg = DawidSkeneConfig::default();
            if let Some(v) = args.max_iter {
                cfg.max_iter = v;
            }
            if let Some(v) = args.tol {
                cfg.tol = v;
            }
            let fit = dawid_skene(&ann, cfg)?;
            fit.consensus.write_csv(&consensus_path)?;
            fit.workers.write_json(out.join("workers.json"))?;
            eprintln!("dawid-skene stopped after {} iterations", fit.iterations);
        }
        MethodArg::Minmax => {
            let mut cfg = MinmaxConfig {
                exec,
                ..MinmaxConfig::default()
            };
            if let Some(v) = args.max_iter {
                cfg.outer_iters = v;
            }
            if let Some(v) = args.tol {
                cfg.tol = v;
            }
            if let Some(v) = args.alpha {
                cfg.alpha = v;
            }
            if let Some(v) = args.beta {
                cfg.beta = v;
            }
            let fit = minmax_entropy(&ann, cfg)?;
            fit.consensus.write_csv(&consensus_path)?;
            fit.workers.write_json(out.join("workers.json"))?;
            eprintln!("minmax stopped after {} outer iterations", fit.outer_iterations);
        }
    }
    println!("wrote {}", consensus_path.display());
    Ok(())
}

fn cmd_difficulty(args: &DifficultyArgs, seed: Option<u64>, exec: Execution, out: &Path) -> Result<()> {
    let task = Task::from(args.task);
    let scores = match args.criterion {
        CriterionArg::C1 => {
            if args.data.features_path().is_none() {
                usage_error("--criterion c1 needs --features: it trains a model on all training items");
            }
            let exp = ExperimentArgs {
                config: args.config.clone(),
                task: Some(args.task),
                criterion: Some(ConditionArg::C1),
                ..ExperimentArgs::default()
            };
            let (data, mut cfg) = resolve_experiment(&args.data, &exp, seed, exec)?;
            cfg.with_baselines = false;
            let loaded = load_experiment_data(&data)?;
            let data = loaded.view();
            let prepared = prepare_task(task, data)?;
            training_difficulty(Criterion::C1Error, &cfg, data, &prepared)?
        }
        CriterionArg::C2 => {
            let ann = args.data.load_annotations()?;
            match task {
                Task::Regression => criterion2_regression(&ann)?,
                Task::Multiclass => criterion2_categorical(&ann)?,
                Task::Binary => {
                    let means = aggregate_mean(&ann)?;
                    let mut values = means.scores().expect("mean scores").to_vec();
                    values.sort_by(f64::total_cmp);
                    let n = values.len();
                    let median = if n % 2 == 1 {
                        values[n / 2]
                    } else {
                        0.5 * (values[n / 2 - 1] + values[n / 2])
                    };
                    difficulty_for_binary(&ann, median)?
                }
            }
        }
        CriterionArg::C3 => {
            let ann = args.data.load_annotations()?;
            let fit = minmax_entropy(
                &ann,
                MinmaxConfig {
                    exec,
                    ..MinmaxConfig::default()
                },
            )?;
            criterion3_minmax(task, ann.item_ids(), &fit.items)?
        }
    };
    write_difficulty(&scores, out)
}

fn write_difficulty(scores: &DifficultyScore, out: &Path) -> Result<()> {
    create_dir(out)?;
    let path = out.join("difficulty.csv");
    scores.write_csv(&path)?;
    println!("wrote {} scores to {}", scores.scores.len(), path.display());
    Ok(())
}

/// Data paths after merging the config file with the command line.
struct ResolvedData {
    annotations: PathBuf,
    features: PathBuf,
    splits: PathBuf,
    label_space: LabelSpace,
}

struct LoadedData {
    annotations: AnnotationSet,
    features: FeatureMatrix,
    split: DatasetSplit,
}

impl LoadedData {
    fn view(&self) -> ExperimentData<'_> {
        ExperimentData {
            annotations: &self.annotations,
            features: &self.features,
            split: &self.split,
        }
    }
}

fn load_experiment_data(data: &ResolvedData) -> Result<LoadedData> {
    let annotations = load_annotations(&data.annotations, &data.label_space)
        .with_context(|| format!("loading {}", data.annotations.display()))?;
    let features = load_features_for(&data.features, annotations.item_ids())
        .with_context(|| format!("loading {}", data.features.display()))?;
    Ok(LoadedData {
        annotations,
        features,
        split: DatasetSplit::load(&data.splits).with_context(|| format!("loading {}", data.splits.display()))?,
    })
}

fn resolve_experiment(
    data: &DataArgs,
    exp: &ExperimentArgs,
    seed: Option<u64>,
    exec: Execution,
) -> Result<(ResolvedData, ExperimentConfig)> {
    let file = match &exp.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut file =
                serde_json::from_str::<RunFile>(&text).with_context(|| format!("parsing config {}", path.display()))?;
            // Relative data paths are taken from the config's own directory.
            let base = path.parent().unwrap_or(Path::new(""));
            for p in [
                &mut file.annotations,
                &mut file.features,
                &mut file.splits,
                &mut file.label_space,
            ] {
                if let Some(p) = p.as_mut().filter(|p| p.is_relative()) {
                    *p = base.join(&*p);
                }
            }
            file
        }
        None => RunFile::default(),
    };
    let mut merged = data.clone();
    merged.annotations = data.annotations.clone().or(file.annotations);
    merged.features = data.features.clone().or(file.features);
    merged.splits = data.splits.clone().or(file.splits);
    if data.classes.is_none() && data.levels.is_none() {
        merged.label_space = data.label_space.clone().or(file.label_space);
    }
    let resolved = ResolvedData {
        annotations: merged.annotations_path()?,
        features: merged
            .features_path()
            .context("no features file: pass --features or --data")?,
        splits: merged
            .splits_path()
            .context("no splits file: pass --splits or --data")?,
        label_space: merged.label_space()?,
    };

    let mut cfg = file.experiment;
    if let Some(t) = exp.task {
        cfg.task = t.into();
    }
    if let Some(c) = exp.criterion {
        cfg.condition = c.into();
    }
    if let Some(v) = exp.bins {
        cfg.n_bins = v;
    }
    if let Some(v) = exp.epochs_per_stage {
        cfg.epochs_per_stage = v;
    }
    if let Some(v) = &exp.lr_grid {
        cfg.lr_grid = LrGrid::new(v.clone())?;
    }
    if let Some(v) = &exp.hidden {
        cfg.hidden_sizes = v.clone();
    }
    if let Some(v) = exp.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = exp.trials {
        cfg.n_trials = v;
    }
    if let Some(v) = exp.search_seed {
        cfg.search_seed = v;
    }
    if let Some(v) = &exp.label {
        cfg.label = Some(v.clone());
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.exec = exec;
    cfg.validate()?;
    Ok((resolved, cfg))
}

fn cmd_plan(args: &PlanArgs, seed: Option<u64>, exec: Execution, out: &Path) -> Result<()> {
    let (data, cfg) = resolve_experiment(&args.data, &args.experiment, seed, exec)?;
    let loaded = load_experiment_data(&data)?;
    let view = loaded.view();
    let prepared = prepare_task(cfg.task, view)?;
    let plan = plan(cfg.condition, &cfg, view, &prepared)?;
    create_dir(out)?;
    let path = out.join("schedule.json");
    plan.schedule.save(&path)?;
    if let Some(scores) = &plan.difficulty {
        scores.write_csv(out.join("difficulty.csv"))?;
    }
    let sizes: Vec<usize> = plan.schedule.bins.iter().map(Vec::len).collect();
    println!("bins {sizes:?}, rates {:?}", plan.schedule.rates);
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_run(args: &RunArgs, seed: Option<u64>, exec: Execution, out: &Path) -> Result<()> {
    let (data, mut cfg) = resolve_experiment(&args.data, &args.experiment, seed, exec)?;
    if args.with_baselines {
        cfg.with_baselines = true;
    }
    let loaded = load_experiment_data(&data)?;
    let outcome = run_experiment(&cfg, loaded.view())?;
    create_dir(out)?;
    outcome.report.write_outputs(out)?;
    if args.save_models {
        let dir = out.join("models");
        create_dir(&dir)?;
        for (trial, model) in outcome.models.iter().enumerate() {
            save_checkpoint(dir.join(format!("trial_{trial:02}.nnw")), model)?;
        }
    }
    print!(
        "{}",
        render_table(std::slice::from_ref(&outcome.report), TableFormat::Markdown)
    );
    println!("wrote report to {}", out.display());
    Ok(())
}

fn cmd_report(args: &ReportArgs, out: Option<&Path>) -> Result<()> {
    let reports = args
        .reports
        .iter()
        .map(|p| EvalReport::load(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    if reports.is_empty() {
        bail!("no reports given");
    }
    let (format, name) = match args.format {
        FormatArg::Md => (TableFormat::Markdown, "table.md"),
        FormatArg::Csv => (TableFormat::Csv, "table.csv"),
    };
    let table = render_table(&reports, format);
    print!("{table}");
    if let Some(dir) = out {
        create_dir(dir)?;
        fs::write(dir.join(name), &table)?;
    }
    Ok(())
}
