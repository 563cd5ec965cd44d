//! Synthetic crowd-labelled datasets with known difficulty and ability.
//!
//! Workers answer through a Rasch-style link: worker `j` labels item `i`
//! correctly with probability `logistic(a_j - slope · δ_i)`. Features carry
//! class (or score) information plus Gaussian noise whose scale grows with
//! δ_i, so items that confuse annotators are also harder to separate.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::{AnnotationSet, FeatureMatrix, LabelSpace};
use crate::error::{Error, Result};

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_items: usize,
    pub n_workers: usize,
    pub labels_per_item: usize,
    pub label_space: LabelSpace,
    pub feature_dim: usize,
    /// δ_i ~ uniform(lo, hi).
    pub difficulty_range: (f64, f64),
    /// a_j ~ normal(ability_mean, ability_std).
    pub ability_mean: f64,
    pub ability_std: f64,
    /// The first `low_ability_workers` workers draw from
    /// normal(ability_mean - low_ability_shift, ability_std).
    pub low_ability_workers: usize,
    pub low_ability_shift: f64,
    /// Slope `c` of the difficulty term in the logistic link.
    pub difficulty_slope: f64,
    pub noise_scale: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn categorical(n_items: usize, n_workers: usize, classes: usize, seed: u64) -> Result<Self> {
        Ok(SimConfig {
            n_items,
            n_workers,
            labels_per_item: 5.min(n_workers),
            label_space: LabelSpace::with_classes(classes)?,
            feature_dim: 16,
            difficulty_range: (0.0, 1.0),
            ability_mean: 3.0,
            ability_std: 0.5,
            low_ability_workers: 0,
            low_ability_shift: 3.0,
            difficulty_slope: 4.0,
            noise_scale: 0.5,
            seed,
        })
    }

    pub fn ordinal(n_items: usize, n_workers: usize, levels: u32, seed: u64) -> Result<Self> {
        Ok(SimConfig {
            label_space: LabelSpace::ordinal(levels)?,
            noise_scale: 1.0,
            ..Self::categorical(n_items, n_workers, 2, seed)?
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.label_space.validate()?;
        if self.n_items == 0 || self.n_workers == 0 || self.labels_per_item == 0 || self.feature_dim == 0 {
            return Err(Error::config("simulation counts must be positive"));
        }
        if self.labels_per_item > self.n_workers {
            return Err(Error::config(format!(
                "labels_per_item ({}) exceeds n_workers ({})",
                self.labels_per_item, self.n_workers
            )));
        }
        if self.low_ability_workers > self.n_workers {
            return Err(Error::config("more low-ability workers than workers"));
        }
        let (lo, hi) = self.difficulty_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::config("difficulty_range must satisfy lo <= hi"));
        }
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_nonneg(self.ability_std) || !finite_nonneg(self.noise_scale) || !self.ability_mean.is_finite() {
            return Err(Error::config(
                "ability and noise parameters must be finite, spreads non-negative",
            ));
        }
        Ok(())
    }
}

/// Ground truth behind a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    pub item_ids: Vec<String>,
    pub worker_ids: Vec<String>,
    /// Class index (categorical) or latent score (ordinal).
    pub true_labels: Vec<f64>,
    pub difficulty: Vec<f64>,
    pub ability: Vec<f64>,
    /// Workers assigned to each item.
    pub assignments: Vec<Vec<usize>>,
}

impl SimTruth {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub annotations: AnnotationSet,
    pub features: FeatureMatrix,
    pub truth: SimTruth,
}

pub fn item_id(i: usize) -> String {
    format!("i{i:06}")
}

pub fn worker_id(j: usize) -> String {
    format!("w{j:04}")
}

struct Common {
    rng: ChaCha8Rng,
    item_ids: Vec<String>,
    worker_ids: Vec<String>,
    difficulty: Vec<f64>,
    ability: Vec<f64>,
    assignments: Vec<Vec<usize>>,
}

fn draw_common(cfg: &SimConfig) -> Result<Common> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = cfg.difficulty_range;
    let difficulty: Vec<f64> = (0..cfg.n_items)
        .map(|_| if hi > lo { rng.random_range(lo..hi) } else { lo })
        .collect();
    let ability: Vec<f64> = (0..cfg.n_workers)
        .map(|j| {
            let shift = if j < cfg.low_ability_workers {
                cfg.low_ability_shift
            } else {
                0.0
            };
            let z: f64 = StandardNormal.sample(&mut rng);
            cfg.ability_mean - shift + cfg.ability_std * z
        })
        .collect();
    let assignments = (0..cfg.n_items)
        .map(|_| {
            let mut w = sample(&mut rng, cfg.n_workers, cfg.labels_per_item).into_vec();
            w.sort_unstable();
            w
        })
        .collect();
    Ok(Common {
        rng,
        item_ids: (0..cfg.n_items).map(item_id).collect(),
        worker_ids: (0..cfg.n_workers).map(worker_id).collect(),
        difficulty,
        ability,
        assignments,
    })
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Array1<f64> {
    let mut v: Array1<f64> = Array1::from_shape_simple_fn(dim, || StandardNormal.sample(rng));
    let norm = v.dot(&v).sqrt();
    if norm > 0.0 {
        v /= norm;
    } else {
        v[0] = 1.0;
    }
    v
}

fn noisy_row(rng: &mut ChaCha8Rng, center: &Array1<f64>, std: f64) -> Array1<f64> {
    center.mapv(|c| {
        let z: f64 = StandardNormal.sample(rng);
        c + std * z
    })
}

/// Categorical labels; the true class is uniform over the K classes.
pub fn simulate_categorical(cfg: &SimConfig) -> Result<Simulation> {
    let k = match &cfg.label_space {
        LabelSpace::Categorical { class_names } => class_names.len(),
        LabelSpace::Ordinal { .. } => {
            return Err(Error::LabelSpace(
                "simulate_categorical needs a categorical space".into(),
            ))
        }
    };
    let mut common = draw_common(cfg)?;
    let rng = &mut common.rng;
    let centers: Vec<Array1<f64>> = (0..k).map(|_| unit_vector(rng, cfg.feature_dim)).collect();
    let mut rows = Vec::with_capacity(cfg.n_items * cfg.labels_per_item);
    let mut truth = Vec::with_capacity(cfg.n_items);
    let mut features = Array2::zeros((cfg.n_items, cfg.feature_dim));
    for i in 0..cfg.n_items {
        let class = rng.random_range(0..k);
        truth.push(class as f64);
        for &j in &common.assignments[i] {
            let p = logistic(common.ability[j] - cfg.difficulty_slope * common.difficulty[i]);
            let label = if k == 1 || rng.random::<f64>() < p {
                class
            } else {
                // uniform over the other K-1 classes
                let other = rng.random_range(0..k - 1);
                if other >= class {
                    other + 1
                } else {
                    other
                }
            };
            rows.push((common.item_ids[i].clone(), common.worker_ids[j].clone(), label as f64));
        }
        let std = cfg.noise_scale * (0.5 + common.difficulty[i]);
        features.row_mut(i).assign(&noisy_row(rng, &centers[class], std));
    }
    finish(cfg, common, rows, truth, features)
}

/// Ordinal scores around a latent value `v_i ~ uniform(1, L)`.
pub fn simulate_ordinal(cfg: &SimConfig) -> Result<Simulation> {
    let levels = match cfg.label_space {
        LabelSpace::Ordinal { num_levels } => num_levels as f64,
        LabelSpace::Categorical { .. } => {
            return Err(Error::LabelSpace("simulate_ordinal needs an ordinal space".into()))
        }
    };
    let mut common = draw_common(cfg)?;
    let rng = &mut common.rng;
    let direction = unit_vector(rng, cfg.feature_dim);
    let latent = Uniform::new_inclusive(1.0, levels).expect("levels >= 2");
    let mut rows = Vec::with_capacity(cfg.n_items * cfg.labels_per_item);
    let mut truth = Vec::with_capacity(cfg.n_items);
    let mut features = Array2::zeros((cfg.n_items, cfg.feature_dim));
    for i in 0..cfg.n_items {
        let v: f64 = latent.sample(rng);
        truth.push(v);
        let base = cfg.noise_scale * (0.5 + common.difficulty[i]);
        for &j in &common.assignments[i] {
            let std = base / logistic(common.ability[j]);
            let eps = Normal::new(0.0, std)
                .map_err(|e| Error::config(e.to_string()))?
                .sample(rng);
            let score = (v + eps).clamp(1.0, levels).round();
            rows.push((common.item_ids[i].clone(), common.worker_ids[j].clone(), score));
        }
        features.row_mut(i).assign(&noisy_row(rng, &(&direction * v), base));
    }
    finish(cfg, common, rows, truth, features)
}

fn finish(
    cfg: &SimConfig,
    common: Common,
    rows: Vec<(String, String, f64)>,
    true_labels: Vec<f64>,
    features: Array2<f64>,
) -> Result<Simulation> {
    let annotations = AnnotationSet::new(cfg.label_space.clone(), rows)?;
    let features = FeatureMatrix::new(common.item_ids.clone(), features)?;
    Ok(Simulation {
        annotations,
        features,
        truth: SimTruth {
            item_ids: common.item_ids,
            worker_ids: common.worker_ids,
            true_labels,
            difficulty: common.difficulty,
            ability: common.ability,
            assignments: common.assignments,
        },
    })
}

/// Dispatches on the label space.
pub fn simulate(cfg: &SimConfig) -> Result<Simulation> {
    match cfg.label_space {
        LabelSpace::Categorical { .. } => simulate_categorical(cfg),
        LabelSpace::Ordinal { .. } => simulate_ordinal(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::difficulty::{criterion2_categorical, criterion2_regression};

    #[test]
    fn saturated_ability_reproduces_truth() {
        let mut cfg = SimConfig::categorical(200, 10, 4, 3).unwrap();
        // logistic(a - 4δ) rounds to exactly 1.0 for a ≥ 45
        cfg.ability_mean = 60.0;
        cfg.ability_std = 0.0;
        let sim = simulate_categorical(&cfg).unwrap();
        for (i, truth) in sim.truth.true_labels.iter().enumerate() {
            assert!(sim.annotations.labels_of(i).iter().all(|l| l == truth));
        }
        let d = criterion2_categorical(&sim.annotations).unwrap();
        assert!(d.scores.values().all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_same_dataset() {
        let cfg = SimConfig::categorical(50, 8, 3, 42).unwrap();
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.annotations, b.annotations);
        assert_eq!(a.features, b.features);
        assert_eq!(a.truth, b.truth);
        let ord = SimConfig::ordinal(50, 8, 7, 42).unwrap();
        assert_eq!(simulate(&ord).unwrap().truth, simulate(&ord).unwrap().truth);
    }

    #[test]
    fn assignments_are_distinct_workers() {
        let cfg = SimConfig::categorical(100, 6, 3, 1).unwrap();
        let sim = simulate(&cfg).unwrap();
        for (i, a) in sim.truth.assignments.iter().enumerate() {
            assert_eq!(a.len(), cfg.labels_per_item);
            assert!(a.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(sim.annotations.count(i), cfg.labels_per_item);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = SimConfig::categorical(10, 5, 3, 1).unwrap();
        cfg.labels_per_item = 6;
        assert!(simulate(&cfg).is_err());
        cfg.labels_per_item = 5;
        cfg.n_items = 0;
        assert!(simulate(&cfg).is_err());
        let cat = SimConfig::categorical(10, 5, 3, 1).unwrap();
        assert!(simulate_ordinal(&cat).is_err());
    }

    #[test]
    fn agreement_matches_logistic_ability_without_difficulty() {
        // Monte-Carlo oracle: with δ = 0 the chance of a correct label is
        // logistic(a_j), so the empirical rate matches the assignment average.
        let mut cfg = SimConfig::categorical(4000, 10, 4, 5).unwrap();
        cfg.difficulty_range = (0.0, 0.0);
        cfg.ability_mean = 0.5;
        cfg.ability_std = 0.8;
        let sim = simulate_categorical(&cfg).unwrap();
        let (mut hits, mut expected, mut total) = (0.0, 0.0, 0.0);
        for (i, assigned) in sim.truth.assignments.iter().enumerate() {
            let truth = sim.truth.true_labels[i];
            for (a, &j) in sim.annotations.annotations_of(i).zip(assigned) {
                assert_eq!(sim.annotations.worker_ids()[a.worker], sim.truth.worker_ids[j]);
                hits += f64::from(u8::from(a.label == truth));
                expected += logistic(sim.truth.ability[j]);
                total += 1.0;
            }
        }
        assert!(total >= 1e4);
        assert!((hits / total - expected / total).abs() < 0.015);
    }

    #[test]
    fn noiseless_ordinal_scores_are_rounded_latents() {
        let mut cfg = SimConfig::ordinal(100, 6, 7, 2).unwrap();
        cfg.noise_scale = 0.0;
        let sim = simulate_ordinal(&cfg).unwrap();
        for (i, v) in sim.truth.true_labels.iter().enumerate() {
            assert!(sim.annotations.labels_of(i).iter().all(|&s| s == v.round()));
        }
        let d = criterion2_regression(&sim.annotations).unwrap();
        assert!(d.scores.values().all(|&v| v == 0.0));
    }

    #[test]
    fn harder_ordinal_items_disagree_more() {
        let variance_at = |delta: f64| {
            let mut cfg = SimConfig::ordinal(10_000, 10, 7, 17).unwrap();
            cfg.difficulty_range = (delta, delta);
            let sim = simulate_ordinal(&cfg).unwrap();
            let d = criterion2_regression(&sim.annotations).unwrap();
            d.scores.values().sum::<f64>() / d.scores.len() as f64
        };
        let (easy, hard) = (variance_at(0.1), variance_at(0.9));
        assert!(hard > easy, "easy {easy} hard {hard}");
    }
}
