//! Regularized minimax conditional entropy aggregation.
//!
//! The labeling distribution of worker `j` on item `i` is parameterized in
//! its dual (exponential-family) form
//!
//! ```text
//! P_ij(k | c) = exp(σ_j(c,k) + τ_i(c,k)) / Σ_k' exp(σ_j(c,k') + τ_i(c,k'))
//! ```
//!
//! where σ_j captures worker ability and τ_i the item's own confusion. The
//! solver alternates (a) block gradient ascent on the L2-regularized expected
//! log-likelihood over σ and τ given the posterior Q, halving the step until
//! it gives a sufficient increase, and (b) the posterior update
//! `Q(i,c) ∝ exp(Σ_j log P_ij(ỹ_ij | c))` under a uniform class prior.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::dawid_skene::argmax_rows;
use super::{max_abs_diff, softmax_in_place, vote_proportions, Consensus, ConsensusResult, Method, WorkerModel};
use crate::data::{AnnotationSet, ClassView};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Halvings tried before a block step is abandoned.
const MAX_HALVINGS: usize = 40;
/// A step must gain at least this fraction of `step * |grad|^2`. At one half
/// the accepted step never overshoots the block optimum, so strongly
/// regularized problems converge instead of oscillating about it.
const SUFFICIENT_INCREASE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinmaxConfig {
    /// L2 weight on worker parameters σ.
    pub alpha: f64,
    /// L2 weight on item parameters τ.
    pub beta: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub tol: f64,
    /// Initial gradient step, restored at the start of every outer iteration.
    pub step: f64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for MinmaxConfig {
    fn default() -> Self {
        MinmaxConfig {
            alpha: 0.25,
            beta: 5.0,
            outer_iters: 50,
            inner_iters: 20,
            tol: 1e-6,
            step: 0.1,
            exec: Execution::default(),
        }
    }
}

/// Dual variables τ_i of one item.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemConfusion {
    pub tau: Array2<f64>,
}

impl ItemConfusion {
    pub fn num_classes(&self) -> usize {
        self.tau.nrows()
    }

    /// P_ij(· | c) for a worker with ability matrix `sigma`.
    pub fn conditional(&self, sigma: &Array2<f64>, c: usize) -> Vec<f64> {
        let mut row: Vec<f64> = (0..self.num_classes())
            .map(|k| sigma[[c, k]] + self.tau[[c, k]])
            .collect();
        softmax_in_place(&mut row);
        row
    }

    /// exp(τ_i) with each row normalized to sum to one.
    pub fn row_normalized(&self) -> Array2<f64> {
        let mut out = self.tau.clone();
        for mut row in out.rows_mut() {
            let slice = row.as_slice_mut().expect("standard layout");
            softmax_in_place(slice);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct MinmaxFit {
    pub consensus: ConsensusResult,
    pub workers: WorkerModel,
    pub items: Vec<ItemConfusion>,
    /// Regularized objective after every accepted block step.
    pub objective_trace: Vec<f64>,
    pub outer_iterations: usize,
}

struct Problem<'a> {
    view: &'a ClassView,
    by_worker: Vec<Vec<(usize, usize)>>,
    k: usize,
    cfg: MinmaxConfig,
}

/// Flat parameter blocks, K×K row-major per worker / item.
#[derive(Clone)]
struct Params {
    sigma: Vec<f64>,
    tau: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Block {
    Sigma,
    Tau,
}

impl Problem<'_> {
    fn kk(&self) -> usize {
        self.k * self.k
    }

    fn sigma_of<'p>(&self, p: &'p Params, j: usize) -> &'p [f64] {
        &p.sigma[j * self.kk()..(j + 1) * self.kk()]
    }

    fn tau_of<'p>(&self, p: &'p Params, i: usize) -> &'p [f64] {
        &p.tau[i * self.kk()..(i + 1) * self.kk()]
    }

    /// Writes P(· | c) for the given σ_j, τ_i into `out`.
    fn conditional(&self, s: &[f64], t: &[f64], c: usize, out: &mut [f64]) {
        let row = c * self.k;
        for kk in 0..self.k {
            out[kk] = s[row + kk] + t[row + kk];
        }
        softmax_in_place(out);
    }

    fn log_conditional(&self, s: &[f64], t: &[f64], c: usize, label: usize) -> f64 {
        let row = c * self.k;
        let mut max = f64::NEG_INFINITY;
        for kk in 0..self.k {
            max = max.max(s[row + kk] + t[row + kk]);
        }
        let lse = max
            + (0..self.k)
                .map(|kk| (s[row + kk] + t[row + kk] - max).exp())
                .sum::<f64>()
                .ln();
        s[row + label] + t[row + label] - lse
    }

    fn objective(&self, p: &Params, q: &Array2<f64>) -> f64 {
        let per_item = par::map_range(self.cfg.exec, self.view.num_items(), |i| {
            let t = self.tau_of(p, i);
            let mut acc = 0.0;
            for &(j, label) in &self.view.per_item[i] {
                let s = self.sigma_of(p, j);
                for c in 0..self.k {
                    let w = q[[i, c]];
                    if w > 0.0 {
                        acc += w * self.log_conditional(s, t, c, label);
                    }
                }
            }
            acc
        });
        let ll: f64 = per_item.iter().sum();
        let s2: f64 = p.sigma.iter().map(|v| v * v).sum();
        let t2: f64 = p.tau.iter().map(|v| v * v).sum();
        ll - 0.5 * self.cfg.alpha * s2 - 0.5 * self.cfg.beta * t2
    }

    /// Gradient of the objective with respect to one parameter block.
    fn gradient(&self, p: &Params, q: &Array2<f64>, block: Block) -> Vec<f64> {
        let kk = self.kk();
        let accumulate = |s: &[f64], t: &[f64], i: usize, label: usize, g: &mut [f64], probs: &mut [f64]| {
            for c in 0..self.k {
                let w = q[[i, c]];
                if w == 0.0 {
                    continue;
                }
                self.conditional(s, t, c, probs);
                for k in 0..self.k {
                    let hit = if k == label { 1.0 } else { 0.0 };
                    g[c * self.k + k] += w * (hit - probs[k]);
                }
            }
        };
        let chunks: Vec<Vec<f64>> = match block {
            Block::Sigma => par::map_range(self.cfg.exec, self.by_worker.len(), |j| {
                let s = self.sigma_of(p, j);
                let mut g: Vec<f64> = s.iter().map(|v| -self.cfg.alpha * v).collect();
                let mut probs = vec![0.0; self.k];
                for &(i, label) in &self.by_worker[j] {
                    accumulate(s, self.tau_of(p, i), i, label, &mut g, &mut probs);
                }
                g
            }),
            Block::Tau => par::map_range(self.cfg.exec, self.view.num_items(), |i| {
                let t = self.tau_of(p, i);
                let mut g: Vec<f64> = t.iter().map(|v| -self.cfg.beta * v).collect();
                let mut probs = vec![0.0; self.k];
                for &(j, label) in &self.view.per_item[i] {
                    accumulate(self.sigma_of(p, j), t, i, label, &mut g, &mut probs);
                }
                g
            }),
        };
        let mut flat = Vec::with_capacity(chunks.len() * kk);
        for c in chunks {
            flat.extend(c);
        }
        flat
    }

    /// One ascent step on `block` with step halving. Returns the accepted
    /// objective, or `None` when no step size improved it.
    fn block_step(
        &self,
        p: &mut Params,
        q: &Array2<f64>,
        block: Block,
        current: f64,
        step: &mut f64,
    ) -> Result<Option<f64>> {
        let grad = self.gradient(p, q, block);
        if grad.iter().all(|g| g.abs() < 1e-12) {
            return Ok(None);
        }
        let norm2: f64 = grad.iter().map(|g| g * g).sum();
        for _ in 0..MAX_HALVINGS {
            let mut cand = p.clone();
            let target = match block {
                Block::Sigma => &mut cand.sigma,
                Block::Tau => &mut cand.tau,
            };
            for (v, g) in target.iter_mut().zip(&grad) {
                *v += *step * g;
            }
            let value = self.objective(&cand, q);
            if value.is_nan() || value == f64::INFINITY {
                return Err(Error::Numerical("minimax objective is not finite".into()));
            }
            if value >= current + SUFFICIENT_INCREASE * *step * norm2 {
                *p = cand;
                return Ok(Some(value));
            }
            *step *= 0.5;
        }
        Ok(None)
    }

    fn update_posterior(&self, p: &Params) -> Array2<f64> {
        let rows = par::map_range(self.cfg.exec, self.view.num_items(), |i| {
            let t = self.tau_of(p, i);
            let mut scores: Vec<f64> = (0..self.k)
                .map(|c| {
                    self.view.per_item[i]
                        .iter()
                        .map(|&(j, label)| self.log_conditional(self.sigma_of(p, j), t, c, label))
                        .sum()
                })
                .collect();
            softmax_in_place(&mut scores);
            scores
        });
        let mut q = Array2::zeros((rows.len(), self.k));
        for (i, row) in rows.into_iter().enumerate() {
            for (c, v) in row.into_iter().enumerate() {
                q[[i, c]] = v;
            }
        }
        q
    }
}

/// Jointly estimates labels, worker ability σ and item confusion τ.
pub fn minmax_entropy(ann: &AnnotationSet, cfg: MinmaxConfig) -> Result<MinmaxFit> {
    if ann.is_empty() {
        return Err(Error::Empty("annotation set".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.beta > 0.0) {
        return Err(Error::config("minmax_entropy needs alpha > 0 and beta > 0"));
    }
    if cfg.outer_iters == 0 || !(cfg.tol > 0.0) || !(cfg.step > 0.0) {
        return Err(Error::config(
            "minmax_entropy needs outer_iters >= 1, tol > 0 and step > 0",
        ));
    }
    let view = ann.class_view();
    let k = view.num_classes;
    let mut by_worker = vec![Vec::new(); view.num_workers];
    for (i, labels) in view.per_item.iter().enumerate() {
        for &(j, label) in labels {
            by_worker[j].push((i, label));
        }
    }
    let problem = Problem {
        view: &view,
        by_worker,
        k,
        cfg,
    };

    let mut params = Params {
        sigma: vec![0.0; view.num_workers * k * k],
        tau: vec![0.0; view.num_items() * k * k],
    };
    let mut q = vote_proportions(&view);
    let mut trace = Vec::new();
    let mut outer = 0;

    while outer < cfg.outer_iters {
        outer += 1;
        let mut current = problem.objective(&params, &q);
        if !current.is_finite() {
            return Err(Error::Numerical("minimax objective is not finite".into()));
        }
        trace.push(current);
        let (mut sigma_step, mut tau_step) = (cfg.step, cfg.step);
        for _ in 0..cfg.inner_iters {
            let mut moved = false;
            for (block, step) in [(Block::Sigma, &mut sigma_step), (Block::Tau, &mut tau_step)] {
                if let Some(value) = problem.block_step(&mut params, &q, block, current, step)? {
                    current = value;
                    trace.push(value);
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }

        let next = problem.update_posterior(&params);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite minimax posterior".into()));
        }
        let delta = max_abs_diff(&next, &q);
        q = next;
        if delta < cfg.tol {
            break;
        }
    }

    let kk = k * k;
    let to_matrix = |chunk: &[f64]| Array2::from_shape_vec((k, k), chunk.to_vec()).expect("K x K block");
    let sigma: Vec<Array2<f64>> = params.sigma.chunks(kk).map(to_matrix).collect();
    let items = params
        .tau
        .chunks(kk)
        .map(|c| ItemConfusion { tau: to_matrix(c) })
        .collect();

    Ok(MinmaxFit {
        consensus: ConsensusResult {
            method: Method::MinmaxEntropy,
            item_ids: ann.item_ids().to_vec(),
            consensus: Consensus::Classes(argmax_rows(&q)),
            posterior: Some(q),
            dropped: Vec::new(),
        },
        workers: WorkerModel {
            worker_ids: ann.worker_ids().to_vec(),
            sigma: Some(sigma),
            confusion: None,
        },
        items,
        objective_trace: trace,
        outer_iterations: outer,
    })
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
    fn zero_parameters_give_uniform_conditionals() {
        let item = ItemConfusion {
            tau: Array2::zeros((4, 4)),
        };
        let sigma = Array2::zeros((4, 4));
        for c in 0..4 {
            for p in item.conditional(&sigma, c) {
                assert!((p - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unanimous_labels_are_recovered() {
        let ann = table(3, &[&[0, 0, 0, 0], &[1, 1, 1, 1], &[2, 2, 2, 2], &[1, 1, 1, 1]]);
        let fit = minmax_entropy(&ann, MinmaxConfig::default()).unwrap();
        assert_eq!(fit.consensus.classes().unwrap(), &[0, 1, 2, 1]);
    }

    #[test]
    fn objective_never_decreases_within_an_outer_iteration() {
        let ann = table(
            3,
            &[
                &[0, 0, 1, -1],
                &[1, -1, 1, 2],
                &[2, 2, -1, 0],
                &[0, 1, 0, 0],
                &[1, 2, 2, -1],
            ],
        );
        let cfg = MinmaxConfig {
            outer_iters: 1,
            ..MinmaxConfig::default()
        };
        let fit = minmax_entropy(&ann, cfg).unwrap();
        assert!(fit.objective_trace.len() > 2);
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] >= w[0], "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn conditionals_are_distributions() {
        let ann = table(3, &[&[0, 1, 2], &[1, 1, 0], &[2, 0, 2]]);
        let fit = minmax_entropy(&ann, MinmaxConfig::default()).unwrap();
        let sigma = &fit.workers.sigma.as_ref().unwrap()[1];
        for item in &fit.items {
            for c in 0..3 {
                let total: f64 = item.conditional(sigma, c).iter().sum();
                assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn invalid_regularizers_are_rejected() {
        let ann = table(2, &[&[0, 1]]);
        let cfg = MinmaxConfig {
            alpha: 0.0,
            ..MinmaxConfig::default()
        };
        assert!(matches!(minmax_entropy(&ann, cfg), Err(Error::Config(_))));
    }
}
