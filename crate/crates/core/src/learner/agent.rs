//! ε-greedy control, TD targets, the squared TD loss and SGD updates.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::qfunc::QFunction;
use super::replay::Transition;
use crate::error::{Error, Result};
use crate::quantum::{FeatureVector, InitScheme, NUM_ACTIONS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    /// Unset means the backend default (1e-3 for the circuit, 5e-4 for the network).
    pub lr: Option<f64>,
    pub batch_size: usize,
    pub capacity: usize,
    pub target_sync_period: usize,
    pub eps_start: f64,
    pub eps_min: f64,
    pub eps_decay: f64,
    pub double_q: bool,
    /// Transitions collected before the first gradient step.
    pub warmup: usize,
    pub vqc_layers: usize,
    pub init: InitScheme,
    pub init_scale: f64,
    pub hidden: Vec<usize>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            lr: None,
            batch_size: 32,
            capacity: 10_000,
            target_sync_period: 100,
            eps_start: 1.0,
            eps_min: 0.05,
            eps_decay: 0.98,
            double_q: false,
            warmup: 500,
            vqc_layers: 3,
            init: InitScheme::Uniform,
            init_scale: 0.1,
            hidden: vec![64, 64],
        }
    }
}

pub const VQC_DEFAULT_LR: f64 = 1e-3;
pub const NEURAL_DEFAULT_LR: f64 = 5e-4;

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config("agent.gamma", format!("must lie in [0, 1), got {}", self.gamma)));
        }
        if let Some(lr) = self.lr {
            if !(lr.is_finite() && lr >= 0.0) {
                return Err(Error::config("agent.lr", format!("must be >= 0, got {lr}")));
            }
        }
        for (key, v) in [
            ("batch_size", self.batch_size),
            ("capacity", self.capacity),
            ("target_sync_period", self.target_sync_period),
            ("vqc_layers", self.vqc_layers),
        ] {
            if v == 0 {
                return Err(Error::config(format!("agent.{key}"), "must be >= 1"));
            }
        }
        if !(self.eps_min > 0.0 && self.eps_min <= self.eps_start && self.eps_start <= 1.0) {
            return Err(Error::config("agent.eps_min", "need 0 < eps_min <= eps_start <= 1"));
        }
        if !(self.eps_decay > 0.0 && self.eps_decay <= 1.0) {
            return Err(Error::config("agent.eps_decay", "must lie in (0, 1]"));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::config("agent.init_scale", "must be >= 0"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config("agent.hidden", "need at least one non-empty hidden layer"));
        }
        Ok(())
    }
}

/// Per-episode exploration schedule `ε ← max(ε_min, ε·decay)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub current: f64,
    pub min: f64,
    pub decay: f64,
}

impl EpsilonSchedule {
    pub fn new(cfg: &AgentConfig) -> Self {
        Self { current: cfg.eps_start, min: cfg.eps_min, decay: cfg.eps_decay }
    }

    pub fn advance(&mut self) {
        self.current = (self.current * self.decay).max(self.min);
    }
}

/// Index of the largest value, lowest index on ties.
pub fn greedy(q: &[f64; NUM_ACTIONS]) -> usize {
    let mut best = 0;
    for a in 1..NUM_ACTIONS {
        if q[a] > q[best] {
            best = a;
        }
    }
    best
}

/// Uniform over the 15 actions with probability `epsilon`, greedy otherwise.
pub fn select_action<Q: QFunction, R: Rng + ?Sized>(q: &Q, s: &FeatureVector, epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..NUM_ACTIONS)
    } else {
        greedy(&q.q_values(s))
    }
}

/// Bootstrapped target for one transition; terminal transitions ignore `s'`.
pub fn td_target<Q: QFunction>(tr: &Transition, target: &Q, online: &Q, gamma: f64, double_q: bool) -> f64 {
    if tr.done {
        return tr.r;
    }
    let next = target.q_values(&tr.s_next);
    let bootstrap = if double_q {
        next[greedy(&online.q_values(&tr.s_next))]
    } else {
        next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    tr.r + gamma * bootstrap
}

fn check_batch(batch: &[Transition], targets: &[f64]) -> Result<()> {
    if batch.is_empty() || batch.len() != targets.len() {
        return Err(Error::EmptyBatch { batch: batch.len(), targets: targets.len() });
    }
    Ok(())
}

/// Mean squared TD error over the batch.
pub fn loss<Q: QFunction>(q: &Q, batch: &[Transition], targets: &[f64]) -> Result<f64> {
    check_batch(batch, targets)?;
    let sum: f64 = batch
        .iter()
        .zip(targets)
        .map(|(tr, y)| (q.q_values(&tr.s)[tr.a] - y).powi(2))
        .sum();
    Ok(sum / batch.len() as f64)
}

/// One SGD step on the batch loss. Targets are constants. Returns the loss
/// before the update.
///
/// Per-sample gradients may be computed in parallel; they are summed in batch
/// order so the result is bit-reproducible.
pub fn gradient_step<Q: QFunction>(q: &mut Q, batch: &[Transition], targets: &[f64], lr: f64) -> Result<f64> {
    check_batch(batch, targets)?;
    let per_sample: Vec<(f64, Vec<f64>)> = batch
        .par_iter()
        .zip(targets.par_iter())
        .map(|(tr, y)| {
            let err = q.q_values(&tr.s)[tr.a] - y;
            let g = if err == 0.0 { Vec::new() } else { q.grad_q(&tr.s, tr.a) };
            (err, g)
        })
        .collect();

    let m = batch.len() as f64;
    let mut params = q.params();
    let mut grad = vec![0.0; params.len()];
    let mut total = 0.0;
    for (err, g) in &per_sample {
        total += err * err;
        let coef = 2.0 * err / m;
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc += coef * gi;
        }
    }
    let batch_loss = total / m;
    if let Some((index, &value)) = grad.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteGradient { index, value, loss: batch_loss });
    }
    if lr != 0.0 {
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= lr * g;
        }
        q.set_params(&params)?;
    }
    Ok(batch_loss)
}

/// Copies the online parameters into the target.
pub fn sync_target<Q: QFunction>(online: &Q, target: &mut Q) -> Result<()> {
    let (a, b) = (online.architecture(), target.architecture());
    if a != b {
        return Err(Error::ArchitectureMismatch { expected: a, found: b });
    }
    target.set_params(&online.params())
}
