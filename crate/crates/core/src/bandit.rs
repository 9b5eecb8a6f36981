//! A small contextual bandit with an exactly known optimal policy.
//!
//! Four contexts are encoded as 0/1 feature patterns, so the circuit maps
//! them (near zero angles) onto computational basis states. The reward of
//! action `a` in context `s` is `ρ_a · parity_a(s)`, where `parity_a` is the
//! ±1 eigenvalue of the action's Z-product on that basis state. Every episode
//! is one step long.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{EnvStep, Environment, RewardVector, StepInfo};
use crate::error::{Error, Result};
use crate::learner::{greedy, QFunction};
use crate::quantum::{action_observable, FeatureVector, NUM_ACTIONS, QUBITS};

const PATTERNS: [[u8; QUBITS]; 4] = [
    [0, 0, 0, 0, 0],
    [1, 0, 1, 1, 0],
    [0, 1, 1, 0, 1],
    [1, 1, 0, 1, 1],
];
const MIN_MARGIN: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct ContextualBandit {
    contexts: Vec<FeatureVector>,
    rewards: Vec<[f64; NUM_ACTIONS]>,
    current: Option<usize>,
}

fn parity(pattern: &[u8; QUBITS], action: usize) -> f64 {
    let obs = action_observable(action).expect("action < 15");
    let ones = obs.support().iter().filter(|&&q| pattern[q] == 1).count();
    if ones % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl ContextualBandit {
    /// Draws action scales until every context has a unique optimum with a
    /// margin of at least 0.1 over the runner-up.
    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let contexts: Vec<FeatureVector> = PATTERNS
            .iter()
            .map(|p| FeatureVector::new(p.map(f64::from)).expect("0/1 features"))
            .collect();
        loop {
            let scales: [f64; NUM_ACTIONS] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let rewards: Vec<[f64; NUM_ACTIONS]> = PATTERNS
                .iter()
                .map(|p| std::array::from_fn(|a| scales[a] * parity(p, a)))
                .collect();
            let ok = rewards.iter().all(|r| {
                let mut sorted = *r;
                sorted.sort_by(|a, b| b.total_cmp(a));
                sorted[0] - sorted[1] >= MIN_MARGIN
            });
            if ok {
                return Self { contexts, rewards, current: None };
            }
        }
    }

    pub fn contexts(&self) -> &[FeatureVector] {
        &self.contexts
    }

    pub fn reward(&self, context: usize, action: usize) -> f64 {
        self.rewards[context][action]
    }

    /// Best action per context by exhaustive enumeration.
    pub fn optimal_actions(&self) -> Vec<usize> {
        self.rewards
            .iter()
            .map(|r| {
                let mut best = 0;
                for a in 0..NUM_ACTIONS {
                    if r[a] > r[best] {
                        best = a;
                    }
                }
                best
            })
            .collect()
    }

    /// Fraction of contexts where `q`'s greedy action is optimal.
    pub fn greedy_accuracy<Q: QFunction>(&self, q: &Q) -> f64 {
        let opt = self.optimal_actions();
        let hits = self
            .contexts
            .iter()
            .zip(&opt)
            .filter(|(s, &o)| greedy(&q.q_values(s)) == o)
            .count();
        hits as f64 / self.contexts.len() as f64
    }
}

impl Environment for ContextualBandit {
    fn reset(&mut self, seed: u64) -> Result<FeatureVector> {
        let idx = ChaCha8Rng::seed_from_u64(seed).random_range(0..self.contexts.len());
        self.current = Some(idx);
        Ok(self.contexts[idx])
    }

    fn step(&mut self, action: usize) -> Result<EnvStep> {
        let ctx = self.current.take().ok_or(Error::EpisodeDone)?;
        if action >= NUM_ACTIONS {
            return Err(Error::InvalidAction { kind: "joint", index: action });
        }
        Ok(EnvStep {
            features: self.contexts[ctx],
            reward: RewardVector::new(self.rewards[ctx][action], 0.0),
            done: true,
            info: StepInfo::default(),
        })
    }
}
