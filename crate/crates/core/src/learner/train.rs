//! The experience-replay Q-learning loop and greedy evaluation.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::agent::{gradient_step, select_action, sync_target, td_target, AgentConfig, EpsilonSchedule};
use super::qfunc::QFunction;
use super::replay::{ReplayMemory, Transition};
use crate::env::{EnvStep, Environment};
use crate::error::Result;
use crate::quantum::FeatureVector;
use crate::seed::{derive_seed, tag};

/// Per-episode sums.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub steps: usize,
    pub sum_r_tran: f64,
    pub sum_r_tele: f64,
    pub sum_total: f64,
    pub collided: bool,
    pub ho_count: usize,
    pub epsilon: f64,
    pub wallclock_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsLog {
    pub episodes: Vec<EpisodeMetrics>,
    /// Observation returned by each episode's reset, before any action.
    pub initial_observations: Vec<FeatureVector>,
    pub gradient_steps: usize,
}

/// Seed handed to the environment for episode `episode`.
pub fn episode_seed(seed: u64, episode: usize) -> u64 {
    derive_seed(seed, &[tag::ENV_EPISODE, episode as u64])
}

/// Seed for greedy evaluation episodes.
pub fn eval_episode_seed(seed: u64, episode: usize) -> u64 {
    derive_seed(seed, &[tag::EVAL, episode as u64])
}

/// Online and target Q-functions plus everything the training loop
/// needs between steps.
pub struct Agent<Q: QFunction> {
    pub online: Q,
    pub target: Q,
    pub memory: ReplayMemory,
    pub epsilon: EpsilonSchedule,
    pub config: AgentConfig,
    pub lr: f64,
    rng: ChaCha8Rng,
    env_steps: usize,
    gradient_steps: usize,
}

impl<Q: QFunction> Agent<Q> {
    /// `rng_seed` drives exploration and minibatch sampling only.
    pub fn new(online: Q, config: AgentConfig, lr: f64, rng_seed: u64) -> Self {
        let target = online.clone();
        Self {
            online,
            target,
            memory: ReplayMemory::new(config.capacity),
            epsilon: EpsilonSchedule::new(&config),
            lr,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, &[tag::AGENT])),
            config,
            env_steps: 0,
            gradient_steps: 0,
        }
    }

    pub fn act(&mut self, s: &FeatureVector) -> usize {
        select_action(&self.online, s, self.epsilon.current, &mut self.rng)
    }

    /// Stores the transition and, past warm-up, takes one gradient step.
    /// Returns the minibatch loss when a step was taken.
    pub fn observe(&mut self, tr: Transition) -> Result<Option<f64>> {
        self.memory.push(tr);
        self.env_steps += 1;
        let mut out = None;
        if self.memory.len() >= self.config.warmup.max(self.config.batch_size) {
            let batch = self.memory.sample(&mut self.rng, self.config.batch_size);
            let targets: Vec<f64> = batch
                .iter()
                .map(|t| td_target(t, &self.target, &self.online, self.config.gamma, self.config.double_q))
                .collect();
            out = Some(gradient_step(&mut self.online, &batch, &targets, self.lr)?);
            self.gradient_steps += 1;
        }
        if self.env_steps.is_multiple_of(self.config.target_sync_period) {
            sync_target(&self.online, &mut self.target)?;
        }
        Ok(out)
    }

    pub fn gradient_steps(&self) -> usize {
        self.gradient_steps
    }
}

/// Trains for `episodes` episodes. Episode `k` resets the environment with
/// [`episode_seed`]`(seed, k)`, so every backend sees the same initial states.
pub fn train<E: Environment, Q: QFunction>(
    env: &mut E,
    agent: &mut Agent<Q>,
    episodes: usize,
    seed: u64,
    record_wallclock: bool,
) -> Result<MetricsLog> {
    let mut log = MetricsLog::default();
    for episode in 0..episodes {
        let started = Instant::now();
        let mut s = env.reset(episode_seed(seed, episode))?;
        log.initial_observations.push(s);
        let epsilon = agent.epsilon.current;
        let mut m = EpisodeMetrics {
            episode,
            steps: 0,
            sum_r_tran: 0.0,
            sum_r_tele: 0.0,
            sum_total: 0.0,
            collided: false,
            ho_count: 0,
            epsilon,
            wallclock_ms: None,
        };
        loop {
            let a = agent.act(&s);
            let step = env.step(a)?;
            accumulate(&mut m, &step);
            agent.observe(Transition { s, a, r: step.reward.total, s_next: step.features, done: step.done })?;
            s = step.features;
            if step.done {
                break;
            }
        }
        agent.epsilon.advance();
        if record_wallclock {
            m.wallclock_ms = Some(started.elapsed().as_secs_f64() * 1e3);
        }
        log.episodes.push(m);
    }
    log.gradient_steps = agent.gradient_steps();
    Ok(log)
}

fn accumulate(m: &mut EpisodeMetrics, step: &EnvStep) {
    m.steps += 1;
    m.sum_r_tran += step.reward.r_tran;
    m.sum_r_tele += step.reward.r_tele;
    m.sum_total += step.reward.total;
    m.collided |= step.info.collided;
    m.ho_count = step.info.ho_count;
}

/// Greedy rollouts; `q` is never modified. `observer` sees every step.
pub fn evaluate<E, Q, F>(env: &mut E, q: &Q, episodes: usize, seed: u64, mut observer: F) -> Result<MetricsLog>
where
    E: Environment,
    Q: QFunction,
    F: FnMut(usize, usize, usize, &EnvStep, &E) -> Result<()>,
{
    let mut log = MetricsLog::default();
    for episode in 0..episodes {
        let mut s = env.reset(eval_episode_seed(seed, episode))?;
        log.initial_observations.push(s);
        let mut m = EpisodeMetrics {
            episode,
            steps: 0,
            sum_r_tran: 0.0,
            sum_r_tele: 0.0,
            sum_total: 0.0,
            collided: false,
            ho_count: 0,
            epsilon: 0.0,
            wallclock_ms: None,
        };
        loop {
            let a = super::agent::greedy(&q.q_values(&s));
            let step = env.step(a)?;
            accumulate(&mut m, &step);
            observer(episode, m.steps, a, &step, env)?;
            s = step.features;
            if step.done {
                break;
            }
        }
        log.episodes.push(m);
    }
    Ok(log)
}
