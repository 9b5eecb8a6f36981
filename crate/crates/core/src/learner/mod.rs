//! Experience-replay Q-learning over either Q-function backend.

mod agent;
mod qfunc;
mod replay;
mod train;

pub use agent::{
    greedy, gradient_step, loss, select_action, sync_target, td_target, AgentConfig, EpsilonSchedule,
    NEURAL_DEFAULT_LR, VQC_DEFAULT_LR,
};
pub use qfunc::{DenseCheckpoint, NeuralCheckpoint, NeuralQ, QFunction, VqcQ};
pub use replay::{ReplayMemory, Transition};
pub use train::{episode_seed, eval_episode_seed, evaluate, train, Agent, EpisodeMetrics, MetricsLog};
