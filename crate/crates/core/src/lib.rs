//! Variational-circuit Q-learning for joint autonomous driving and RF/THz
//! base-station selection, with a classical deep-Q baseline over the same
//! environment.
//!
//! * [`quantum`]: statevector simulator and circuit Q-function
//! * [`traffic`]: ring-road kinematics with IDM background traffic
//! * [`radio`]: two-tier SINR, rates, candidate sets, association rules
//! * [`env`]: the decision process tying the two together
//! * [`learner`]: replay memory, TD targets, SGD, training and evaluation
//! * [`experiment`]: configuration files, CSV outputs, runs and sweeps

pub mod bandit;
pub mod env;
pub mod error;
pub mod experiment;
pub mod learner;
pub mod quantum;
pub mod radio;
pub mod seed;
pub mod traffic;

pub use env::{EnvConfig, JointAction, MomdpEnv, Observation, RewardVector, SimConfig, WorldState};
pub use error::{Error, Result};
pub use learner::{Agent, AgentConfig, MetricsLog, NeuralQ, QFunction, Transition, VqcQ};
pub use quantum::{FeatureVector, Statevector, VqcParams, NUM_ACTIONS, QUBITS};
