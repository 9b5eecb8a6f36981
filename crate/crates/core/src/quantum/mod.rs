//! Statevector simulation and the variational-circuit Q-function.

mod statevector;
mod vqc;

pub use statevector::{apply_gate, expectation, GateKind, GateSpec, PauliProduct, Statevector};
pub use vqc::{
    action_observable, build_circuit, parameter_shift_grad, q_values, run_circuit, FeatureVector,
    InitScheme, VqcCheckpoint, VqcGradient, VqcParams, NUM_ACTIONS, QUBITS, ROTATIONS_PER_QUBIT,
};
