//! The variational Q-function.
//!
//! Each layer re-uploads the encoded features as `RX(π·f_q)`, applies a
//! trainable `RY`/`RZ` pair per qubit and closes with a ring of CZ gates.
//! Action `a` reads out a fixed Z-product: single `Z_q` for actions 0–4,
//! neighbouring pairs for 5–9 and neighbouring triples for 10–14, each scaled
//! by a trainable output weight.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::statevector::{GateSpec, PauliProduct, Statevector};
use crate::error::{Error, Result};

pub const QUBITS: usize = 5;
pub const NUM_ACTIONS: usize = 15;
pub const ROTATIONS_PER_QUBIT: usize = 2;

const GATES_PER_LAYER: usize = 4 * QUBITS;

/// Encoded observation: one entry per qubit, each in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector([f64; QUBITS]);

impl FeatureVector {
    pub fn new(values: [f64; QUBITS]) -> Result<Self> {
        check_range(&values)?;
        Ok(Self(values))
    }

    /// Clamps every entry into `[-1, 1]`; NaN maps to 0.
    pub fn clamped(values: [f64; QUBITS]) -> Self {
        Self(values.map(|v| if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) }))
    }

    pub fn values(&self) -> &[f64; QUBITS] {
        &self.0
    }
}

fn check_range(values: &[f64]) -> Result<()> {
    match values
        .iter()
        .position(|v| !(-1.0..=1.0).contains(v))
    {
        Some(index) => Err(Error::EncodingRange { index, value: values[index] }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    /// i.i.d. uniform angles in `(-scale, scale)`.
    #[default]
    Uniform,
    /// All angles zero.
    Zero,
}

/// Trainable circuit parameters.
///
/// `theta` is stored row-major as layer → qubit → rotation (RY, RZ).
#[derive(Debug, Clone, PartialEq)]
pub struct VqcParams {
    layers: usize,
    theta: Vec<f64>,
    action_weights: Vec<f64>,
}

impl VqcParams {
    pub fn zeros(layers: usize) -> Self {
        Self {
            layers,
            theta: vec![0.0; layers * QUBITS * ROTATIONS_PER_QUBIT],
            action_weights: vec![1.0; NUM_ACTIONS],
        }
    }

    pub fn init<R: Rng + ?Sized>(layers: usize, scheme: InitScheme, scale: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(layers);
        if scheme == InitScheme::Uniform && scale > 0.0 {
            for t in &mut p.theta {
                *t = rng.random_range(-scale..scale);
            }
        }
        p
    }

    pub fn from_parts(layers: usize, theta: Vec<f64>, action_weights: Vec<f64>) -> Result<Self> {
        let expected = layers * QUBITS * ROTATIONS_PER_QUBIT;
        if theta.len() != expected {
            return Err(Error::ParamLength { expected, found: theta.len() });
        }
        if action_weights.len() != NUM_ACTIONS {
            return Err(Error::ParamLength { expected: NUM_ACTIONS, found: action_weights.len() });
        }
        if let Some(v) = theta.iter().chain(&action_weights).find(|v| !v.is_finite()) {
            return Err(Error::config("theta/action_weights", format!("non-finite entry {v}")));
        }
        Ok(Self { layers, theta, action_weights })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn theta_at(&self, layer: usize, qubit: usize, rotation: usize) -> f64 {
        self.theta[theta_index(layer, qubit, rotation)]
    }

    pub fn action_weights(&self) -> &[f64] {
        &self.action_weights
    }

    pub fn action_weights_mut(&mut self) -> &mut [f64] {
        &mut self.action_weights
    }

    /// Number of trainable scalars (angles followed by output weights).
    pub fn len(&self) -> usize {
        self.theta.len() + self.action_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.theta.iter().chain(&self.action_weights).copied().collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::ParamLength { expected: self.len(), found: flat.len() });
        }
        let (t, w) = flat.split_at(self.theta.len());
        self.theta.copy_from_slice(t);
        self.action_weights.copy_from_slice(w);
        Ok(())
    }

    pub fn to_checkpoint(&self) -> VqcCheckpoint {
        let theta = (0..self.layers)
            .map(|l| {
                (0..QUBITS)
                    .map(|q| (0..ROTATIONS_PER_QUBIT).map(|r| self.theta_at(l, q, r)).collect())
                    .collect()
            })
            .collect();
        VqcCheckpoint {
            qubits: QUBITS,
            layers: self.layers,
            theta,
            action_weights: self.action_weights.clone(),
        }
    }

    pub fn from_checkpoint(ck: &VqcCheckpoint) -> Result<Self> {
        if ck.qubits != QUBITS {
            return Err(Error::ArchitectureMismatch {
                expected: format!("{QUBITS} qubits"),
                found: format!("{} qubits", ck.qubits),
            });
        }
        if ck.theta.len() != ck.layers
            || ck
                .theta
                .iter()
                .any(|l| l.len() != QUBITS || l.iter().any(|q| q.len() != ROTATIONS_PER_QUBIT))
        {
            return Err(Error::ArchitectureMismatch {
                expected: format!("theta shaped {}x{QUBITS}x{ROTATIONS_PER_QUBIT}", ck.layers),
                found: "ragged or mis-sized theta".into(),
            });
        }
        let theta = ck.theta.iter().flatten().flatten().copied().collect();
        Self::from_parts(ck.layers, theta, ck.action_weights.clone())
    }
}

fn theta_index(layer: usize, qubit: usize, rotation: usize) -> usize {
    (layer * QUBITS + qubit) * ROTATIONS_PER_QUBIT + rotation
}

/// Position in the gate list of the gate driven by `theta[index]`.
fn theta_gate_position(index: usize) -> usize {
    let layer = index / (QUBITS * ROTATIONS_PER_QUBIT);
    let within = index % (QUBITS * ROTATIONS_PER_QUBIT);
    layer * GATES_PER_LAYER + QUBITS + within
}

/// On-disk form of [`VqcParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqcCheckpoint {
    pub qubits: usize,
    pub layers: usize,
    pub theta: Vec<Vec<Vec<f64>>>,
    pub action_weights: Vec<f64>,
}

/// Observable assigned to flat action `action`.
pub fn action_observable(action: usize) -> Result<PauliProduct> {
    if action >= NUM_ACTIONS {
        return Err(Error::InvalidAction { kind: "joint", index: action });
    }
    let width = action / QUBITS + 1;
    let start = action % QUBITS;
    PauliProduct::new(QUBITS, (0..width).map(|k| (start + k) % QUBITS))
}

fn observable_masks() -> [usize; NUM_ACTIONS] {
    std::array::from_fn(|a| {
        let width = a / QUBITS + 1;
        let start = a % QUBITS;
        (0..width).fold(0, |m, k| m | (1 << ((start + k) % QUBITS)))
    })
}

fn parity_expectation(state: &Statevector, mask: usize) -> f64 {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| if (i & mask).count_ones().is_multiple_of(2) { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

/// Emits the full gate list for `params` on `features`.
pub fn build_circuit(params: &VqcParams, features: &[f64]) -> Result<Vec<GateSpec>> {
    if features.len() != QUBITS {
        return Err(Error::ParamLength { expected: QUBITS, found: features.len() });
    }
    check_range(features)?;
    Ok(circuit(params, features))
}

fn circuit(params: &VqcParams, features: &[f64]) -> Vec<GateSpec> {
    let mut gates = Vec::with_capacity(params.layers * GATES_PER_LAYER);
    for layer in 0..params.layers {
        for (q, f) in features.iter().enumerate() {
            gates.push(GateSpec::rx(q, PI * f));
        }
        for q in 0..QUBITS {
            gates.push(GateSpec::ry(q, params.theta_at(layer, q, 0)));
            gates.push(GateSpec::rz(q, params.theta_at(layer, q, 1)));
        }
        for q in 0..QUBITS {
            gates.push(GateSpec::cz(q, (q + 1) % QUBITS));
        }
    }
    gates
}

/// Runs the circuit from `|0...0⟩`.
pub fn run_circuit(params: &VqcParams, features: &FeatureVector) -> Statevector {
    let mut state = Statevector::zero(QUBITS);
    for g in circuit(params, features.values()) {
        state.apply_unchecked(&g);
    }
    state
}

/// Q-values for all 15 joint actions.
pub fn q_values(params: &VqcParams, features: &FeatureVector) -> [f64; NUM_ACTIONS] {
    let state = run_circuit(params, features);
    let masks = observable_masks();
    std::array::from_fn(|a| params.action_weights[a] * parity_expectation(&state, masks[a]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqcGradient {
    /// `∂Q[a]/∂θ`, same layout as [`VqcParams::theta`].
    pub theta: Vec<f64>,
    /// `∂Q[a]/∂w_a`, i.e. the unscaled expectation.
    pub action_weight: f64,
}

/// Exact gradient of `Q[action]` by the two-point shift rule.
///
/// One forward pass caches the state in front of every gate; each shifted
/// evaluation resumes from the cached prefix.
pub fn parameter_shift_grad(
    params: &VqcParams,
    features: &FeatureVector,
    action: usize,
) -> Result<VqcGradient> {
    if action >= NUM_ACTIONS {
        return Err(Error::InvalidAction { kind: "joint", index: action });
    }
    let gates = circuit(params, features.values());
    let mask = observable_masks()[action];
    let weight = params.action_weights[action];

    let mut prefix = Vec::with_capacity(gates.len() + 1);
    let mut state = Statevector::zero(QUBITS);
    prefix.push(state.clone());
    for g in &gates {
        state.apply_unchecked(g);
        prefix.push(state.clone());
    }
    let value = parity_expectation(&state, mask);

    let mut theta = vec![0.0; params.theta.len()];
    if weight != 0.0 {
        let shifted = |pos: usize, shift: f64| {
            let mut s = prefix[pos].clone();
            let mut g = gates[pos];
            g.angle += shift;
            s.apply_unchecked(&g);
            for g in &gates[pos + 1..] {
                s.apply_unchecked(g);
            }
            parity_expectation(&s, mask)
        };
        for (k, slot) in theta.iter_mut().enumerate() {
            let pos = theta_gate_position(k);
            *slot = weight * 0.5 * (shifted(pos, FRAC_PI_2) - shifted(pos, -FRAC_PI_2));
        }
    }
    Ok(VqcGradient { theta, action_weight: value })
}
