//! Q-function approximators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{parameter_shift_grad, q_values, FeatureVector, InitScheme, VqcCheckpoint, VqcParams, NUM_ACTIONS, QUBITS};

/// A trainable map from encoded state to the 15 joint-action values.
pub trait QFunction: Clone + Send + Sync {
    fn q_values(&self, s: &FeatureVector) -> [f64; NUM_ACTIONS];

    /// Gradient of `Q(s)[action]` with respect to [`QFunction::params`].
    fn grad_q(&self, s: &FeatureVector, action: usize) -> Vec<f64>;

    fn params(&self) -> Vec<f64>;

    fn set_params(&mut self, params: &[f64]) -> Result<()>;

    /// Shape descriptor; two functions with equal descriptors can swap params.
    fn architecture(&self) -> String;

    fn to_checkpoint_json(&self) -> Result<String>;

    fn from_checkpoint_json(json: &str) -> Result<Self>
    where
        Self: Sized;
}

/// The variational circuit backend.
#[derive(Debug, Clone, PartialEq)]
pub struct VqcQ {
    pub params: VqcParams,
}

impl VqcQ {
    pub fn new<R: Rng + ?Sized>(layers: usize, init: InitScheme, scale: f64, rng: &mut R) -> Self {
        Self { params: VqcParams::init(layers, init, scale, rng) }
    }
}

impl QFunction for VqcQ {
    fn q_values(&self, s: &FeatureVector) -> [f64; NUM_ACTIONS] {
        q_values(&self.params, s)
    }

    fn grad_q(&self, s: &FeatureVector, action: usize) -> Vec<f64> {
        let g = parameter_shift_grad(&self.params, s, action).expect("action index checked by caller");
        let mut out = g.theta;
        out.resize(self.params.len(), 0.0);
        let n_theta = self.params.theta().len();
        out[n_theta + action] = g.action_weight;
        out
    }

    fn params(&self) -> Vec<f64> {
        self.params.to_flat()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        self.params.set_flat(params)
    }

    fn architecture(&self) -> String {
        format!("vqc(qubits={QUBITS}, layers={})", self.params.layers())
    }

    fn to_checkpoint_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.params.to_checkpoint())?)
    }

    fn from_checkpoint_json(json: &str) -> Result<Self> {
        let ck: VqcCheckpoint = serde_json::from_str(json).map_err(|e| Error::ArchitectureMismatch {
            expected: "vqc checkpoint".into(),
            found: e.to_string(),
        })?;
        Ok(Self { params: VqcParams::from_checkpoint(&ck)? })
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs x inputs`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Dense {
    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
        }));
    }
}

/// Fully connected ReLU network: 5 → hidden... → 15.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralQ {
    layers: Vec<Dense>,
}

impl NeuralQ {
    pub fn new<R: Rng + ?Sized>(hidden: &[usize], rng: &mut R) -> Self {
        let mut sizes = vec![QUBITS];
        sizes.extend_from_slice(hidden);
        sizes.push(NUM_ACTIONS);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let bound = 1.0 / (inputs as f64).sqrt();
                let mut draw = || rng.random_range(-bound..bound);
                Dense {
                    inputs,
                    outputs,
                    weights: (0..inputs * outputs).map(|_| draw()).collect(),
                    biases: (0..outputs).map(|_| draw()).collect(),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut v = vec![self.layers[0].inputs];
        v.extend(self.layers.iter().map(|l| l.outputs));
        v
    }

    /// Activations of every layer, input first; hidden layers post-ReLU.
    fn forward_all(&self, s: &FeatureVector) -> Vec<Vec<f64>> {
        let mut acts = vec![s.values().to_vec()];
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.forward(acts.last().expect("input"), &mut out);
            if i != last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        acts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseCheckpoint {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

/// On-disk form of [`NeuralQ`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuralCheckpoint {
    pub kind: String,
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<DenseCheckpoint>,
}

impl QFunction for NeuralQ {
    fn q_values(&self, s: &FeatureVector) -> [f64; NUM_ACTIONS] {
        let acts = self.forward_all(s);
        let out = acts.last().expect("output layer");
        std::array::from_fn(|a| out[a])
    }

    fn grad_q(&self, s: &FeatureVector, action: usize) -> Vec<f64> {
        let acts = self.forward_all(s);
        let mut grads: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        // dQ[action]/d(pre-activation) of the current layer
        let mut delta = vec![0.0; NUM_ACTIONS];
        delta[action] = 1.0;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts[i];
            let mut g = vec![0.0; layer.weights.len() + layer.biases.len()];
            for o in 0..layer.outputs {
                if delta[o] == 0.0 {
                    continue;
                }
                for (k, x) in input.iter().enumerate() {
                    g[o * layer.inputs + k] = delta[o] * x;
                }
                g[layer.weights.len() + o] = delta[o];
            }
            grads.push(g);
            if i > 0 {
                let mut prev = vec![0.0; layer.inputs];
                for (d, row) in delta.iter().zip(layer.weights.chunks_exact(layer.inputs)) {
                    if *d == 0.0 {
                        continue;
                    }
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                // ReLU derivative on the previous layer's output
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        grads.into_iter().rev().flatten().collect()
    }

    fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        let expected: usize = self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum();
        if params.len() != expected {
            return Err(Error::ParamLength { expected, found: params.len() });
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, r) = rest.split_at(l.weights.len());
            l.weights.copy_from_slice(w);
            let (b, r) = r.split_at(l.biases.len());
            l.biases.copy_from_slice(b);
            rest = r;
        }
        Ok(())
    }

    fn architecture(&self) -> String {
        format!("neural{:?}", self.layer_sizes())
    }

    fn to_checkpoint_json(&self) -> Result<String> {
        let ck = NeuralCheckpoint {
            kind: "neural".into(),
            layer_sizes: self.layer_sizes(),
            layers: self
                .layers
                .iter()
                .map(|l| DenseCheckpoint {
                    weights: l.weights.chunks(l.inputs).map(<[f64]>::to_vec).collect(),
                    biases: l.biases.clone(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&ck)?)
    }

    fn from_checkpoint_json(json: &str) -> Result<Self> {
        let mismatch = |found: String| Error::ArchitectureMismatch { expected: "neural checkpoint".into(), found };
        let ck: NeuralCheckpoint = serde_json::from_str(json).map_err(|e| mismatch(e.to_string()))?;
        if ck.kind != "neural"
            || ck.layer_sizes.len() != ck.layers.len() + 1
            || ck.layer_sizes.first() != Some(&QUBITS)
            || ck.layer_sizes.last() != Some(&NUM_ACTIONS)
        {
            return Err(mismatch(format!("kind {:?}, sizes {:?}", ck.kind, ck.layer_sizes)));
        }
        let mut layers = Vec::with_capacity(ck.layers.len());
        for (i, l) in ck.layers.iter().enumerate() {
            let (inputs, outputs) = (ck.layer_sizes[i], ck.layer_sizes[i + 1]);
            if l.biases.len() != outputs || l.weights.len() != outputs || l.weights.iter().any(|r| r.len() != inputs) {
                return Err(mismatch(format!("layer {i} does not match {inputs}->{outputs}")));
            }
            layers.push(Dense {
                inputs,
                outputs,
                weights: l.weights.iter().flatten().copied().collect(),
                biases: l.biases.clone(),
            });
        }
        Ok(Self { layers })
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn features(rng: &mut ChaCha8Rng) -> FeatureVector {
        FeatureVector::new(std::array::from_fn(|_| rng.random_range(-1.0..=1.0))).unwrap()
    }

    /// Central differences through `q_values` only.
    fn finite_difference<Q: QFunction>(q: &Q, s: &FeatureVector, a: usize, h: f64) -> Vec<f64> {
        let base = q.params();
        (0..base.len())
            .map(|k| {
                let mut plus = q.clone();
                let mut minus = q.clone();
                let mut p = base.clone();
                p[k] += h;
                plus.set_params(&p).unwrap();
                p[k] -= 2.0 * h;
                minus.set_params(&p).unwrap();
                (plus.q_values(s)[a] - minus.q_values(s)[a]) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn neural_backprop_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = NeuralQ::new(&[16, 16], &mut rng);
        for _ in 0..5 {
            let s = features(&mut rng);
            let a = rng.random_range(0..NUM_ACTIONS);
            let g = q.grad_q(&s, a);
            let fd = finite_difference(&q, &s, a, 1e-6);
            for (x, y) in g.iter().zip(&fd) {
                assert!((x - y).abs() < 1e-6, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn vqc_flat_gradient_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = VqcQ::new(3, InitScheme::Uniform, 1.0, &mut rng);
        let s = features(&mut rng);
        let g = q.grad_q(&s, 7);
        assert_eq!(g.len(), 45);
        let fd = finite_difference(&q, &s, 7, 1e-5);
        for (x, y) in g.iter().zip(&fd) {
            assert!((x - y).abs() < 1e-5);
        }
        assert!(g[30..].iter().enumerate().all(|(i, &v)| i == 7 || v == 0.0));
    }

    #[test]
    fn neural_shape_and_checkpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = NeuralQ::new(&[64, 64], &mut rng);
        assert_eq!(q.layer_sizes(), vec![5, 64, 64, 15]);
        assert_eq!(q.params().len(), 5 * 64 + 64 + 64 * 64 + 64 + 64 * 15 + 15);
        let back = NeuralQ::from_checkpoint_json(&q.to_checkpoint_json().unwrap()).unwrap();
        assert_eq!(back, q);
        let bound = 1.0 / 5f64.sqrt();
        assert!(q.layers[0].weights.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn cross_backend_checkpoints_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = NeuralQ::new(&[8], &mut rng).to_checkpoint_json().unwrap();
        let v = VqcQ::new(3, InitScheme::Uniform, 0.1, &mut rng).to_checkpoint_json().unwrap();
        assert!(matches!(VqcQ::from_checkpoint_json(&n), Err(Error::ArchitectureMismatch { .. })));
        assert!(matches!(NeuralQ::from_checkpoint_json(&v), Err(Error::ArchitectureMismatch { .. })));
    }
}
