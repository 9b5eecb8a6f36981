//! Dense statevector simulation over the gate set {RX, RY, RZ, CZ}.
//!
//! Basis states are indexed little-endian: qubit `q` is bit `q` of the index.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cz,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSpec {
    pub kind: GateKind,
    pub target: usize,
    /// Only used by CZ.
    pub control: Option<usize>,
    /// Radians; ignored by CZ.
    pub angle: f64,
}

impl GateSpec {
    pub fn rx(target: usize, angle: f64) -> Self {
        Self { kind: GateKind::Rx, target, control: None, angle }
    }

    pub fn ry(target: usize, angle: f64) -> Self {
        Self { kind: GateKind::Ry, target, control: None, angle }
    }

    pub fn rz(target: usize, angle: f64) -> Self {
        Self { kind: GateKind::Rz, target, control: None, angle }
    }

    pub fn cz(control: usize, target: usize) -> Self {
        Self { kind: GateKind::Cz, target, control: Some(control), angle: 0.0 }
    }

    /// The inverse gate: negated angle for rotations, CZ is self-inverse.
    pub fn inverse(&self) -> Self {
        match self.kind {
            GateKind::Cz => *self,
            _ => Self { angle: -self.angle, ..*self },
        }
    }

    pub fn validate(&self, qubits: usize) -> Result<()> {
        if self.target >= qubits {
            return Err(Error::InvalidGate(format!(
                "target {} out of range for {qubits} qubits",
                self.target
            )));
        }
        match (self.kind, self.control) {
            (GateKind::Cz, Some(c)) if c >= qubits => Err(Error::InvalidGate(format!(
                "control {c} out of range for {qubits} qubits"
            ))),
            (GateKind::Cz, Some(c)) if c == self.target => {
                Err(Error::InvalidGate(format!("control equals target ({c})")))
            }
            (GateKind::Cz, None) => Err(Error::InvalidGate("CZ requires a control qubit".into())),
            (GateKind::Cz, Some(_)) => Ok(()),
            (_, Some(_)) => Err(Error::InvalidGate(format!(
                "{:?} takes no control qubit",
                self.kind
            ))),
            (_, None) if !self.angle.is_finite() => {
                Err(Error::InvalidGate(format!("non-finite angle {}", self.angle)))
            }
            (_, None) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0...0⟩` on `qubits` qubits.
    pub fn zero(qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { qubits, amplitudes }
    }

    /// Builds a state from raw amplitudes, normalizing them. Returns `None`
    /// when the length is not a power of two or the vector is zero.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Option<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return None;
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
            return None;
        }
        Some(Self {
            qubits: len.trailing_zeros() as usize,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&mut self, gate: &GateSpec) -> Result<()> {
        gate.validate(self.qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    /// Applies a gate already known to be valid for this register.
    pub(crate) fn apply_unchecked(&mut self, gate: &GateSpec) {
        match gate.kind {
            GateKind::Cz => {
                let c = gate.control.expect("validated CZ");
                let mask = (1usize << c) | (1usize << gate.target);
                for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                    if i & mask == mask {
                        *amp = -*amp;
                    }
                }
            }
            kind => {
                let (s, c) = (gate.angle * 0.5).sin_cos();
                let m = match kind {
                    GateKind::Rx => [
                        Complex64::new(c, 0.0),
                        Complex64::new(0.0, -s),
                        Complex64::new(0.0, -s),
                        Complex64::new(c, 0.0),
                    ],
                    GateKind::Ry => [
                        Complex64::new(c, 0.0),
                        Complex64::new(-s, 0.0),
                        Complex64::new(s, 0.0),
                        Complex64::new(c, 0.0),
                    ],
                    GateKind::Rz => [
                        Complex64::new(c, -s),
                        Complex64::new(0.0, 0.0),
                        Complex64::new(0.0, 0.0),
                        Complex64::new(c, s),
                    ],
                    GateKind::Cz => unreachable!(),
                };
                self.apply_single(gate.target, m);
            }
        }
    }

    fn apply_single(&mut self, target: usize, m: [Complex64; 4]) {
        let bit = 1usize << target;
        let len = self.amplitudes.len();
        let mut base = 0;
        while base < len {
            for i in base..base + bit {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i + bit];
                self.amplitudes[i] = m[0] * a0 + m[1] * a1;
                self.amplitudes[i + bit] = m[2] * a0 + m[3] * a1;
            }
            base += bit << 1;
        }
    }

    /// `⟨ψ|Z_{q1} Z_{q2} ...|ψ⟩` for the product's support.
    pub fn expectation(&self, obs: &PauliProduct) -> f64 {
        let mask = obs.mask();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let p = a.norm_sqr();
                if (i & mask).count_ones().is_multiple_of(2) {
                    p
                } else {
                    -p
                }
            })
            .sum()
    }
}

/// Applies `gate` to a copy of `state`.
pub fn apply_gate(state: &Statevector, gate: &GateSpec) -> Result<Statevector> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}

/// A Z-only Pauli product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliProduct {
    support: Vec<usize>,
}

impl PauliProduct {
    pub fn new(qubits: usize, support: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut support: Vec<usize> = support.into_iter().collect();
        support.sort_unstable();
        support.dedup();
        if support.is_empty() {
            return Err(Error::InvalidGate("empty Pauli product support".into()));
        }
        if let Some(&q) = support.iter().find(|&&q| q >= qubits) {
            return Err(Error::InvalidGate(format!(
                "Pauli support qubit {q} out of range for {qubits} qubits"
            )));
        }
        Ok(Self { support })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub(crate) fn mask(&self) -> usize {
        self.support.iter().fold(0, |m, &q| m | (1 << q))
    }
}

pub fn expectation(state: &Statevector, obs: &PauliProduct) -> f64 {
    state.expectation(obs)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn basis(qubits: usize, index: usize) -> Statevector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Statevector::from_amplitudes(amps).unwrap()
    }

    #[test]
    fn rx_zero_is_identity() {
        let s = Statevector::zero(5);
        assert_eq!(apply_gate(&s, &GateSpec::rx(0, 0.0)).unwrap(), s);
    }

    #[test]
    fn ry_pi_flips_qubit_zero() {
        let s = apply_gate(&Statevector::zero(5), &GateSpec::ry(0, PI)).unwrap();
        assert!((s.amplitudes()[1] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(s.amplitudes()[0].norm() < 1e-12);
    }

    #[test]
    fn cz_phases_eleven() {
        let s = apply_gate(&basis(5, 0b00011), &GateSpec::cz(0, 1)).unwrap();
        assert_eq!(s.amplitudes()[0b00011], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn invalid_gates_rejected() {
        let s = Statevector::zero(5);
        assert!(apply_gate(&s, &GateSpec::rx(5, 0.1)).is_err());
        assert!(apply_gate(&s, &GateSpec::cz(2, 2)).is_err());
        assert!(apply_gate(&s, &GateSpec::cz(7, 2)).is_err());
        let mut bad = GateSpec::ry(0, 0.3);
        bad.control = Some(1);
        assert!(apply_gate(&s, &bad).is_err());
    }

    #[test]
    fn expectation_examples() {
        let z0 = PauliProduct::new(5, [0]).unwrap();
        assert_eq!(expectation(&Statevector::zero(5), &z0), 1.0);

        let uniform =
            Statevector::from_amplitudes(vec![Complex64::new(1.0, 0.0); 32]).unwrap();
        assert!(expectation(&uniform, &z0).abs() < 1e-12);

        let z01 = PauliProduct::new(5, [0, 1]).unwrap();
        assert_eq!(expectation(&basis(5, 0b00001), &z01), -1.0);
    }

    #[test]
    fn pauli_support_checked() {
        assert!(PauliProduct::new(5, []).is_err());
        assert!(PauliProduct::new(5, [5]).is_err());
        assert_eq!(PauliProduct::new(5, [3, 1, 3]).unwrap().support(), &[1, 3]);
    }
}
