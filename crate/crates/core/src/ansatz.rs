//! Hardware-efficient Ry/CZ ansatz circuits and their parameter-shifted copies.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::statevector::Statevector;

/// Layout of `U(α)`: an optional Hadamard layer, then `num_layers` rounds of
/// one Ry per qubit followed by CZ on each neighbouring pair of an open line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnsatzConfig {
    pub num_qubits: usize,
    pub num_layers: usize,
    pub initial_hadamard: bool,
}

impl AnsatzConfig {
    pub fn new(num_qubits: usize, num_layers: usize, initial_hadamard: bool) -> Result<Self> {
        if num_layers == 0 {
            return Err(Error::InvalidConfig("ansatz needs at least one layer".into()));
        }
        Circuit::empty(num_qubits)?;
        Ok(Self { num_qubits, num_layers, initial_hadamard })
    }

    pub fn num_params(&self) -> usize {
        self.num_layers * self.num_qubits
    }

    fn check(&self, angles: &[f64]) -> Result<()> {
        if angles.len() != self.num_params() {
            return Err(Error::ParameterCount { expected: self.num_params(), found: angles.len() });
        }
        Ok(())
    }

    pub fn circuit(&self, angles: &[f64]) -> Result<Circuit> {
        self.check(angles)?;
        let n = self.num_qubits;
        let mut gates = Vec::with_capacity(self.num_params() * 2 + n);
        if self.initial_hadamard {
            gates.extend((0..n).map(Gate::H));
        }
        for layer in angles.chunks(n) {
            gates.extend(layer.iter().enumerate().map(|(q, &a)| Gate::Ry(q, a)));
            // A single qubit has no pair to entangle.
            gates.extend((0..n.saturating_sub(1)).map(|k| Gate::Cz(k, k + 1)));
        }
        Circuit::new(n, gates)
    }

    /// `U(α)|0⟩`.
    pub fn prepare_state(&self, angles: &[f64]) -> Result<Statevector> {
        Ok(self.circuit(angles)?.run())
    }

    /// Angles with entry `index` moved by `sign·π/2`.
    pub fn shifted_angles(&self, angles: &[f64], index: usize, sign: f64) -> Result<Vec<f64>> {
        self.check(angles)?;
        if index >= angles.len() {
            return Err(Error::ParameterCount { expected: angles.len(), found: index + 1 });
        }
        let mut shifted = angles.to_vec();
        shifted[index] += sign.signum() * FRAC_PI_2;
        Ok(shifted)
    }

    pub fn prepare_shifted(&self, angles: &[f64], index: usize, sign: f64) -> Result<Statevector> {
        self.prepare_state(&self.shifted_angles(angles, index, sign)?)
    }
}

/// Circuit angles together with the positive norm scale they multiply.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedParams {
    pub angles: Vec<f64>,
    pub norm_scale: f64,
}

impl AugmentedParams {
    pub fn new(angles: Vec<f64>, norm_scale: f64) -> Result<Self> {
        if !(norm_scale > 0.0) {
            return Err(Error::InvalidConfig("norm scale must be positive".into()));
        }
        Ok(Self { angles, norm_scale })
    }

    /// `[angles…, norm_scale]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.angles.clone();
        v.push(self.norm_scale);
        v
    }

    /// Inverse of [`AugmentedParams::to_vec`]; does not check the scale sign.
    pub fn from_slice(values: &[f64]) -> Self {
        let (angles, scale) = values.split_at(values.len() - 1);
        Self { angles: angles.to_vec(), norm_scale: scale[0] }
    }

    pub fn dim(&self) -> usize {
        self.angles.len() + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::{PI, SQRT_2};
    use proptest::prelude::*;

    #[test]
    fn identity_and_flip() {
        let cfg = AnsatzConfig::new(1, 1, false).unwrap();
        assert_eq!(cfg.prepare_state(&[0.0]).unwrap(), Statevector::zero_state(1).unwrap());
        let one = cfg.prepare_state(&[PI]).unwrap();
        assert!((one.amplitudes()[1].re - 1.0).abs() < 1e-15 && one.amplitudes()[0].norm() < 1e-15);
    }

    #[test]
    fn two_qubit_layer_matches_hand_computation() {
        // Ry(π/2)⊗Ry(π/2)|00⟩ = |++⟩, then CZ flips |11⟩.
        let cfg = AnsatzConfig::new(2, 1, false).unwrap();
        let s = cfg.prepare_state(&[PI / 2.0, PI / 2.0]).unwrap();
        let expect = [0.5, 0.5, 0.5, -0.5];
        for (a, e) in s.amplitudes().iter().zip(expect) {
            assert!((a.re - e).abs() < 1e-15 && a.im == 0.0);
        }
    }

    #[test]
    fn parameter_count_and_layout() {
        let cfg = AnsatzConfig::new(3, 2, true).unwrap();
        assert_eq!(cfg.num_params(), 6);
        let c = cfg.circuit(&[0.1; 6]).unwrap();
        // 3 H + 2 × (3 Ry + 2 CZ)
        assert_eq!(c.gates().len(), 13);
        assert!(matches!(cfg.prepare_state(&[0.0; 5]), Err(Error::ParameterCount { expected: 6, found: 5 })));
        assert!(AnsatzConfig::new(2, 0, false).is_err());
        assert!(AnsatzConfig::new(0, 1, false).is_err());
    }

    #[test]
    fn initial_hadamard_layer() {
        let cfg = AnsatzConfig::new(2, 1, true).unwrap();
        let s = cfg.prepare_state(&[0.0, 0.0]).unwrap();
        assert!(s.amplitudes().iter().zip([0.5, 0.5, 0.5, -0.5]).all(|(a, e)| (a.re - e).abs() < 1e-15));
    }

    #[test]
    fn shifts() {
        let cfg = AnsatzConfig::new(2, 2, false).unwrap();
        let angles = [0.3, -1.2, 0.7, 2.0];
        let up = cfg.shifted_angles(&angles, 2, 1.0).unwrap();
        let back = cfg.shifted_angles(&up, 2, -1.0).unwrap();
        let (a, b) = (cfg.prepare_state(&back).unwrap(), cfg.prepare_state(&angles).unwrap());
        assert!(a.amplitudes().iter().zip(b.amplitudes()).all(|(x, y)| (x - y).norm() < 1e-14));
        assert!(cfg.prepare_shifted(&angles, 4, 1.0).is_err());

        let one = AnsatzConfig::new(1, 1, false).unwrap();
        let mut expect = Statevector::zero_state(1).unwrap();
        expect.apply_ry(0, PI / 2.0).unwrap();
        assert_eq!(one.prepare_shifted(&[0.0], 0, 1.0).unwrap(), expect);
    }

    #[test]
    fn shifted_overlap_difference_gives_ry_derivative() {
        // f(θ) = ⟨0|Ry(θ)|0⟩ = cos(θ/2), f'(π/3) = -sin(π/6)/2.
        let cfg = AnsatzConfig::new(1, 1, false).unwrap();
        let zero = Statevector::zero_state(1).unwrap();
        let theta = PI / 3.0;
        let plus = zero.real_overlap(&cfg.prepare_shifted(&[theta], 0, 1.0).unwrap()).unwrap();
        let minus = zero.real_overlap(&cfg.prepare_shifted(&[theta], 0, -1.0).unwrap()).unwrap();
        let derivative = (plus - minus) / (2.0 * SQRT_2);
        assert!((derivative - (-(theta / 2.0).sin() / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn augmented_params() {
        let p = AugmentedParams::new(vec![0.1, 0.2], 1.5).unwrap();
        assert_eq!(p.to_vec(), vec![0.1, 0.2, 1.5]);
        assert_eq!(AugmentedParams::from_slice(&p.to_vec()), p);
        assert!(AugmentedParams::new(vec![], 0.0).is_err());
        assert!(AugmentedParams::new(vec![], -1.0).is_err());
    }

    fn overlap(cfg: &AnsatzConfig, probe: &Statevector, angles: &[f64]) -> f64 {
        probe.real_overlap(&cfg.prepare_state(angles).unwrap()).unwrap()
    }

    proptest! {
        #[test]
        fn shift_rule_matches_finite_differences(angles in proptest::collection::vec(-3.2f64..3.2, 6), probe_angles in proptest::collection::vec(-3.2f64..3.2, 6), index in 0usize..6) {
            let cfg = AnsatzConfig::new(3, 2, false).unwrap();
            let probe = cfg.prepare_state(&probe_angles).unwrap();
            let h = 1e-5;
            let mut fwd = angles.clone();
            fwd[index] += h;
            let mut bwd = angles.clone();
            bwd[index] -= h;
            let fd = (overlap(&cfg, &probe, &fwd) - overlap(&cfg, &probe, &bwd)) / (2.0 * h);
            let plus = overlap(&cfg, &probe, &cfg.shifted_angles(&angles, index, 1.0).unwrap());
            let minus = overlap(&cfg, &probe, &cfg.shifted_angles(&angles, index, -1.0).unwrap());
            // Linear overlaps carry 1/(2√2); quadratic expectations carry 1/2.
            prop_assert!(((plus - minus) / (2.0 * SQRT_2) - fd).abs() < 1e-6);
            let sq = |a: &[f64]| overlap(&cfg, &probe, a).powi(2);
            let fd2 = (sq(&fwd) - sq(&bwd)) / (2.0 * h);
            let e_plus = sq(&cfg.shifted_angles(&angles, index, 1.0).unwrap());
            let e_minus = sq(&cfg.shifted_angles(&angles, index, -1.0).unwrap());
            prop_assert!(((e_plus - e_minus) / 2.0 - fd2).abs() < 1e-6);
        }

        #[test]
        fn deterministic_and_real(angles in proptest::collection::vec(-3.2f64..3.2, 8)) {
            let cfg = AnsatzConfig::new(4, 2, true).unwrap();
            let a = cfg.prepare_state(&angles).unwrap();
            let b = cfg.prepare_state(&angles).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.max_imag() <= 1e-12);
            prop_assert!((a.norm() - 1.0).abs() < 1e-12);
        }
    }
}
