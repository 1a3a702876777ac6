//! Dense statevector simulation over a small fixed gate set.
//!
//! Qubit 0 is the most significant bit of the basis index, so a basis label
//! such as `|01⟩` reads qubit 0 first.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// Float math for no_std builds; std's inherent methods shadow it otherwise.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// Largest register (ancilla included) a [`Statevector`] may hold by default.
pub const DEFAULT_MAX_QUBITS: usize = 16;

/// Dense amplitude vector over `num_qubits` qubits.
///
/// Only the length is enforced: Pauli sums and weighted strings yield
/// unnormalized vectors that share this type.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩` on `num_qubits` qubits, capped at [`DEFAULT_MAX_QUBITS`].
    pub fn zero_state(num_qubits: usize) -> Result<Self> {
        Self::zero_state_capped(num_qubits, DEFAULT_MAX_QUBITS)
    }

    pub fn zero_state_capped(num_qubits: usize, cap: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > cap {
            return Err(Error::QubitCount(num_qubits, cap));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amplitudes })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis_state(num_qubits: usize, index: usize) -> Result<Self> {
        let mut state = Self::zero_state(num_qubits)?;
        if index >= state.dim() {
            return Err(Error::DimensionMismatch { expected: state.dim(), found: index });
        }
        state.amplitudes[0] = Complex64::new(0.0, 0.0);
        state.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::DimensionMismatch { expected: len.next_power_of_two().max(2), found: len });
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > DEFAULT_MAX_QUBITS {
            return Err(Error::QubitCount(num_qubits, DEFAULT_MAX_QUBITS));
        }
        Ok(Self { num_qubits, amplitudes })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    /// Real parts of the amplitudes.
    pub fn real_parts(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.re).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_imag(&self) -> f64 {
        self.amplitudes.iter().fold(0.0, |acc, a| acc.max(a.im.abs()))
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitIndex { index: qubit, num_qubits: self.num_qubits });
        }
        Ok(())
    }

    pub fn apply_ry(&mut self, qubit: usize, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        ry(&mut self.amplitudes, self.num_qubits, qubit, angle);
        Ok(())
    }

    pub fn apply_h(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        hadamard(&mut self.amplitudes, self.num_qubits, qubit);
        Ok(())
    }

    pub fn apply_x(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        pauli_x(&mut self.amplitudes, self.num_qubits, qubit);
        Ok(())
    }

    pub fn apply_z(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        pauli_z(&mut self.amplitudes, self.num_qubits, qubit);
        Ok(())
    }

    pub fn apply_cz(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::RepeatedQubit(control));
        }
        cz(&mut self.amplitudes, self.num_qubits, control, target);
        Ok(())
    }

    /// Multiplies by `coefficient · P`; the result is not renormalized.
    pub fn apply_pauli_string(&mut self, pauli: &PauliString, coefficient: Complex64) -> Result<()> {
        if pauli.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch { expected: self.num_qubits, found: pauli.num_qubits() });
        }
        self.amplitudes = pauli_product(&self.amplitudes, pauli, coefficient);
        Ok(())
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &Statevector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch { expected: self.num_qubits, found: other.num_qubits });
        }
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    /// Real part of `⟨self|other⟩`.
    pub fn real_overlap(&self, other: &Statevector) -> Result<f64> {
        self.inner_product(other).map(|c| c.re)
    }
}

#[inline]
fn stride(num_qubits: usize, qubit: usize) -> usize {
    1 << (num_qubits - 1 - qubit)
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn ry(amps: &mut [Complex64], num_qubits: usize, qubit: usize, angle: f64) {
    let (s, c) = (angle / 2.0).sin_cos();
    let step = stride(num_qubits, qubit);
    for base in (0..amps.len()).step_by(2 * step) {
        for i in base..base + step {
            let a0 = amps[i];
            let a1 = amps[i + step];
            amps[i] = a0 * c - a1 * s;
            amps[i + step] = a0 * s + a1 * c;
        }
    }
}

pub(crate) fn hadamard(amps: &mut [Complex64], num_qubits: usize, qubit: usize) {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let step = stride(num_qubits, qubit);
    for base in (0..amps.len()).step_by(2 * step) {
        for i in base..base + step {
            let a0 = amps[i];
            let a1 = amps[i + step];
            amps[i] = (a0 + a1) * h;
            amps[i + step] = (a0 - a1) * h;
        }
    }
}

pub(crate) fn pauli_x(amps: &mut [Complex64], num_qubits: usize, qubit: usize) {
    let step = stride(num_qubits, qubit);
    for base in (0..amps.len()).step_by(2 * step) {
        for i in base..base + step {
            amps.swap(i, i + step);
        }
    }
}

pub(crate) fn pauli_z(amps: &mut [Complex64], num_qubits: usize, qubit: usize) {
    let bit = stride(num_qubits, qubit);
    for (i, a) in amps.iter_mut().enumerate() {
        if i & bit != 0 {
            *a = -*a;
        }
    }
}

pub(crate) fn cz(amps: &mut [Complex64], num_qubits: usize, control: usize, target: usize) {
    let mask = stride(num_qubits, control) | stride(num_qubits, target);
    for (i, a) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *a = -*a;
        }
    }
}

/// `coefficient · P · amps` for a Pauli string `P`.
pub(crate) fn pauli_product(amps: &[Complex64], pauli: &PauliString, coefficient: Complex64) -> Vec<Complex64> {
    let (x_mask, z_mask) = pauli.masks();
    let phase = coefficient * pauli.y_phase();
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for (i, &a) in amps.iter().enumerate() {
        let sign = if (i & z_mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        out[i ^ x_mask] = a * phase * sign;
    }
    out
}
