//! Pauli strings and linear combinations of them (LCU operators).
//!
//! Text format, one term per line: `<coefficient> <letters>`, e.g. `0.5 XZI`.
//! Letters are case-insensitive and may be split by whitespace; blank lines and
//! lines starting with `#` are ignored.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevector::Statevector;

/// Largest operator [`LcuOperator::to_dense`] will materialize.
pub const DENSE_QUBIT_CAP: usize = 13;

/// Terms whose merged coefficient falls below this are dropped.
pub const MERGE_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis; letter 0 acts on qubit 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters }
    }

    pub fn identity(num_qubits: usize) -> Self {
        Self { letters: alloc::vec![Pauli::I; num_qubits] }
    }

    /// Single letter `pauli` on `qubit`, identity elsewhere.
    pub fn single(num_qubits: usize, qubit: usize, pauli: Pauli) -> Self {
        Self::from_sites(num_qubits, &[(qubit, pauli)])
    }

    pub fn from_sites(num_qubits: usize, sites: &[(usize, Pauli)]) -> Self {
        let mut s = Self::identity(num_qubits);
        for &(q, p) in sites {
            s.letters[q] = p;
        }
        s
    }

    pub fn num_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    pub fn y_count(&self) -> u32 {
        self.letters.iter().filter(|&&p| p == Pauli::Y).count() as u32
    }

    /// Bit masks `(x, z)` over basis indices; a Y sets both bits.
    pub fn masks(&self) -> (usize, usize) {
        let n = self.letters.len();
        let mut x = 0usize;
        let mut z = 0usize;
        for (q, &p) in self.letters.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                }
            }
        }
        (x, z)
    }

    /// `i^(#Y)`, the phase relating this string to `X^x Z^z`.
    pub fn y_phase(&self) -> Complex64 {
        i_pow(self.y_count())
    }

    fn from_masks(n: usize, x: usize, z: usize) -> Self {
        let letters = (0..n)
            .map(|q| {
                let bit = 1usize << (n - 1 - q);
                match (x & bit != 0, z & bit != 0) {
                    (false, false) => Pauli::I,
                    (true, false) => Pauli::X,
                    (false, true) => Pauli::Z,
                    (true, true) => Pauli::Y,
                }
            })
            .collect();
        Self { letters }
    }

    /// Operator product `self · other = phase · string`.
    pub fn product(&self, other: &PauliString) -> Result<(Complex64, PauliString)> {
        if self.num_qubits() != other.num_qubits() {
            return Err(Error::DimensionMismatch { expected: self.num_qubits(), found: other.num_qubits() });
        }
        let (xa, za) = self.masks();
        let (xb, zb) = other.masks();
        let result = Self::from_masks(self.num_qubits(), xa ^ xb, za ^ zb);
        // X^xa Z^za X^xb Z^zb = (-1)^{|za & xb|} X^{xa^xb} Z^{za^zb}
        let sign = if (za & xb).count_ones() % 2 == 1 { 2 } else { 0 };
        let k = self.y_count() + other.y_count() + sign + 4 * self.num_qubits() as u32 - result.y_count();
        Ok((i_pow(k), result))
    }

    /// Splits into the leading `head` letters and the rest.
    pub fn split_at(&self, head: usize) -> (PauliString, PauliString) {
        let (a, b) = self.letters.split_at(head);
        (Self { letters: a.to_vec() }, Self { letters: b.to_vec() })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::Parse { line: 1, message: format!("unknown Pauli letter '{c}'") }))
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(Error::Parse { line: 1, message: "empty Pauli string".into() });
        }
        Ok(Self { letters })
    }
}

/// Weighted Pauli string `coefficient · P`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coefficient: f64, string: PauliString) -> Self {
        Self { coefficient, string }
    }

    pub fn num_qubits(&self) -> usize {
        self.string.num_qubits()
    }
}

/// `Σ_h c_h P_h` with distinct strings.
#[derive(Debug, Clone, PartialEq)]
pub struct LcuOperator {
    num_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl LcuOperator {
    /// Builds an operator, merging repeated strings and dropping negligible terms.
    /// Term order follows first appearance.
    pub fn new(num_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        let mut merged: Vec<PauliTerm> = Vec::with_capacity(terms.len());
        for term in terms {
            if term.num_qubits() != num_qubits {
                return Err(Error::DimensionMismatch { expected: num_qubits, found: term.num_qubits() });
            }
            match merged.iter_mut().find(|t| t.string == term.string) {
                Some(existing) => existing.coefficient += term.coefficient,
                None => merged.push(term),
            }
        }
        merged.retain(|t| t.coefficient.abs() >= MERGE_TOLERANCE);
        Ok(Self { num_qubits, terms: merged })
    }

    pub fn zero(num_qubits: usize) -> Self {
        Self { num_qubits, terms: Vec::new() }
    }

    pub fn identity(num_qubits: usize) -> Self {
        Self { num_qubits, terms: alloc::vec![PauliTerm::new(1.0, PauliString::identity(num_qubits))] }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_y(&self) -> bool {
        self.terms.iter().any(|t| t.string.y_count() > 0)
    }

    /// Scales every coefficient.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.num_qubits, self.terms.iter().map(|t| PauliTerm::new(t.coefficient * factor, t.string.clone())).collect())
    }

    /// Parses the line-oriented text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut num_qubits = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: idx + 1, message };
            let mut tokens = line.split_whitespace();
            let coeff_tok = tokens.next().ok_or_else(|| parse_err("missing coefficient".into()))?;
            let coefficient: f64 = coeff_tok.parse().map_err(|_| parse_err(format!("bad coefficient '{coeff_tok}'")))?;
            let letters: String = tokens.collect();
            let string: PauliString = letters.parse().map_err(|e| match e {
                Error::Parse { message, .. } => parse_err(message),
                other => other,
            })?;
            match num_qubits {
                None => num_qubits = Some(string.num_qubits()),
                Some(n) if n != string.num_qubits() => {
                    return Err(parse_err(format!("term has {} letters, expected {n}", string.num_qubits())));
                }
                _ => {}
            }
            terms.push(PauliTerm::new(coefficient, string));
        }
        let n = num_qubits.ok_or(Error::Parse { line: 0, message: "no terms".into() })?;
        Self::new(n, terms)
    }

    /// Dense real matrix `Σ c_h P_h`.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.num_qubits > DENSE_QUBIT_CAP {
            return Err(Error::SizeCap { num_qubits: self.num_qubits, cap: DENSE_QUBIT_CAP });
        }
        let dim = 1usize << self.num_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for term in &self.terms {
            let ny = term.string.y_count();
            if ny % 2 == 1 {
                return Err(Error::ImaginaryOperator);
            }
            let base = if ny % 4 == 2 { -term.coefficient } else { term.coefficient };
            let (x, z) = term.string.masks();
            for col in 0..dim {
                let sign = if (col & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                m[(col ^ x, col)] += base * sign;
            }
        }
        Ok(m)
    }

    /// `Σ c_h P_h |state⟩`, unnormalized.
    pub fn apply(&self, state: &Statevector) -> Result<Statevector> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch { expected: self.num_qubits, found: state.num_qubits() });
        }
        let amps = state.amplitudes();
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); amps.len()];
        for term in &self.terms {
            let (x, z) = term.string.masks();
            let phase = term.string.y_phase() * term.coefficient;
            for (i, &a) in amps.iter().enumerate() {
                let sign = if (i & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                out[i ^ x] += a * phase * sign;
            }
        }
        Statevector::from_amplitudes(out)
    }

    /// Real-vector action `A v` for operators without Y letters.
    pub fn apply_real(&self, v: &[f64]) -> Result<Vec<f64>> {
        let dim = 1usize << self.num_qubits;
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        if self.has_y() {
            return Err(Error::ImaginaryOperator);
        }
        let mut out = alloc::vec![0.0; dim];
        for term in &self.terms {
            let (x, z) = term.string.masks();
            for (i, &a) in v.iter().enumerate() {
                let sign = if (i & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                out[i ^ x] += term.coefficient * sign * a;
            }
        }
        Ok(out)
    }

    /// The `(row, col)` block over the trailing `block_qubits` qubits.
    ///
    /// Each leading-qubit Pauli matrix has one nonzero per row; a term lands in
    /// this block iff that entry sits at `(row, col)`, contributing its sign
    /// times the trailing letters.
    pub fn block(&self, row: usize, col: usize, block_qubits: usize) -> Result<LcuOperator> {
        if block_qubits == 0 || block_qubits > self.num_qubits {
            return Err(Error::InvalidConfig(format!(
                "block qubit count {block_qubits} invalid for a {}-qubit operator",
                self.num_qubits
            )));
        }
        let head = self.num_qubits - block_qubits;
        let grid = 1usize << head;
        if row >= grid || col >= grid {
            return Err(Error::BlockIndex { row, col, grid });
        }
        if self.has_y() {
            return Err(Error::ImaginaryOperator);
        }
        let mut terms = Vec::new();
        for term in &self.terms {
            let (top, bottom) = term.string.split_at(head);
            let (x, z) = top.masks();
            if col ^ x != row {
                continue;
            }
            let sign = if (col & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            terms.push(PauliTerm::new(sign * term.coefficient, bottom));
        }
        Self::new(block_qubits, terms)
    }
}

impl fmt::Display for LcuOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for term in &self.terms {
            writeln!(f, "{} {}", term.coefficient, term.string)?;
        }
        Ok(())
    }
}

impl FromStr for LcuOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}
