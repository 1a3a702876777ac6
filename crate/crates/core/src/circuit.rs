//! Gate sequences and state-preparation descriptions.
//!
//! Text form is one gate per line (or `;`-separated): `h 0`, `x 1`, `z 2`,
//! `ry 0 0.25`, `cz 0 1`. `h all` expands to a Hadamard on every qubit.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevector::{self, Statevector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
    Ry(usize, f64),
    Cz(usize, usize),
}

impl Gate {
    fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Z(q) | Gate::Ry(q, _) => (q, None),
            Gate::Cz(a, b) => (a, Some(b)),
        }
    }

    pub(crate) fn apply(&self, amps: &mut [Complex64], num_qubits: usize) {
        match *self {
            Gate::H(q) => statevector::hadamard(amps, num_qubits, q),
            Gate::X(q) => statevector::pauli_x(amps, num_qubits, q),
            Gate::Z(q) => statevector::pauli_z(amps, num_qubits, q),
            Gate::Ry(q, a) => statevector::ry(amps, num_qubits, q, a),
            Gate::Cz(a, b) => statevector::cz(amps, num_qubits, a, b),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H(q) => write!(f, "h {q}"),
            Gate::X(q) => write!(f, "x {q}"),
            Gate::Z(q) => write!(f, "z {q}"),
            Gate::Ry(q, a) => write!(f, "ry {q} {a}"),
            Gate::Cz(a, b) => write!(f, "cz {a} {b}"),
        }
    }
}

/// A validated gate list acting on `num_qubits` qubits from `|0…0⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > statevector::DEFAULT_MAX_QUBITS {
            return Err(Error::QubitCount(num_qubits, statevector::DEFAULT_MAX_QUBITS));
        }
        for gate in &gates {
            let (a, b) = gate.qubits();
            for q in core::iter::once(a).chain(b) {
                if q >= num_qubits {
                    return Err(Error::QubitIndex { index: q, num_qubits });
                }
            }
            if b == Some(a) {
                return Err(Error::RepeatedQubit(a));
            }
        }
        Ok(Self { num_qubits, gates })
    }

    pub fn empty(num_qubits: usize) -> Result<Self> {
        Self::new(num_qubits, Vec::new())
    }

    /// `H` on every qubit.
    pub fn hadamard_layer(num_qubits: usize) -> Result<Self> {
        Self::new(num_qubits, (0..num_qubits).map(Gate::H).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let mut gates = core::mem::take(&mut self.gates);
        gates.push(gate);
        *self = Self::new(self.num_qubits, gates)?;
        Ok(())
    }

    /// Runs the gates on an amplitude buffer of matching size.
    pub(crate) fn apply_to(&self, amps: &mut [Complex64]) {
        debug_assert_eq!(amps.len(), 1 << self.num_qubits);
        for gate in &self.gates {
            gate.apply(amps, self.num_qubits);
        }
    }

    pub fn run(&self) -> Statevector {
        let mut state = Statevector::zero_state(self.num_qubits).expect("validated qubit count");
        self.apply_to(state.amplitudes_mut());
        state
    }

    /// True when no gate couples two qubits.
    pub fn is_product(&self) -> bool {
        self.gates.iter().all(|g| !matches!(g, Gate::Cz(..)))
    }

    /// Single-qubit gates acting inside `[start, start + len)`, reindexed to
    /// a `len`-qubit circuit. Only meaningful for product circuits.
    pub fn restrict(&self, start: usize, len: usize) -> Result<Circuit> {
        let gates = self
            .gates
            .iter()
            .filter_map(|g| {
                let (q, _) = g.qubits();
                if q < start || q >= start + len {
                    return None;
                }
                let r = q - start;
                Some(match *g {
                    Gate::H(_) => Gate::H(r),
                    Gate::X(_) => Gate::X(r),
                    Gate::Z(_) => Gate::Z(r),
                    Gate::Ry(_, a) => Gate::Ry(r, a),
                    Gate::Cz(..) => unreachable!("restrict requires a product circuit"),
                })
            })
            .collect();
        Circuit::new(len, gates)
    }

    /// Parses gate lines for a register of `num_qubits` qubits.
    pub fn parse(num_qubits: usize, text: &str) -> Result<Self> {
        let mut gates = Vec::new();
        for (idx, raw) in text.split(['\n', ';']).enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            gates.extend(parse_gate_line(num_qubits, line).map_err(|message| Error::Parse { line: idx + 1, message })?);
        }
        Self::new(num_qubits, gates)
    }

    /// Parses one entry per gate line, as found in config arrays.
    pub fn from_lines<S: AsRef<str>>(num_qubits: usize, lines: &[S]) -> Result<Self> {
        let mut gates = Vec::new();
        for (idx, line) in lines.iter().enumerate() {
            gates.extend(parse_gate_line(num_qubits, line.as_ref().trim()).map_err(|message| Error::Parse { line: idx + 1, message })?);
        }
        Self::new(num_qubits, gates)
    }
}

fn parse_gate_line(num_qubits: usize, line: &str) -> core::result::Result<Vec<Gate>, String> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let name = tokens.first().ok_or("empty gate line")?.to_ascii_lowercase();
    let qubit = |k: usize| -> core::result::Result<usize, String> {
        let tok = tokens.get(k).ok_or_else(|| format!("'{line}': missing qubit"))?;
        tok.parse().map_err(|_| format!("'{line}': bad qubit '{tok}'"))
    };
    let expect_len = |n: usize| -> core::result::Result<(), String> {
        if tokens.len() != n {
            return Err(format!("'{line}': expected {} operands", n - 1));
        }
        Ok(())
    };
    let gates = match name.as_str() {
        "h" if tokens.get(1).is_some_and(|t| t.eq_ignore_ascii_case("all")) => {
            expect_len(2)?;
            (0..num_qubits).map(Gate::H).collect()
        }
        "h" | "x" | "z" => {
            expect_len(2)?;
            let q = qubit(1)?;
            alloc::vec![match name.as_str() {
                "h" => Gate::H(q),
                "x" => Gate::X(q),
                _ => Gate::Z(q),
            }]
        }
        "ry" => {
            expect_len(3)?;
            let angle: f64 = tokens[2].parse().map_err(|_| format!("'{line}': bad angle"))?;
            alloc::vec![Gate::Ry(qubit(1)?, angle)]
        }
        "cz" => {
            expect_len(3)?;
            alloc::vec![Gate::Cz(qubit(1)?, qubit(2)?)]
        }
        other => return Err(format!("unknown gate '{other}'")),
    };
    Ok(gates)
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

/// How a normalized state `U|0⟩` is produced on a register.
#[derive(Debug, Clone, PartialEq)]
pub enum StatePrep {
    Circuit(Circuit),
    /// The state is loaded directly. Used where no preparation circuit is
    /// synthesized (non-product right-hand-side slices).
    Injected(Statevector),
}

impl StatePrep {
    pub fn num_qubits(&self) -> usize {
        match self {
            StatePrep::Circuit(c) => c.num_qubits(),
            StatePrep::Injected(s) => s.num_qubits(),
        }
    }

    pub fn state(&self) -> Statevector {
        match self {
            StatePrep::Circuit(c) => c.run(),
            StatePrep::Injected(s) => s.clone(),
        }
    }

    /// Prepares the state on a buffer currently holding `c·|0…0⟩`.
    pub(crate) fn prepare_in_place(&self, amps: &mut [Complex64]) {
        match self {
            StatePrep::Circuit(c) => c.apply_to(amps),
            StatePrep::Injected(s) => {
                let scale = amps[0];
                debug_assert!(amps[1..].iter().all(|a| a.norm_sqr() == 0.0));
                for (dst, src) in amps.iter_mut().zip(s.amplitudes()) {
                    *dst = *src * scale;
                }
            }
        }
    }
}
