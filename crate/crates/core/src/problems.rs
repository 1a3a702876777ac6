//! Benchmark systems and their partition into an agent grid.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
// Float math for no_std builds; std's inherent methods shadow it otherwise.
#[allow(unused_imports)]
use num_traits::Float;

use crate::circuit::{Circuit, Gate, StatePrep};
use crate::error::{Error, Result};
use crate::graph::NeighborGraph;
use crate::pauli::{LcuOperator, Pauli, PauliString, PauliTerm, DENSE_QUBIT_CAP};
use crate::spectral;
use crate::statevector::Statevector;

/// A global system `A x = b` with `b` prepared by a circuit on `|0…0⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub op: LcuOperator,
    pub b_circuit: Circuit,
}

impl LinearSystem {
    pub fn num_qubits(&self) -> usize {
        self.op.num_qubits()
    }

    pub fn b_state(&self) -> Statevector {
        self.b_circuit.run()
    }
}

/// Smallest and largest eigenvalue of a real symmetric Pauli sum.
pub fn extreme_eigenvalues(op: &LcuOperator) -> Result<(f64, f64)> {
    if op.num_qubits() > DENSE_QUBIT_CAP {
        return Err(Error::SizeCap { num_qubits: op.num_qubits(), cap: DENSE_QUBIT_CAP });
    }
    spectral::extreme_eigenvalues(1 << op.num_qubits(), |v| op.apply_real(v))
}

/// Condition number of a symmetric positive definite Pauli sum.
pub fn condition_number(op: &LcuOperator) -> Result<f64> {
    let (lo, hi) = extreme_eigenvalues(op)?;
    if lo <= 0.0 {
        return Err(Error::Infeasible(format!("operator is not positive definite (smallest eigenvalue {lo})")));
    }
    Ok(hi / lo)
}

/// `Σ X_i + κ Σ Z_i Z_{i+1}` before shifting and scaling.
fn ising_hamiltonian(n: usize, kappa: f64) -> Vec<PauliTerm> {
    let mut terms = Vec::new();
    for i in 0..n {
        terms.push(PauliTerm::new(1.0, PauliString::single(n, i, Pauli::X)));
    }
    for i in 0..n.saturating_sub(1) {
        terms.push(PauliTerm::new(kappa, PauliString::from_sites(n, &[(i, Pauli::Z), (i + 1, Pauli::Z)])));
    }
    terms
}

/// Shift and normalization of the transverse-field Ising system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingTuning {
    pub lambda: f64,
    pub zeta: f64,
}

/// `(1/ζ)(Σ X_i + κ Σ Z_i Z_{i+1} + λ I)`.
pub fn ising_operator(n: usize, kappa: f64, tuning: IsingTuning) -> Result<LcuOperator> {
    if n == 0 || n > DENSE_QUBIT_CAP {
        return Err(Error::SizeCap { num_qubits: n, cap: DENSE_QUBIT_CAP });
    }
    let mut terms = ising_hamiltonian(n, kappa);
    terms.push(PauliTerm::new(tuning.lambda, PauliString::identity(n)));
    LcuOperator::new(n, terms)?.scaled(1.0 / tuning.zeta)
}

/// Picks `λ` so the shifted spectrum `[e_min+λ, e_max+λ]` has the target
/// ratio, then `ζ = e_max + λ` so the largest eigenvalue is 1.
pub fn tune_ising(n: usize, kappa: f64, target_condition: f64) -> Result<IsingTuning> {
    if !(target_condition > 1.0) {
        return Err(Error::Infeasible(format!("condition target {target_condition} must exceed 1")));
    }
    if n == 0 || n > DENSE_QUBIT_CAP {
        return Err(Error::SizeCap { num_qubits: n, cap: DENSE_QUBIT_CAP });
    }
    let h0 = LcuOperator::new(n, ising_hamiltonian(n, kappa))?;
    let (lo, hi) = extreme_eigenvalues(&h0)?;
    if hi - lo < 1e-12 {
        return Err(Error::Infeasible("flat spectrum cannot reach a condition target".into()));
    }
    let lambda = (hi - target_condition * lo) / (target_condition - 1.0);
    Ok(IsingTuning { lambda, zeta: hi + lambda })
}

/// Tuned Ising system with `b = H^{⊗n}|0⟩`.
pub fn ising_system(n: usize, kappa: f64, target_condition: f64) -> Result<(LinearSystem, IsingTuning)> {
    let tuning = tune_ising(n, kappa, target_condition)?;
    let op = ising_operator(n, kappa, tuning)?;
    Ok((LinearSystem { op, b_circuit: Circuit::hadamard_layer(n)? }, tuning))
}

/// Stabilizer centers (0-based) for a chain of `n` qubits: the first
/// center is qubit 0, then every `spacing` qubits while the right `Z` fits.
pub fn stabilizer_centers(n: usize, spacing: usize) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::Infeasible(format!("cluster chain needs at least 2 qubits, got {n}")));
    }
    if spacing == 0 {
        return Err(Error::Infeasible("stabilizer spacing must be positive".into()));
    }
    Ok((0..).map(|k| k * spacing).take_while(|&c| c + 1 < n).collect())
}

/// Sum of cluster stabilizers: `X_1 Z_2` at the boundary, `Z X Z` elsewhere.
fn stabilizer_strings(n: usize, spacing: usize) -> Result<Vec<PauliString>> {
    Ok(stabilizer_centers(n, spacing)?
        .into_iter()
        .map(|c| {
            if c == 0 {
                PauliString::from_sites(n, &[(0, Pauli::X), (1, Pauli::Z)])
            } else {
                PauliString::from_sites(n, &[(c - 1, Pauli::Z), (c, Pauli::X), (c + 1, Pauli::Z)])
            }
        })
        .collect())
}

/// H on every qubit, then CZ along the chain.
pub fn cluster_state_circuit(n: usize) -> Result<Circuit> {
    let mut gates: Vec<Gate> = (0..n).map(Gate::H).collect();
    gates.extend((1..n).map(|i| Gate::Cz(i - 1, i)));
    Circuit::new(n, gates)
}

/// `c1 I + c2 Σ stabilizers + ε X_n` with `b` the `n`-qubit cluster state.
pub fn scaled_cluster_system(n: usize, spacing: usize, c1: f64, c2: f64, eps_perturb: f64) -> Result<LinearSystem> {
    if n < 3 {
        return Err(Error::Infeasible(format!("scaled cluster system needs n ≥ 3, got {n}")));
    }
    let mut terms = alloc::vec![PauliTerm::new(c1, PauliString::identity(n))];
    terms.extend(stabilizer_strings(n, spacing)?.into_iter().map(|s| PauliTerm::new(c2, s)));
    terms.push(PauliTerm::new(eps_perturb, PauliString::single(n, n - 1, Pauli::X)));
    Ok(LinearSystem { op: LcuOperator::new(n, terms)?, b_circuit: cluster_state_circuit(n)? })
}

pub const CLUSTER_QUBITS: usize = 13;
pub const CLUSTER_SPACING: usize = 3;

/// The 13-qubit perturbed cluster system with stabilizers
/// `X1Z2, Z3X4Z5, Z6X7Z8, Z9X10Z11` and perturbation `ε X13`.
pub fn cluster_system(c1: f64, c2: f64, eps_perturb: f64) -> Result<LinearSystem> {
    scaled_cluster_system(CLUSTER_QUBITS, CLUSTER_SPACING, c1, c2, eps_perturb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterTuning {
    pub c1: f64,
    pub c2: f64,
}

/// Chooses `c2 > 0` so the spectrum of `B = c2 Σ stabilizers + ε X_n` spans
/// `1 − 1/κ`, then `c1 = 1 − max(B)`, giving spectrum `[1/κ, 1]`.
pub fn tune_cluster(n: usize, spacing: usize, eps_perturb: f64, target_condition: f64) -> Result<ClusterTuning> {
    if !(target_condition > 1.0) {
        return Err(Error::Infeasible(format!("condition target {target_condition} must exceed 1")));
    }
    let width = 1.0 - 1.0 / target_condition;
    let spread = |c2: f64| -> Result<(f64, f64)> {
        let op = scaled_cluster_system(n, spacing, 0.0, c2, eps_perturb)?.op;
        let (lo, hi) = if op.is_empty() { (0.0, 0.0) } else { extreme_eigenvalues(&op)? };
        Ok((hi - lo, hi))
    };
    if spread(0.0)?.0 > width {
        return Err(Error::Infeasible(format!(
            "perturbation {eps_perturb} alone exceeds the spectral width allowed by condition {target_condition}"
        )));
    }
    let mut hi = 1.0;
    while spread(hi)?.0 < width {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Infeasible("condition target unreachable".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spread(mid)?.0 < width {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let c2 = 0.5 * (lo + hi);
    Ok(ClusterTuning { c1: 1.0 - spread(c2)?.1, c2 })
}

/// How the global `b_i` is shared among the agents of block row `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitRule {
    /// `b_ij = b_i / m`.
    #[default]
    Uniform,
    /// `b_ii = b_i`, zero elsewhere.
    Diagonal,
}

impl fmt::Display for SplitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitRule::Uniform => "uniform",
            SplitRule::Diagonal => "diagonal",
        })
    }
}

impl FromStr for SplitRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SplitRule::Uniform),
            "diagonal" => Ok(SplitRule::Diagonal),
            other => Err(Error::InvalidConfig(format!("unknown split rule `{other}`"))),
        }
    }
}

/// One agent's share of `b`: `b_ij = norm · prep|0⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct BSlice {
    pub prep: StatePrep,
    pub norm: f64,
}

/// A system split into an `m × m` grid of `q`-qubit blocks.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub total_qubits: usize,
    pub block_qubits: usize,
    pub grid_size: usize,
    pub global_op: LcuOperator,
    pub b_circuit: Circuit,
    /// Dense real amplitudes of the global `b`.
    pub b_dense: Vec<f64>,
    pub split_rule: SplitRule,
    /// `blocks[i][j] = A_ij`.
    pub blocks: Vec<Vec<LcuOperator>>,
    pub b_slices: Vec<Vec<BSlice>>,
    pub row_graph: NeighborGraph,
    pub col_graph: NeighborGraph,
}

impl ProblemInstance {
    /// Dense `b_ij` vector.
    pub fn b_slice_vector(&self, row: usize, col: usize) -> Vec<f64> {
        let s = &self.b_slices[row][col];
        s.prep.state().real_parts().into_iter().map(|v| v * s.norm).collect()
    }
}

/// Partitions `system` into `2^(n−q)` block rows and columns.
pub fn partition(system: &LinearSystem, q: usize, split_rule: SplitRule, row_graph: NeighborGraph, col_graph: NeighborGraph) -> Result<ProblemInstance> {
    let n = system.num_qubits();
    if system.b_circuit.num_qubits() != n {
        return Err(Error::DimensionMismatch { expected: n, found: system.b_circuit.num_qubits() });
    }
    if q == 0 || q > n {
        return Err(Error::InvalidConfig(format!("block qubit count {q} must lie in 1..={n}")));
    }
    let m = 1usize << (n - q);
    for (name, g) in [("row", &row_graph), ("column", &col_graph)] {
        if g.num_vertices() != m {
            return Err(Error::InvalidGraph(format!("{name} graph has {} vertices, grid needs {m}", g.num_vertices())));
        }
    }
    let blocks = (0..m).map(|i| (0..m).map(|j| system.op.block(i, j, q)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;

    let b_dense = system.b_state().real_parts();
    let dim = 1usize << q;
    let product_tail = if system.b_circuit.is_product() { Some(system.b_circuit.restrict(n - q, q)?) } else { None };
    let mut b_slices = Vec::with_capacity(m);
    for i in 0..m {
        let row = &b_dense[i * dim..(i + 1) * dim];
        let row_norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let prep = slice_prep(system, row, row_norm, product_tail.as_ref(), m)?;
        let slices = (0..m)
            .map(|j| {
                let norm = match split_rule {
                    SplitRule::Uniform => row_norm / m as f64,
                    SplitRule::Diagonal if i == j => row_norm,
                    SplitRule::Diagonal => 0.0,
                };
                BSlice { prep: prep.clone(), norm }
            })
            .collect();
        b_slices.push(slices);
    }

    Ok(ProblemInstance {
        total_qubits: n,
        block_qubits: q,
        grid_size: m,
        global_op: system.op.clone(),
        b_circuit: system.b_circuit.clone(),
        b_dense,
        split_rule,
        blocks,
        b_slices,
        row_graph,
        col_graph,
    })
}

/// Preparation of the normalized row slice. Uses a circuit when one is
/// available and matches, otherwise injects the state.
fn slice_prep(system: &LinearSystem, row: &[f64], row_norm: f64, product_tail: Option<&Circuit>, m: usize) -> Result<StatePrep> {
    let q = row.len().trailing_zeros() as usize;
    if row_norm == 0.0 {
        return Ok(StatePrep::Circuit(Circuit::empty(q)?));
    }
    if m == 1 {
        return Ok(StatePrep::Circuit(system.b_circuit.clone()));
    }
    let target: Vec<f64> = row.iter().map(|v| v / row_norm).collect();
    if let Some(tail) = product_tail {
        let tail_state = tail.run().real_parts();
        let overlap: f64 = tail_state.iter().zip(&target).map(|(a, b)| a * b).sum();
        let mut circuit = tail.clone();
        if overlap < 0.0 {
            // XZXZ = −I flips the global sign.
            for g in [Gate::X(0), Gate::Z(0), Gate::X(0), Gate::Z(0)] {
                circuit.push(g)?;
            }
        }
        let got = circuit.run().real_parts();
        if got.iter().zip(&target).all(|(a, b)| (a - b).abs() < 1e-12) {
            return Ok(StatePrep::Circuit(circuit));
        }
    }
    Ok(StatePrep::Injected(Statevector::from_real(&target)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Topology;
    use alloc::string::{String, ToString};
    use nalgebra::{DMatrix, DVector};

    fn dense_condition(op: &LcuOperator) -> f64 {
        let e = op.to_dense().unwrap().symmetric_eigen().eigenvalues;
        e.max() / e.min()
    }

    fn path(m: usize) -> NeighborGraph {
        NeighborGraph::make(Topology::Path, m).unwrap()
    }

    #[test]
    fn two_qubit_field_only_spectrum() {
        let tuning = IsingTuning { lambda: 3.0, zeta: 1.0 };
        let op = ising_operator(2, 0.0, tuning).unwrap();
        let mut e: Vec<f64> = op.to_dense().unwrap().symmetric_eigen().eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        assert!(e.iter().zip([1.0, 3.0, 3.0, 5.0]).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!((dense_condition(&op) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn ising_tuner_hits_targets() {
        for (n, target) in [(2, 50.0), (4, 50.0), (4, 200.0), (7, 200.0)] {
            let (sys, _) = ising_system(n, 0.1, target).unwrap();
            let c = dense_condition(&sys.op);
            assert!((c - target).abs() < 0.01 * target, "n={n}: {c}");
            let e = sys.op.to_dense().unwrap().symmetric_eigen().eigenvalues;
            assert!((e.max() - 1.0).abs() < 1e-9);
            let b = sys.b_state();
            let amp = 2f64.powf(-(n as f64) / 2.0);
            assert!(b.amplitudes().iter().all(|a| (a.re - amp).abs() < 1e-14));
        }
        assert!(tune_ising(3, 0.1, 1.0).is_err());
        assert!(matches!(tune_ising(14, 0.1, 10.0), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn cluster_layout() {
        let sys = cluster_system(0.5, 0.1, 0.1).unwrap();
        assert_eq!(sys.op.terms().len(), 6);
        let strings: Vec<String> = sys.op.terms().iter().map(|t| t.string.to_string()).collect();
        assert!(strings.contains(&"XZIIIIIIIIIII".into()));
        assert!(strings.contains(&"IIZXZIIIIIIII".into()));
        assert!(strings.contains(&"IIIIIIIIZXZII".into()));
        assert!(strings.contains(&"IIIIIIIIIIIIX".into()));
        assert_eq!(stabilizer_centers(5, 3).unwrap(), [0, 3]);
        assert_eq!(stabilizer_centers(3, 3).unwrap(), [0]);
        assert!(stabilizer_centers(5, 0).is_err());
        assert!(scaled_cluster_system(2, 3, 1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn cluster_state_is_stabilized() {
        for n in [3, 5, 8] {
            let b = cluster_state_circuit(n).unwrap().run();
            for s in stabilizer_strings(n, 1).unwrap() {
                let mut w = b.clone();
                w.apply_pauli_string(&s, num_complex::Complex64::new(1.0, 0.0)).unwrap();
                assert!((b.real_overlap(&w).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unperturbed_solution_is_scaled_b() {
        for (n, stabs) in [(3, 1.0), (5, 2.0)] {
            let sys = scaled_cluster_system(n, 3, 0.6, 0.1, 0.0).unwrap();
            let a = sys.op.to_dense().unwrap();
            let b = DVector::from_vec(sys.b_state().real_parts());
            let x = a.lu().solve(&b).unwrap();
            assert!((x - &b / (0.6 + stabs * 0.1)).norm() < 1e-12);
        }
    }

    #[test]
    fn cluster_tuning() {
        let t = tune_cluster(13, 3, 0.1, 20.0).unwrap();
        assert!((t.c1 - 0.525).abs() < 1e-9 && (t.c2 - 0.09375).abs() < 1e-9);
        let t5 = tune_cluster(5, 3, 0.1, 20.0).unwrap();
        let sys = scaled_cluster_system(5, 3, t5.c1, t5.c2, 0.1).unwrap();
        assert!((dense_condition(&sys.op) - 20.0).abs() < 0.2);
        assert!(sys.op.to_dense().unwrap().symmetric_eigen().eigenvalues.min() > 0.049);
        assert!(matches!(tune_cluster(5, 3, 0.6, 20.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn trivial_partition_keeps_everything() {
        let (sys, _) = ising_system(3, 0.1, 50.0).unwrap();
        let p = partition(&sys, 3, SplitRule::Uniform, path(1), path(1)).unwrap();
        assert_eq!(p.grid_size, 1);
        assert_eq!(p.blocks[0][0], sys.op);
        assert_eq!(p.b_slices[0][0].prep, StatePrep::Circuit(sys.b_circuit.clone()));
        assert!((p.b_slices[0][0].norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn blocks_and_slices_reassemble() {
        let cases = [
            (ising_system(5, 0.1, 50.0).unwrap().0, SplitRule::Uniform),
            (scaled_cluster_system(5, 3, 0.5, 0.1, 0.1).unwrap(), SplitRule::Uniform),
            (scaled_cluster_system(4, 3, 0.5, 0.1, 0.1).unwrap(), SplitRule::Diagonal),
        ];
        for (sys, rule) in cases {
            for q in 1..=sys.num_qubits() {
                let m = 1 << (sys.num_qubits() - q);
                let p = partition(&sys, q, rule, path(m), path(m)).unwrap();
                let dim = 1 << q;
                let dense = sys.op.to_dense().unwrap();
                let mut rebuilt = DMatrix::zeros(m * dim, m * dim);
                for i in 0..m {
                    for j in 0..m {
                        rebuilt.view_mut((i * dim, j * dim), (dim, dim)).copy_from(&p.blocks[i][j].to_dense().unwrap());
                    }
                    let mut row = alloc::vec![0.0; dim];
                    for j in 0..m {
                        for (acc, v) in row.iter_mut().zip(p.b_slice_vector(i, j)) {
                            *acc += v;
                        }
                    }
                    assert!(row.iter().zip(&p.b_dense[i * dim..]).all(|(a, b)| (a - b).abs() < 1e-12));
                }
                assert!((rebuilt - dense).abs().max() <= 1e-12);
                if rule == SplitRule::Uniform {
                    let expect = p.b_slices[0].iter().map(|s| s.norm).sum::<f64>() / m as f64;
                    assert!(p.b_slices[0].iter().all(|s| (s.norm - expect).abs() < 1e-15));
                }
            }
        }
    }

    #[test]
    fn product_b_gets_circuits_and_cluster_b_is_injected() {
        let (ising, _) = ising_system(4, 0.1, 50.0).unwrap();
        let p = partition(&ising, 2, SplitRule::Uniform, path(4), path(4)).unwrap();
        assert!(p.b_slices.iter().flatten().all(|s| matches!(s.prep, StatePrep::Circuit(_))));
        let cluster = scaled_cluster_system(4, 3, 0.5, 0.1, 0.1).unwrap();
        let p = partition(&cluster, 2, SplitRule::Uniform, path(4), path(4)).unwrap();
        assert!(p.b_slices.iter().flatten().all(|s| matches!(s.prep, StatePrep::Injected(_))));

        let flipped = LinearSystem {
            op: LcuOperator::identity(2),
            b_circuit: Circuit::new(2, alloc::vec![Gate::H(0), Gate::Z(0), Gate::H(1)]).unwrap(),
        };
        let p = partition(&flipped, 1, SplitRule::Uniform, path(2), path(2)).unwrap();
        assert!(matches!(p.b_slices[1][0].prep, StatePrep::Circuit(_)));
        let v = p.b_slice_vector(1, 0);
        assert!((v[0] + 0.25).abs() < 1e-14 && (v[1] + 0.25).abs() < 1e-14);
    }

    #[test]
    fn partition_validation() {
        let (sys, _) = ising_system(3, 0.1, 50.0).unwrap();
        assert!(partition(&sys, 0, SplitRule::Uniform, path(8), path(8)).is_err());
        assert!(partition(&sys, 4, SplitRule::Uniform, path(1), path(1)).is_err());
        assert!(matches!(partition(&sys, 2, SplitRule::Uniform, path(3), path(2)), Err(Error::InvalidGraph(_))));
        assert_eq!("diagonal".parse::<SplitRule>().unwrap(), SplitRule::Diagonal);
    }
}
