//! Global residual, consensus measures and classical reference solutions.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
// Float math for no_std builds; std's inherent methods shadow it otherwise.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::optimizer::Network;
use crate::pauli::{LcuOperator, DENSE_QUBIT_CAP};
use crate::problems::ProblemInstance;

/// Largest size handled by dense factorizations.
pub const DENSE_SOLVE_CAP: usize = 10;

/// Metrics of one iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub iteration: usize,
    pub residual: f64,
    pub consensus_error: f64,
    pub param_consensus_error: f64,
    pub wall_time: f64,
    pub seed: u64,
}

pub fn record(problem: &ProblemInstance, network: &Network, seed: u64, wall_time: f64) -> Result<RunRecord> {
    let rows = row_estimates(problem, network)?;
    let x = average(&rows);
    Ok(RunRecord {
        iteration: network.iteration(),
        residual: global_residual(problem, &x)?,
        consensus_error: consensus_from_rows(&rows, &x),
        param_consensus_error: param_consensus_error(network),
        wall_time,
        seed,
    })
}

fn check_dense(problem: &ProblemInstance) -> Result<()> {
    if problem.total_qubits > DENSE_QUBIT_CAP {
        return Err(Error::SizeCap { num_qubits: problem.total_qubits, cap: DENSE_QUBIT_CAP });
    }
    Ok(())
}

/// `x_i`: the stack of `ρ_ij |x_ij⟩` over `j`, one per block row.
pub fn row_estimates(problem: &ProblemInstance, network: &Network) -> Result<Vec<Vec<f64>>> {
    check_dense(problem)?;
    let m = network.grid_size();
    let ansatz = &network.setup().ansatz;
    (0..m)
        .map(|i| {
            let mut row = Vec::with_capacity(m << ansatz.num_qubits);
            for j in 0..m {
                let a = &network.agent(i, j).alpha_tilde;
                let state = ansatz.prepare_state(&a.angles)?;
                row.extend(state.amplitudes().iter().map(|c| a.norm_scale * c.re));
            }
            Ok(row)
        })
        .collect()
}

fn average(rows: &[Vec<f64>]) -> Vec<f64> {
    let m = rows.len() as f64;
    let mut x = alloc::vec![0.0; rows[0].len()];
    for row in rows {
        x.iter_mut().zip(row).for_each(|(acc, v)| *acc += v / m);
    }
    x
}

/// `x(t) = (1/m) Σ_i x_i(t)`.
pub fn global_estimate(problem: &ProblemInstance, network: &Network) -> Result<Vec<f64>> {
    Ok(average(&row_estimates(problem, network)?))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `‖A x − b‖` from the global operator.
pub fn global_residual(problem: &ProblemInstance, x: &[f64]) -> Result<f64> {
    check_dense(problem)?;
    let ax = problem.global_op.apply_real(x)?;
    Ok(norm(&ax.iter().zip(&problem.b_dense).map(|(a, b)| a - b).collect::<Vec<_>>()))
}

/// `√(Σ_i ‖Σ_j A_ij x_j − b_i‖²)` from the blocks.
pub fn blockwise_residual(problem: &ProblemInstance, x: &[f64]) -> Result<f64> {
    check_dense(problem)?;
    let dim = 1usize << problem.block_qubits;
    if x.len() != dim * problem.grid_size {
        return Err(Error::DimensionMismatch { expected: dim * problem.grid_size, found: x.len() });
    }
    let mut total = 0.0;
    for i in 0..problem.grid_size {
        let mut r: Vec<f64> = problem.b_dense[i * dim..(i + 1) * dim].iter().map(|b| -b).collect();
        for j in 0..problem.grid_size {
            let part = problem.blocks[i][j].apply_real(&x[j * dim..(j + 1) * dim])?;
            r.iter_mut().zip(part).for_each(|(acc, v)| *acc += v);
        }
        total += r.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(total.sqrt())
}

fn consensus_from_rows(rows: &[Vec<f64>], x: &[f64]) -> f64 {
    let m = rows.len() as f64;
    let s: f64 = rows.iter().map(|row| row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).sum();
    (s / m).sqrt()
}

/// `√((1/m) Σ_i ‖x_i − x‖²)`.
pub fn consensus_error(problem: &ProblemInstance, network: &Network) -> Result<f64> {
    let rows = row_estimates(problem, network)?;
    let x = average(&rows);
    Ok(consensus_from_rows(&rows, &x))
}

/// Standard deviation of `α̃_ij` across rows `i`, root-mean-square over
/// columns `j`.
pub fn param_consensus_error(network: &Network) -> f64 {
    let m = network.grid_size();
    let columns: Vec<Vec<Vec<f64>>> = (0..m).map(|j| (0..m).map(|i| network.agent(i, j).alpha_tilde.to_vec()).collect()).collect();
    param_spread(&columns)
}

/// Same measure on raw vectors: `columns[j][i]` is row `i`'s vector for column `j`.
pub fn param_spread(columns: &[Vec<Vec<f64>>]) -> f64 {
    let mut total = 0.0;
    for col in columns {
        total += consensus_from_rows(col, &average(col)).powi(2);
    }
    (total / columns.len() as f64).sqrt()
}

/// Minimum-norm least-squares solution of `A x = b`.
///
/// Dense SVD up to [`DENSE_SOLVE_CAP`] qubits, conjugate gradients on the
/// normal equations (started from zero, so the iterate stays in the row
/// space) above that.
pub fn classical_lsq(op: &LcuOperator, b: &[f64]) -> Result<Vec<f64>> {
    let n = op.num_qubits();
    if n > DENSE_QUBIT_CAP {
        return Err(Error::SizeCap { num_qubits: n, cap: DENSE_QUBIT_CAP });
    }
    if b.len() != 1 << n {
        return Err(Error::DimensionMismatch { expected: 1 << n, found: b.len() });
    }
    if n <= DENSE_SOLVE_CAP {
        let a = op.to_dense()?;
        let svd = a.svd(true, true);
        let tol = 1e-12 * svd.singular_values.max().max(1.0);
        let x = svd.solve(&DVector::from_column_slice(b), tol).map_err(|e| Error::Infeasible(e.into()))?;
        return Ok(x.iter().copied().collect());
    }
    cgls(op, b)
}

fn cgls(op: &LcuOperator, b: &[f64]) -> Result<Vec<f64>> {
    // Real Pauli sums without Y letters are symmetric, so Aᵀ = A.
    if op.has_y() {
        return Err(Error::ImaginaryOperator);
    }
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, c)| a * c).sum::<f64>();
    let mut x = alloc::vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut s = op.apply_real(&r)?;
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let stop = 1e-28 * gamma.max(1e-300);
    for _ in 0..20 * b.len() {
        if gamma <= stop {
            break;
        }
        let q = op.apply_real(&p)?;
        let qq = dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
        s = op.apply_real(&r)?;
        let next = dot(&s, &s);
        let beta = next / gamma;
        gamma = next;
        p.iter_mut().zip(&s).for_each(|(pi, si)| *pi = si + beta * *pi);
    }
    Ok(x)
}

/// Both evaluations of `Σ_i min_z ‖Ā_i x − b̄_i − L̄ z_i‖²` and the target
/// `(1/m)‖A x − b‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Check {
    /// Via the projection `(𝟙𝟙ᵀ/m) ⊗ I` onto `ker L̄ᵀ`.
    pub projection: f64,
    /// Via a least-squares solve over `z`.
    pub direct: f64,
    pub scaled_residual: f64,
}

impl Lemma1Check {
    pub fn max_gap(&self) -> f64 {
        (self.projection - self.scaled_residual).abs().max((self.direct - self.scaled_residual).abs())
    }
}

/// Row-wise check that minimizing over the auxiliary variables leaves
/// exactly `1/m` of the squared residual. `x` stacks the solution slices.
pub fn lemma1_check(problem: &ProblemInstance, x: &[f64]) -> Result<Lemma1Check> {
    if problem.total_qubits > DENSE_SOLVE_CAP {
        return Err(Error::SizeCap { num_qubits: problem.total_qubits, cap: DENSE_SOLVE_CAP });
    }
    let m = problem.grid_size;
    let dim = 1usize << problem.block_qubits;
    if x.len() != m * dim {
        return Err(Error::DimensionMismatch { expected: m * dim, found: x.len() });
    }
    let laplacian = problem.row_graph.laplacian();
    let l_bar = laplacian.kronecker(&DMatrix::<f64>::identity(dim, dim));
    let svd = l_bar.clone().svd(true, true);

    let (mut projection, mut direct) = (0.0, 0.0);
    for i in 0..m {
        // r_i stacks A_ij x_j − b_ij over j.
        let mut r = DVector::zeros(m * dim);
        for j in 0..m {
            let ax = problem.blocks[i][j].apply_real(&x[j * dim..(j + 1) * dim])?;
            let b = problem.b_slice_vector(i, j);
            for k in 0..dim {
                r[j * dim + k] = ax[k] - b[k];
            }
        }
        let mut mean = DVector::zeros(dim);
        for j in 0..m {
            mean += r.rows(j * dim, dim) / m as f64;
        }
        projection += m as f64 * mean.norm_squared();

        let z = svd.solve(&r, 1e-10).map_err(|e| Error::Infeasible(e.into()))?;
        direct += (&r - &l_bar * z).norm_squared();
    }
    let res = global_residual(problem, x)?;
    Ok(Lemma1Check { projection, direct, scaled_residual: res * res / m as f64 })
}
