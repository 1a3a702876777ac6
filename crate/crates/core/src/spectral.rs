//! Extreme eigenvalues of symmetric operators given only by their action.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
// Float math for no_std builds; std's inherent methods shadow it otherwise.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const MAX_KRYLOV: usize = 300;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest and largest eigenvalue of the symmetric operator `apply` on
/// `R^dim`, by Lanczos with full reorthogonalization.
pub fn extreme_eigenvalues<F>(dim: usize, apply: F) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if dim == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    let steps = dim.min(MAX_KRYLOV);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n0 = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= n0);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut last = (f64::NAN, f64::NAN);
    for k in 0..steps {
        let mut w = apply(&v)?;
        let a = dot(&w, &v);
        alpha.push(a);
        basis.push(v);
        // Two Gram-Schmidt passes keep the basis orthogonal to rounding.
        for _ in 0..2 {
            for u in &basis {
                let c = dot(&w, u);
                w.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = dot(&w, &w).sqrt();

        if k % 10 == 9 || k + 1 == steps || b < 1e-12 {
            let ext = tridiagonal_extremes(&alpha, &beta);
            let converged = (ext.0 - last.0).abs() < 1e-13 * (1.0 + ext.0.abs()) && (ext.1 - last.1).abs() < 1e-13 * (1.0 + ext.1.abs());
            last = ext;
            if converged || b < 1e-12 {
                break;
            }
        }
        beta.push(b);
        v = w.into_iter().map(|x| x / b).collect();
    }
    Ok(last)
}

fn tridiagonal_extremes(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |r, c| {
        if r == c {
            alpha[r]
        } else if r + 1 == c {
            beta[r]
        } else if c + 1 == r {
            beta[c]
        } else {
            0.0
        }
    });
    let e = SymmetricEigen::new(t).eigenvalues;
    (e.min(), e.max())
}
