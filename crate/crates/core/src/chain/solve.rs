use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Error, Result};

const RESIDUAL_TARGET: f64 = 1e-10;

/// A stationary distribution together with its quality indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub pi: Vec<f64>,
    /// The balance equations were singular; `pi` is the point mass on state 0.
    pub degenerate: bool,
    /// `‖πP - π‖∞`.
    pub residual: f64,
}

/// `‖πP - π‖∞` for a row-major `n × n` matrix.
pub fn residual(matrix: &[f64], n: usize, pi: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            acc += pi[i] * matrix[i * n + j];
        }
        worst = worst.max(libm::fabs(acc - pi[j]));
    }
    worst
}

/// Solves `π = πP`, `Σπ = 1` by LU decomposition of `Pᵀ - I` with the last
/// balance equation replaced by the normalization.
///
/// A singular system (more than one closed class) yields the point mass on
/// the first state with `degenerate` set.
pub fn stationary_distribution(matrix: &[f64], n: usize) -> Result<Stationary> {
    if n == 0 || matrix.len() != n * n {
        return Err(domain!("transition matrix must be non-empty and square"));
    }
    let mut a = DMatrix::<f64>::from_fn(n, n, |r, c| {
        matrix[c * n + r] - if r == c { 1.0 } else { 0.0 }
    });
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;

    let solved = a.lu().solve(&b).filter(|x| x.iter().all(|v| v.is_finite()));
    let Some(x) = solved else {
        let mut pi = vec![0.0; n];
        pi[0] = 1.0;
        let residual = residual(matrix, n, &pi);
        return Ok(Stationary {
            pi,
            degenerate: true,
            residual,
        });
    };
    let mut pi: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    let residual = residual(matrix, n, &pi);
    if !(residual <= RESIDUAL_TARGET) {
        return Err(Error::Convergence { residual });
    }
    Ok(Stationary {
        pi,
        degenerate: false,
        residual,
    })
}

/// Iterates `π ← π(P + I)/2` from the uniform vector until successive
/// iterates differ by at most `tol` in the ∞-norm.
///
/// The lazy step removes periodicity without moving the fixed point.
pub fn power_iteration(matrix: &[f64], n: usize, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if n == 0 || matrix.len() != n * n {
        return Err(domain!("transition matrix must be non-empty and square"));
    }
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        next.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let w = pi[i];
            if w == 0.0 {
                continue;
            }
            let row = &matrix[i * n..(i + 1) * n];
            for (acc, p) in next.iter_mut().zip(row) {
                *acc += w * p;
            }
        }
        let mut delta: f64 = 0.0;
        for (nv, pv) in next.iter_mut().zip(&pi) {
            *nv = 0.5 * (*nv + pv);
            delta = delta.max(libm::fabs(*nv - pv));
        }
        core::mem::swap(&mut pi, &mut next);
        if delta <= tol {
            let total: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|v| *v /= total);
            return Ok(pi);
        }
    }
    Err(Error::Convergence {
        residual: residual(matrix, n, &pi),
    })
}
