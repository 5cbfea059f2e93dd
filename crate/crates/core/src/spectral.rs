//! Power-iteration estimates of the spectral radius.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{dim_err, Result};
use crate::linalg::{norm, DenseMatrix};
use crate::scalar::Real;

/// Seed of the single random restart used when the all-ones start vector
/// is annihilated.
const RESTART_SEED: u64 = 0x005e_ed0f_ba11;

/// Outcome of a power iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimate<T> {
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue magnitude of a square matrix.
pub fn spectral_radius<T: Real>(
    m: &DenseMatrix<T>,
    tol: T,
    max_iters: usize,
) -> Result<SpectralEstimate<T>> {
    if !m.is_square() {
        return Err(dim_err(format!(
            "spectral radius of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    Ok(spectral_radius_op(
        m.rows(),
        |v| m.mul_vec(v),
        tol,
        max_iters,
    ))
}

/// Matrix-free variant: `apply` is the action of an `n x n` operator.
///
/// Starts from the all-ones vector. If the iterate is annihilated (the start
/// vector lies in the kernel) it restarts once from a fixed-seed random
/// vector; a second annihilation means the operator is nilpotent on the
/// reachable subspace and the estimate is zero.
pub fn spectral_radius_op<T: Real>(
    n: usize,
    apply: impl Fn(&[T]) -> Vec<T>,
    tol: T,
    max_iters: usize,
) -> SpectralEstimate<T> {
    if n == 0 {
        return SpectralEstimate {
            value: T::zero(),
            iterations: 0,
            converged: true,
        };
    }
    let inv = T::one() / T::from_usize(n).unwrap().sqrt();
    let mut x = vec![inv; n];
    let mut restarted = false;
    let mut prev = T::zero();
    for it in 1..=max_iters {
        let y = apply(&x);
        let ny = norm(&y);
        if ny == T::zero() {
            if restarted {
                return SpectralEstimate {
                    value: T::zero(),
                    iterations: it,
                    converged: true,
                };
            }
            restarted = true;
            let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
            x = (0..n)
                .map(|_| T::lit(rng.random::<f64>() - 0.5))
                .collect::<Vec<_>>();
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            prev = T::zero();
            continue;
        }
        if it > 1 && (ny - prev).abs() <= tol * ny {
            return SpectralEstimate {
                value: ny,
                iterations: it,
                converged: true,
            };
        }
        prev = ny;
        x = y.into_iter().map(|v| v / ny).collect();
    }
    SpectralEstimate {
        value: prev,
        iterations: max_iters,
        converged: false,
    }
}

/// Smallest eigenvalue of a symmetric matrix, computed in `f64` by a
/// full symmetric eigendecomposition.
pub fn min_eigenvalue_sym<T: Real>(m: &DenseMatrix<T>) -> Result<T> {
    if !m.is_square() {
        return Err(dim_err(format!(
            "eigenvalues of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(T::zero());
    }
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| m.get(i, j).as_f64());
    if a.iter().any(|v| !v.is_finite()) {
        return Err(crate::error::Error::NonFinite("symmetric eigenproblem"));
    }
    let min = a.symmetric_eigenvalues().min();
    Ok(T::lit(min))
}
