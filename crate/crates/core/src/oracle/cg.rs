use crate::linalg::{axpy, dot, norm};
use crate::scalar::Real;

/// Result of [`conjugate_gradient`].
#[derive(Clone, Debug, PartialEq)]
pub struct CgOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// A search direction with nonpositive curvature was met.
    pub breakdown: bool,
    /// `‖Ax − b‖/‖b‖` at exit (0 when `b = 0`).
    pub residual: T,
}

/// Conjugate gradients for a symmetric positive definite action, from `x = 0`.
///
/// Stops when `‖Ax − b‖ ≤ tol·‖b‖`. The residual is tracked by the
/// recurrence and recomputed explicitly before reporting convergence.
pub fn conjugate_gradient<T: Real>(
    mut apply: impl FnMut(&[T]) -> Vec<T>,
    b: &[T],
    tol: T,
    max_iters: usize,
) -> CgOutcome<T> {
    let n = b.len();
    let nb = norm(b);
    let mut x = vec![T::zero(); n];
    if nb == T::zero() {
        return CgOutcome {
            x,
            iterations: 0,
            converged: true,
            breakdown: false,
            residual: T::zero(),
        };
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut breakdown = false;
    let mut it = 0;
    while it < max_iters {
        if rr.sqrt() <= tol * nb {
            // guard against drift of the recursive residual
            let mut true_r = b.to_vec();
            axpy(&mut true_r, -T::one(), &apply(&x));
            if norm(&true_r) <= tol * nb {
                break;
            }
            r = true_r;
            rr = dot(&r, &r);
            p = r.clone();
        }
        let ap = apply(&p);
        let curv = dot(&p, &ap);
        if !(curv > T::zero()) {
            breakdown = true;
            break;
        }
        let a = rr / curv;
        axpy(&mut x, a, &p);
        axpy(&mut r, -a, &ap);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, &ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        it += 1;
    }
    let mut true_r = b.to_vec();
    axpy(&mut true_r, -T::one(), &apply(&x));
    let residual = norm(&true_r) / nb;
    CgOutcome {
        x,
        iterations: it,
        converged: residual <= tol && !breakdown,
        breakdown,
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    #[test]
    fn identity_one_step() {
        let b = [1.0, -2.0, 3.0];
        let out = conjugate_gradient(|v: &[f64]| v.to_vec(), &b, 1e-14, 10);
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.x, b.to_vec());
    }

    #[test]
    fn zero_rhs() {
        let out = conjugate_gradient(|v: &[f64]| v.to_vec(), &[0.0, 0.0], 1e-14, 10);
        assert_eq!(out.x, vec![0.0, 0.0]);
        assert!(out.converged);
    }

    #[test]
    fn indefinite_breaks_down() {
        let m = DenseMatrix::from_diag(&[1.0f64, -1.0]);
        let out = conjugate_gradient(|v: &[f64]| m.mul_vec(v), &[1.0, 1.0], 1e-12, 10);
        assert!(out.breakdown && !out.converged);
    }
}
