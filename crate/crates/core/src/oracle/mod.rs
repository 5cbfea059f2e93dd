//! Ground-truth derivatives of the solution mapping `ψ(u)` through the
//! reduced Riemannian system on the identified pattern, plus
//! finite-difference re-solves to check it.
//!
//! On the tangent coordinates `T` of `x* = ψ(u)`:
//!
//! ```text
//! H_T = (AᵀA ⊗ I_L)[T, T] + λ ∇²_ℳ g(x*)[T, T]
//! H_T ż = −(P_T D_u∇ₓf(x*)·u̇ + λ̇ ∇_ℳ g(x*))
//! ```
//!
//! `∇²_ℳ g` vanishes for l1; for l2,1 it is `(I − x̂x̂ᵀ)/‖x_r‖` per active
//! row `r` with `x̂ = x_r/‖x_r‖`.

mod cg;

pub use cg::{conjugate_gradient, CgOutcome};

use crate::error::{dim_err, Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::problems::{
    ActivePattern, CompositeProblem, NonsmoothTerm, ParamDirection, Problem, DEFAULT_ATOL,
};
use crate::scalar::Real;
use crate::solver::solve_to_tolerance;
use crate::spectral::min_eigenvalue_sym;

/// Reduced system on the tangent coordinates of `x*`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSystem<T> {
    pub pattern: ActivePattern,
    /// Flat coordinates of the tangent space, in order.
    pub indices: Vec<usize>,
    pub hessian_reduced: DenseMatrix<T>,
    /// `D_u∇_ℳF(x*, u)·u̇` on the tangent coordinates, when a direction was given.
    pub rhs_jvp: Option<Vec<T>>,
    /// Smallest eigenvalue of `hessian_reduced` (0 for an empty pattern).
    pub min_eigenvalue: T,
    full_dim: usize,
}

/// Assembles the reduced Hessian at `x*`, and the right-hand side for `u̇`
/// if one is given.
///
/// Fails with [`Error::SingularReducedHessian`] when the reduced Hessian is
/// not positive definite.
pub fn build_reduced_system<T: Real, G: NonsmoothTerm<T>>(
    problem: &Problem<T, G>,
    x_star: &[T],
    du: Option<&ParamDirection<T>>,
) -> Result<ReducedSystem<T>> {
    problem.check_point(x_star)?;
    let reg = problem.regularizer();
    let lambda = problem.reg_weight();
    let l = problem.params().width();
    let pattern = reg.pattern(x_star, T::lit(DEFAULT_ATOL));
    let indices = pattern.tangent_indices();
    let d = indices.len();
    let gram = problem.smooth().gram();

    let mut h = DenseMatrix::from_fn(d, d, |a, b| {
        let (i, j) = (indices[a], indices[b]);
        if i % l == j % l {
            gram.get(i / l, j / l)
        } else {
            T::zero()
        }
    });
    let n = x_star.len();
    let mut e = vec![T::zero(); n];
    for (b, &j) in indices.iter().enumerate() {
        e[j] = T::one();
        let col = reg.riemannian_hess(x_star, &pattern, &e);
        e[j] = T::zero();
        for (a, &i) in indices.iter().enumerate() {
            let v = h.get(a, b) + lambda * col[i];
            h.set(a, b, v);
        }
    }

    let min_eigenvalue = if d == 0 {
        T::zero()
    } else {
        min_eigenvalue_sym(&h)?
    };
    if d > 0 && !(min_eigenvalue > T::zero()) {
        return Err(Error::SingularReducedHessian {
            min_eigenvalue: min_eigenvalue.as_f64(),
        });
    }

    let rhs_jvp = match du {
        Some(du) => {
            problem.check_direction(du)?;
            let c = problem.cross_jvp(x_star, du);
            let rg = reg.riemannian_grad(x_star, &pattern);
            Some(
                indices
                    .iter()
                    .map(|&i| c[i] + du.reg_weight * rg[i])
                    .collect(),
            )
        }
        None => None,
    };
    Ok(ReducedSystem {
        pattern,
        indices,
        hessian_reduced: h,
        rhs_jvp,
        min_eigenvalue,
        full_dim: n,
    })
}

const CG_TOL: f64 = 1e-14;

impl<T: Real> ReducedSystem<T> {
    fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let h = &self.hessian_reduced;
        let out = conjugate_gradient(|v| h.mul_vec(v), rhs, T::lit(CG_TOL), 10 * rhs.len().max(1));
        if out.converged || out.residual <= T::lit(1e-10) {
            Ok(out.x)
        } else {
            Err(Error::CgFailure {
                iterations: out.iterations,
                residual: out.residual.as_f64(),
            })
        }
    }

    fn embed(&self, z: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.full_dim];
        for (&i, &v) in self.indices.iter().zip(z) {
            out[i] = v;
        }
        out
    }
}

/// `Dψ(u)·u̇`, zero off the pattern.
pub fn solve_dpsi_jvp<T: Real>(sys: &ReducedSystem<T>) -> Result<Vec<T>> {
    let rhs = sys.rhs_jvp.as_ref().ok_or_else(|| {
        Error::InvalidArgument("reduced system was built without a direction".into())
    })?;
    let neg: Vec<T> = rhs.iter().map(|&v| -v).collect();
    Ok(sys.embed(&sys.solve(&neg)?))
}

/// `x̄·Dψ(u)` over the parameters `(A, B, λ)`.
pub fn solve_dpsi_vjp<T: Real, G: NonsmoothTerm<T>>(
    problem: &Problem<T, G>,
    x_star: &[T],
    xbar: &[T],
) -> Result<ParamDirection<T>> {
    if xbar.len() != problem.dim() {
        return Err(dim_err(format!(
            "x̄ has length {}, expected {}",
            xbar.len(),
            problem.dim()
        )));
    }
    let sys = build_reduced_system(problem, x_star, None)?;
    let rhs: Vec<T> = sys.indices.iter().map(|&i| xbar[i]).collect();
    let z = sys.embed(&sys.solve(&rhs)?);
    let mut out = problem.param_zeros();
    problem.cross_vjp_into(x_star, &z, -T::one(), &mut out);
    let rg = problem.regularizer().riemannian_grad(x_star, &sys.pattern);
    out.reg_weight -= dot(&z, &rg);
    Ok(out)
}

/// Solution of `problem` re-solved from `warm` to fixed-point residual `tol`.
pub fn resolve<T: Real, G: NonsmoothTerm<T>>(
    problem: &Problem<T, G>,
    warm: &[T],
    tol: T,
) -> Result<Vec<T>> {
    let res = solve_to_tolerance(problem, warm, tol, 200_000)?;
    if !(res.residual < tol) {
        return Err(Error::NotConverged {
            what: "reference solve",
            iterations: res.iterations,
            residual: res.residual.as_f64(),
        });
    }
    Ok(res.x)
}

/// Central difference `(ψ(u + hu̇) − ψ(u − hu̇))/2h`, re-solving both sides
/// to residual `tol` from `x*`.
///
/// Fails with [`Error::PatternMismatch`] when either side identifies a
/// different pattern from `x*`.
pub fn fd_jvp<T: Real, G: NonsmoothTerm<T>>(
    problem: &Problem<T, G>,
    x_star: &[T],
    du: &ParamDirection<T>,
    h: T,
    tol: T,
) -> Result<Vec<T>> {
    problem.check_direction(du)?;
    let reg = problem.regularizer();
    let atol = T::lit(DEFAULT_ATOL);
    let base = reg.pattern(x_star, atol);
    let side = |s: T| -> Result<Vec<T>> {
        let p = Problem::new(problem.params().perturbed(du, s * h), reg.clone())?;
        let x = resolve(&p, x_star, tol)?;
        if reg.pattern(&x, atol) != base {
            return Err(Error::PatternMismatch);
        }
        Ok(x)
    };
    let plus = side(T::one())?;
    let minus = side(-T::one())?;
    let two_h = h + h;
    Ok(plus
        .iter()
        .zip(&minus)
        .map(|(&a, &b)| (a - b) / two_h)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{L1Norm, ParamPack};

    #[test]
    fn empty_pattern_gives_zero() {
        let a = DenseMatrix::new(3, 2, vec![1.0, 0.5, 0.2, 1.0, 0.3, 0.1]).unwrap();
        let b = vec![1.0, -0.5, 0.25];
        let p = Problem::new(ParamPack::lasso(a, b, 10.0).unwrap(), L1Norm).unwrap();
        let x = [0.0, 0.0];
        let du = ParamDirection::reg_weight_only(p.params(), 1.0);
        let sys = build_reduced_system(&p, &x, Some(&du)).unwrap();
        assert_eq!(sys.indices.len(), 0);
        assert_eq!(solve_dpsi_jvp(&sys).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn full_support_matches_dense_solve() {
        // A = diag(2, 1), b = (4, 3), λ = 1: x* = ((8 − 1)/4, 3 − 1) = (1.75, 2)
        let a = DenseMatrix::from_diag(&[2.0f64, 1.0]);
        let p = Problem::new(ParamPack::lasso(a, vec![4.0, 3.0], 1.0).unwrap(), L1Norm).unwrap();
        let x = [1.75, 2.0];
        assert!(crate::solver::fixed_point_residual(&p, &x, 0.25) < 1e-15);
        let du = ParamDirection::reg_weight_only(p.params(), 1.0);
        let sys = build_reduced_system(&p, &x, Some(&du)).unwrap();
        let dx = solve_dpsi_jvp(&sys).unwrap();
        // AᵀA ẋ = −sign(x*)·λ̇
        assert!(
            (dx[0] + 0.25).abs() < 1e-14 && (dx[1] + 1.0).abs() < 1e-14,
            "{dx:?}"
        );
    }
}
