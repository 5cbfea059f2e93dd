//! Implicit differentiation of the fixed-point equation `x = pgd(x, u)`
//! linearised at an anchor.
//!
//! With `R v = D_w prox·(v − α∇²ₓf·v)` and
//! `S u̇ = D_w prox·(−α D_u∇ₓf·u̇) + D_u prox·u̇`, both at the anchor's
//! `(w, u)`, the JVP solves `(I − R)X = S u̇` and the VJP solves
//! `z(I − R) = x̄` and returns `z S`.

use crate::autodiff::fpad::FpadAnchor;
use crate::error::{Error, Result};
use crate::linalg::{axpy, norm};
use crate::oracle::conjugate_gradient;
use crate::problems::CompositeProblem;
use crate::scalar::Real;
use crate::spectral::spectral_radius_op;

/// Linear solver for `I − R`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImplicitBackend {
    /// Neumann summation when the power-iteration estimate of `ρ(R)` is
    /// below [`NEUMANN_RHO_MAX`], CG on the normal equations otherwise.
    Auto,
    Neumann,
    /// Conjugate gradients on the normal equations.
    Cg,
}

/// Largest contraction estimate for which [`ImplicitBackend::Auto`] sums
/// the Neumann series.
pub const NEUMANN_RHO_MAX: f64 = 0.999;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImplicitOptions<T> {
    pub backend: ImplicitBackend,
    pub tol: T,
    pub max_iters: usize,
}

impl<T: Real> Default for ImplicitOptions<T> {
    fn default() -> Self {
        Self {
            backend: ImplicitBackend::Auto,
            tol: T::lit(1e-12),
            max_iters: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImplicitSolution<V, T> {
    pub value: V,
    /// [`ImplicitBackend::Neumann`] or [`ImplicitBackend::Cg`].
    pub method: ImplicitBackend,
    pub iterations: usize,
    /// Power-iteration estimate of `ρ(R)`, when one was computed.
    pub rho: Option<T>,
}

/// `(I − R)⁻¹ S u̇`.
pub fn implicit_jvp<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    anchor: &FpadAnchor<T>,
    du: &P::Param,
    opts: &ImplicitOptions<T>,
) -> Result<ImplicitSolution<Vec<T>, T>> {
    let ops = Ops { problem, anchor };
    let rhs = ops.s(du);
    let (value, method, iterations, rho) = ops.solve(&rhs, opts, |v| ops.r(v), |v| ops.rt(v))?;
    Ok(ImplicitSolution {
        value,
        method,
        iterations,
        rho,
    })
}

/// `x̄ (I − R)⁻¹ S`.
pub fn implicit_vjp<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    anchor: &FpadAnchor<T>,
    xbar: &[T],
    opts: &ImplicitOptions<T>,
) -> Result<ImplicitSolution<P::Param, T>> {
    let ops = Ops { problem, anchor };
    let (z, method, iterations, rho) = ops.solve(xbar, opts, |v| ops.rt(v), |v| ops.r(v))?;
    Ok(ImplicitSolution {
        value: ops.st(&z),
        method,
        iterations,
        rho,
    })
}

struct Ops<'a, T, P> {
    problem: &'a P,
    anchor: &'a FpadAnchor<T>,
}

impl<T: Real, P: CompositeProblem<T>> Ops<'_, T, P> {
    fn r(&self, v: &[T]) -> Vec<T> {
        let a = self.anchor;
        let mut g = v.to_vec();
        axpy(&mut g, -a.alpha, &self.problem.hvp(&a.x, v));
        self.problem.prox_jvp_w(&a.w, a.alpha, &g)
    }

    fn rt(&self, v: &[T]) -> Vec<T> {
        let a = self.anchor;
        let wbar = self.problem.prox_vjp_w(&a.w, a.alpha, v);
        let mut out = wbar.clone();
        axpy(&mut out, -a.alpha, &self.problem.hvp(&a.x, &wbar));
        out
    }

    fn s(&self, du: &P::Param) -> Vec<T> {
        let a = self.anchor;
        let mut g = self.problem.cross_jvp(&a.x, du);
        g.iter_mut().for_each(|v| *v *= -a.alpha);
        self.problem.prox_jvp(&a.w, a.alpha, &g, du)
    }

    fn st(&self, z: &[T]) -> P::Param {
        let a = self.anchor;
        let mut acc = self.problem.param_zeros();
        let wbar = self.problem.prox_vjp_into(&a.w, a.alpha, z, &mut acc);
        self.problem.cross_vjp_into(&a.x, &wbar, -a.alpha, &mut acc);
        acc
    }

    /// Solves `(I − op) x = b`; `op_t` is the transpose of `op`.
    fn solve(
        &self,
        b: &[T],
        opts: &ImplicitOptions<T>,
        op: impl Fn(&[T]) -> Vec<T>,
        op_t: impl Fn(&[T]) -> Vec<T>,
    ) -> Result<(Vec<T>, ImplicitBackend, usize, Option<T>)> {
        let (backend, rho) = match opts.backend {
            ImplicitBackend::Auto => {
                let est = spectral_radius_op(b.len(), &op, T::lit(1e-8), 5_000);
                let backend = if est.value < T::lit(NEUMANN_RHO_MAX) {
                    ImplicitBackend::Neumann
                } else {
                    ImplicitBackend::Cg
                };
                (backend, Some(est.value))
            }
            other => (other, None),
        };
        match backend {
            ImplicitBackend::Neumann => {
                let (x, it) = neumann(b, &op, rho, opts)?;
                Ok((x, backend, it, rho))
            }
            _ => {
                // (I − op)ᵀ(I − op) x = (I − op)ᵀ b
                let minus = |v: &[T], w: Vec<T>| -> Vec<T> {
                    v.iter().zip(&w).map(|(&a, &c)| a - c).collect()
                };
                let rhs = minus(b, op_t(b));
                let normal = |v: &[T]| {
                    let u = minus(v, op(v));
                    minus(&u, op_t(&u))
                };
                let out = conjugate_gradient(normal, &rhs, opts.tol, opts.max_iters);
                if !out.converged {
                    return Err(Error::CgFailure {
                        iterations: out.iterations,
                        residual: out.residual.as_f64(),
                    });
                }
                Ok((out.x, ImplicitBackend::Cg, out.iterations, rho))
            }
        }
    }
}

/// `Σ_k op^k b`, stopped when the next term is below
/// `tol·(1 − ρ)·‖sum‖` so that the neglected tail is below `tol·‖sum‖`.
fn neumann<T: Real>(
    b: &[T],
    op: impl Fn(&[T]) -> Vec<T>,
    rho: Option<T>,
    opts: &ImplicitOptions<T>,
) -> Result<(Vec<T>, usize)> {
    let gap = rho
        .map(|r| (T::one() - r).max(T::lit(1e-6)))
        .unwrap_or(T::one());
    let mut sum = b.to_vec();
    let mut term = b.to_vec();
    for it in 1..=opts.max_iters {
        term = op(&term);
        axpy(&mut sum, T::one(), &term);
        let nt = norm(&term);
        if nt <= opts.tol * gap * norm(&sum) {
            return Ok((sum, it));
        }
        if !nt.is_finite() {
            break;
        }
    }
    Err(Error::NotConverged {
        what: "Neumann series",
        iterations: opts.max_iters,
        residual: (norm(&term) / norm(&sum)).as_f64(),
    })
}
