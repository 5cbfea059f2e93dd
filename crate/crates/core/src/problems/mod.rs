//! Parameterized composite problems `min_x f(x, u) + g(x, u)`.
//!
//! [`Problem`] pairs the quadratic data term `½‖AX − B‖²` with a
//! [`NonsmoothTerm`]; [`CompositeProblem`] is the regularizer-agnostic
//! interface every solver and derivative engine is written against.

mod params;
mod pattern;
mod regularizer;
mod smooth;

pub use params::{ParamDirection, ParamPack, ParamVector};
pub use pattern::{ActivePattern, PatternKind};
pub use regularizer::{
    group_prox, group_prox_jvp, l1_prox, l1_prox_jvp, subgrad_project, GroupL21Norm, L1Norm,
    NonsmoothTerm, ZeroTerm,
};
pub use smooth::{lasso_smooth, QuadraticLoss, SmoothTerm};

use crate::error::{dim_err, Result};
use crate::scalar::Real;

/// Default magnitude below which coordinates are structural zeros.
pub const DEFAULT_ATOL: f64 = 1e-10;

/// First- and second-order actions of `F = f + g` consumed by the solvers
/// and the derivative engines.
///
/// Iterates are flat vectors of length [`dim`](Self::dim); parameter
/// tangents and cotangents live in [`Param`](Self::Param).
pub trait CompositeProblem<T: Real> {
    type Param: ParamVector<T>;

    fn dim(&self) -> usize;
    fn param_zeros(&self) -> Self::Param;

    /// `F(x, u)`, used by the divergence guard.
    fn objective(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T]) -> Vec<T>;
    fn hvp(&self, x: &[T], v: &[T]) -> Vec<T>;
    fn cross_jvp(&self, x: &[T], du: &Self::Param) -> Vec<T>;
    /// `acc += scale · v̄·D_u∇ₓf(x, u)`.
    fn cross_vjp_into(&self, x: &[T], vbar: &[T], scale: T, acc: &mut Self::Param);
    fn lipschitz(&self) -> T;

    /// `prox_{αg(·,u)}(w)`.
    fn prox(&self, w: &[T], alpha: T) -> Vec<T>;
    /// `D_w prox·ẇ + D_u prox·u̇` at `(w, u)`.
    fn prox_jvp(&self, w: &[T], alpha: T, dw: &[T], du: &Self::Param) -> Vec<T>;
    /// Returns `x̄·D_w prox` and adds `x̄·D_u prox` into `acc`.
    fn prox_vjp_into(&self, w: &[T], alpha: T, xbar: &[T], acc: &mut Self::Param) -> Vec<T>;
    /// `D_w prox·ẇ`.
    fn prox_jvp_w(&self, w: &[T], alpha: T, dw: &[T]) -> Vec<T> {
        self.prox_jvp(w, alpha, dw, &self.param_zeros())
    }
    /// `x̄·D_w prox`.
    fn prox_vjp_w(&self, w: &[T], alpha: T, xbar: &[T]) -> Vec<T> {
        self.prox_vjp_into(w, alpha, xbar, &mut self.param_zeros())
    }
    /// Coordinates of `w` on a kink of the prox.
    fn prox_kinks(&self, _w: &[T], _alpha: T) -> usize {
        0
    }

    /// `proj_{∂ₓg(x,u)}(v)`.
    fn subgrad_project(&self, x: &[T], v: &[T]) -> Vec<T>;

    fn cross_vjp(&self, x: &[T], vbar: &[T]) -> Self::Param {
        let mut acc = self.param_zeros();
        self.cross_vjp_into(x, vbar, T::one(), &mut acc);
        acc
    }

    /// `pgd(x) = prox_{αg}(x − α∇ₓf(x))`.
    fn pgd_step(&self, x: &[T], alpha: T) -> Vec<T> {
        let g = self.gradient(x);
        let w: Vec<T> = x.iter().zip(&g).map(|(&xi, &gi)| xi - alpha * gi).collect();
        self.prox(&w, alpha)
    }
}

/// Quadratic data term with a partly smooth regularizer: Lasso for
/// [`L1Norm`], Group Lasso for [`GroupL21Norm`].
#[derive(Clone, Debug)]
pub struct Problem<T, G> {
    loss: QuadraticLoss<T>,
    reg: G,
}

impl<T: Real, G: NonsmoothTerm<T>> Problem<T, G> {
    pub fn new(params: ParamPack<T>, reg: G) -> Result<Self> {
        reg.check_width(params.width())?;
        Ok(Self {
            loss: QuadraticLoss::new(params)?,
            reg,
        })
    }

    pub fn params(&self) -> &ParamPack<T> {
        self.loss.params()
    }

    pub fn reg_weight(&self) -> T {
        self.loss.params().reg_weight
    }

    pub fn regularizer(&self) -> &G {
        &self.reg
    }

    pub fn smooth(&self) -> &QuadraticLoss<T> {
        &self.loss
    }

    /// Same data with a different weight `λ`; reuses the cached Gram matrix.
    pub fn with_reg_weight(&self, lambda: T) -> Self {
        let mut p = self.clone();
        p.loss.set_reg_weight(lambda);
        p
    }

    pub fn check_point(&self, x: &[T]) -> Result<()> {
        self.loss.check_point(x)
    }

    pub fn check_direction(&self, du: &ParamDirection<T>) -> Result<()> {
        if !du.matches(self.params()) {
            return Err(dim_err(
                "parameter direction does not match the parameter shapes",
            ));
        }
        Ok(())
    }
}

impl<T: Real, G: NonsmoothTerm<T>> CompositeProblem<T> for Problem<T, G> {
    type Param = ParamDirection<T>;

    fn dim(&self) -> usize {
        self.params().dim()
    }

    fn param_zeros(&self) -> ParamDirection<T> {
        ParamDirection::zeros(self.params())
    }

    fn objective(&self, x: &[T]) -> T {
        self.loss.value(x) + self.reg_weight() * self.reg.value(x)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        self.loss.gradient(x)
    }

    fn hvp(&self, x: &[T], v: &[T]) -> Vec<T> {
        self.loss.hvp(x, v)
    }

    fn cross_jvp(&self, x: &[T], du: &ParamDirection<T>) -> Vec<T> {
        self.loss.cross_jvp(x, du)
    }

    fn cross_vjp_into(&self, x: &[T], vbar: &[T], scale: T, acc: &mut ParamDirection<T>) {
        self.loss.cross_vjp_into(x, vbar, scale, acc)
    }

    fn lipschitz(&self) -> T {
        self.loss.lipschitz()
    }

    fn prox(&self, w: &[T], alpha: T) -> Vec<T> {
        self.reg.prox(w, alpha * self.reg_weight())
    }

    fn prox_jvp(&self, w: &[T], alpha: T, dw: &[T], du: &ParamDirection<T>) -> Vec<T> {
        self.reg
            .prox_jvp(w, alpha * self.reg_weight(), dw, alpha * du.reg_weight)
    }

    fn prox_vjp_into(&self, w: &[T], alpha: T, xbar: &[T], acc: &mut ParamDirection<T>) -> Vec<T> {
        let (wbar, tbar) = self.reg.prox_vjp(w, alpha * self.reg_weight(), xbar);
        acc.reg_weight += alpha * tbar;
        wbar
    }

    fn prox_jvp_w(&self, w: &[T], alpha: T, dw: &[T]) -> Vec<T> {
        self.reg
            .prox_jvp(w, alpha * self.reg_weight(), dw, T::zero())
    }

    fn prox_vjp_w(&self, w: &[T], alpha: T, xbar: &[T]) -> Vec<T> {
        self.reg.prox_vjp(w, alpha * self.reg_weight(), xbar).0
    }

    fn prox_kinks(&self, w: &[T], alpha: T) -> usize {
        self.reg.kinks(w, alpha * self.reg_weight())
    }

    fn subgrad_project(&self, x: &[T], v: &[T]) -> Vec<T> {
        self.reg.subgrad_project(x, self.reg_weight(), v)
    }
}

/// Active pattern of `x` for the given term.
pub fn identify_pattern<T: Real, G: NonsmoothTerm<T>>(term: &G, x: &[T], atol: T) -> ActivePattern {
    term.pattern(x, atol)
}

/// Outcome of [`check_nondegeneracy`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NondegeneracyReport<T> {
    pub ok: bool,
    /// `1 −` largest off-pattern dual magnitude of `−∇ₓf(x*)/λ`.
    pub min_gap: T,
}

/// Checks `0 ∈ ri ∂F(x*)` numerically: the scaled negative gradient
/// `v = −∇ₓf(x*)/λ` must have off-pattern dual magnitudes at most
/// `1 − margin`.
pub fn check_nondegeneracy<T: Real, G: NonsmoothTerm<T>>(
    problem: &Problem<T, G>,
    x_star: &[T],
    margin: T,
) -> Result<NondegeneracyReport<T>> {
    problem.check_point(x_star)?;
    let lambda = problem.reg_weight();
    let v: Vec<T> = problem
        .gradient(x_star)
        .into_iter()
        .map(|g| -g / lambda)
        .collect();
    let pattern = problem.regularizer().pattern(x_star, T::lit(DEFAULT_ATOL));
    let worst = problem.regularizer().off_pattern_dual_max(&pattern, &v);
    Ok(NondegeneracyReport {
        ok: worst <= T::one() - margin,
        min_gap: T::one() - worst,
    })
}
