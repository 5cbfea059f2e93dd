//! Unrolled forward and reverse AD over a recorded APG/PGD trace.

use crate::error::{dim_err, Result};
use crate::linalg::axpy;
use crate::problems::CompositeProblem;
use crate::scalar::Real;
use crate::solver::SolveTrace;

/// Forward-mode state `(ẋ(k), ẋ(k−1))` for a fixed direction `u̇`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentState<T, U> {
    pub dot_x: Vec<T>,
    pub dot_x_prev: Vec<T>,
    pub dot_u: U,
}

/// Reverse-mode state: `x̄(k)`, `ȳ(k+1)` and the accumulated `ū`.
#[derive(Clone, Debug, PartialEq)]
pub struct CotangentState<T, U> {
    pub bar_x: Vec<T>,
    pub bar_y_next: Vec<T>,
    pub bar_u: U,
}

fn check_trace<T: Real, P: CompositeProblem<T>>(problem: &P, trace: &SolveTrace<T>) -> Result<()> {
    trace.validate(problem.dim())
}

fn warn_kinks(engine: &str, kinks: usize) {
    if kinks > 0 {
        log::warn!(
            "{engine}: {kinks} prox evaluations sat exactly on a kink; derivative taken as inactive there"
        );
    }
}

/// Unrolled forward AD: returns `ẋ(0..=K)` with `ẋ(0) = ẋ(−1) = 0`.
pub fn ad_forward<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    trace: &SolveTrace<T>,
    du: &P::Param,
) -> Result<Vec<Vec<T>>> {
    let mut out = Vec::with_capacity(trace.len() + 1);
    out.push(vec![T::zero(); problem.dim()]);
    ad_forward_with(problem, trace, du, |_, xd| out.push(xd.to_vec()))?;
    Ok(out)
}

/// Unrolled forward AD calling `observe(k, ẋ(k))` for `k = 1..=K`;
/// returns `ẋ(K)`.
pub fn ad_forward_with<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    trace: &SolveTrace<T>,
    du: &P::Param,
    mut observe: impl FnMut(usize, &[T]),
) -> Result<Vec<T>> {
    check_trace(problem, trace)?;
    let n = problem.dim();
    let mut st = TangentState {
        dot_x: vec![T::zero(); n],
        dot_x_prev: vec![T::zero(); n],
        dot_u: du.clone(),
    };
    let mut kinks = 0;
    for k in 0..trace.len() {
        let (alpha, beta) = (trace.steps[k], trace.momenta[k]);
        let y = &trace.ys[k];
        let w = &trace.ws[k];
        let yd: Vec<T> = st
            .dot_x
            .iter()
            .zip(&st.dot_x_prev)
            .map(|(&a, &b)| (T::one() + beta) * a - beta * b)
            .collect();
        let mut wd = yd.clone();
        axpy(&mut wd, -alpha, &problem.hvp(y, &yd));
        axpy(&mut wd, -alpha, &problem.cross_jvp(y, &st.dot_u));
        kinks += problem.prox_kinks(w, alpha);
        let next = problem.prox_jvp(w, alpha, &wd, &st.dot_u);
        st.dot_x_prev = std::mem::replace(&mut st.dot_x, next);
        observe(k + 1, &st.dot_x);
    }
    warn_kinks("forward AD", kinks);
    Ok(st.dot_x)
}

/// Unrolled reverse AD: returns `ū_K ≈ x̄·Dψ(u)`.
pub fn ad_reverse<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    trace: &SolveTrace<T>,
    xbar: &[T],
) -> Result<P::Param> {
    ad_reverse_with(problem, trace, xbar, |_, _| {})
}

/// Unrolled reverse AD calling `observe(n, ū(n))` for `n = 0..=K`.
///
/// The adjoint of `y(k) = (1+β_k)x(k) − β_k x(k−1)` sends `x̄(k)` the
/// contributions of `y(k)` and `y(k+1)`, so the last line of the sweep is
/// `x̄(k) = (1+β_k)ȳ(k) − β_{k+1}ȳ(k+1)`.
pub fn ad_reverse_with<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    trace: &SolveTrace<T>,
    xbar: &[T],
    mut observe: impl FnMut(usize, &P::Param),
) -> Result<P::Param> {
    check_trace(problem, trace)?;
    let n = problem.dim();
    if xbar.len() != n {
        return Err(dim_err(format!(
            "x̄ has length {}, expected {n}",
            xbar.len()
        )));
    }
    let kk = trace.len();
    let mut st = CotangentState {
        bar_x: xbar.to_vec(),
        bar_y_next: vec![T::zero(); n],
        bar_u: problem.param_zeros(),
    };
    observe(0, &st.bar_u);
    let mut kinks = 0;
    for step in 0..kk {
        let k = kk - step - 1;
        let alpha = trace.steps[k];
        let y = &trace.ys[k];
        let w = &trace.ws[k];
        kinks += problem.prox_kinks(w, alpha);
        let wbar = problem.prox_vjp_into(w, alpha, &st.bar_x, &mut st.bar_u);
        let mut ybar = wbar.clone();
        axpy(&mut ybar, -alpha, &problem.hvp(y, &wbar));
        problem.cross_vjp_into(y, &wbar, -alpha, &mut st.bar_u);
        let beta = trace.momenta[k];
        let beta_next = trace.momenta.get(k + 1).copied().unwrap_or(T::zero());
        st.bar_x = ybar
            .iter()
            .zip(&st.bar_y_next)
            .map(|(&a, &b)| (T::one() + beta) * a - beta_next * b)
            .collect();
        st.bar_y_next = ybar;
        observe(step + 1, &st.bar_u);
    }
    warn_kinks("reverse AD", kinks);
    Ok(st.bar_u)
}
