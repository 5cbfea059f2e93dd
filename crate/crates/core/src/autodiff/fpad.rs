//! Fixed-point AD: the unrolled recursions with every derivative frozen at
//! one anchor `(x, w, α, β)`.

use crate::error::{dim_err, Error, Result};
use crate::linalg::{axpy, dist, norm, scale};
use crate::problems::CompositeProblem;
use crate::scalar::Real;
use crate::solver::SolveResult;

/// Frozen base point of the fixed-point engines.
///
/// `ν = proj_{∂ₓg(x,u)}(−∇ₓf(x,u))` and `w = x + αν`, so that
/// `prox_{αg}(w) = x` holds exactly whatever the residual of `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct FpadAnchor<T> {
    pub x: Vec<T>,
    pub nu: Vec<T>,
    pub w: Vec<T>,
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> FpadAnchor<T> {
    pub fn new<P: CompositeProblem<T>>(problem: &P, x: Vec<T>, alpha: T, beta: T) -> Result<Self> {
        if x.len() != problem.dim() {
            return Err(dim_err(format!(
                "anchor has length {}, expected {}",
                x.len(),
                problem.dim()
            )));
        }
        let lip = problem.lipschitz();
        if !(alpha > T::zero() && alpha * lip < T::lit(2.0)) {
            return Err(Error::StepSize {
                step: alpha.as_f64(),
                lipschitz: lip.as_f64(),
            });
        }
        if !(beta >= T::zero() && beta <= T::one()) {
            return Err(Error::InvalidArgument(format!(
                "anchor momentum must lie in [0, 1], got {beta}"
            )));
        }
        let neg_grad = scale(&problem.gradient(&x), -T::one());
        let nu = problem.subgrad_project(&x, &neg_grad);
        let mut w = x.clone();
        axpy(&mut w, alpha, &nu);
        Ok(Self {
            x,
            nu,
            w,
            alpha,
            beta,
        })
    }

    /// Anchor at a solver's output with its `α_K` and `β_K`.
    pub fn from_solve<P: CompositeProblem<T>>(problem: &P, res: &SolveResult<T>) -> Result<Self> {
        Self::new(problem, res.x.clone(), res.next_step, res.next_beta)
    }

    /// `‖ν + ∇ₓf(x)‖`, zero exactly at a minimizer.
    pub fn stationarity_gap<P: CompositeProblem<T>>(&self, problem: &P) -> T {
        let g = problem.gradient(&self.x);
        let s: Vec<T> = self.nu.iter().zip(&g).map(|(&a, &b)| a + b).collect();
        norm(&s)
    }
}

/// Stopping rule of the fixed-point engines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FpadOptions<T> {
    pub max_iters: usize,
    /// Forward: stop when `‖x̂(k+1) − x̂(k)‖ ≤ tol·‖x̂(k+1)‖`.
    /// Reverse: stop when `‖x̃‖ ≤ tol·‖x̄‖`. `0` runs all `max_iters`.
    pub tol: T,
}

impl<T: Real> FpadOptions<T> {
    pub fn new(max_iters: usize, tol: T) -> Self {
        Self { max_iters, tol }
    }

    /// Exactly `iters` iterations.
    pub fn fixed(iters: usize) -> Self {
        Self::new(iters, T::zero())
    }
}

/// Summary of a fixed-point run.
#[derive(Clone, Debug, PartialEq)]
pub struct FpadOutcome<V, T> {
    pub value: V,
    pub iterations: usize,
    pub converged: bool,
    /// Ratio of the last two step (forward) or `‖x̃‖` (reverse) norms.
    pub contraction: T,
}

fn ratio<T: Real>(num: T, den: T) -> T {
    if den > T::zero() {
        num / den
    } else {
        T::zero()
    }
}

/// Every forward iterate together with the run summary.
pub type ForwardSequence<T> = (Vec<Vec<T>>, FpadOutcome<Vec<T>, T>);

/// Forward FPAD: returns `x̂(0..)` with `x̂(0) = 0`.
pub fn fpad_forward<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    anchor: &FpadAnchor<T>,
    du: &P::Param,
    opts: FpadOptions<T>,
) -> Result<ForwardSequence<T>> {
    let mut seq = vec![vec![T::zero(); problem.dim()]];
    let out = fpad_forward_with(problem, anchor, du, opts, |_, v| seq.push(v.to_vec()))?;
    Ok((seq, out))
}

/// Forward FPAD calling `observe(k, x̂(k))` for `k ≥ 1`.
pub fn fpad_forward_with<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    anchor: &FpadAnchor<T>,
    du: &P::Param,
    opts: FpadOptions<T>,
    mut observe: impl FnMut(usize, &[T]),
) -> Result<FpadOutcome<Vec<T>, T>> {
    check_anchor(problem, anchor)?;
    let FpadAnchor {
        x, w, alpha, beta, ..
    } = anchor;
    let (alpha, beta) = (*alpha, *beta);
    let n = problem.dim();
    // −α D_u∇ₓf(x)·u̇ is the same every iteration.
    let drive = scale(&problem.cross_jvp(x, du), -alpha);
    let mut xh = vec![T::zero(); n];
    let mut xh_prev = vec![T::zero(); n];
    let (mut step, mut last_step) = (T::zero(), T::zero());
    let mut converged = false;
    let mut k = 0;
    while k < opts.max_iters {
        let yh: Vec<T> = xh
            .iter()
            .zip(&xh_prev)
            .map(|(&a, &b)| (T::one() + beta) * a - beta * b)
            .collect();
        let mut wh = yh.clone();
        axpy(&mut wh, -alpha, &problem.hvp(x, &yh));
        axpy(&mut wh, T::one(), &drive);
        let next = problem.prox_jvp(w, alpha, &wh, du);
        last_step = step;
        step = dist(&next, &xh);
        xh_prev = std::mem::replace(&mut xh, next);
        k += 1;
        observe(k, &xh);
        if step <= opts.tol * norm(&xh) {
            converged = true;
            break;
        }
    }
    if !converged && opts.tol > T::zero() {
        log::warn!(
            "forward FPAD did not reach tol {:e} in {} iterations (last step {:e})",
            opts.tol,
            k,
            step
        );
    }
    Ok(FpadOutcome {
        value: xh,
        iterations: k,
        converged,
        contraction: ratio(step, last_step),
    })
}

/// Reverse FPAD: `ũ → x̄·φ(x, u)` with O(1) state in the iteration count.
pub fn fpad_reverse<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    anchor: &FpadAnchor<T>,
    xbar: &[T],
    opts: FpadOptions<T>,
) -> Result<FpadOutcome<P::Param, T>> {
    reverse(problem, anchor, xbar, opts, None)
}

/// Reverse FPAD calling `observe(n, ũ(n))` for `n = 0..`.
///
/// Materialising every `ũ(n)` costs one cross-derivative VJP per
/// iteration; [`fpad_reverse`] only pays it once.
pub fn fpad_reverse_with<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    anchor: &FpadAnchor<T>,
    xbar: &[T],
    opts: FpadOptions<T>,
    mut observe: impl FnMut(usize, &P::Param),
) -> Result<FpadOutcome<P::Param, T>> {
    reverse(problem, anchor, xbar, opts, Some(&mut observe))
}

type Observer<'a, U> = Option<&'a mut dyn FnMut(usize, &U)>;

fn reverse<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    anchor: &FpadAnchor<T>,
    xbar: &[T],
    opts: FpadOptions<T>,
    mut observe: Observer<'_, P::Param>,
) -> Result<FpadOutcome<P::Param, T>> {
    check_anchor(problem, anchor)?;
    let n = problem.dim();
    if xbar.len() != n {
        return Err(dim_err(format!(
            "x̄ has length {}, expected {n}",
            xbar.len()
        )));
    }
    let FpadAnchor {
        x, w, alpha, beta, ..
    } = anchor;
    let (alpha, beta) = (*alpha, *beta);
    // The cross term is linear in w̃ at a frozen x, so only Σ w̃ is kept and
    // pulled back through D_u∇ₓf once.
    let mut u_prox = problem.param_zeros();
    let mut w_sum = vec![T::zero(); n];
    let mut xt = xbar.to_vec();
    let mut yt_next = vec![T::zero(); n];
    let stop = opts.tol * norm(xbar);
    let (mut size, mut last_size) = (norm(&xt), T::zero());
    let mut converged = false;

    let assemble = |u_prox: &P::Param, w_sum: &[T]| {
        let mut u = u_prox.clone();
        problem.cross_vjp_into(x, w_sum, -alpha, &mut u);
        u
    };
    if let Some(obs) = observe.as_mut() {
        obs(0, &u_prox);
    }
    let mut k = 0;
    while k < opts.max_iters {
        let wt = problem.prox_vjp_into(w, alpha, &xt, &mut u_prox);
        let mut yt = wt.clone();
        axpy(&mut yt, -alpha, &problem.hvp(x, &wt));
        axpy(&mut w_sum, T::one(), &wt);
        for ((xi, &yi), &yn) in xt.iter_mut().zip(&yt).zip(&yt_next) {
            *xi = (T::one() + beta) * yi - beta * yn;
        }
        yt_next = yt;
        k += 1;
        if let Some(obs) = observe.as_mut() {
            obs(k, &assemble(&u_prox, &w_sum));
        }
        last_size = size;
        size = norm(&xt);
        if size <= stop {
            converged = true;
            break;
        }
    }
    if !converged && opts.tol > T::zero() {
        log::warn!(
            "reverse FPAD did not reach tol {:e} in {} iterations (‖x̃‖ = {:e})",
            opts.tol,
            k,
            size
        );
    }
    Ok(FpadOutcome {
        value: assemble(&u_prox, &w_sum),
        iterations: k,
        converged,
        contraction: ratio(size, last_size),
    })
}

fn check_anchor<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    anchor: &FpadAnchor<T>,
) -> Result<()> {
    let n = problem.dim();
    if anchor.x.len() != n || anchor.w.len() != n || anchor.nu.len() != n {
        return Err(dim_err(format!("anchor vectors must have length {n}")));
    }
    Ok(())
}
