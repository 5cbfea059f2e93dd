//! Proximal gradient descent and its accelerated (FISTA-type) variant.
//!
//! ```text
//! y(k)   = (1 + β_k) x(k) − β_k x(k−1)
//! w(k)   = y(k) − α_k ∇ₓf(y(k), u)
//! x(k+1) = prox_{α_k g}(w(k), u)
//! ```
//!
//! with `x(−1) = x(0)`. Setting every `β_k = 0` gives PGD.

use crate::error::{dim_err, Error, Result};
use crate::linalg::{dist, norm};
use crate::problems::CompositeProblem;
use crate::scalar::Real;

/// Step size schedule.
#[derive(Clone, Debug, PartialEq)]
pub enum StepRule<T> {
    /// `α = 1/L` with `L` the Lipschitz constant of `∇ₓf`.
    InverseLipschitz,
    Constant(T),
    /// `α_k` for the first entries, then the last entry repeated.
    Sequence(Vec<T>),
}

/// Momentum schedule.
#[derive(Clone, Debug, PartialEq)]
pub enum MomentumRule<T> {
    /// `β_k = 0`, i.e. PGD.
    Zero,
    /// `β_k = clamp((k − 1)/(k + q), 0, 1)`, `q > 2`.
    Nesterov {
        q: T,
    },
    Constant(T),
    /// `β_k = clamp((k − q)/(k + 1), 0, 1)`, the variant used for the
    /// denoising dual.
    Shifted {
        q: T,
    },
}

impl<T: Real> MomentumRule<T> {
    pub fn beta(&self, k: usize) -> T {
        match *self {
            MomentumRule::Zero => T::zero(),
            MomentumRule::Nesterov { q } => nesterov_beta(k, q),
            MomentumRule::Constant(b) => b,
            MomentumRule::Shifted { q } => {
                let k = T::from_usize(k).unwrap_or(T::max_value());
                ((k - q) / (k + T::one())).max(T::zero()).min(T::one())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, MomentumRule::Zero)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            MomentumRule::Nesterov { q } if !(q > T::lit(2.0)) => Err(Error::InvalidArgument(
                format!("Nesterov momentum needs q > 2, got {q}"),
            )),
            MomentumRule::Constant(b) if !(b >= T::zero() && b <= T::one()) => Err(
                Error::InvalidArgument(format!("constant momentum must lie in [0, 1], got {b}")),
            ),
            MomentumRule::Shifted { q } if !(q >= T::zero()) => Err(Error::InvalidArgument(
                format!("shifted momentum needs q ≥ 0, got {q}"),
            )),
            _ => Ok(()),
        }
    }
}

/// `(k − 1)/(k + q)` clamped to `[0, 1]`.
pub fn nesterov_beta<T: Real>(k: usize, q: T) -> T {
    let k = T::from_usize(k).unwrap_or(T::max_value());
    ((k - T::one()) / (k + q)).max(T::zero()).min(T::one())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T> {
    pub step: StepRule<T>,
    pub momentum: MomentumRule<T>,
    pub max_iters: usize,
    /// Stop once `‖x(k) − pgd(x(k))‖` drops below this; `0` disables the test.
    pub fp_residual_tol: T,
    pub record_trace: bool,
    /// Abort when `F(x(k))` exceeds this multiple of `max(|F(x(0))|, 1)`.
    pub divergence_guard: Option<T>,
}

impl<T: Real> SolverConfig<T> {
    pub fn pgd(max_iters: usize) -> Self {
        Self {
            step: StepRule::InverseLipschitz,
            momentum: MomentumRule::Zero,
            max_iters,
            fp_residual_tol: T::zero(),
            record_trace: false,
            divergence_guard: Some(T::lit(1e6)),
        }
    }

    /// Nesterov momentum with the given `q`.
    pub fn apg(max_iters: usize, q: T) -> Self {
        Self {
            momentum: MomentumRule::Nesterov { q },
            ..Self::pgd(max_iters)
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.fp_residual_tol = tol;
        self
    }

    pub fn step_at(&self, k: usize, lipschitz: T) -> T {
        match &self.step {
            StepRule::InverseLipschitz => T::one() / lipschitz,
            StepRule::Constant(a) => *a,
            StepRule::Sequence(s) => s[k.min(s.len() - 1)],
        }
    }

    fn validate(&self, lipschitz: T) -> Result<()> {
        self.momentum.validate()?;
        let check = |a: T| {
            if a > T::zero() && a * lipschitz < T::lit(2.0) && a.is_finite() {
                Ok(())
            } else {
                Err(Error::StepSize {
                    step: a.as_f64(),
                    lipschitz: lipschitz.as_f64(),
                })
            }
        };
        match &self.step {
            StepRule::InverseLipschitz => {
                if !(lipschitz > T::zero()) || !lipschitz.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "step 1/L needs a positive Lipschitz constant, got {lipschitz}"
                    )));
                }
                Ok(())
            }
            StepRule::Constant(a) => check(*a),
            StepRule::Sequence(s) => {
                if s.is_empty() {
                    return Err(Error::InvalidArgument("empty step sequence".into()));
                }
                s.iter().try_for_each(|&a| check(a))
            }
        }
    }
}

/// Per-iteration record of a solve; the tape of unrolled reverse AD.
///
/// After `K` updates: `iterates` holds `x(0..=K)`, `residuals` holds
/// `‖x(k) − pgd(x(k))‖` for `k = 0..=K`, and `ys`, `ws`, `steps`,
/// `momenta` hold `y(k)`, `w(k)`, `α_k`, `β_k` for `k = 0..K`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveTrace<T> {
    pub iterates: Vec<Vec<T>>,
    pub ys: Vec<Vec<T>>,
    pub ws: Vec<Vec<T>>,
    pub steps: Vec<T>,
    pub momenta: Vec<T>,
    pub residuals: Vec<T>,
}

impl<T: Real> SolveTrace<T> {
    fn with_capacity(iters: usize) -> Self {
        Self {
            iterates: Vec::with_capacity(iters + 1),
            ys: Vec::with_capacity(iters),
            ws: Vec::with_capacity(iters),
            steps: Vec::with_capacity(iters),
            momenta: Vec::with_capacity(iters),
            residuals: Vec::with_capacity(iters + 1),
        }
    }

    /// Number of recorded updates `K`.
    pub fn len(&self) -> usize {
        self.ws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ws.is_empty()
    }

    /// Checks that the per-iteration arrays have consistent lengths.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let k = self.ws.len();
        let ok = self.iterates.len() == k + 1
            && self.ys.len() == k
            && self.steps.len() == k
            && self.momenta.len() == k;
        if !ok {
            return Err(Error::MissingTrace(format!(
                "{} iterates, {} y, {} w, {} steps, {} momenta",
                self.iterates.len(),
                self.ys.len(),
                k,
                self.steps.len(),
                self.momenta.len()
            )));
        }
        if self
            .iterates
            .iter()
            .chain(&self.ys)
            .chain(&self.ws)
            .any(|v| v.len() != dim)
        {
            return Err(dim_err(format!("trace vectors must have length {dim}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult<T> {
    pub x: Vec<T>,
    pub trace: Option<SolveTrace<T>>,
    /// Number of updates performed.
    pub iterations: usize,
    /// `‖x − pgd(x)‖` at the returned point.
    pub residual: T,
    /// `β_K`, the momentum the next update would use; FPAD on APG freezes it.
    pub next_beta: T,
    /// `α_K`.
    pub next_step: T,
}

/// `‖x − prox_{αg}(x − α∇ₓf(x))‖₂`.
pub fn fixed_point_residual<T: Real, P: CompositeProblem<T>>(problem: &P, x: &[T], alpha: T) -> T {
    dist(x, &problem.pgd_step(x, alpha))
}

fn check_start<T: Real, P: CompositeProblem<T>>(problem: &P, x0: &[T]) -> Result<()> {
    if x0.len() != problem.dim() {
        return Err(dim_err(format!(
            "start point has length {}, expected {}",
            x0.len(),
            problem.dim()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("start point"));
    }
    Ok(())
}

struct Guard<T> {
    limit: Option<T>,
}

impl<T: Real> Guard<T> {
    fn new<P: CompositeProblem<T>>(problem: &P, x0: &[T], factor: Option<T>) -> Self {
        Self {
            limit: factor.map(|c| c * problem.objective(x0).abs().max(T::one())),
        }
    }

    fn check<P: CompositeProblem<T>>(&self, problem: &P, x: &[T], iter: usize) -> Result<()> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                iter,
                objective: f64::NAN,
                limit: self.limit.map_or(f64::INFINITY, |l| l.as_f64()),
            });
        }
        if let Some(limit) = self.limit {
            let obj = problem.objective(x);
            if !(obj <= limit) {
                return Err(Error::Diverged {
                    iter,
                    objective: obj.as_f64(),
                    limit: limit.as_f64(),
                });
            }
        }
        Ok(())
    }
}

/// Runs accelerated proximal gradient from `x(0) = x(−1) = x0`.
///
/// Stops after `max_iters` updates or when the fixed-point residual falls
/// below `fp_residual_tol`. With [`MomentumRule::Zero`] the iterates and
/// trace are bitwise identical to [`pgd_solve`].
pub fn apg_solve<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    x0: &[T],
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    if cfg.momentum.is_zero() {
        return pgd_solve(problem, x0, cfg);
    }
    check_start(problem, x0)?;
    let lip = problem.lipschitz();
    cfg.validate(lip)?;
    let guard = Guard::new(problem, x0, cfg.divergence_guard);
    let want_residual = cfg.record_trace || cfg.fp_residual_tol > T::zero();
    let mut trace = cfg
        .record_trace
        .then(|| SolveTrace::with_capacity(cfg.max_iters));

    let mut x = x0.to_vec();
    let mut x_prev = x0.to_vec();
    let mut residual = T::infinity();
    let mut k = 0;
    loop {
        let alpha = cfg.step_at(k, lip);
        if want_residual {
            residual = fixed_point_residual(problem, &x, alpha);
        }
        if let Some(t) = trace.as_mut() {
            t.iterates.push(x.clone());
            t.residuals.push(residual);
        }
        if k >= cfg.max_iters || residual < cfg.fp_residual_tol {
            break;
        }
        let beta = cfg.momentum.beta(k);
        let y: Vec<T> = if beta == T::zero() {
            x.clone()
        } else {
            x.iter()
                .zip(&x_prev)
                .map(|(&a, &b)| (T::one() + beta) * a - beta * b)
                .collect()
        };
        let g = problem.gradient(&y);
        let w: Vec<T> = y.iter().zip(&g).map(|(&yi, &gi)| yi - alpha * gi).collect();
        let x_next = problem.prox(&w, alpha);
        guard.check(problem, &x_next, k + 1)?;
        if let Some(t) = trace.as_mut() {
            t.ys.push(y);
            t.ws.push(w);
            t.steps.push(alpha);
            t.momenta.push(beta);
        }
        x_prev = std::mem::replace(&mut x, x_next);
        k += 1;
    }
    if !want_residual {
        residual = fixed_point_residual(problem, &x, cfg.step_at(k, lip));
    }
    Ok(SolveResult {
        x,
        trace,
        iterations: k,
        residual,
        next_beta: cfg.momentum.beta(k),
        next_step: cfg.step_at(k, lip),
    })
}

/// Dedicated PGD loop: `x(k+1) = prox_{α_k g}(x(k) − α_k∇ₓf(x(k)))`.
///
/// The momentum rule of `cfg` is ignored.
pub fn pgd_solve<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    x0: &[T],
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    check_start(problem, x0)?;
    let lip = problem.lipschitz();
    cfg.validate(lip)?;
    let guard = Guard::new(problem, x0, cfg.divergence_guard);
    let want_residual = cfg.record_trace || cfg.fp_residual_tol > T::zero();
    let mut trace = cfg
        .record_trace
        .then(|| SolveTrace::with_capacity(cfg.max_iters));

    let mut x = x0.to_vec();
    let mut residual = T::infinity();
    let mut k = 0;
    loop {
        let alpha = cfg.step_at(k, lip);
        if want_residual {
            residual = fixed_point_residual(problem, &x, alpha);
        }
        if let Some(t) = trace.as_mut() {
            t.iterates.push(x.clone());
            t.residuals.push(residual);
        }
        if k >= cfg.max_iters || residual < cfg.fp_residual_tol {
            break;
        }
        let y = x.clone();
        let g = problem.gradient(&y);
        let w: Vec<T> = y.iter().zip(&g).map(|(&yi, &gi)| yi - alpha * gi).collect();
        let x_next = problem.prox(&w, alpha);
        guard.check(problem, &x_next, k + 1)?;
        if let Some(t) = trace.as_mut() {
            t.ys.push(y);
            t.ws.push(w);
            t.steps.push(alpha);
            t.momenta.push(T::zero());
        }
        x = x_next;
        k += 1;
    }
    if !want_residual {
        residual = fixed_point_residual(problem, &x, cfg.step_at(k, lip));
    }
    Ok(SolveResult {
        x,
        trace,
        iterations: k,
        residual,
        next_beta: T::zero(),
        next_step: cfg.step_at(k, lip),
    })
}

/// Solves to a fixed-point residual below `tol`: Nesterov APG (`q = 5`),
/// then PGD from its output if APG did not get there within `max_iters`.
pub fn solve_to_tolerance<T: Real, P: CompositeProblem<T>>(
    problem: &P,
    x0: &[T],
    tol: T,
    max_iters: usize,
) -> Result<SolveResult<T>> {
    let cfg = SolverConfig::apg(max_iters, T::lit(5.0)).with_tol(tol);
    let mut res = apg_solve(problem, x0, &cfg)?;
    if res.residual >= tol {
        // Momentum can stall in the last digits; finish with plain PGD.
        let more = pgd_solve(problem, &res.x, &SolverConfig::pgd(max_iters).with_tol(tol))?;
        res = SolveResult {
            iterations: res.iterations + more.iterations,
            ..more
        };
    }
    log::debug!(
        "reference solve: {} iterations, residual {:e}, ‖x‖ = {:e}",
        res.iterations,
        res.residual,
        norm(&res.x)
    );
    Ok(res)
}
