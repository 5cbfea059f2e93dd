use crate::autodiff::{
    ad_forward_with, ad_reverse_with, fpad_forward_with, fpad_reverse_with, FpadAnchor, FpadOptions,
};
use crate::bench::instance::Instance;
use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::oracle::{build_reduced_system, solve_dpsi_jvp, solve_dpsi_vjp};
use crate::problems::{NonsmoothTerm, ParamDirection, ParamVector, DEFAULT_ATOL};
use crate::solver::{apg_solve, MomentumRule, SolveResult, SolverConfig};

/// Column names of the CSV, in order.
pub const COLUMNS: [&str; 10] = [
    "pgd_x",
    "apg_x",
    "pgd_fwd_ad",
    "apg_fwd_ad",
    "pgd_rev_ad",
    "apg_rev_ad",
    "pgd_fwd_fpad",
    "apg_fwd_fpad",
    "pgd_rev_fpad",
    "apg_rev_fpad",
];

/// The ten error sequences, each of length `K + 1`, in [`COLUMNS`] order.
///
/// Iterate errors are `‖x(k) − x*‖`, forward errors `‖ẋ(k) − Dψ(u)u̇‖`,
/// reverse errors `‖ū(n) − x̄Dψ(u)‖` over the partial accumulations of one
/// backward sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorCurves {
    pub columns: [Vec<f64>; 10],
}

impl ErrorCurves {
    /// Number of rows `K + 1`.
    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        COLUMNS
            .iter()
            .position(|c| *c == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::InvalidArgument("error curves are empty".into()));
        }
        if self.columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidArgument(
                "error curves have unequal lengths".into(),
            ));
        }
        if self.columns.iter().flatten().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument(
                "error curves must be nonnegative and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Per-method diagnostics of a curve run.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    /// First iteration from which every iterate has the pattern of `x*`.
    pub identified_at: Option<usize>,
    pub final_residual: f64,
    /// `β` frozen in the FPAD anchor.
    pub anchor_beta: f64,
}

/// Everything a curve run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRun {
    pub curves: ErrorCurves,
    pub pgd: MethodSummary,
    pub apg: MethodSummary,
    pub dx_star: Vec<f64>,
    pub ubar_star: ParamDirection<f64>,
}

struct MethodCurves {
    x: Vec<f64>,
    fwd_ad: Vec<f64>,
    rev_ad: Vec<f64>,
    fwd_fpad: Vec<f64>,
    rev_fpad: Vec<f64>,
    summary: MethodSummary,
}

/// Runs PGD and APG for `iters` iterations from 0 and every engine on top
/// of them, measuring errors against the oracle derivatives at `x*`.
pub fn run_curves<G: NonsmoothTerm<f64>>(
    inst: &Instance<G>,
    iters: usize,
    q: f64,
) -> Result<CurveRun> {
    let p = &inst.problem;
    let sys = build_reduced_system(p, &inst.x_star, Some(&inst.du))?;
    let dx_star = solve_dpsi_jvp(&sys)?;
    let ubar_star = solve_dpsi_vjp(p, &inst.x_star, &inst.xbar)?;
    let pgd = method_curves(inst, iters, MomentumRule::Zero, &dx_star, &ubar_star)?;
    let apg = method_curves(
        inst,
        iters,
        MomentumRule::Nesterov { q },
        &dx_star,
        &ubar_star,
    )?;
    let curves = ErrorCurves {
        columns: [
            pgd.x,
            apg.x,
            pgd.fwd_ad,
            apg.fwd_ad,
            pgd.rev_ad,
            apg.rev_ad,
            pgd.fwd_fpad,
            apg.fwd_fpad,
            pgd.rev_fpad,
            apg.rev_fpad,
        ],
    };
    curves.validate()?;
    Ok(CurveRun {
        curves,
        pgd: pgd.summary,
        apg: apg.summary,
        dx_star,
        ubar_star,
    })
}

/// Solve with a recorded trace for `iters` iterations from 0.
pub fn traced_solve<G: NonsmoothTerm<f64>>(
    inst: &Instance<G>,
    iters: usize,
    momentum: MomentumRule<f64>,
) -> Result<SolveResult<f64>> {
    let cfg = SolverConfig {
        momentum,
        ..SolverConfig::pgd(iters).with_trace()
    };
    apg_solve(&inst.problem, &vec![0.0; inst.x_star.len()], &cfg)
}

/// First index from which every iterate shares the pattern of `x*`.
pub fn identification_index<G: NonsmoothTerm<f64>>(
    reg: &G,
    iterates: &[Vec<f64>],
    x_star: &[f64],
) -> Option<usize> {
    let target = reg.pattern(x_star, DEFAULT_ATOL);
    let last_bad = iterates
        .iter()
        .rposition(|x| reg.pattern(x, DEFAULT_ATOL) != target);
    match last_bad {
        None => Some(0),
        Some(i) if i + 1 < iterates.len() => Some(i + 1),
        Some(_) => None,
    }
}

fn method_curves<G: NonsmoothTerm<f64>>(
    inst: &Instance<G>,
    iters: usize,
    momentum: MomentumRule<f64>,
    dx_star: &[f64],
    ubar_star: &ParamDirection<f64>,
) -> Result<MethodCurves> {
    let p = &inst.problem;
    let res = traced_solve(inst, iters, momentum)?;
    let trace = res.trace.as_ref().expect("trace requested");
    let x: Vec<f64> = trace
        .iterates
        .iter()
        .map(|v| dist(v, &inst.x_star))
        .collect();
    let identified_at = identification_index(p.regularizer(), &trace.iterates, &inst.x_star);

    let mut fwd_ad = Vec::with_capacity(iters + 1);
    fwd_ad.push(norm(dx_star));
    ad_forward_with(p, trace, &inst.du, |_, xd| fwd_ad.push(dist(xd, dx_star)))?;

    let mut rev_ad = Vec::with_capacity(iters + 1);
    ad_reverse_with(p, trace, &inst.xbar, |_, u| rev_ad.push(u.dist(ubar_star)))?;

    let anchor = FpadAnchor::from_solve(p, &res)?;
    let mut fwd_fpad = Vec::with_capacity(iters + 1);
    fwd_fpad.push(norm(dx_star));
    fpad_forward_with(p, &anchor, &inst.du, FpadOptions::fixed(iters), |_, xh| {
        fwd_fpad.push(dist(xh, dx_star))
    })?;

    let mut rev_fpad = Vec::with_capacity(iters + 1);
    fpad_reverse_with(p, &anchor, &inst.xbar, FpadOptions::fixed(iters), |_, u| {
        rev_fpad.push(u.dist(ubar_star))
    })?;

    pad(&mut fwd_fpad, iters + 1);
    pad(&mut rev_fpad, iters + 1);

    Ok(MethodCurves {
        x,
        fwd_ad,
        rev_ad,
        fwd_fpad,
        rev_fpad,
        summary: MethodSummary {
            identified_at,
            final_residual: res.residual,
            anchor_beta: anchor.beta,
        },
    })
}

/// FPAD stops early only when its state becomes exactly stationary, after
/// which the error stays constant.
fn pad(v: &mut Vec<f64>, len: usize) {
    if let Some(&last) = v.last() {
        v.resize(len.max(v.len()), last);
    }
}
