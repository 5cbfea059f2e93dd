mod common;

use proxdiff::autodiff::{
    ad_forward, ad_reverse, fpad_forward, fpad_reverse, implicit_jvp, implicit_vjp, FpadAnchor,
    FpadOptions, ImplicitBackend, ImplicitOptions,
};
use proxdiff::bench::{generate_lasso, ExperimentSpec, Instance};
use proxdiff::linalg::{dot, rel_err};
use proxdiff::oracle::{build_reduced_system, solve_dpsi_jvp, solve_dpsi_vjp};
use proxdiff::problems::{CompositeProblem, L1Norm, ParamVector};
use proxdiff::solver::{apg_solve, pgd_solve, SolverConfig};
use proxdiff::Error;

use common::{random_direction, rng};

fn desk_lasso() -> Instance<L1Norm> {
    (0..20)
        .find_map(|s| generate_lasso(&ExperimentSpec::lasso_desk(s)).ok())
        .expect("no nondegenerate seed")
}

fn oracle(inst: &Instance<L1Norm>) -> (Vec<f64>, proxdiff::ParamDir) {
    let sys = build_reduced_system(&inst.problem, &inst.x_star, Some(&inst.du)).unwrap();
    let jvp = solve_dpsi_jvp(&sys).unwrap();
    let vjp = solve_dpsi_vjp(&inst.problem, &inst.x_star, &inst.xbar).unwrap();
    (jvp, vjp)
}

#[test]
fn apg_reaches_tight_residual_before_pgd() {
    let inst = desk_lasso();
    let x0 = vec![0.0; inst.problem.dim()];
    let tol = 1e-12;
    let apg = apg_solve(
        &inst.problem,
        &x0,
        &SolverConfig::apg(20_000, 5.0).with_tol(tol),
    )
    .unwrap();
    let pgd = pgd_solve(&inst.problem, &x0, &SolverConfig::pgd(20_000).with_tol(tol)).unwrap();
    assert!(apg.residual < tol && pgd.residual < tol);
    assert!(
        apg.iterations < pgd.iterations,
        "{} vs {}",
        apg.iterations,
        pgd.iterations
    );
}

#[test]
fn unrolled_apg_derivatives_approach_the_oracle() {
    let inst = desk_lasso();
    let (jvp, vjp) = oracle(&inst);
    let x0 = vec![0.0; inst.problem.dim()];
    let res = apg_solve(
        &inst.problem,
        &x0,
        &SolverConfig::apg(2000, 5.0).with_trace(),
    )
    .unwrap();
    let trace = res.trace.unwrap();
    let fwd = ad_forward(&inst.problem, &trace, &inst.du).unwrap();
    assert!(rel_err(fwd.last().unwrap(), &jvp) < 1e-6);
    let rev = ad_reverse(&inst.problem, &trace, &inst.xbar).unwrap();
    assert!(rev.dist(&vjp) < 1e-6 * vjp.norm());
}

#[test]
fn unrolled_forward_and_reverse_are_adjoint_on_one_trace() {
    let inst = desk_lasso();
    let x0 = vec![0.0; inst.problem.dim()];
    let res = apg_solve(
        &inst.problem,
        &x0,
        &SolverConfig::apg(300, 5.0).with_trace(),
    )
    .unwrap();
    let trace = res.trace.unwrap();
    let du = random_direction(&mut rng(5), inst.problem.params());
    let fwd = ad_forward(&inst.problem, &trace, &du).unwrap();
    let rev = ad_reverse(&inst.problem, &trace, &inst.xbar).unwrap();
    let lhs = dot(&inst.xbar, fwd.last().unwrap());
    let rhs = rev.dot(&du);
    assert!(
        (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
        "{lhs} vs {rhs}"
    );
}

#[test]
fn fixed_point_and_implicit_engines_agree_at_the_solution() {
    let inst = desk_lasso();
    let alpha = 1.0 / inst.problem.lipschitz();
    let anchor = FpadAnchor::new(&inst.problem, inst.x_star.clone(), alpha, 0.0).unwrap();
    let (_, fwd) = fpad_forward(
        &inst.problem,
        &anchor,
        &inst.du,
        FpadOptions::new(200_000, 1e-15),
    )
    .unwrap();
    let rev = fpad_reverse(
        &inst.problem,
        &anchor,
        &inst.xbar,
        FpadOptions::new(200_000, 1e-15),
    )
    .unwrap();
    let neumann = ImplicitOptions {
        backend: ImplicitBackend::Neumann,
        // the series tail is about tol/(1 − ρ)
        tol: 1e-15,
        max_iters: 1_000_000,
    };
    let cg = ImplicitOptions {
        backend: ImplicitBackend::Cg,
        ..Default::default()
    };
    let ij = implicit_jvp(&inst.problem, &anchor, &inst.du, &neumann).unwrap();
    let ij_cg = implicit_jvp(&inst.problem, &anchor, &inst.du, &cg).unwrap();
    assert!(rel_err(&fwd.value, &ij.value) < 1e-10);
    assert!(rel_err(&ij_cg.value, &ij.value) < 1e-8);

    let iv = implicit_vjp(&inst.problem, &anchor, &inst.xbar, &neumann).unwrap();
    assert!(rev.value.dist(&iv.value) < 1e-9 * iv.value.norm());

    let (jvp, _) = oracle(&inst);
    assert!(rel_err(&ij.value, &jvp) < 1e-8);
}

#[test]
fn oracle_is_linear_and_self_adjoint() {
    let inst = desk_lasso();
    let p = &inst.problem;
    let mut r = rng(11);
    let d1 = random_direction(&mut r, p.params());
    let d2 = random_direction(&mut r, p.params());
    let jvp = |d| solve_dpsi_jvp(&build_reduced_system(p, &inst.x_star, Some(d)).unwrap()).unwrap();
    let (j1, j2) = (jvp(&d1), jvp(&d2));
    let mut sum = d1.clone();
    sum.axpy(2.0, &d2);
    let expect: Vec<f64> = j1.iter().zip(&j2).map(|(a, b)| a + 2.0 * b).collect();
    assert!(rel_err(&jvp(&sum), &expect) < 1e-10);

    let vjp = solve_dpsi_vjp(p, &inst.x_star, &inst.xbar).unwrap();
    let lhs = dot(&inst.xbar, &j1);
    let rhs = vjp.dot(&d1);
    assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
}

#[test]
fn invalid_anchor_inputs_are_rejected() {
    let inst = desk_lasso();
    let p = &inst.problem;
    let alpha = 1.0 / p.lipschitz();
    assert!(matches!(
        FpadAnchor::new(p, inst.x_star.clone(), 2.5 / p.lipschitz(), 0.0),
        Err(Error::StepSize { .. })
    ));
    assert!(FpadAnchor::new(p, inst.x_star.clone(), alpha, 1.5).is_err());
    assert!(FpadAnchor::new(p, vec![0.0; 3], alpha, 0.0).is_err());
}
