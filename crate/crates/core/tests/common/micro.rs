//! Finite-difference and dot-test checks of every derivative primitive.

use proxdiff::denoise::{
    conv_adjoint, conv_apply, DenoiseProblem, DualNorm, FilterBank, Image, N_BASIS,
};
use proxdiff::linalg::{dot, norm, rel_err, DenseMatrix};
use proxdiff::problems::{
    CompositeProblem, GroupL21Norm, L1Norm, NonsmoothTerm, ParamVector, Problem,
};
use proxdiff::Error;

use super::{normal_matrix, normals, random_direction, random_problem, rng};

pub const FD_STEP: f64 = 1e-6;
pub const FD_TOL: f64 = 1e-5;
pub const DOT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    FiniteDifference,
    DotTest,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub kind: Kind,
    pub error: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        match self.kind {
            Kind::FiniteDifference => self.error < FD_TOL,
            Kind::DotTest => self.error < DOT_TOL,
        }
    }
}

fn fd(name: &'static str, analytic: &[f64], numeric: &[f64]) -> Check {
    Check {
        name,
        kind: Kind::FiniteDifference,
        error: rel_err(analytic, numeric),
    }
}

fn dot_test(name: &'static str, lhs: f64, rhs: f64) -> Check {
    Check {
        name,
        kind: Kind::DotTest,
        error: (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0),
    }
}

/// `(f(+h) − f(−h))/2h`.
fn central(f: impl Fn(f64) -> Vec<f64>) -> Vec<f64> {
    let (p, m) = (f(FD_STEP), f(-FD_STEP));
    p.iter()
        .zip(&m)
        .map(|(a, b)| (a - b) / (2.0 * FD_STEP))
        .collect()
}

fn shifted(x: &[f64], d: &[f64], h: f64) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + h * b).collect()
}

/// Entries at least `gap` away from the threshold `t` in magnitude.
fn away_from_threshold(v: Vec<f64>, t: f64, gap: f64) -> Vec<f64> {
    v.into_iter()
        .map(|x| {
            if (x.abs() - t).abs() < gap {
                x + 4.0 * gap * x.signum()
            } else {
                x
            }
        })
        .collect()
}

fn prox_checks<G: NonsmoothTerm<f64>>(
    reg: &G,
    w: &[f64],
    t: f64,
    seed: u64,
    names: [&'static str; 2],
) -> Vec<Check> {
    let mut r = rng(seed);
    let dw = normals(&mut r, w.len());
    let dt = 0.3;
    let xbar = normals(&mut r, w.len());
    let jvp = reg.prox_jvp(w, t, &dw, dt);
    let num = central(|h| reg.prox(&shifted(w, &dw, h), t + h * dt));
    let (wbar, tbar) = reg.prox_vjp(w, t, &xbar);
    vec![
        fd(names[0], &jvp, &num),
        dot_test(names[1], dot(&xbar, &jvp), dot(&wbar, &dw) + tbar * dt),
    ]
}

fn problem_checks<G: NonsmoothTerm<f64>>(
    p: &Problem<f64, G>,
    seed: u64,
    names: [&'static str; 5],
) -> Vec<Check> {
    let mut r = rng(seed);
    let n = p.dim();
    let x = normals(&mut r, n);
    let v = normals(&mut r, n);
    let du = random_direction(&mut r, p.params());
    let vbar = normals(&mut r, n);

    let hvp = p.hvp(&x, &v);
    let hvp_fd = central(|h| p.gradient(&shifted(&x, &v, h)));

    let cross = p.cross_jvp(&x, &du);
    let reg = p.regularizer().clone();
    let cross_fd = central(|h| {
        Problem::new(p.params().perturbed(&du, h), reg.clone())
            .unwrap()
            .gradient(&x)
    });
    let ubar = p.cross_vjp(&x, &vbar);

    // prox in (w, λ) through the problem's parameterization
    let alpha = 0.5 / p.lipschitz();
    let w = away_from_threshold(
        normals(&mut r, n)
            .iter()
            .map(|v| 3.0 * alpha * p.reg_weight() * v)
            .collect(),
        alpha * p.reg_weight(),
        1e-3,
    );
    let dw = normals(&mut r, n);
    let pj = p.prox_jvp(&w, alpha, &dw, &du);
    let pj_fd = central(|h| {
        Problem::new(p.params().perturbed(&du, h), reg.clone())
            .unwrap()
            .prox(&shifted(&w, &dw, h), alpha)
    });
    let mut acc = p.param_zeros();
    let wbar = p.prox_vjp_into(&w, alpha, &vbar, &mut acc);
    vec![
        fd(names[0], &hvp, &hvp_fd),
        fd(names[1], &cross, &cross_fd),
        dot_test(names[2], ubar.dot(&du), dot(&vbar, &cross)),
        fd(names[3], &pj, &pj_fd),
        dot_test(names[4], dot(&vbar, &pj), dot(&wbar, &dw) + acc.dot(&du)),
    ]
}

fn random_bank(seed: u64, filters: usize, scale: f64) -> FilterBank {
    let mut r = rng(seed);
    let mut w = normal_matrix(&mut r, filters, N_BASIS);
    w.scale_in_place(scale);
    FilterBank::new(w).unwrap()
}

fn random_image(seed: u64, w: usize, h: usize, c: usize) -> Image {
    let mut r = rng(seed);
    Image::new(
        w,
        h,
        c,
        normals(&mut r, w * h * c)
            .iter()
            .map(|v| 0.5 + 0.2 * v)
            .collect(),
    )
    .unwrap()
}

fn conv_checks() -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    for (name, c, seed) in [
        ("conv adjoint dot-test 8x8 gray", 1, 21),
        ("conv adjoint dot-test 8x8 color", 3, 22),
    ] {
        let bank = random_bank(seed, 3, 1.0);
        let img = random_image(seed + 100, 8, 8, c);
        let mut r = rng(seed + 200);
        let field = normals(&mut r, bank.n_filters() * img.len());
        let lhs = dot(&conv_apply(&bank, &img)?, &field);
        let rhs = dot(
            img.as_slice(),
            conv_adjoint(&bank, &field, 8, 8, c)?.as_slice(),
        );
        out.push(dot_test(name, lhs, rhs));
    }
    Ok(out)
}

fn denoise_checks() -> Result<Vec<Check>, Error> {
    let bank = random_bank(31, 2, 0.3);
    let img = random_image(32, 8, 8, 1);
    let p = DenoiseProblem::new(&bank, &img, DualNorm::Joint)?;
    let n = p.dim();
    let plane = 64;
    let mut r = rng(33);
    let x = normals(&mut r, n);
    let v = normals(&mut r, n);
    let vbar = normals(&mut r, n);
    let dtheta = normal_matrix(&mut r, 2, N_BASIS);

    let hvp = p.hvp(&x, &v);
    let hvp_fd = central(|h| p.gradient(&shifted(&x, &v, h)));
    let cross = p.cross_jvp(&x, &dtheta);
    let cross_fd = central(|h| {
        let mut w = bank.weights.clone();
        w.add_scaled(h, &dtheta);
        DenoiseProblem::new(&FilterBank::new(w).unwrap(), &img, DualNorm::Joint)
            .unwrap()
            .gradient(&x)
    });
    let ubar = p.cross_vjp(&x, &vbar);

    // projection: half the pixels outside the ball, none within 1e-3 of it
    let mut w = normals(&mut r, n);
    for px in 0..plane {
        let nrm = (w[px] * w[px] + w[plane + px] * w[plane + px]).sqrt();
        let target = if px % 2 == 0 { 1.6 } else { 0.5 };
        w[px] *= target / nrm;
        w[plane + px] *= target / nrm;
    }
    let dw = normals(&mut r, n);
    let zero = DenseMatrix::zeros(2, N_BASIS);
    let pj = p.prox_jvp(&w, 1.0, &dw, &zero);
    let pj_fd = central(|h| p.prox(&shifted(&w, &dw, h), 1.0));
    let pv = p.prox_vjp_w(&w, 1.0, &vbar);
    Ok(vec![
        fd("denoise dual hvp vs FD", &hvp, &hvp_fd),
        fd("denoise dual cross jvp vs FD in theta", &cross, &cross_fd),
        dot_test(
            "denoise dual cross vjp dot-test",
            ubar.dot(&dtheta),
            dot(&vbar, &cross),
        ),
        fd("dual ball projection jvp vs FD", &pj, &pj_fd),
        dot_test(
            "dual ball projection vjp dot-test",
            dot(&vbar, &pj),
            dot(&pv, &dw),
        ),
    ])
}

/// All checks, in a fixed order.
pub fn run_all() -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    let mut r = rng(1);
    let t = 0.7;
    let w = away_from_threshold(
        normals(&mut r, 12).iter().map(|v| 1.5 * v).collect(),
        t,
        1e-3,
    );
    out.extend(prox_checks(
        &L1Norm,
        &w,
        t,
        2,
        ["l1 prox jvp vs FD", "l1 prox vjp dot-test"],
    ));

    let width = 3;
    let mut wg = normals(&mut r, 6 * width);
    for (i, row) in wg.chunks_mut(width).enumerate() {
        let nrm = norm(row);
        // alternate rows outside and inside the threshold ball
        let target = if i % 2 == 0 { 1.5 * t } else { 0.5 * t };
        row.iter_mut().for_each(|v| *v *= target / nrm);
    }
    out.extend(prox_checks(
        &GroupL21Norm::new(width).unwrap(),
        &wg,
        t,
        3,
        ["group prox jvp vs FD", "group prox vjp dot-test"],
    ));

    let lasso = random_problem(&mut r, 8, 5, 1, 0.4, L1Norm);
    out.extend(problem_checks(
        &lasso,
        4,
        [
            "lasso smooth hvp vs FD",
            "lasso smooth cross jvp vs FD in (A, B)",
            "lasso smooth cross vjp dot-test",
            "lasso prox jvp vs FD in (w, lambda)",
            "lasso prox vjp dot-test",
        ],
    ));
    let group = random_problem(&mut r, 8, 5, 3, 0.4, GroupL21Norm::new(3).unwrap());
    out.extend(problem_checks(
        &group,
        5,
        [
            "group smooth hvp vs FD",
            "group smooth cross jvp vs FD in (A, B)",
            "group smooth cross vjp dot-test",
            "group prox jvp vs FD in (w, lambda)",
            "group prox vjp dot-test (with lambda)",
        ],
    ));
    out.extend(conv_checks()?);
    out.extend(denoise_checks()?);
    Ok(out)
}
