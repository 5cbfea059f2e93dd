use crate::autodiff::FpadAnchor;
use crate::denoise::conv::{basis_pairing, ConvOp, FieldShape, FilterBank, Kernel};
use crate::denoise::image::Image;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, DenseMatrix};
use crate::problems::CompositeProblem;
use crate::scalar::Real;
use crate::solver::{apg_solve, MomentumRule, SolverConfig};

/// Distance from the unit sphere within which a dual group counts as on
/// the boundary.
pub const BALL_TOL: f64 = 1e-12;

/// Grouping of the dual constraint `‖p‖_{r,∗} ≤ 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DualNorm {
    /// One l2 ball per pixel over all (channel, filter) entries.
    #[default]
    Joint,
    /// One l2 ball per pixel and channel over the filters.
    PerChannel,
}

/// `(first index, stride, members)` of every group.
fn groups(shape: FieldShape, norm: DualNorm) -> impl Iterator<Item = (usize, usize, usize)> {
    let plane = shape.plane();
    let (n, stride, count) = match norm {
        DualNorm::Joint => (plane, plane, shape.filters * shape.channels),
        DualNorm::PerChannel => (
            shape.channels * plane,
            shape.channels * plane,
            shape.filters,
        ),
    };
    (0..n).map(move |g| (g, stride, count))
}

fn group_norm<T: Real>(v: &[T], (base, stride, count): (usize, usize, usize)) -> T {
    (0..count)
        .map(|m| {
            let x = v[base + m * stride];
            x * x
        })
        .sum::<T>()
        .sqrt()
}

/// Projects every group of `p` onto the unit l2 ball.
pub fn dual_project<T: Real>(p: &mut [T], shape: FieldShape, norm: DualNorm) {
    for g in groups(shape, norm) {
        let n = group_norm(p, g);
        if n > T::one() {
            let (base, stride, count) = g;
            for m in 0..count {
                p[base + m * stride] /= n;
            }
        }
    }
}

fn on_boundary<T: Real>(n: T) -> bool {
    n >= T::one() - T::lit(BALL_TOL)
}

/// Dual of the learned-filter denoising problem,
/// `min_p ½‖x̂ − 𝒜(Θ)*p‖²` s.t. every group of `p` in the unit ball,
/// parameterized by `Θ`.
#[derive(Clone, Debug)]
pub struct DenoiseProblem<T> {
    op: ConvOp<T>,
    basis: Vec<Kernel<T>>,
    noisy: Image<T>,
    norm: DualNorm,
    lipschitz: T,
}

impl<T: Real> DenoiseProblem<T> {
    pub fn new(bank: &FilterBank<T>, noisy: &Image<T>, norm: DualNorm) -> Result<Self> {
        let l = bank.op_norm_bound();
        let l2 = l * l;
        Ok(Self {
            op: ConvOp::for_image(bank, noisy)?,
            basis: bank.basis().to_vec(),
            noisy: noisy.clone(),
            norm,
            // Θ = 0 makes the problem constant; any step is exact.
            lipschitz: if l2 > T::zero() { l2 } else { T::one() },
        })
    }

    pub fn shape(&self) -> FieldShape {
        self.op.shape()
    }

    pub fn op(&self) -> &ConvOp<T> {
        &self.op
    }

    pub fn norm(&self) -> DualNorm {
        self.norm
    }

    pub fn noisy(&self) -> &Image<T> {
        &self.noisy
    }

    /// `x̂ − 𝒜*p`.
    pub fn primal(&self, p: &[T]) -> Vec<T> {
        let mut r = self.noisy.as_slice().to_vec();
        axpy(&mut r, -T::one(), &self.op.adjoint(p));
        r
    }

    fn direction_op(&self, dtheta: &DenseMatrix<T>) -> ConvOp<T> {
        let bank = FilterBank::new(dtheta.clone()).expect("direction has the weight shape");
        ConvOp::new(
            &bank,
            self.shape().width,
            self.shape().height,
            self.shape().channels,
        )
        .expect("shape already validated")
    }

    fn check_param(&self, m: &DenseMatrix<T>) {
        assert_eq!(
            m.shape(),
            (self.shape().filters, self.basis.len()),
            "parameter direction has the wrong shape"
        );
    }
}

impl<T: Real> CompositeProblem<T> for DenoiseProblem<T> {
    type Param = DenseMatrix<T>;

    fn dim(&self) -> usize {
        self.shape().len()
    }

    fn param_zeros(&self) -> DenseMatrix<T> {
        DenseMatrix::zeros(self.shape().filters, self.basis.len())
    }

    fn objective(&self, p: &[T]) -> T {
        let r = self.primal(p);
        T::lit(0.5) * dot(&r, &r)
    }

    fn gradient(&self, p: &[T]) -> Vec<T> {
        let mut g = self.op.apply(&self.primal(p));
        g.iter_mut().for_each(|v| *v = -*v);
        g
    }

    fn hvp(&self, _p: &[T], v: &[T]) -> Vec<T> {
        self.op.apply(&self.op.adjoint(v))
    }

    // −𝒜̇(x̂ − 𝒜*p) + 𝒜𝒜̇*p
    fn cross_jvp(&self, p: &[T], dtheta: &DenseMatrix<T>) -> Vec<T> {
        self.check_param(dtheta);
        let dop = self.direction_op(dtheta);
        let mut out = self.op.apply(&dop.adjoint(p));
        axpy(&mut out, -T::one(), &dop.apply(&self.primal(p)));
        out
    }

    fn cross_vjp_into(&self, p: &[T], vbar: &[T], scale: T, acc: &mut DenseMatrix<T>) {
        self.check_param(acc);
        let shape = self.shape();
        let r = self.primal(p);
        let z = self.op.adjoint(vbar);
        acc.add_scaled(-scale, &basis_pairing(&self.basis, shape, vbar, &r));
        acc.add_scaled(scale, &basis_pairing(&self.basis, shape, p, &z));
    }

    fn lipschitz(&self) -> T {
        self.lipschitz
    }

    fn prox(&self, w: &[T], _alpha: T) -> Vec<T> {
        let mut p = w.to_vec();
        dual_project(&mut p, self.shape(), self.norm);
        p
    }

    // Tangential derivative on the boundary, identity inside.
    fn prox_jvp(&self, w: &[T], _alpha: T, dw: &[T], _du: &DenseMatrix<T>) -> Vec<T> {
        let mut out = dw.to_vec();
        for g in groups(self.shape(), self.norm) {
            let n = group_norm(w, g);
            if !on_boundary(n) {
                continue;
            }
            let (base, stride, count) = g;
            let idx = |m: usize| base + m * stride;
            let radial = (0..count).map(|m| w[idx(m)] * dw[idx(m)]).sum::<T>() / (n * n);
            for m in 0..count {
                out[idx(m)] = (dw[idx(m)] - radial * w[idx(m)]) / n;
            }
        }
        out
    }

    fn prox_vjp_into(&self, w: &[T], alpha: T, xbar: &[T], _acc: &mut DenseMatrix<T>) -> Vec<T> {
        // the projection Jacobian is symmetric and independent of Θ
        self.prox_jvp(w, alpha, xbar, &self.param_zeros())
    }

    fn prox_kinks(&self, w: &[T], _alpha: T) -> usize {
        groups(self.shape(), self.norm)
            .filter(|&g| (group_norm(w, g) - T::one()).abs() <= T::lit(BALL_TOL))
            .count()
    }

    // Normal cone of the ball: the nonnegative ray through boundary points.
    fn subgrad_project(&self, p: &[T], v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); p.len()];
        for g in groups(self.shape(), self.norm) {
            let n = group_norm(p, g);
            if !on_boundary(n) {
                continue;
            }
            let (base, stride, count) = g;
            let idx = |m: usize| base + m * stride;
            let t = (0..count).map(|m| v[idx(m)] * p[idx(m)]).sum::<T>() / n;
            if t > T::zero() {
                for m in 0..count {
                    out[idx(m)] = t * p[idx(m)] / n;
                }
            }
        }
        out
    }
}

/// Output of the dual solve.
#[derive(Clone, Debug)]
pub struct DualSolution<T> {
    pub problem: DenoiseProblem<T>,
    /// `x̂ − 𝒜*p(K)`, not clamped.
    pub denoised: Image<T>,
    pub dual: Vec<T>,
    /// Anchor at `p(K)` with the solver's `α` and `β_K`.
    pub anchor: FpadAnchor<T>,
    pub residual: T,
}

/// Runs `iters` iterations of the projected dual method from `p(0) = 𝒜x̂`
/// with step `1/L²`.
pub fn solve_dual<T: Real>(
    problem: DenoiseProblem<T>,
    iters: usize,
    momentum: MomentumRule<T>,
) -> Result<DualSolution<T>> {
    if iters == 0 {
        return Err(Error::InvalidArgument(
            "dual solve needs at least one iteration".into(),
        ));
    }
    let p0 = problem.op().apply(problem.noisy().as_slice());
    let cfg = SolverConfig {
        momentum,
        divergence_guard: None,
        ..SolverConfig::pgd(iters)
    };
    let res = apg_solve(&problem, &p0, &cfg)?;
    let denoised = problem.noisy().with_data(problem.primal(&res.x))?;
    let anchor = FpadAnchor::from_solve(&problem, &res)?;
    let kinks = problem.prox_kinks(&anchor.w, anchor.alpha);
    if kinks > 0 {
        log::debug!("{kinks} dual groups exactly on the unit sphere at the anchor");
    }
    Ok(DualSolution {
        problem,
        denoised,
        dual: res.x,
        anchor,
        residual: res.residual,
    })
}

/// Dual APG with `β_k = (k − q)/(k + 1)` for `iters` iterations.
pub fn denoise_dual_apg<T: Real>(
    bank: &FilterBank<T>,
    noisy: &Image<T>,
    iters: usize,
    q: T,
) -> Result<DualSolution<T>> {
    let problem = DenoiseProblem::new(bank, noisy, DualNorm::Joint)?;
    solve_dual(problem, iters, MomentumRule::Shifted { q })
}
