use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, DenseMatrix};
use crate::oracle::{build_reduced_system, resolve};
use crate::problems::{
    check_nondegeneracy, CompositeProblem, GroupL21Norm, L1Norm, NonsmoothTerm, ParamDirection,
    ParamPack, Problem, DEFAULT_ATOL,
};
use crate::spectral::min_eigenvalue_sym;

/// RNG streams of [`ExperimentSpec::seed`], one per purpose.
pub const STREAM_MATRIX: u64 = 1;
pub const STREAM_TARGET: u64 = 2;
pub const STREAM_DIRECTION: u64 = 3;

/// Nondegeneracy margin required of generated instances.
pub const ND_MARGIN: f64 = 0.02;
/// Attempts of the λ search.
pub const LAMBDA_ATTEMPTS: usize = 10;
/// Growth factor of λ between attempts.
pub const LAMBDA_GROWTH: f64 = 1.5;
/// Fixed-point residual of reference solutions.
pub const REFERENCE_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Lasso,
    GroupLasso,
}

/// Parameter direction `u̇` of the forward engines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionKind {
    /// `(0, 0, 1)`.
    #[default]
    Lambda,
    /// `Ȧ`, `Ḃ` standard normal from the direction stream, `λ̇ = 1`.
    Full,
}

/// One benchmark configuration; `seed` fixes the instance completely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub problem: ProblemKind,
    pub m: usize,
    pub n: usize,
    /// Columns of `X` (Group Lasso only).
    pub l: usize,
    /// Fixed `λ`; `None` runs the λ search.
    pub lambda: Option<f64>,
    pub seed: u64,
    pub iters: usize,
    pub q: f64,
    pub direction: DirectionKind,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self::lasso_desk(7)
    }
}

impl ExperimentSpec {
    /// Lasso 100×25, K = 2000.
    pub fn lasso_desk(seed: u64) -> Self {
        Self {
            problem: ProblemKind::Lasso,
            m: 100,
            n: 25,
            l: 1,
            lambda: None,
            seed,
            iters: 2000,
            q: 5.0,
            direction: DirectionKind::Lambda,
            out: None,
        }
    }

    /// Group Lasso 100×10×8, K = 800.
    pub fn group_lasso_desk(seed: u64) -> Self {
        Self {
            problem: ProblemKind::GroupLasso,
            m: 100,
            n: 10,
            l: 8,
            iters: 800,
            ..Self::lasso_desk(seed)
        }
    }

    /// Lasso 1000×250 with K = 5000, or Group Lasso 1000×100×40 with K = 1000.
    pub fn paper_scale(problem: ProblemKind, seed: u64) -> Self {
        match problem {
            ProblemKind::Lasso => Self {
                m: 1000,
                n: 250,
                iters: 5000,
                ..Self::lasso_desk(seed)
            },
            ProblemKind::GroupLasso => Self {
                m: 1000,
                n: 100,
                l: 40,
                iters: 1000,
                ..Self::group_lasso_desk(seed)
            },
        }
    }

    /// Number of columns of the target.
    pub fn width(&self) -> usize {
        match self.problem {
            ProblemKind::Lasso => 1,
            ProblemKind::GroupLasso => self.l,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.width() == 0 {
            return Err(Error::InvalidArgument(format!(
                "dimensions must be positive, got m={}, n={}, l={}",
                self.m,
                self.n,
                self.width()
            )));
        }
        if self.iters == 0 {
            return Err(Error::InvalidArgument("iters must be positive".into()));
        }
        if !(self.q > 2.0) {
            return Err(Error::InvalidArgument(format!(
                "q must exceed 2, got {}",
                self.q
            )));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "lambda must be positive, got {l}"
                )));
            }
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

/// A generated, verified benchmark instance.
#[derive(Clone, Debug)]
pub struct Instance<G> {
    pub problem: Problem<f64, G>,
    /// Reference solution, fixed-point residual below [`REFERENCE_TOL`].
    pub x_star: Vec<f64>,
    pub min_gap: f64,
    /// λ candidates tried, including the accepted one.
    pub attempts: usize,
    /// Smallest eigenvalue of the reduced Hessian at `x*`.
    pub reduced_min_eig: f64,
    pub du: ParamDirection<f64>,
    pub xbar: Vec<f64>,
}

/// Samples `A ~ U(0, 1)` and `B ~ N(0, 1)`.
pub fn sample_data(spec: &ExperimentSpec) -> Result<(DenseMatrix<f64>, DenseMatrix<f64>)> {
    spec.validate()?;
    let unif = Uniform::new(0.0, 1.0).expect("valid range");
    let mut ra = spec.rng(STREAM_MATRIX);
    let a = DenseMatrix::from_fn(spec.m, spec.n, |_, _| unif.sample(&mut ra));
    let mut rb = spec.rng(STREAM_TARGET);
    let b = DenseMatrix::from_fn(spec.m, spec.width(), |_, _| StandardNormal.sample(&mut rb));
    Ok((a, b))
}

/// Builds the instance of `spec` with regularizer `reg`.
///
/// Without a fixed `λ`, starts at `0.1·‖AᵀB‖` (largest row norm) and grows
/// λ by [`LAMBDA_GROWTH`] until the solution has a nonempty pattern, passes
/// the nondegeneracy check with margin [`ND_MARGIN`] and has a positive
/// definite reduced Hessian.
pub fn generate_with<G: NonsmoothTerm<f64>>(spec: &ExperimentSpec, reg: G) -> Result<Instance<G>> {
    let (a, b) = sample_data(spec)?;
    let gram = a.gram();
    let min_eig = min_eigenvalue_sym(&gram)?;
    if !(min_eig > 1e-16) {
        return Err(Error::InvalidArgument(format!(
            "design matrix is numerically rank deficient (λ_min(AᵀA) = {min_eig:e})"
        )));
    }
    let l = spec.width();
    let atb = a.tr_mul_block(b.as_slice(), l);
    let dual_max = atb.chunks(l).map(norm).fold(0.0, f64::max);
    let (mut lambda, attempts) = match spec.lambda {
        Some(v) => (v, 1),
        None => (0.1 * dual_max, LAMBDA_ATTEMPTS),
    };
    let base = Problem::new(ParamPack::new(a, b, lambda)?, reg)?;
    let mut last_gap = f64::NAN;
    for attempt in 1..=attempts {
        let problem = base.with_reg_weight(lambda);
        let x_star = resolve(&problem, &vec![0.0; problem.dim()], REFERENCE_TOL)?;
        let nd = check_nondegeneracy(&problem, &x_star, ND_MARGIN)?;
        last_gap = nd.min_gap;
        let support = problem
            .regularizer()
            .pattern(&x_star, DEFAULT_ATOL)
            .dim_tangent();
        let reduced = if nd.ok && support > 0 {
            build_reduced_system(&problem, &x_star, None).ok()
        } else {
            None
        };
        log::info!(
            "attempt {attempt}: λ = {lambda:.6e}, support {support}, gap {:.4e}, reduced PD {}",
            nd.min_gap,
            reduced.is_some()
        );
        if let Some(sys) = reduced {
            let (du, xbar) = directions(spec, &problem);
            return Ok(Instance {
                problem,
                x_star,
                min_gap: nd.min_gap,
                attempts: attempt,
                reduced_min_eig: sys.min_eigenvalue,
                du,
                xbar,
            });
        }
        lambda *= LAMBDA_GROWTH;
    }
    Err(Error::Degenerate {
        attempts,
        min_gap: last_gap,
    })
}

pub fn generate_lasso(spec: &ExperimentSpec) -> Result<Instance<L1Norm>> {
    generate_with(spec, L1Norm)
}

pub fn generate_group_lasso(spec: &ExperimentSpec) -> Result<Instance<GroupL21Norm>> {
    generate_with(spec, GroupL21Norm::new(spec.width())?)
}

fn directions<G: NonsmoothTerm<f64>>(
    spec: &ExperimentSpec,
    problem: &Problem<f64, G>,
) -> (ParamDirection<f64>, Vec<f64>) {
    let mut rng = spec.rng(STREAM_DIRECTION);
    let xbar: Vec<f64> = (0..problem.dim())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut du = ParamDirection::reg_weight_only(problem.params(), 1.0);
    if spec.direction == DirectionKind::Full {
        du.design
            .as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = StandardNormal.sample(&mut rng));
        du.target
            .as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = StandardNormal.sample(&mut rng));
    }
    (du, xbar)
}
