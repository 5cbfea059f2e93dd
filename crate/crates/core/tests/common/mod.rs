#![allow(dead_code)]

pub mod micro;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use proxdiff::linalg::DenseMatrix;
use proxdiff::problems::{NonsmoothTerm, ParamDirection, ParamPack, Problem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMatrix<f64> {
    DenseMatrix::new(r, c, normals(rng, r * c)).unwrap()
}

/// Random `m×n` problem with `l` target columns.
pub fn random_problem<G: NonsmoothTerm<f64>>(
    rng: &mut ChaCha8Rng,
    m: usize,
    n: usize,
    l: usize,
    lambda: f64,
    reg: G,
) -> Problem<f64, G> {
    let a = normal_matrix(rng, m, n);
    let b = normal_matrix(rng, m, l);
    Problem::new(ParamPack::new(a, b, lambda).unwrap(), reg).unwrap()
}

/// Direction with standard normal `Ȧ`, `Ḃ` and `λ̇`.
pub fn random_direction(rng: &mut ChaCha8Rng, like: &ParamPack<f64>) -> ParamDirection<f64> {
    let mut d = ParamDirection::zeros(like);
    d.design = normal_matrix(rng, like.design.rows(), like.design.cols());
    d.target = normal_matrix(rng, like.target.rows(), like.target.cols());
    d.reg_weight = StandardNormal.sample(rng);
    d
}
