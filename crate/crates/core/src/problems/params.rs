use std::fmt::Debug;

use crate::error::{dim_err, Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

/// Vector-space operations the derivative engines need on parameter
/// tangents and cotangents.
pub trait ParamVector<T: Real>: Clone + Debug {
    fn zeros_like(&self) -> Self;
    /// `self += a * other`.
    fn axpy(&mut self, a: T, other: &Self);
    fn dot(&self, other: &Self) -> T;
    fn scale(&mut self, a: T);

    fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    /// `‖self − other‖`.
    fn dist(&self, other: &Self) -> T {
        let mut d = self.clone();
        d.axpy(-T::one(), other);
        d.norm()
    }
}

impl<T: Real> ParamVector<T> for DenseMatrix<T> {
    fn zeros_like(&self) -> Self {
        DenseMatrix::zeros(self.rows(), self.cols())
    }

    fn axpy(&mut self, a: T, other: &Self) {
        self.add_scaled(a, other);
    }

    fn dot(&self, other: &Self) -> T {
        self.frobenius_dot(other)
    }

    fn scale(&mut self, a: T) {
        self.as_mut_slice().iter_mut().for_each(|v| *v *= a);
    }
}

/// Parameter `u = (A, B, λ)` of the quadratic-data problems: design matrix
/// `A` (M×N), target `B` (M×L, a single column for Lasso) and weight `λ > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamPack<T> {
    pub design: DenseMatrix<T>,
    pub target: DenseMatrix<T>,
    pub reg_weight: T,
}

impl<T: Real> ParamPack<T> {
    pub fn new(design: DenseMatrix<T>, target: DenseMatrix<T>, reg_weight: T) -> Result<Self> {
        if design.rows() != target.rows() {
            return Err(dim_err(format!(
                "design has {} rows, target has {}",
                design.rows(),
                target.rows()
            )));
        }
        if !(reg_weight > T::zero()) || !reg_weight.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "regularization weight must be positive, got {reg_weight}"
            )));
        }
        Ok(Self {
            design,
            target,
            reg_weight,
        })
    }

    /// Lasso parameters with a single target column.
    pub fn lasso(design: DenseMatrix<T>, target: Vec<T>, reg_weight: T) -> Result<Self> {
        let m = target.len();
        Self::new(design, DenseMatrix::new(m, 1, target)?, reg_weight)
    }

    /// Number of unknown rows `N`.
    pub fn rows(&self) -> usize {
        self.design.cols()
    }

    /// Number of columns `L` of the unknown (1 for Lasso).
    pub fn width(&self) -> usize {
        self.target.cols()
    }

    /// Length of flat iterates, `N·L`.
    pub fn dim(&self) -> usize {
        self.rows() * self.width()
    }

    /// `self + h·dir` without the positivity check on `λ`.
    pub fn perturbed(&self, dir: &ParamDirection<T>, h: T) -> Self {
        let mut p = self.clone();
        p.design.add_scaled(h, &dir.design);
        p.target.add_scaled(h, &dir.target);
        p.reg_weight += h * dir.reg_weight;
        p
    }
}

/// Tangent or cotangent of a [`ParamPack`]: `(Ȧ, Ḃ, λ̇)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamDirection<T> {
    pub design: DenseMatrix<T>,
    pub target: DenseMatrix<T>,
    pub reg_weight: T,
}

impl<T: Real> ParamDirection<T> {
    pub fn zeros(like: &ParamPack<T>) -> Self {
        Self {
            design: DenseMatrix::zeros(like.design.rows(), like.design.cols()),
            target: DenseMatrix::zeros(like.target.rows(), like.target.cols()),
            reg_weight: T::zero(),
        }
    }

    /// The direction `(0, 0, λ̇)`.
    pub fn reg_weight_only(like: &ParamPack<T>, d_lambda: T) -> Self {
        let mut d = Self::zeros(like);
        d.reg_weight = d_lambda;
        d
    }

    pub fn matches(&self, like: &ParamPack<T>) -> bool {
        self.design.shape() == like.design.shape() && self.target.shape() == like.target.shape()
    }
}

impl<T: Real> ParamVector<T> for ParamDirection<T> {
    fn zeros_like(&self) -> Self {
        Self {
            design: self.design.zeros_like(),
            target: self.target.zeros_like(),
            reg_weight: T::zero(),
        }
    }

    fn axpy(&mut self, a: T, other: &Self) {
        self.design.add_scaled(a, &other.design);
        self.target.add_scaled(a, &other.target);
        self.reg_weight += a * other.reg_weight;
    }

    fn dot(&self, other: &Self) -> T {
        self.design.frobenius_dot(&other.design)
            + self.target.frobenius_dot(&other.target)
            + self.reg_weight * other.reg_weight
    }

    fn scale(&mut self, a: T) {
        ParamVector::scale(&mut self.design, a);
        ParamVector::scale(&mut self.target, a);
        self.reg_weight *= a;
    }
}
