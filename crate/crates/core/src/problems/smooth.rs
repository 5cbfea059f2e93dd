use crate::error::{dim_err, Result};
use crate::linalg::{axpy, dot, DenseMatrix};
use crate::problems::params::{ParamDirection, ParamPack};
use crate::scalar::Real;
use crate::spectral::spectral_radius;

/// Smooth part `f(x, u)` of a composite problem, exposed through the
/// derivative actions the solvers and differentiators consume.
pub trait SmoothTerm<T: Real> {
    type Param;

    fn value(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T]) -> Vec<T>;
    /// `∇²ₓf(x, u)·v`.
    fn hvp(&self, x: &[T], v: &[T]) -> Vec<T>;
    /// `D_u∇ₓf(x, u)·u̇`.
    fn cross_jvp(&self, x: &[T], du: &Self::Param) -> Vec<T>;
    /// `acc += scale · v̄·D_u∇ₓf(x, u)`.
    fn cross_vjp_into(&self, x: &[T], vbar: &[T], scale: T, acc: &mut Self::Param);
    /// Lipschitz constant of `∇ₓf(·, u)`.
    fn lipschitz(&self) -> T;
}

/// `f(X) = ½‖AX − B‖²_F` with `AᵀA` and `AᵀB` cached.
#[derive(Clone, Debug)]
pub struct QuadraticLoss<T> {
    params: ParamPack<T>,
    gram: DenseMatrix<T>,
    atb: Vec<T>,
    /// `½‖B‖²`.
    half_btb: T,
    lipschitz: T,
}

/// Smooth term of Lasso and Group Lasso for the given parameters.
pub fn lasso_smooth<T: Real>(u: ParamPack<T>) -> Result<QuadraticLoss<T>> {
    QuadraticLoss::new(u)
}

impl<T: Real> QuadraticLoss<T> {
    pub fn new(params: ParamPack<T>) -> Result<Self> {
        let gram = params.design.gram();
        let lipschitz = spectral_radius(&gram, T::lit(1e-13), 100_000)?.value;
        let atb = params
            .design
            .tr_mul_block(params.target.as_slice(), params.width());
        let half_btb = T::lit(0.5) * dot(params.target.as_slice(), params.target.as_slice());
        Ok(Self {
            params,
            gram,
            atb,
            half_btb,
            lipschitz,
        })
    }

    pub fn params(&self) -> &ParamPack<T> {
        &self.params
    }

    pub fn gram(&self) -> &DenseMatrix<T> {
        &self.gram
    }

    pub(crate) fn set_reg_weight(&mut self, lambda: T) {
        self.params.reg_weight = lambda;
    }

    pub fn check_point(&self, x: &[T]) -> Result<()> {
        if x.len() != self.params.dim() {
            return Err(dim_err(format!(
                "point has length {}, expected {}",
                x.len(),
                self.params.dim()
            )));
        }
        Ok(())
    }

    /// `AX − B` as a flat M×L block.
    pub fn residual(&self, x: &[T]) -> Vec<T> {
        let l = self.params.width();
        let mut r = self.params.design.mul_block(x, l);
        axpy(&mut r, -T::one(), self.params.target.as_slice());
        r
    }
}

impl<T: Real> SmoothTerm<T> for QuadraticLoss<T> {
    type Param = ParamDirection<T>;

    // ½xᵀ(AᵀA)x − ⟨AᵀB, x⟩ + ½‖B‖²
    fn value(&self, x: &[T]) -> T {
        let gx = self.gram.mul_block(x, self.params.width());
        T::lit(0.5) * dot(x, &gx) - dot(&self.atb, x) + self.half_btb
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut g = self.gram.mul_block(x, self.params.width());
        axpy(&mut g, -T::one(), &self.atb);
        g
    }

    fn hvp(&self, _x: &[T], v: &[T]) -> Vec<T> {
        self.gram.mul_block(v, self.params.width())
    }

    fn cross_jvp(&self, x: &[T], du: &ParamDirection<T>) -> Vec<T> {
        // Ȧᵀ(AX − B) + AᵀȦX − AᵀḂ
        let l = self.params.width();
        let a = &self.params.design;
        let zero = |v: &[T]| v.iter().all(|&e| e == T::zero());
        let (da_zero, db_zero) = (zero(du.design.as_slice()), zero(du.target.as_slice()));
        if da_zero && db_zero {
            return vec![T::zero(); x.len()];
        }
        if da_zero {
            let mut out = a.tr_mul_block(du.target.as_slice(), l);
            out.iter_mut().for_each(|v| *v = -*v);
            return out;
        }
        let mut out = du.design.tr_mul_block(&self.residual(x), l);
        let mut inner = du.design.mul_block(x, l);
        axpy(&mut inner, -T::one(), du.target.as_slice());
        axpy(&mut out, T::one(), &a.tr_mul_block(&inner, l));
        out
    }

    fn cross_vjp_into(&self, x: &[T], vbar: &[T], scale: T, acc: &mut ParamDirection<T>) {
        // Ā += R v̄ᵀ + (A v̄) Xᵀ,  B̄ −= A v̄
        let l = self.params.width();
        let n = self.params.rows();
        let a = &self.params.design;
        let r = self.residual(x);
        let av = a.mul_block(vbar, l);
        let m = a.rows();
        let da = acc.design.as_mut_slice();
        for i in 0..m {
            let ri = &r[i * l..(i + 1) * l];
            let avi = &av[i * l..(i + 1) * l];
            for j in 0..n {
                let vj = &vbar[j * l..(j + 1) * l];
                let xj = &x[j * l..(j + 1) * l];
                da[i * n + j] += scale * (dot(ri, vj) + dot(avi, xj));
            }
        }
        axpy(acc.target.as_mut_slice(), -scale, &av);
    }

    fn lipschitz(&self) -> T {
        self.lipschitz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pack(a: Vec<f64>, m: usize, n: usize, b: Vec<f64>) -> ParamPack<f64> {
        ParamPack::lasso(DenseMatrix::new(m, n, a).unwrap(), b, 1.0).unwrap()
    }

    #[test]
    fn gradient_vanishes_at_solution() {
        let f = lasso_smooth(pack(vec![1.0, 0.0, 0.0, 1.0], 2, 2, vec![1.0, 0.0])).unwrap();
        assert_eq!(f.gradient(&[1.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn scalar_gradient_and_hvp() {
        let f = lasso_smooth(pack(vec![2.0], 1, 1, vec![0.0])).unwrap();
        assert_eq!(f.gradient(&[3.0]), vec![12.0]);
        assert_eq!(f.hvp(&[3.0], &[1.0]), vec![4.0]);
        assert!((f.lipschitz() - 4.0).abs() < 1e-12);
    }
}
