//! Generalized linear fixed-point iterations `x(k+1) = B_k x(k) + b(k)`.

use crate::error::{dim_err, Result};
use crate::linalg::{axpy, DenseMatrix};
use crate::scalar::Real;

/// A (possibly finite) prefix of operators and offsets followed by their
/// limits, which are used for every index past the prefix.
#[derive(Clone, Debug)]
pub struct LinearFpiSchedule<T> {
    pub operators: Vec<DenseMatrix<T>>,
    pub offsets: Vec<Vec<T>>,
    pub limit_operator: DenseMatrix<T>,
    pub limit_offset: Vec<T>,
}

impl<T: Real> LinearFpiSchedule<T> {
    /// Constant schedule `B_k = B`, `b(k) = b`.
    pub fn constant(b_op: DenseMatrix<T>, offset: Vec<T>) -> Result<Self> {
        let s = Self {
            operators: Vec::new(),
            offsets: Vec::new(),
            limit_operator: b_op,
            limit_offset: offset,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.limit_operator.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.limit_operator.rows();
        if !self.limit_operator.is_square() {
            return Err(dim_err("limit operator is not square"));
        }
        if self.limit_offset.len() != n {
            return Err(dim_err(format!(
                "limit offset has length {}, expected {n}",
                self.limit_offset.len()
            )));
        }
        if let Some(k) = self.operators.iter().position(|b| b.shape() != (n, n)) {
            return Err(dim_err(format!("operator {k} is not {n}x{n}")));
        }
        if let Some(k) = self.offsets.iter().position(|b| b.len() != n) {
            return Err(dim_err(format!("offset {k} does not have length {n}")));
        }
        Ok(())
    }

    fn operator(&self, k: usize) -> &DenseMatrix<T> {
        self.operators.get(k).unwrap_or(&self.limit_operator)
    }

    fn offset(&self, k: usize) -> &[T] {
        self.offsets.get(k).unwrap_or(&self.limit_offset)
    }
}

/// Runs the iteration and returns `x(0), …, x(iters)`.
pub fn glfpi_run<T: Real>(
    schedule: &LinearFpiSchedule<T>,
    x0: &[T],
    iters: usize,
) -> Result<Vec<Vec<T>>> {
    schedule.validate()?;
    if x0.len() != schedule.dim() {
        return Err(dim_err(format!(
            "start vector has length {}, expected {}",
            x0.len(),
            schedule.dim()
        )));
    }
    let mut out = Vec::with_capacity(iters + 1);
    out.push(x0.to_vec());
    for k in 0..iters {
        let mut next = schedule.operator(k).mul_vec(&out[k]);
        axpy(&mut next, T::one(), schedule.offset(k));
        out.push(next);
    }
    Ok(out)
}
