//! Partly smooth regularizers with affine active manifolds: `‖·‖₁`,
//! `‖·‖₂,₁` and the zero function.
//!
//! Every method works on the unweighted norm; callers pass the prox
//! threshold `t = αλ` or the weight `λ` explicitly.

use std::fmt::Debug;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{dot, norm};
use crate::problems::pattern::{ActivePattern, PatternKind};
use crate::scalar::Real;

/// Nonsmooth part `g(x, u) = λ·r(x)` of a composite problem.
pub trait NonsmoothTerm<T: Real>: Clone + Debug + Send + Sync {
    /// Checks that the term can act on `rows x width` iterates.
    fn check_width(&self, width: usize) -> Result<()>;

    /// `r(x)`.
    fn value(&self, x: &[T]) -> T;

    /// `prox_{t r}(w)`.
    fn prox(&self, w: &[T], t: T) -> Vec<T>;

    /// Directional derivative of the prox in `(w, t)` along `(dw, dt)`.
    /// Entries exactly on the threshold are treated as inactive.
    fn prox_jvp(&self, w: &[T], t: T, dw: &[T], dt: T) -> Vec<T>;

    /// Transposed action: returns `(x̄·D_w prox, x̄·D_t prox)`.
    fn prox_vjp(&self, w: &[T], t: T, xbar: &[T]) -> (Vec<T>, T);

    /// Number of coordinates (or rows) sitting exactly on a prox kink.
    fn kinks(&self, w: &[T], t: T) -> usize;

    /// Projection of `v` onto `∂(λ r)(x)`.
    fn subgrad_project(&self, x: &[T], lambda: T, v: &[T]) -> Vec<T>;

    /// Membership test `nu ∈ ∂(λ r)(x)` up to `tol`.
    fn is_subgradient(&self, x: &[T], lambda: T, nu: &[T], tol: T) -> bool;

    /// Support (or row support) of `x` with magnitudes above `atol`.
    fn pattern(&self, x: &[T], atol: T) -> ActivePattern;

    /// Largest dual magnitude of `v` off the pattern: `|vᵢ|` for l1, row
    /// norms for l2,1. Zero when the pattern is full.
    fn off_pattern_dual_max(&self, pattern: &ActivePattern, v: &[T]) -> T;

    /// Riemannian gradient of `r` on the pattern's manifold.
    fn riemannian_grad(&self, x: &[T], pattern: &ActivePattern) -> Vec<T>;

    /// Riemannian Hessian of `r` applied to a tangent vector.
    fn riemannian_hess(&self, x: &[T], pattern: &ActivePattern, v: &[T]) -> Vec<T>;
}

fn check_threshold<T: Real>(t: T) -> Result<()> {
    if t.is_nan() || t < T::zero() {
        return Err(Error::InvalidArgument(format!(
            "prox threshold must be nonnegative, got {t}"
        )));
    }
    Ok(())
}

#[inline]
fn sign<T: Real>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Entrywise soft-thresholding `sign(wᵢ)·max(|wᵢ| − t, 0)`.
pub fn l1_prox<T: Real>(w: &[T], t: T) -> Result<Vec<T>> {
    check_threshold(t)?;
    Ok(soft_threshold(w, t))
}

fn soft_threshold<T: Real>(w: &[T], t: T) -> Vec<T> {
    w.iter()
        .map(|&v| {
            let m = v.abs() - t;
            if m > T::zero() {
                sign(v) * m
            } else {
                T::zero()
            }
        })
        .collect()
}

/// JVP of [`l1_prox`]: `ẇᵢ − sign(wᵢ)·ṫ` where `|wᵢ| > t`, zero elsewhere.
pub fn l1_prox_jvp<T: Real>(w: &[T], t: T, dw: &[T], dt: T) -> Result<Vec<T>> {
    check_threshold(t)?;
    if w.len() != dw.len() {
        return Err(dim_err("l1_prox_jvp: w and ẇ differ in length"));
    }
    Ok(L1Norm.prox_jvp(w, t, dw, dt))
}

/// Rowwise block soft-thresholding of a flat `rows x width` matrix.
pub fn group_prox<T: Real>(w: &[T], width: usize, t: T) -> Result<Vec<T>> {
    check_threshold(t)?;
    let g = GroupL21Norm::new(width)?;
    if !w.len().is_multiple_of(width) {
        return Err(dim_err(
            "group_prox: length not a multiple of the row width",
        ));
    }
    Ok(g.prox(w, t))
}

/// JVP of [`group_prox`].
pub fn group_prox_jvp<T: Real>(w: &[T], width: usize, t: T, dw: &[T], dt: T) -> Result<Vec<T>> {
    check_threshold(t)?;
    let g = GroupL21Norm::new(width)?;
    if w.len() != dw.len() || !w.len().is_multiple_of(width) {
        return Err(dim_err("group_prox_jvp: inconsistent shapes"));
    }
    Ok(g.prox_jvp(w, t, dw, dt))
}

/// Projection onto the subdifferential of `λ·term` at `x`.
pub fn subgrad_project<T: Real, G: NonsmoothTerm<T>>(
    term: &G,
    x: &[T],
    lambda: T,
    v: &[T],
) -> Vec<T> {
    term.subgrad_project(x, lambda, v)
}

/// `‖·‖₁`, applied entrywise to the flat iterate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct L1Norm;

impl<T: Real> NonsmoothTerm<T> for L1Norm {
    fn check_width(&self, _width: usize) -> Result<()> {
        Ok(())
    }

    fn value(&self, x: &[T]) -> T {
        x.iter().map(|v| v.abs()).sum()
    }

    fn prox(&self, w: &[T], t: T) -> Vec<T> {
        soft_threshold(w, t)
    }

    fn prox_jvp(&self, w: &[T], t: T, dw: &[T], dt: T) -> Vec<T> {
        w.iter()
            .zip(dw)
            .map(|(&wi, &di)| {
                if wi.abs() > t {
                    di - sign(wi) * dt
                } else {
                    T::zero()
                }
            })
            .collect()
    }

    fn prox_vjp(&self, w: &[T], t: T, xbar: &[T]) -> (Vec<T>, T) {
        let mut tbar = T::zero();
        let wbar = w
            .iter()
            .zip(xbar)
            .map(|(&wi, &bi)| {
                if wi.abs() > t {
                    tbar -= sign(wi) * bi;
                    bi
                } else {
                    T::zero()
                }
            })
            .collect();
        (wbar, tbar)
    }

    fn kinks(&self, w: &[T], t: T) -> usize {
        w.iter().filter(|v| v.abs() == t).count()
    }

    fn subgrad_project(&self, x: &[T], lambda: T, v: &[T]) -> Vec<T> {
        x.iter()
            .zip(v)
            .map(|(&xi, &vi)| {
                if xi != T::zero() {
                    lambda * sign(xi)
                } else {
                    vi.max(-lambda).min(lambda)
                }
            })
            .collect()
    }

    fn is_subgradient(&self, x: &[T], lambda: T, nu: &[T], tol: T) -> bool {
        x.iter().zip(nu).all(|(&xi, &ni)| {
            if xi != T::zero() {
                (ni - lambda * sign(xi)).abs() <= tol
            } else {
                ni.abs() <= lambda + tol
            }
        })
    }

    fn pattern(&self, x: &[T], atol: T) -> ActivePattern {
        ActivePattern::new(
            PatternKind::Entrywise,
            x.iter().map(|v| v.abs() > atol).collect(),
        )
    }

    fn off_pattern_dual_max(&self, pattern: &ActivePattern, v: &[T]) -> T {
        v.iter()
            .zip(pattern.mask())
            .filter(|(_, &m)| !m)
            .fold(T::zero(), |acc, (&vi, _)| acc.max(vi.abs()))
    }

    fn riemannian_grad(&self, x: &[T], pattern: &ActivePattern) -> Vec<T> {
        x.iter()
            .zip(pattern.mask())
            .map(|(&xi, &m)| if m { sign(xi) } else { T::zero() })
            .collect()
    }

    fn riemannian_hess(&self, x: &[T], _pattern: &ActivePattern, _v: &[T]) -> Vec<T> {
        vec![T::zero(); x.len()]
    }
}

/// `‖X‖₂,₁ = Σᵢ ‖Xᵢ·‖₂` on flat row-major `rows x width` iterates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupL21Norm {
    width: usize,
}

impl GroupL21Norm {
    pub fn new(width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidArgument(
                "group width must be positive".into(),
            ));
        }
        Ok(Self { width })
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

impl<T: Real> NonsmoothTerm<T> for GroupL21Norm {
    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.width {
            return Err(dim_err(format!(
                "group norm expects rows of width {}, problem has {width}",
                self.width
            )));
        }
        Ok(())
    }

    fn value(&self, x: &[T]) -> T {
        x.chunks(self.width).map(norm).sum()
    }

    fn prox(&self, w: &[T], t: T) -> Vec<T> {
        let mut out = Vec::with_capacity(w.len());
        for row in w.chunks(self.width) {
            let n = norm(row);
            if n > t {
                let f = T::one() - t / n;
                out.extend(row.iter().map(|&v| f * v));
            } else {
                out.extend(std::iter::repeat_n(T::zero(), row.len()));
            }
        }
        out
    }

    fn prox_jvp(&self, w: &[T], t: T, dw: &[T], dt: T) -> Vec<T> {
        let mut out = Vec::with_capacity(w.len());
        for (row, drow) in w.chunks(self.width).zip(dw.chunks(self.width)) {
            let n = norm(row);
            if n > t {
                let f = T::one() - t / n;
                let c = t * dot(row, drow) / (n * n * n);
                out.extend(
                    row.iter()
                        .zip(drow)
                        .map(|(&wi, &di)| f * di + c * wi - wi / n * dt),
                );
            } else {
                out.extend(std::iter::repeat_n(T::zero(), row.len()));
            }
        }
        out
    }

    fn prox_vjp(&self, w: &[T], t: T, xbar: &[T]) -> (Vec<T>, T) {
        let mut tbar = T::zero();
        let mut out = Vec::with_capacity(w.len());
        for (row, brow) in w.chunks(self.width).zip(xbar.chunks(self.width)) {
            let n = norm(row);
            if n > t {
                let f = T::one() - t / n;
                let wb = dot(row, brow);
                let c = t * wb / (n * n * n);
                out.extend(row.iter().zip(brow).map(|(&wi, &bi)| f * bi + c * wi));
                tbar -= wb / n;
            } else {
                out.extend(std::iter::repeat_n(T::zero(), row.len()));
            }
        }
        (out, tbar)
    }

    fn kinks(&self, w: &[T], t: T) -> usize {
        w.chunks(self.width).filter(|r| norm(r) == t).count()
    }

    fn subgrad_project(&self, x: &[T], lambda: T, v: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(x.len());
        for (row, vrow) in x.chunks(self.width).zip(v.chunks(self.width)) {
            let n = norm(row);
            if n != T::zero() {
                out.extend(row.iter().map(|&xi| lambda * xi / n));
            } else {
                let nv = norm(vrow);
                let f = if nv > lambda { lambda / nv } else { T::one() };
                out.extend(vrow.iter().map(|&vi| f * vi));
            }
        }
        out
    }

    fn is_subgradient(&self, x: &[T], lambda: T, nu: &[T], tol: T) -> bool {
        x.chunks(self.width)
            .zip(nu.chunks(self.width))
            .all(|(row, nrow)| {
                let n = norm(row);
                if n != T::zero() {
                    let d: T = row
                        .iter()
                        .zip(nrow)
                        .map(|(&xi, &ni)| {
                            let e = ni - lambda * xi / n;
                            e * e
                        })
                        .sum();
                    d.sqrt() <= tol
                } else {
                    norm(nrow) <= lambda + tol
                }
            })
    }

    fn pattern(&self, x: &[T], atol: T) -> ActivePattern {
        ActivePattern::new(
            PatternKind::Rowwise { width: self.width },
            x.chunks(self.width).map(|r| norm(r) > atol).collect(),
        )
    }

    fn off_pattern_dual_max(&self, pattern: &ActivePattern, v: &[T]) -> T {
        v.chunks(self.width)
            .zip(pattern.mask())
            .filter(|(_, &m)| !m)
            .fold(T::zero(), |acc, (r, _)| acc.max(norm(r)))
    }

    fn riemannian_grad(&self, x: &[T], pattern: &ActivePattern) -> Vec<T> {
        let mut out = Vec::with_capacity(x.len());
        for (row, &m) in x.chunks(self.width).zip(pattern.mask()) {
            let n = norm(row);
            if m && n > T::zero() {
                out.extend(row.iter().map(|&xi| xi / n));
            } else {
                out.extend(std::iter::repeat_n(T::zero(), row.len()));
            }
        }
        out
    }

    fn riemannian_hess(&self, x: &[T], pattern: &ActivePattern, v: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(x.len());
        for ((row, vrow), &m) in x
            .chunks(self.width)
            .zip(v.chunks(self.width))
            .zip(pattern.mask())
        {
            let n = norm(row);
            if m && n > T::zero() {
                let c = dot(row, vrow) / (n * n * n);
                out.extend(row.iter().zip(vrow).map(|(&xi, &vi)| vi / n - c * xi));
            } else {
                out.extend(std::iter::repeat_n(T::zero(), row.len()));
            }
        }
        out
    }
}

/// `g ≡ 0`: the prox is the identity and every point is interior.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ZeroTerm;

impl<T: Real> NonsmoothTerm<T> for ZeroTerm {
    fn check_width(&self, _width: usize) -> Result<()> {
        Ok(())
    }

    fn value(&self, _x: &[T]) -> T {
        T::zero()
    }

    fn prox(&self, w: &[T], _t: T) -> Vec<T> {
        w.to_vec()
    }

    fn prox_jvp(&self, _w: &[T], _t: T, dw: &[T], _dt: T) -> Vec<T> {
        dw.to_vec()
    }

    fn prox_vjp(&self, _w: &[T], _t: T, xbar: &[T]) -> (Vec<T>, T) {
        (xbar.to_vec(), T::zero())
    }

    fn kinks(&self, _w: &[T], _t: T) -> usize {
        0
    }

    fn subgrad_project(&self, x: &[T], _lambda: T, _v: &[T]) -> Vec<T> {
        vec![T::zero(); x.len()]
    }

    fn is_subgradient(&self, _x: &[T], _lambda: T, nu: &[T], tol: T) -> bool {
        nu.iter().all(|v| v.abs() <= tol)
    }

    fn pattern(&self, x: &[T], _atol: T) -> ActivePattern {
        ActivePattern::new(PatternKind::Entrywise, vec![true; x.len()])
    }

    fn off_pattern_dual_max(&self, _pattern: &ActivePattern, _v: &[T]) -> T {
        T::zero()
    }

    fn riemannian_grad(&self, x: &[T], _pattern: &ActivePattern) -> Vec<T> {
        vec![T::zero(); x.len()]
    }

    fn riemannian_hess(&self, x: &[T], _pattern: &ActivePattern, _v: &[T]) -> Vec<T> {
        vec![T::zero(); x.len()]
    }
}
