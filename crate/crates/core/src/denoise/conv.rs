use crate::denoise::image::Image;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

/// Side of the basis kernels.
pub const KERNEL_SIZE: usize = 5;
const RADIUS: isize = 2;
/// Number of basis kernels: the 5×5 DCT without its constant member.
pub const N_BASIS: usize = KERNEL_SIZE * KERNEL_SIZE - 1;

/// A 5×5 kernel, `k[(i + 2)·5 + (j + 2)]` weighting offset `(i, j)`.
pub type Kernel<T> = [T; KERNEL_SIZE * KERNEL_SIZE];

/// Tensor-product DCT-II kernels `c_u ⊗ c_v` for `(u, v) ≠ (0, 0)`,
/// ordered by `u` then `v`.
pub fn dct_basis_5x5<T: Real>() -> Vec<Kernel<T>> {
    let n = KERNEL_SIZE;
    let c = |u: usize, i: usize| -> f64 {
        let s = if u == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        s * (std::f64::consts::PI * (2 * i + 1) as f64 * u as f64 / (2 * n) as f64).cos()
    };
    let mut out = Vec::with_capacity(N_BASIS);
    for u in 0..n {
        for v in 0..n {
            if u == 0 && v == 0 {
                continue;
            }
            let mut k = [T::zero(); KERNEL_SIZE * KERNEL_SIZE];
            for i in 0..n {
                for j in 0..n {
                    k[i * n + j] = T::lit(c(u, i) * c(v, j));
                }
            }
            out.push(k);
        }
    }
    out
}

/// Learned filters `K_r = Σ_s θ_{r,s} B_s` over the DCT basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank<T = f64> {
    /// `Θ`, `N_f × N_b`.
    pub weights: DenseMatrix<T>,
    basis: Vec<Kernel<T>>,
}

impl<T: Real> FilterBank<T> {
    pub fn new(weights: DenseMatrix<T>) -> Result<Self> {
        if weights.cols() != N_BASIS || weights.rows() == 0 {
            return Err(Error::Dimension(format!(
                "filter weights must be N_f×{N_BASIS} with N_f ≥ 1, got {}×{}",
                weights.rows(),
                weights.cols()
            )));
        }
        if weights.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("filter weights"));
        }
        Ok(Self {
            weights,
            basis: dct_basis_5x5(),
        })
    }

    pub fn zeros(n_filters: usize) -> Result<Self> {
        Self::new(DenseMatrix::zeros(n_filters, N_BASIS))
    }

    pub fn n_filters(&self) -> usize {
        self.weights.rows()
    }

    pub fn basis(&self) -> &[Kernel<T>] {
        &self.basis
    }

    pub fn kernels(&self) -> Vec<Kernel<T>> {
        (0..self.n_filters())
            .map(|r| {
                let mut k = [T::zero(); KERNEL_SIZE * KERNEL_SIZE];
                for (s, b) in self.basis.iter().enumerate() {
                    let t = self.weights.get(r, s);
                    k.iter_mut().zip(b).for_each(|(a, &v)| *a += t * v);
                }
                k
            })
            .collect()
    }

    /// Upper bound on `‖𝒜‖`: each offset of a kernel is a clamped shift
    /// whose norm is the square root of its largest pixel multiplicity.
    pub fn op_norm_bound(&self) -> T {
        let ks = self.kernels();
        ks.iter()
            .map(|k| {
                let c = kernel_norm_bound(k);
                c * c
            })
            .sum::<T>()
            .sqrt()
    }
}

/// `Σ_{i,j} |k_{ij}|·√((1 + |i|)(1 + |j|))`, bounding the operator norm of
/// one kernel under replicate boundaries.
pub fn kernel_norm_bound<T: Real>(k: &Kernel<T>) -> T {
    let mut s = T::zero();
    for i in -RADIUS..=RADIUS {
        for j in -RADIUS..=RADIUS {
            let m = ((1 + i.abs()) * (1 + j.abs())) as f64;
            s += k[tap(i, j)].abs() * T::lit(m.sqrt());
        }
    }
    s
}

fn tap(i: isize, j: isize) -> usize {
    ((i + RADIUS) as usize) * KERNEL_SIZE + (j + RADIUS) as usize
}

fn clamp_index(v: isize, n: usize) -> usize {
    v.clamp(0, n as isize - 1) as usize
}

/// Replicate-edge source index of every (pixel, tap) pair of one plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stencil {
    pub height: usize,
    pub width: usize,
    idx: Vec<u32>,
}

impl Stencil {
    pub fn new(height: usize, width: usize) -> Self {
        let mut idx = Vec::with_capacity(height * width * KERNEL_SIZE * KERNEL_SIZE);
        for y in 0..height {
            for x in 0..width {
                for i in -RADIUS..=RADIUS {
                    let row = clamp_index(y as isize + i, height) * width;
                    for j in -RADIUS..=RADIUS {
                        idx.push((row + clamp_index(x as isize + j, width)) as u32);
                    }
                }
            }
        }
        Self { height, width, idx }
    }

    /// `dst[y, x] = Σ k(i, j)·src[y + i, x + j]` with replicated edges.
    pub fn correlate<T: Real>(&self, k: &Kernel<T>, src: &[T], dst: &mut [T]) {
        for (d, taps) in dst.iter_mut().zip(self.idx.chunks_exact(k.len())) {
            let mut acc = T::zero();
            for (&kv, &t) in k.iter().zip(taps) {
                acc += kv * src[t as usize];
            }
            *d = acc;
        }
    }

    /// Adds the adjoint of [`Stencil::correlate`] applied to `src` into `dst`.
    pub fn correlate_adjoint_add<T: Real>(&self, k: &Kernel<T>, src: &[T], dst: &mut [T]) {
        for (&v, taps) in src.iter().zip(self.idx.chunks_exact(k.len())) {
            if v == T::zero() {
                continue;
            }
            for (&kv, &t) in k.iter().zip(taps) {
                dst[t as usize] += kv * v;
            }
        }
    }
}

/// One-off [`Stencil::correlate`].
pub fn correlate<T: Real>(k: &Kernel<T>, src: &[T], height: usize, width: usize, dst: &mut [T]) {
    Stencil::new(height, width).correlate(k, src, dst)
}

/// One-off [`Stencil::correlate_adjoint_add`].
pub fn correlate_adjoint_add<T: Real>(
    k: &Kernel<T>,
    src: &[T],
    height: usize,
    width: usize,
    dst: &mut [T],
) {
    Stencil::new(height, width).correlate_adjoint_add(k, src, dst)
}

/// Shape of a feature field, `p[((r·C + c)·H + y)·W + x]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldShape {
    pub filters: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl FieldShape {
    pub fn len(&self) -> usize {
        self.filters * self.image_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn image_len(&self) -> usize {
        self.channels * self.plane()
    }

    pub fn plane(&self) -> usize {
        self.height * self.width
    }
}

/// `𝒜` for a fixed filter bank and image shape.
#[derive(Clone, Debug)]
pub struct ConvOp<T> {
    kernels: Vec<Kernel<T>>,
    shape: FieldShape,
    stencil: Stencil,
}

impl<T: Real> ConvOp<T> {
    pub fn new(bank: &FilterBank<T>, width: usize, height: usize, channels: usize) -> Result<Self> {
        if width < KERNEL_SIZE || height < KERNEL_SIZE {
            return Err(Error::Image(format!(
                "{width}×{height} image is smaller than the {KERNEL_SIZE}×{KERNEL_SIZE} kernels"
            )));
        }
        Ok(Self {
            kernels: bank.kernels(),
            stencil: Stencil::new(height, width),
            shape: FieldShape {
                filters: bank.n_filters(),
                channels,
                height,
                width,
            },
        })
    }

    pub fn for_image(bank: &FilterBank<T>, img: &Image<T>) -> Result<Self> {
        Self::new(bank, img.width, img.height, img.channels)
    }

    pub fn shape(&self) -> FieldShape {
        self.shape
    }

    pub fn kernels(&self) -> &[Kernel<T>] {
        &self.kernels
    }

    /// `𝒜u`.
    pub fn apply(&self, u: &[T]) -> Vec<T> {
        let s = self.shape;
        let mut out = vec![T::zero(); s.len()];
        for (r, k) in self.kernels.iter().enumerate() {
            for c in 0..s.channels {
                let src = &u[c * s.plane()..(c + 1) * s.plane()];
                let off = (r * s.channels + c) * s.plane();
                self.stencil
                    .correlate(k, src, &mut out[off..off + s.plane()]);
            }
        }
        out
    }

    /// `𝒜*p`.
    pub fn adjoint(&self, p: &[T]) -> Vec<T> {
        let s = self.shape;
        let mut out = vec![T::zero(); s.image_len()];
        for (r, k) in self.kernels.iter().enumerate() {
            for c in 0..s.channels {
                let off = (r * s.channels + c) * s.plane();
                let dst = &mut out[c * s.plane()..(c + 1) * s.plane()];
                self.stencil
                    .correlate_adjoint_add(k, &p[off..off + s.plane()], dst);
            }
        }
        out
    }
}

/// `G[r, s] = ⟨field_r, B_s ⋆ img⟩`, the pairing of a field with every
/// basis response of an image; `G` is the cotangent of `Θ ↦ ⟨field, 𝒜(Θ)img⟩`.
pub fn basis_pairing<T: Real>(
    basis: &[Kernel<T>],
    shape: FieldShape,
    field: &[T],
    img: &[T],
) -> DenseMatrix<T> {
    let st = Stencil::new(shape.height, shape.width);
    let mut g = DenseMatrix::zeros(shape.filters, basis.len());
    let mut resp = vec![T::zero(); shape.image_len()];
    for (s, b) in basis.iter().enumerate() {
        for c in 0..shape.channels {
            let r = c * shape.plane()..(c + 1) * shape.plane();
            st.correlate(b, &img[r.clone()], &mut resp[r]);
        }
        for r in 0..shape.filters {
            let f = &field[r * shape.image_len()..(r + 1) * shape.image_len()];
            g.set(r, s, crate::linalg::dot(f, &resp));
        }
    }
    g
}

/// Feature field `𝒜u` of `img`.
pub fn conv_apply<T: Real>(bank: &FilterBank<T>, img: &Image<T>) -> Result<Vec<T>> {
    Ok(ConvOp::for_image(bank, img)?.apply(img.as_slice()))
}

/// `𝒜*p` as an image of the given shape.
pub fn conv_adjoint<T: Real>(
    bank: &FilterBank<T>,
    field: &[T],
    width: usize,
    height: usize,
    channels: usize,
) -> Result<Image<T>> {
    let op = ConvOp::new(bank, width, height, channels)?;
    if field.len() != op.shape().len() {
        return Err(Error::Dimension(format!(
            "field has length {}, expected {}",
            field.len(),
            op.shape().len()
        )));
    }
    Image::new(width, height, channels, op.adjoint(field))
}
