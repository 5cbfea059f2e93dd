use crate::scalar::Real;

/// How a mask maps onto the flat iterate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternKind {
    /// One flag per coordinate.
    Entrywise,
    /// One flag per row of a flat `rows x width` iterate.
    Rowwise { width: usize },
}

/// Identified active manifold of an affine partly smooth term: the support
/// (or row support) of a point. The tangent space is the coordinate
/// subspace it selects, so the tangent projector is a 0/1 mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivePattern {
    kind: PatternKind,
    mask: Vec<bool>,
    dim_tangent: usize,
}

impl ActivePattern {
    pub fn new(kind: PatternKind, mask: Vec<bool>) -> Self {
        let active = mask.iter().filter(|&&m| m).count();
        let dim_tangent = match kind {
            PatternKind::Entrywise => active,
            PatternKind::Rowwise { width } => active * width,
        };
        Self {
            kind,
            mask,
            dim_tangent,
        }
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn dim_tangent(&self) -> usize {
        self.dim_tangent
    }

    /// Length of the flat iterates the pattern applies to.
    pub fn full_dim(&self) -> usize {
        match self.kind {
            PatternKind::Entrywise => self.mask.len(),
            PatternKind::Rowwise { width } => self.mask.len() * width,
        }
    }

    /// Whether flat coordinate `i` lies in the tangent space.
    #[inline]
    pub fn is_active(&self, i: usize) -> bool {
        match self.kind {
            PatternKind::Entrywise => self.mask[i],
            PatternKind::Rowwise { width } => self.mask[i / width],
        }
    }

    /// Flat coordinates spanning the tangent space, in increasing order.
    pub fn tangent_indices(&self) -> Vec<usize> {
        (0..self.full_dim())
            .filter(|&i| self.is_active(i))
            .collect()
    }

    /// Orthogonal projection onto the tangent space.
    pub fn project<T: Real>(&self, v: &[T]) -> Vec<T> {
        v.iter()
            .enumerate()
            .map(|(i, &x)| if self.is_active(i) { x } else { T::zero() })
            .collect()
    }

    /// Component of `v` orthogonal to the tangent space.
    pub fn project_normal<T: Real>(&self, v: &[T]) -> Vec<T> {
        v.iter()
            .enumerate()
            .map(|(i, &x)| if self.is_active(i) { T::zero() } else { x })
            .collect()
    }
}
