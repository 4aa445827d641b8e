//! Axis-aligned boxes, their bottom-corner faces, and point-pair
//! normalization.
//!
//! Axis numbers in the public API are 1-based (`x1..xn`) wherever they are
//! user-visible ([`IndexSubset::indices`], [`IndexSubset::from_indices`]);
//! slices and `axes()` iterators are 0-based.

use alloc::vec::Vec;
use core::fmt;

use crate::combinatorics::next_combination;

/// Largest supported dimension. The face enumeration is `2^n - 1` long.
pub const MAX_DIM: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    DimensionOutOfRange { n: usize },
    DimensionMismatch { expected: usize, found: usize },
    InvalidInterval { axis: usize, lo: f64, hi: f64 },
    EmptySubset,
    IndexOutOfRange { index: usize, dim: usize },
    DuplicateIndex { index: usize },
    InvalidThreshold { delta: f64 },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimensionOutOfRange { n } => {
                write!(f, "dimension {n} outside the supported range 1..={MAX_DIM}")
            }
            Self::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Self::InvalidInterval { axis, lo, hi } => {
                write!(f, "axis {}: need lo < hi, got [{lo}, {hi}]", axis + 1)
            }
            Self::EmptySubset => f.write_str("index subset must be nonempty"),
            Self::IndexOutOfRange { index, dim } => {
                write!(f, "axis index {index} outside 1..={dim}")
            }
            Self::DuplicateIndex { index } => write!(f, "axis index {index} repeated"),
            Self::InvalidThreshold { delta } => {
                write!(f, "collapse threshold must be finite and >= 0, got {delta}")
            }
        }
    }
}

fn check_dim(n: usize) -> Result<(), GeometryError> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(GeometryError::DimensionOutOfRange { n })
    }
}

/// A closed box `[lo_1, hi_1] × … × [lo_n, hi_n]` with `lo_i < hi_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rectangle {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Rectangle {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, GeometryError> {
        check_dim(lo.len())?;
        if hi.len() != lo.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        for (axis, (&a, &b)) in lo.iter().zip(&hi).enumerate() {
            // also rejects NaN and infinite edges
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(GeometryError::InvalidInterval { axis, lo: a, hi: b });
            }
        }
        Ok(Self { lo, hi })
    }

    /// `[a, b]^n`.
    pub fn cube(n: usize, a: f64, b: f64) -> Result<Self, GeometryError> {
        Self::new(alloc::vec![a; n], alloc::vec![b; n])
    }

    /// `[0, 1]^n`.
    pub fn unit(n: usize) -> Result<Self, GeometryError> {
        Self::cube(n, 0.0, 1.0)
    }

    /// Builds a box from interleaved bounds `lo1, hi1, lo2, hi2, …`.
    pub fn from_interleaved(bounds: &[f64]) -> Result<Self, GeometryError> {
        if bounds.is_empty() || !bounds.len().is_multiple_of(2) {
            return Err(GeometryError::DimensionMismatch {
                expected: 2 * (bounds.len() / 2).max(1),
                found: bounds.len(),
            });
        }
        let lo = bounds.iter().step_by(2).copied().collect();
        let hi = bounds.iter().skip(1).step_by(2).copied().collect();
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Bottom corner.
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    /// Top corner.
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    /// Euclidean length of the main diagonal, `|x' - x|`.
    pub fn diagonal(&self) -> f64 {
        crate::math::distance(&self.lo, &self.hi)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(p, (a, b))| *a <= *p && *p <= *b)
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Self, GeometryError> {
        if shift.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: shift.len(),
            });
        }
        let lo = self.lo.iter().zip(shift).map(|(a, s)| a + s).collect();
        let hi = self.hi.iter().zip(shift).map(|(b, s)| b + s).collect();
        Self::new(lo, hi)
    }

    /// Whether `other` lies inside `self`.
    pub fn encloses(&self, other: &Rectangle) -> bool {
        self.dim() == other.dim() && (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    /// The box restricted to a subset of axes (the remaining axes dropped).
    pub fn project(&self, axes: &IndexSubset) -> Rectangle {
        let lo = axes.axes().map(|i| self.lo[i]).collect();
        let hi = axes.axes().map(|i| self.hi[i]).collect();
        Rectangle { lo, hi }
    }
}

impl fmt::Display for Rectangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            if i > 0 {
                f.write_str("×")?;
            }
            write!(f, "[{}, {}]", self.lo[i], self.hi[i])?;
        }
        Ok(())
    }
}

/// A nonempty set of axes of an `n`-dimensional space, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IndexSubset {
    mask: u32,
    dim: u8,
}

impl IndexSubset {
    /// From 1-based axis indices in any order. Duplicates are rejected.
    pub fn from_indices(indices: &[usize], dim: usize) -> Result<Self, GeometryError> {
        check_dim(dim)?;
        if indices.is_empty() {
            return Err(GeometryError::EmptySubset);
        }
        let mut mask = 0u32;
        for &index in indices {
            if index == 0 || index > dim {
                return Err(GeometryError::IndexOutOfRange { index, dim });
            }
            let bit = 1u32 << (index - 1);
            if mask & bit != 0 {
                return Err(GeometryError::DuplicateIndex { index });
            }
            mask |= bit;
        }
        Ok(Self { mask, dim: dim as u8 })
    }

    /// From a bitmask where bit `i` stands for axis `i + 1`.
    pub fn from_mask(mask: u32, dim: usize) -> Result<Self, GeometryError> {
        check_dim(dim)?;
        if mask == 0 {
            return Err(GeometryError::EmptySubset);
        }
        if dim < 32 && mask >> dim != 0 {
            let index = 32 - mask.leading_zeros() as usize;
            return Err(GeometryError::IndexOutOfRange { index, dim });
        }
        Ok(Self { mask, dim: dim as u8 })
    }

    /// All `n` axes.
    pub fn full(dim: usize) -> Result<Self, GeometryError> {
        check_dim(dim)?;
        Self::from_mask(((1u64 << dim) - 1) as u32, dim)
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn ambient_dim(&self) -> usize {
        usize::from(self.dim)
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Always `false`; subsets are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Whether 0-based `axis` belongs to the subset.
    pub fn contains(&self, axis: usize) -> bool {
        axis < 32 && self.mask & (1 << axis) != 0
    }

    /// Member axes, 0-based, increasing.
    pub fn axes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ambient_dim()).filter(move |&i| self.contains(i))
    }

    /// Member axes, 1-based, increasing.
    pub fn indices(&self) -> Vec<usize> {
        self.axes().map(|i| i + 1).collect()
    }

    /// Axes not in the subset, or `None` when the subset is everything.
    pub fn complement(&self) -> Option<IndexSubset> {
        let all = ((1u64 << self.dim) - 1) as u32;
        Self::from_mask(all & !self.mask, self.ambient_dim()).ok()
    }

    /// Position of 0-based `axis` among the members, if present.
    pub fn rank_of(&self, axis: usize) -> Option<usize> {
        if self.contains(axis) {
            Some((self.mask & ((1u32 << axis) - 1)).count_ones() as usize)
        } else {
            None
        }
    }

    /// Re-expresses a subset of `self`'s members as a mask over the members
    /// themselves (bit `b` = the `b`-th smallest member).
    pub fn local_mask_of(&self, sub: &IndexSubset) -> Option<u32> {
        if sub.mask & !self.mask != 0 {
            return None;
        }
        let mut local = 0;
        for (b, axis) in self.axes().enumerate() {
            if sub.contains(axis) {
                local |= 1 << b;
            }
        }
        Some(local)
    }

    /// Inverse of [`local_mask_of`](Self::local_mask_of).
    pub fn from_local_mask(&self, local: u32) -> Option<IndexSubset> {
        let mut mask = 0;
        for (b, axis) in self.axes().enumerate() {
            if local & (1 << b) != 0 {
                mask |= 1 << axis;
            }
        }
        Self::from_mask(mask, self.ambient_dim()).ok()
    }

    /// Cardinality-major, lexicographic-minor order.
    pub fn canonical_cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| self.axes().cmp(other.axes()))
    }
}

impl fmt::Display for IndexSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.indices().into_iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

/// All `2^n - 1` nonempty subsets of `{1..n}`, grouped by cardinality and
/// lexicographic within each group.
pub fn enumerate_subsets(n: usize) -> Result<Vec<IndexSubset>, GeometryError> {
    check_dim(n)?;
    let mut out = Vec::with_capacity((1usize << n) - 1);
    for k in 1..=n {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let mask = idx.iter().fold(0u32, |m, &i| m | (1 << i));
            out.push(IndexSubset { mask, dim: n as u8 });
            if !next_combination(&mut idx, n) {
                break;
            }
        }
    }
    Ok(out)
}

/// The face `P_{i1…ik}`: free along `active`, pinned to the bottom corner
/// elsewhere. Coincides with the parent when every axis is active.
#[derive(Debug, Clone, PartialEq)]
pub struct SubRectangle {
    parent: Rectangle,
    active: IndexSubset,
    base: Vec<f64>,
}

impl SubRectangle {
    pub fn parent(&self) -> &Rectangle {
        &self.parent
    }

    pub fn active(&self) -> &IndexSubset {
        &self.active
    }

    /// Full-dimensional anchor; pinned coordinates equal `parent.lo`.
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.active.len()
    }

    /// Free range of 0-based `axis`, or the pinned value as a degenerate range.
    pub fn range(&self, axis: usize) -> (f64, f64) {
        if self.active.contains(axis) {
            (self.parent.lo[axis], self.parent.hi[axis])
        } else {
            (self.base[axis], self.base[axis])
        }
    }

    /// `k`-dimensional measure of the face.
    pub fn measure(&self) -> f64 {
        self.active.axes().map(|i| self.parent.width(i)).product()
    }

    /// Lower and upper corners of the free axes, in axis order.
    pub fn free_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.active.axes().map(|i| self.parent.lo[i]).collect();
        let hi = self.active.axes().map(|i| self.parent.hi[i]).collect();
        (lo, hi)
    }

    /// Writes local coordinates (one per active axis) into a full point.
    pub fn embed(&self, local: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.base);
        for (axis, &t) in self.active.axes().zip(local) {
            out[axis] = t;
        }
    }

    pub fn is_parent(&self) -> bool {
        self.active.len() == self.parent.dim()
    }
}

/// Builds `P_s` for the box `rect`.
pub fn sub_rectangle(rect: &Rectangle, s: &IndexSubset) -> Result<SubRectangle, GeometryError> {
    if s.ambient_dim() != rect.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: rect.dim(),
            found: s.ambient_dim(),
        });
    }
    Ok(SubRectangle {
        parent: rect.clone(),
        active: *s,
        base: rect.lo.clone(),
    })
}

/// Coordinate reflections `y_i ↦ -y_i` on the flagged axes.
///
/// Applying the transform twice is the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxisTransform {
    flips: Vec<bool>,
}

impl AxisTransform {
    pub fn identity(n: usize) -> Self {
        Self {
            flips: alloc::vec![false; n],
        }
    }

    pub fn new(flips: Vec<bool>) -> Self {
        Self { flips }
    }

    pub fn flips(&self) -> &[bool] {
        &self.flips
    }

    pub fn is_flipped(&self, axis: usize) -> bool {
        self.flips[axis]
    }

    pub fn apply(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .zip(&self.flips)
            .map(|(&p, &f)| if f { -p } else { p })
            .collect()
    }
}

/// Result of [`normalize_pair`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPair {
    /// Reflections over the full original dimension.
    pub transform: AxisTransform,
    /// Axes where the two points differ, in increasing order.
    pub kept: Option<IndexSubset>,
    /// Axes where the points coincide (within the threshold).
    pub dropped: Option<IndexSubset>,
    /// Box over the kept axes in reflected coordinates, bottom corner the
    /// image of `x`. `None` when every axis collapsed.
    pub rect: Option<Rectangle>,
    x: Vec<f64>,
    x_prime: Vec<f64>,
}

impl NormalizedPair {
    pub fn is_empty(&self) -> bool {
        self.rect.is_none()
    }

    /// Maps the box corners back through the reflections, returning the
    /// original `(x, x')` restricted to the kept axes.
    pub fn recover(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let rect = self.rect.as_ref()?;
        let kept = self.kept?;
        let flip = |v: &[f64]| -> Vec<f64> {
            kept.axes()
                .zip(v)
                .map(|(axis, &c)| if self.transform.is_flipped(axis) { -c } else { c })
                .collect()
        };
        Some((flip(rect.lo()), flip(rect.hi())))
    }

    /// The original points.
    pub fn points(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.x_prime)
    }
}

/// Brings an arbitrary pair of points to the increasing-coordinate
/// configuration.
///
/// Axes with `x_i > x'_i` are reflected; axes with `|x_i - x'_i| <= delta`
/// are dropped (`delta = 0` drops only exact ties). Faces spanned by a
/// collapsed edge have zero measure, so dropping them realizes the limit
/// of shrinking the edge to zero without any perturbation.
pub fn normalize_pair(x: &[f64], x_prime: &[f64], delta: f64) -> Result<NormalizedPair, GeometryError> {
    if x.len() != x_prime.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: x.len(),
            found: x_prime.len(),
        });
    }
    check_dim(x.len())?;
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(GeometryError::InvalidThreshold { delta });
    }
    let n = x.len();
    let mut flips = alloc::vec![false; n];
    let mut kept_mask = 0u32;
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for i in 0..n {
        if crate::math::abs(x[i] - x_prime[i]) <= delta {
            continue;
        }
        kept_mask |= 1 << i;
        if x[i] > x_prime[i] {
            flips[i] = true;
            lo.push(-x[i]);
            hi.push(-x_prime[i]);
        } else {
            lo.push(x[i]);
            hi.push(x_prime[i]);
        }
    }
    let all = ((1u64 << n) - 1) as u32;
    let kept = IndexSubset::from_mask(kept_mask, n).ok();
    let dropped = IndexSubset::from_mask(all & !kept_mask, n).ok();
    let rect = if kept.is_some() {
        Some(Rectangle::new(lo, hi)?)
    } else {
        None
    };
    Ok(NormalizedPair {
        transform: AxisTransform::new(flips),
        kept,
        dropped,
        rect,
        x: x.to_vec(),
        x_prime: x_prime.to_vec(),
    })
}
