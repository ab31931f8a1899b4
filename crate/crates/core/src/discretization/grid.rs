use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::scalar::Real;

/// Uniform tensor grid over a box in `C^n = R^{2n}`.
///
/// Real axes are ordered `x_1, y_1, x_2, y_2, …` with `z_j = x_j + i y_j`.
/// Node ids are row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrid<T> {
    n: usize,
    lower: Vec<T>,
    upper: Vec<T>,
    resolution: usize,
    spacing: Vec<T>,
    strides: Vec<usize>,
    node_count: usize,
}

pub const MIN_RESOLUTION: usize = 9;

impl<T: Real> BoxGrid<T> {
    /// `n` complex dimensions, `2n` interval bounds, odd `resolution ≥ 9`
    /// points per axis.
    pub fn new(n: usize, lower: Vec<T>, upper: Vec<T>, resolution: usize) -> Result<Self> {
        let axes = 2 * n;
        if n == 0 {
            return Err(Error::InvalidField { field: "n", reason: "must be positive".into() });
        }
        if lower.len() != axes || upper.len() != axes {
            return Err(Error::InvalidField { field: "box", reason: format!("expected {axes} bounds per side") });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidField { field: "box", reason: "each lower bound must be below its upper bound".into() });
        }
        if resolution < MIN_RESOLUTION || resolution % 2 == 0 {
            return Err(Error::InvalidField {
                field: "resolution",
                reason: format!("must be odd and at least {MIN_RESOLUTION}, got {resolution}"),
            });
        }
        let steps = T::from_usize_lossy(resolution - 1);
        let spacing = lower.iter().zip(&upper).map(|(&l, &u)| (u - l) / steps).collect();
        let mut strides = vec![1usize; axes];
        for a in (0..axes.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * resolution;
        }
        let node_count = resolution.checked_pow(axes as u32).ok_or_else(|| Error::InvalidField {
            field: "resolution",
            reason: "grid too large".into(),
        })?;
        Ok(Self { n, lower, upper, resolution, spacing, strides, node_count })
    }

    /// Cube `[lo, hi]^{2n}`.
    pub fn cube(n: usize, lo: T, hi: T, resolution: usize) -> Result<Self> {
        Self::new(n, vec![lo; 2 * n], vec![hi; 2 * n], resolution)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn axes(&self) -> usize {
        2 * self.n
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    #[inline]
    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.strides[axis]) % self.resolution
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        (0..self.axes()).map(|a| self.axis_index(node, a)).collect()
    }

    pub fn node_id(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn coords(&self, node: usize) -> Vec<T> {
        (0..self.axes())
            .map(|a| self.lower[a] + self.spacing[a] * T::from_usize_lossy(self.axis_index(node, a)))
            .collect()
    }

    pub fn is_interior(&self, node: usize) -> bool {
        (0..self.axes()).all(|a| {
            let i = self.axis_index(node, a);
            i > 0 && i + 1 < self.resolution
        })
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count).filter(|&k| self.is_interior(k)).collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count).filter(|&k| !self.is_interior(k)).collect()
    }

    /// Node at the center of the box (resolution is odd).
    pub fn center(&self) -> usize {
        self.node_id(&vec![self.resolution / 2; self.axes()])
    }

    /// Boundary faces containing `node`, as `(axis, is_upper_face)`.
    pub fn faces_of(&self, node: usize) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        for a in 0..self.axes() {
            let i = self.axis_index(node, a);
            if i == 0 {
                out.push((a, false));
            }
            if i + 1 == self.resolution {
                out.push((a, true));
            }
        }
        out
    }

    /// Euclidean distance to the nearest face.
    pub fn distance_to_boundary(&self, node: usize) -> T {
        let x = self.coords(node);
        (0..self.axes())
            .map(|a| (x[a] - self.lower[a]).min(self.upper[a] - x[a]))
            .fold(T::infinity(), T::min)
    }

    /// Half the smallest side length.
    pub fn half_width(&self) -> T {
        (0..self.axes()).map(|a| (self.upper[a] - self.lower[a]) * T::lit(0.5)).fold(T::infinity(), T::min)
    }

    pub fn diameter(&self) -> T {
        (0..self.axes()).map(|a| (self.upper[a] - self.lower[a]).powi(2)).sum::<T>().sqrt()
    }
}

/// Real values on every node of a box grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    grid: Arc<BoxGrid<T>>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: Arc<BoxGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::ShapeMismatch { expected: grid.node_count(), found: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField { field: "field", reason: format!("non-finite value at node {k}") });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<BoxGrid<T>>, f: impl Fn(&[T]) -> T) -> Result<Self> {
        let values = (0..grid.node_count()).map(|k| f(&grid.coords(k))).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<BoxGrid<T>>) -> Self {
        let values = vec![T::zero(); grid.node_count()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<BoxGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// Hermitian matrices attached to (interior) nodes, keyed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField<T> {
    entries: Vec<(usize, HermitianMatrix<T>)>,
}

impl<T: Real> MatrixField<T> {
    pub fn new(entries: Vec<(usize, HermitianMatrix<T>)>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[(usize, HermitianMatrix<T>)] {
        &self.entries
    }

    pub fn get(&self, node: usize) -> Option<&HermitianMatrix<T>> {
        self.entries.binary_search_by_key(&node, |(k, _)| *k).ok().map(|i| &self.entries[i].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_classification() {
        let g = BoxGrid::<f64>::cube(2, -1.0, 1.0, 9).unwrap();
        assert_eq!(g.node_count(), 9usize.pow(4));
        assert_eq!(g.interior_nodes().len(), 7usize.pow(4));
        let c = g.center();
        assert_eq!(g.coords(c), vec![0.0; 4]);
        assert!(g.is_interior(c));
        let corner = g.node_id(&[0, 8, 8, 0]);
        assert_eq!(g.coords(corner), vec![-1.0, 1.0, 1.0, -1.0]);
        assert_eq!(g.faces_of(corner).len(), 4);
        assert!((g.distance_to_boundary(g.node_id(&[1, 4, 4, 4])) - 0.25).abs() < 1e-15);
        assert_eq!(g.diameter(), 4.0);
    }

    #[test]
    fn rejects_even_or_coarse_resolution() {
        assert!(BoxGrid::<f64>::cube(2, -1.0, 1.0, 10).is_err());
        assert!(BoxGrid::<f64>::cube(2, -1.0, 1.0, 7).is_err());
        assert!(BoxGrid::<f64>::new(1, vec![0.0, 1.0], vec![1.0, 0.0], 9).is_err());
    }
}
