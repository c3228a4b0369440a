//! Uniform grids, sampled fields and finite-difference stencils.
//!
//! Nodes are addressed by a linear index in row-major order: the last axis
//! varies fastest. Each node doubles as the center of a cubic cell of side `h`.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 6;

/// Uniform rectangular grid of nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    origin: Vec<f64>,
    spacing: f64,
    counts: Vec<usize>,
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(origin: Vec<f64>, spacing: f64, counts: Vec<usize>) -> Result<Self> {
        let n = origin.len();
        if !(2..=MAX_DIM).contains(&n) || counts.len() != n {
            return Err(Error::InvalidInput("grid dimension"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidInput("grid spacing must be positive"));
        }
        if counts.iter().any(|&c| c < 3) {
            return Err(Error::InvalidInput("grid needs at least 3 nodes per axis"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidInput("grid origin must be finite"));
        }
        let mut strides = vec![1usize; n];
        for k in (0..n - 1).rev() {
            strides[k] = strides[k + 1] * counts[k + 1];
        }
        Ok(Grid { origin, spacing, counts, strides })
    }

    /// Centered cube `[-w, w]^dim` with `nodes` nodes per axis.
    pub fn cube(dim: usize, half_width: f64, nodes: usize) -> Result<Self> {
        if nodes < 3 || !(half_width > 0.0) {
            return Err(Error::InvalidInput("cube grid parameters"));
        }
        let h = 2.0 * half_width / (nodes - 1) as f64;
        Grid::new(vec![-half_width; dim], h, vec![nodes; dim])
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.strides[0] * self.counts[0]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `i` along `axis`.
    #[inline]
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing
    }

    /// Largest coordinate along `axis`.
    pub fn upper(&self, axis: usize) -> f64 {
        self.coordinate(axis, self.counts[axis] - 1)
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for k in 0..self.dim() {
            out[k] = idx / self.strides[k];
            idx %= self.strides[k];
        }
    }

    pub fn position(&self, idx: usize, out: &mut [f64]) {
        let mut rest = idx;
        for k in 0..self.dim() {
            let i = rest / self.strides[k];
            rest %= self.strides[k];
            out[k] = self.coordinate(k, i);
        }
    }

    pub fn node_position(&self, idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        self.position(idx, &mut p);
        p
    }

    /// Neighbor of `idx` one step along `axis` (`forward` selects the sign).
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let i = (idx / self.strides[axis]) % self.counts[axis];
        if forward {
            (i + 1 < self.counts[axis]).then(|| idx + self.strides[axis])
        } else {
            (i > 0).then(|| idx - self.strides[axis])
        }
    }

    /// Whether the node has both neighbors along every axis.
    pub fn is_interior(&self, idx: usize) -> bool {
        (0..self.dim()).all(|k| {
            let i = (idx / self.strides[k]) % self.counts[k];
            i > 0 && i + 1 < self.counts[k]
        })
    }

    /// Whether the closed box `center ± half` (per axis) lies inside the grid.
    pub fn contains_box(&self, center: &[f64], half: f64) -> bool {
        let tol = 1e-9 * self.spacing;
        (0..self.dim()).all(|k| {
            center[k] - half >= self.origin[k] - tol && center[k] + half <= self.upper(k) + tol
        })
    }

    /// Inclusive node-index range along each axis of nodes whose coordinate
    /// lies in `[center - r, center + r]`, clipped to the grid.
    pub fn node_range(&self, center: &[f64], r: f64, lo: &mut [usize], hi: &mut [usize]) {
        for k in 0..self.dim() {
            let a = ((center[k] - r - self.origin[k]) / self.spacing).ceil();
            let b = ((center[k] + r - self.origin[k]) / self.spacing).floor();
            let max = (self.counts[k] - 1) as f64;
            lo[k] = a.max(0.0).min(max) as usize;
            hi[k] = b.max(0.0).min(max) as usize;
        }
    }

    /// Node nearest to `point`, if the point lies within half a cell of the grid.
    pub fn nearest_node(&self, point: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for k in 0..self.dim() {
            let t = ((point[k] - self.origin[k]) / self.spacing).round();
            if t < 0.0 || t > (self.counts[k] - 1) as f64 {
                return None;
            }
            idx += t as usize * self.strides[k];
        }
        Some(idx)
    }

    /// Calls `f(index, multi_index)` for every node of the inclusive index box.
    pub fn for_each_in_box(&self, lo: &[usize], hi: &[usize], mut f: impl FnMut(usize, &[usize])) {
        let n = self.dim();
        if (0..n).any(|k| lo[k] > hi[k]) {
            return;
        }
        let mut m = [0usize; MAX_DIM];
        m[..n].copy_from_slice(&lo[..n]);
        loop {
            f(self.index(&m[..n]), &m[..n]);
            let mut k = n;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if m[k] < hi[k] {
                    m[k] += 1;
                    break;
                }
                m[k] = lo[k];
            }
        }
    }
}

/// Scalar values sampled at every node of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput("value count does not match grid"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("field values must be finite"));
        }
        Ok(GridField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = vec![0.0; grid.len()];
        GridField { grid, values }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut p = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.position(i, &mut p);
                f(&p)
            })
            .collect();
        GridField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, c: f64) -> GridField {
        GridField { grid: self.grid.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }

    /// Central-difference gradient at an interior node.
    pub fn gradient(&self, node: usize) -> Result<Vec<f64>> {
        let g = &self.grid;
        let h = g.spacing();
        (0..g.dim())
            .map(|k| match (g.neighbor(node, k, true), g.neighbor(node, k, false)) {
                (Some(p), Some(m)) => Ok((self.values[p] - self.values[m]) / (2.0 * h)),
                _ => Err(Error::OutOfStencil { node }),
            })
            .collect()
    }

    /// Standard `(2n+1)`-point Laplacian at an interior node.
    pub fn laplacian(&self, node: usize) -> Result<f64> {
        let g = &self.grid;
        let h = g.spacing();
        let c = self.values[node];
        let mut s = 0.0;
        for k in 0..g.dim() {
            match (g.neighbor(node, k, true), g.neighbor(node, k, false)) {
                (Some(p), Some(m)) => s += self.values[p] + self.values[m] - 2.0 * c,
                _ => return Err(Error::OutOfStencil { node }),
            }
        }
        Ok(s / (h * h))
    }

    /// Multilinear interpolation; `None` outside the grid. Coordinates within
    /// `1e-9` cells of a node snap to it, so resampling at nodes is exact.
    pub fn interpolate(&self, point: &[f64]) -> Option<f64> {
        let g = &self.grid;
        let n = g.dim();
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0f64; MAX_DIM];
        for k in 0..n {
            let t = (point[k] - g.origin()[k]) / g.spacing();
            let last = (g.counts()[k] - 1) as f64;
            let t = if (t - t.round()).abs() < 1e-9 { t.round() } else { t };
            if t < 0.0 || t > last {
                return None;
            }
            let i = t.floor().min(last - 1.0);
            base[k] = i as usize;
            frac[k] = t - i;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0;
            for k in 0..n {
                let up = (corner >> k) & 1 == 1;
                let f = frac[k];
                if up {
                    if f == 0.0 {
                        w = 0.0;
                        break;
                    }
                    w *= f;
                } else {
                    if f == 1.0 {
                        w = 0.0;
                        break;
                    }
                    w *= 1.0 - f;
                }
                idx += (base[k] + up as usize) * g.strides()[k];
            }
            if w != 0.0 {
                acc += w * self.values[idx];
            }
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> Grid {
        Grid::cube(2, 1.0, n).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(vec![0.0, 0.0], 0.0, vec![3, 3]).is_err());
        assert!(Grid::new(vec![0.0, 0.0], 0.1, vec![2, 3]).is_err());
        assert!(Grid::new(vec![0.0], 0.1, vec![3]).is_err());
    }

    #[test]
    fn row_major_last_axis_fastest() {
        let g = Grid::new(vec![0.0, 0.0], 1.0, vec![3, 4]).unwrap();
        assert_eq!(g.index(&[0, 1]), 1);
        assert_eq!(g.index(&[1, 0]), 4);
        let mut m = [0; 2];
        g.multi_index(7, &mut m);
        assert_eq!(m, [1, 3]);
        assert_eq!(g.node_position(7), vec![1.0, 3.0]);
    }

    #[test]
    fn gradient_exact_on_affine_and_quadratic() {
        let g = square(9);
        let f = GridField::from_fn(g.clone(), |p| p[0]);
        let node = g.index(&[4, 4]);
        assert_eq!(f.gradient(node).unwrap(), vec![1.0, 0.0]);
        let c = GridField::from_fn(g.clone(), |_| 3.0);
        assert_eq!(c.gradient(node).unwrap(), vec![0.0, 0.0]);
        // h = 0.25, node at x1 = 0.5
        let q = GridField::from_fn(g.clone(), |p| p[0] * p[0]);
        let node = g.index(&[6, 3]);
        assert!((g.node_position(node)[0] - 0.5).abs() < 1e-15);
        assert!((q.gradient(node).unwrap()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let g = square(9);
        let f = GridField::from_fn(g.clone(), |p| p[0] * p[0] + p[1] * p[1]);
        for node in (0..g.len()).filter(|&i| g.is_interior(i)) {
            assert!((f.laplacian(node).unwrap() - 4.0).abs() < 1e-12);
        }
        let lin = GridField::from_fn(g.clone(), |p| 2.0 * p[0] - p[1]);
        assert!(lin.laplacian(g.index(&[3, 5])).unwrap().abs() < 1e-12);
    }

    #[test]
    fn laplacian_of_kink_is_one_over_h() {
        let g = square(9);
        let h = g.spacing();
        let f = GridField::from_fn(g.clone(), |p| p[0].max(0.0));
        let on = g.index(&[4, 2]);
        assert!((f.laplacian(on).unwrap() - 1.0 / h).abs() < 1e-12);
        let off = g.index(&[5, 2]);
        assert!(f.laplacian(off).unwrap().abs() < 1e-12);
    }

    #[test]
    fn boundary_nodes_are_out_of_stencil() {
        let g = square(5);
        let f = GridField::zeros(g.clone());
        assert_eq!(f.gradient(0), Err(Error::OutOfStencil { node: 0 }));
        assert!(f.laplacian(g.index(&[4, 2])).is_err());
    }

    #[test]
    fn interpolation_reproduces_nodes_and_bilinear() {
        let g = square(11);
        let f = GridField::from_fn(g.clone(), |p| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1]);
        for i in [0, 17, 60, 120] {
            let p = g.node_position(i);
            assert_eq!(f.interpolate(&p).unwrap(), f.value(i));
        }
        let p = [0.13, -0.71];
        let exact = 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1];
        assert!((f.interpolate(&p).unwrap() - exact).abs() < 1e-12);
        assert!(f.interpolate(&[1.5, 0.0]).is_none());
    }

    #[test]
    fn box_iteration_visits_every_node_once() {
        let g = Grid::cube(3, 1.0, 5).unwrap();
        let mut seen = vec![0u8; g.len()];
        g.for_each_in_box(&[1, 0, 2], &[3, 4, 2], |i, _| seen[i] += 1);
        assert_eq!(seen.iter().map(|&s| s as usize).sum::<usize>(), 3 * 5);
        assert!(seen.iter().all(|&s| s <= 1));
    }
}
