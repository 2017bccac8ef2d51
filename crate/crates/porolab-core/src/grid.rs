//! Uniform tensor-product node grids and the scalar / matrix fields living on them.
//!
//! Axis convention: the last axis is the vertical one (the `x_n` direction).
//! Linear storage is row-major with the last axis contiguous, so a vertical
//! column of a field is a contiguous slice.

use serde::Serialize;

use crate::error::{Error, Result};

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// A uniform node-centered tensor-product grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    shape: Vec<usize>,
    origin: Vec<f64>,
    spacing: Vec<f64>,
}

impl Grid {
    /// Builds a grid with `shape[d]` nodes per axis covering
    /// `[origin[d], origin[d] + (shape[d]-1)*spacing[d]]`.
    pub fn new(shape: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>) -> Result<Self> {
        let dim = shape.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Parameter(format!(
                "grid dimension must be 1..={MAX_DIM}, got {dim}"
            )));
        }
        if origin.len() != dim || spacing.len() != dim {
            return Err(Error::Parameter(
                "grid shape/origin/spacing lengths differ".into(),
            ));
        }
        if shape.iter().any(|&c| c < 2) {
            return Err(Error::Parameter("grid needs at least 2 nodes per axis".into()));
        }
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::Parameter("grid spacing must be positive".into()));
        }
        Ok(Self { shape, origin, spacing })
    }

    /// Grid over an axis-aligned box given per-axis node counts.
    pub fn over_box(min: &[f64], max: &[f64], shape: &[usize]) -> Result<Self> {
        let spacing: Vec<f64> = min
            .iter()
            .zip(max)
            .zip(shape)
            .map(|((lo, hi), &c)| (hi - lo) / (c as f64 - 1.0))
            .collect();
        Grid::new(shape.to_vec(), min.to_vec(), spacing)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    /// Index of the vertical axis.
    pub fn vertical_axis(&self) -> usize {
        self.dim() - 1
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Smallest axis spacing; the resolution scale `h` used in tolerances.
    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    /// Row-major strides, last axis contiguous.
    pub fn strides(&self) -> [usize; MAX_DIM] {
        let dim = self.dim();
        let mut strides = [0usize; MAX_DIM];
        let mut acc = 1usize;
        for d in (0..dim).rev() {
            strides[d] = acc;
            acc *= self.shape[d];
        }
        strides
    }

    pub fn linear(&self, idx: &[usize]) -> usize {
        let strides = self.strides();
        idx.iter().zip(strides.iter()).map(|(i, s)| i * s).sum()
    }

    /// Multi-index of a linear node index.
    pub fn multi(&self, mut lin: usize) -> [usize; MAX_DIM] {
        let dim = self.dim();
        let strides = self.strides();
        let mut out = [0usize; MAX_DIM];
        for d in 0..dim {
            out[d] = lin / strides[d];
            lin %= strides[d];
        }
        out
    }

    /// Coordinate of axis-`d` node `i`.
    pub fn coord(&self, d: usize, i: usize) -> f64 {
        self.origin[d] + i as f64 * self.spacing[d]
    }

    /// Physical point of a linear node index.
    pub fn point(&self, lin: usize) -> [f64; MAX_DIM] {
        let idx = self.multi(lin);
        let mut p = [0.0; MAX_DIM];
        for d in 0..self.dim() {
            p[d] = self.coord(d, idx[d]);
        }
        p
    }

    /// Nearest node index along axis `d` for coordinate `x`, clamped to the grid.
    pub fn nearest(&self, d: usize, x: f64) -> usize {
        let t = (x - self.origin[d]) / self.spacing[d];
        let i = t.round();
        (i.max(0.0) as usize).min(self.shape[d] - 1)
    }

    /// True when a node lies on the outer boundary of the grid box.
    pub fn on_boundary(&self, idx: &[usize]) -> bool {
        idx.iter()
            .zip(&self.shape)
            .any(|(&i, &c)| i == 0 || i + 1 == c)
    }

    /// Same spacing and node lattice (origins differ by whole steps).
    pub fn aligned_with(&self, other: &Grid) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        for d in 0..self.dim() {
            let ds = (self.spacing[d] - other.spacing[d]).abs();
            if ds > 1e-12 * self.spacing[d] {
                return false;
            }
            let off = (self.origin[d] - other.origin[d]) / self.spacing[d];
            if (off - off.round()).abs() > 1e-9 {
                return false;
            }
        }
        true
    }
}

/// A scalar field sampled at grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for lin in 0..grid.len() {
            let p = grid.point(lin);
            values.push(f(&p[..grid.dim()]));
        }
        Self { grid: grid.clone(), values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks all node values are finite.
    pub fn validate_finite(&self, what: &str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::Domain(format!(
                "{what} has a non-finite value at node {i}"
            ))),
        }
    }

    /// Supremum-norm distance to another field on the same grid.
    pub fn sup_distance(&self, other: &GridField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Multilinear interpolation at an arbitrary point (clamped to the grid box).
    pub fn interp(&self, p: &[f64]) -> f64 {
        let dim = self.grid.dim();
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0f64; MAX_DIM];
        for d in 0..dim {
            let t = (p[d] - self.grid.origin[d]) / self.grid.spacing[d];
            let t = t.max(0.0).min((self.grid.shape[d] - 1) as f64);
            let i = (t.floor() as usize).min(self.grid.shape[d] - 2);
            base[d] = i;
            frac[d] = t - i as f64;
        }
        let strides = self.grid.strides();
        let corners = 1usize << dim;
        let mut acc = 0.0;
        for c in 0..corners {
            let mut w = 1.0;
            let mut lin = 0usize;
            for d in 0..dim {
                let bit = (c >> d) & 1;
                w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
                lin += (base[d] + bit) * strides[d];
            }
            acc += w * self.values[lin];
        }
        acc
    }
}

/// A field of square `dim x dim` matrices, stored node-major row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl MatrixField {
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64], &mut [f64])) -> Self {
        let dim = grid.dim();
        let mut values = vec![0.0; grid.len() * dim * dim];
        for lin in 0..grid.len() {
            let p = grid.point(lin);
            f(&p[..dim], &mut values[lin * dim * dim..(lin + 1) * dim * dim]);
        }
        Self { grid: grid.clone(), values }
    }

    pub fn identity(grid: &Grid) -> Self {
        let dim = grid.dim();
        Self::from_fn(grid, |_, m| {
            for i in 0..dim {
                m[i * dim + i] = 1.0;
            }
        })
    }

    /// Matrix at a node as a row-major slice of length `dim*dim`.
    pub fn at(&self, lin: usize) -> &[f64] {
        let n2 = self.grid.dim() * self.grid.dim();
        &self.values[lin * n2..(lin + 1) * n2]
    }

    pub fn entry(&self, lin: usize, i: usize, j: usize) -> f64 {
        let dim = self.grid.dim();
        self.values[lin * dim * dim + i * dim + j]
    }

    /// True when every off-diagonal entry is (numerically) zero.
    pub fn is_diagonal(&self) -> bool {
        let dim = self.grid.dim();
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-14 * scale.max(1.0);
        for lin in 0..self.grid.len() {
            let m = self.at(lin);
            for i in 0..dim {
                for j in 0..dim {
                    if i != j && m[i * dim + j].abs() > tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn validate_finite(&self, what: &str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::Domain(format!(
                "{what} has a non-finite entry at slot {i}"
            ))),
        }
    }

    /// Multilinear interpolation of the full matrix at a point.
    pub fn interp(&self, p: &[f64], out: &mut [f64]) {
        let dim = self.grid.dim();
        let n2 = dim * dim;
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0f64; MAX_DIM];
        for d in 0..dim {
            let t = (p[d] - self.grid.origin[d]) / self.grid.spacing[d];
            let t = t.max(0.0).min((self.grid.shape[d] - 1) as f64);
            let i = (t.floor() as usize).min(self.grid.shape[d] - 2);
            base[d] = i;
            frac[d] = t - i as f64;
        }
        let strides = self.grid.strides();
        out[..n2].fill(0.0);
        for c in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut lin = 0usize;
            for d in 0..dim {
                let bit = (c >> d) & 1;
                w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
                lin += (base[d] + bit) * strides[d];
            }
            let m = self.at(lin);
            for k in 0..n2 {
                out[k] += w * m[k];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_and_multi_roundtrip() {
        let g = Grid::new(vec![4, 5, 6], vec![0.0; 3], vec![1.0; 3]).unwrap();
        for lin in 0..g.len() {
            let idx = g.multi(lin);
            assert_eq!(g.linear(&idx[..3]), lin);
        }
    }

    #[test]
    fn vertical_axis_contiguous() {
        let g = Grid::new(vec![3, 7], vec![0.0; 2], vec![1.0; 2]).unwrap();
        let s = g.strides();
        assert_eq!(s[1], 1);
        assert_eq!(s[0], 7);
    }

    #[test]
    fn interp_reproduces_linear_functions() {
        let g = Grid::over_box(&[0.0, 0.0], &[1.0, 2.0], &[9, 17]).unwrap();
        let f = GridField::from_fn(&g, |p| 3.0 * p[0] - 0.5 * p[1] + 1.0);
        for &(x, y) in &[(0.1, 0.3), (0.77, 1.9), (0.5, 1.0)] {
            let v = f.interp(&[x, y]);
            assert!((v - (3.0 * x - 0.5 * y + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::new(vec![1, 4], vec![0.0; 2], vec![1.0; 2]).is_err());
        assert!(Grid::new(vec![4, 4], vec![0.0; 2], vec![0.0, 1.0]).is_err());
    }
}
