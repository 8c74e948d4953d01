//! Uniform grids, sampled fields, regions and their measures.
//!
//! All sampled quantities live on cell centers: node `(i, j)` sits at
//! `(-R + (i + 1/2) h, -R + (j + 1/2) h)` with `h = 2R / n`. Node storage is
//! row-major with `j` (the y index) as the slow axis.

mod contour;
mod region;
mod shape;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use contour::{marching_squares, Polyline};
pub use region::{contour_hausdorff, hausdorff_distance, measure, point_polyline_distance, region_contains, Region};
pub use shape::{rasterize, Shape};

pub(crate) use shape::{polygon_area, polygon_signed_distance};

pub type Point = [f64; 2];

/// Smallest admissible number of cells per axis.
pub const MIN_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < MIN_CELLS {
            return Err(Error::InvalidGrid(format!("n = {n} < {MIN_CELLS}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        Ok(Grid { n, half_width })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    #[inline]
    pub fn point(&self, idx: usize) -> Point {
        let (i, j) = self.ij(idx);
        [self.coord(i), self.coord(j)]
    }

    /// Continuous node coordinates of a physical point (node `i` maps to `i`).
    #[inline]
    pub fn locate(&self, p: Point) -> [f64; 2] {
        let h = self.spacing();
        [(p[0] + self.half_width) / h - 0.5, (p[1] + self.half_width) / h - 0.5]
    }

    /// Whether `p` lies in the closed box `[-R, R]^2`.
    pub fn contains_point(&self, p: Point) -> bool {
        p[0].abs() <= self.half_width && p[1].abs() <= self.half_width
    }

    /// Same grid up to floating point noise in the half width.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n && (self.half_width - other.half_width).abs() <= 1e-12 * self.half_width
    }

    /// Bilinear interpolation of node data; clamps to the outermost nodes.
    pub fn interpolate(&self, values: &[f64], p: Point) -> f64 {
        let n = self.n;
        let [fx, fy] = self.locate(p);
        let fx = fx.clamp(0.0, (n - 1) as f64);
        let fy = fy.clamp(0.0, (n - 1) as f64);
        let i0 = (fx.floor() as usize).min(n - 2);
        let j0 = (fy.floor() as usize).min(n - 2);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let v00 = values[self.index(i0, j0)];
        let v10 = values[self.index(i0 + 1, j0)];
        let v01 = values[self.index(i0, j0 + 1)];
        let v11 = values[self.index(i0 + 1, j0 + 1)];
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }

    /// Central-difference gradient of node data (one-sided at the box edge).
    pub fn node_gradient(&self, values: &[f64], i: usize, j: usize) -> [f64; 2] {
        let n = self.n;
        let h = self.spacing();
        let d = |a: usize, b: usize, span: f64| (values[a] - values[b]) / span;
        let gx = if i == 0 {
            d(self.index(1, j), self.index(0, j), h)
        } else if i == n - 1 {
            d(self.index(n - 1, j), self.index(n - 2, j), h)
        } else {
            d(self.index(i + 1, j), self.index(i - 1, j), 2.0 * h)
        };
        let gy = if j == 0 {
            d(self.index(i, 1), self.index(i, 0), h)
        } else if j == n - 1 {
            d(self.index(i, n - 1), self.index(i, n - 2), h)
        } else {
            d(self.index(i, j + 1), self.index(i, j - 1), 2.0 * h)
        };
        [gx, gy]
    }

    /// Bilinear interpolation of the node gradient.
    pub fn interpolate_gradient(&self, values: &[f64], p: Point) -> [f64; 2] {
        let n = self.n;
        let [fx, fy] = self.locate(p);
        let fx = fx.clamp(0.0, (n - 1) as f64);
        let fy = fy.clamp(0.0, (n - 1) as f64);
        let i0 = (fx.floor() as usize).min(n - 2);
        let j0 = (fy.floor() as usize).min(n - 2);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let g00 = self.node_gradient(values, i0, j0);
        let g10 = self.node_gradient(values, i0 + 1, j0);
        let g01 = self.node_gradient(values, i0, j0 + 1);
        let g11 = self.node_gradient(values, i0 + 1, j0 + 1);
        let mut out = [0.0; 2];
        for c in 0..2 {
            out[c] = (1.0 - ty) * ((1.0 - tx) * g00[c] + tx * g10[c]) + ty * ((1.0 - tx) * g01[c] + tx * g11[c]);
        }
        out
    }
}

/// A real-valued function sampled on the nodes of a grid.
///
/// Nodes flagged `fixed` carry Dirichlet data and are never touched by the
/// solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    fixed: Vec<bool>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>, fixed: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || fixed.len() != grid.len() {
            return Err(Error::precondition("field storage does not match the grid"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("field contains non-finite values".into()));
        }
        Ok(ScalarField { grid, values, fixed })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.point(k))).collect();
        ScalarField {
            grid,
            values,
            fixed: vec![false; grid.len()],
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_fn(grid, |_| 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fixed(&self) -> &[bool] {
        &self.fixed
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn sample(&self, p: Point) -> f64 {
        self.grid.interpolate(&self.values, p)
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Writes `x,y,value` rows in storage order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,value")?;
        for (k, v) in self.values.iter().enumerate() {
            let [x, y] = self.grid.point(k);
            writeln!(w, "{x},{y},{v}")?;
        }
        Ok(())
    }
}

/// Per-node gradient: centered differences inside, one-sided on the box edge.
pub fn gradient(f: &ScalarField) -> Vec<[f64; 2]> {
    let g = f.grid();
    (0..g.len())
        .map(|k| {
            let (i, j) = g.ij(k);
            g.node_gradient(f.values(), i, j)
        })
        .collect()
}
