use std::io::Write;

use super::contour::{loop_length, marching_squares};
use super::shape::{polygon_area, segment_distance};
use super::{Grid, Point, Polyline};
use crate::error::{Error, Result};

/// A subset of the grid: an implicit function sampled on cell centers
/// (negative inside), the induced cell mask and its subcell contour.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    grid: Grid,
    phi: Vec<f64>,
    mask: Vec<bool>,
    contour: Vec<Polyline>,
}

impl Region {
    pub fn from_level_set(grid: Grid, phi: Vec<f64>) -> Result<Self> {
        if phi.len() != grid.len() {
            return Err(Error::precondition("level set does not match the grid"));
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("level set contains non-finite values".into()));
        }
        let mask = phi.iter().map(|&v| v < 0.0).collect();
        let contour = marching_squares(&grid, &phi);
        Ok(Region { grid, phi, mask, contour })
    }

    /// Region from a bare cell mask; the contour passes through edge midpoints.
    pub fn from_mask(grid: Grid, mask: &[bool]) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::precondition("mask does not match the grid"));
        }
        let h = grid.spacing();
        let phi = mask.iter().map(|&m| if m { -0.5 * h } else { 0.5 * h }).collect();
        Self::from_level_set(grid, phi)
    }

    pub fn empty(grid: Grid) -> Self {
        Self::from_level_set(grid, vec![grid.spacing(); grid.len()]).expect("finite")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contour(&self) -> &[Polyline] {
        &self.contour
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn cell_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Implicit function at an arbitrary point (bilinear).
    pub fn level_at(&self, p: Point) -> f64 {
        self.grid.interpolate(&self.phi, p)
    }

    /// Number of counterclockwise (outer) loops.
    pub fn component_count(&self) -> usize {
        self.contour.iter().filter(|l| polygon_area(l) > 0.0).count()
    }

    /// All contour vertices, loop after loop.
    pub fn contour_points(&self) -> impl Iterator<Item = &Point> {
        self.contour.iter().flatten()
    }

    /// `{phi < -offset}`; for a signed distance this erodes by `offset`
    /// (dilates when negative).
    pub fn offset(&self, offset: f64) -> Result<Region> {
        Region::from_level_set(self.grid, self.phi.iter().map(|v| v + offset).collect())
    }

    pub fn intersect(&self, other: &Region) -> Result<Region> {
        self.combine(other, f64::max)
    }

    pub fn union(&self, other: &Region) -> Result<Region> {
        self.combine(other, f64::min)
    }

    /// `self \ other`.
    pub fn subtract(&self, other: &Region) -> Result<Region> {
        self.combine(other, |a, b| a.max(-b))
    }

    fn combine(&self, other: &Region, f: impl Fn(f64, f64) -> f64) -> Result<Region> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Region::from_level_set(self.grid, self.phi.iter().zip(&other.phi).map(|(&a, &b)| f(a, b)).collect())
    }

    /// Distance from `p` to the contour (zero on it).
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        self.contour
            .iter()
            .map(|l| point_polyline_distance(p, l))
            .fold(f64::INFINITY, f64::min)
    }

    /// Writes the contour as `x,y` rows with a blank line between loops.
    pub fn write_contour_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y")?;
        for (k, l) in self.contour.iter().enumerate() {
            if k > 0 {
                writeln!(w)?;
            }
            for p in l {
                writeln!(w, "{},{}", p[0], p[1])?;
            }
            // repeat the first vertex so plotted loops close
            if let Some(p) = l.first() {
                writeln!(w, "{},{}", p[0], p[1])?;
            }
        }
        Ok(())
    }
}

/// `(area, perimeter)`: cell count times `h^2`, and the total length of the
/// interface polylines.
pub fn measure(region: &Region) -> (f64, f64) {
    let h = region.grid.spacing();
    let area = region.cell_count() as f64 * h * h;
    let perimeter = region.contour.iter().map(|l| loop_length(l)).sum();
    (area, perimeter)
}

pub fn point_polyline_distance(p: Point, poly: &[Point]) -> f64 {
    let n = poly.len();
    if n == 1 {
        return (p[0] - poly[0][0]).hypot(p[1] - poly[0][1]);
    }
    (0..n)
        .map(|i| segment_distance(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn directed_hausdorff(a: &[Polyline], b: &[Polyline]) -> f64 {
    a.iter()
        .flatten()
        .map(|p| b.iter().map(|l| point_polyline_distance(*p, l)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two sets of closed polylines.
pub fn contour_hausdorff(a: &[Polyline], b: &[Polyline]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

pub fn hausdorff_distance(a: &Region, b: &Region) -> Result<f64> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch);
    }
    if a.is_empty() || b.is_empty() || a.contour.is_empty() || b.contour.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(contour_hausdorff(&a.contour, &b.contour))
}

/// True iff every cell of `b` lies within `slack` of `a`.
pub fn region_contains(a: &Region, b: &Region, slack: f64) -> Result<bool> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch);
    }
    let a_empty = a.is_empty();
    for (k, (&in_b, &in_a)) in b.mask.iter().zip(&a.mask).enumerate() {
        if in_b && !in_a {
            if a_empty || a.distance_to_boundary(a.grid.point(k)) > slack {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::super::{rasterize, Shape};
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n, 4.0).unwrap()
    }

    #[test]
    fn disk_measures() {
        let g = grid(256);
        let r = rasterize(&Shape::disk(1.0), &g).unwrap();
        let (area, per) = measure(&r);
        assert!((area - PI).abs() < 2.0 * g.spacing(), "area {area}");
        assert!((per - 2.0 * PI).abs() / (2.0 * PI) < 0.02, "perimeter {per}");
    }

    #[test]
    fn square_and_lshape_measures() {
        let g = grid(256);
        let h = g.spacing();
        let sq = rasterize(&Shape::square(2.0), &g).unwrap();
        let (_, per) = measure(&sq);
        assert!((per - 8.0).abs() < 4.0 * h, "perimeter {per}");
        let unit = rasterize(&Shape::Square { center: [0.3, 0.1], side: 1.0 }, &g).unwrap();
        let (a, p) = measure(&unit);
        assert!((a - 1.0).abs() < 4.0 * h && (p - 4.0).abs() < 4.0 * h, "{a} {p}");
        let l = rasterize(&Shape::lshape(2.0, 2.0, 1.0), &g).unwrap();
        let (a, p) = measure(&l);
        assert!((a - 3.0).abs() < 2.0 * h * p, "area {a}");
    }

    #[test]
    fn empty_region_measures_zero() {
        let r = Region::empty(grid(32));
        assert_eq!(measure(&r), (0.0, 0.0));
        assert!(matches!(hausdorff_distance(&r, &r), Err(Error::EmptyRegion)));
    }

    #[test]
    fn hausdorff_examples() {
        let g = grid(256);
        let h = g.spacing();
        let d1 = rasterize(&Shape::disk(1.0), &g).unwrap();
        let d15 = rasterize(&Shape::disk(1.5), &g).unwrap();
        let shifted = rasterize(&Shape::disk_at([0.3, 0.0], 1.0), &g).unwrap();
        assert_eq!(hausdorff_distance(&d1, &d1).unwrap(), 0.0);
        assert!((hausdorff_distance(&d1, &d15).unwrap() - 0.5).abs() < h);
        // translating a disk by t moves its boundary by exactly t in Hausdorff distance
        assert!((hausdorff_distance(&d1, &shifted).unwrap() - 0.3).abs() < h);
    }

    #[test]
    fn containment_examples() {
        let g = grid(128);
        let d1 = rasterize(&Shape::disk(1.0), &g).unwrap();
        let d2 = rasterize(&Shape::disk(2.0), &g).unwrap();
        assert!(region_contains(&d1, &d1, 0.0).unwrap());
        assert!(region_contains(&d2, &d1, 0.0).unwrap());
        assert!(!region_contains(&d1, &d2, 0.0).unwrap());
        assert!(region_contains(&d1, &d2, 1.01).unwrap());
    }

    #[test]
    fn perimeter_converges_first_order() {
        let mut errs = Vec::new();
        let ns = [32usize, 64, 128, 256];
        for &n in &ns {
            let g = grid(n);
            let r = rasterize(&Shape::disk(1.3), &g).unwrap();
            errs.push((measure(&r).1 - 2.0 * PI * 1.3).abs());
        }
        let rates: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        assert!(mean >= 0.9, "errors {errs:?} rates {rates:?}");
    }
}
