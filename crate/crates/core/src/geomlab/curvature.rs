use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::grid::{Point, Region};

/// Per-vertex curvature of every contour loop, positive where the region is
/// locally convex. Loops are resampled at about `2h` before fitting.
pub fn contour_curvature(region: &Region) -> Result<Vec<Vec<f64>>> {
    contour_curvature_with_spacing(region, 2.0 * region.grid().spacing())
}

pub fn contour_curvature_with_spacing(region: &Region, spacing: f64) -> Result<Vec<Vec<f64>>> {
    if !(spacing > 0.0) {
        return Err(Error::invalid("spacing", "must be positive"));
    }
    if region.contour().is_empty() {
        return Err(Error::EmptyRegion);
    }
    region.contour().iter().map(|l| loop_curvature(l, spacing)).collect()
}

/// Curvature at the vertices of one closed loop (region on the left).
pub fn loop_curvature(poly: &[Point], spacing: f64) -> Result<Vec<f64>> {
    if poly.len() < 8 {
        return Err(Error::precondition(format!(
            "curvature needs at least 8 contour vertices, got {}",
            poly.len()
        )));
    }
    let n = poly.len();
    let mut arc = Vec::with_capacity(n + 1);
    arc.push(0.0);
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        arc.push(arc[i] + (b[0] - a[0]).hypot(b[1] - a[1]));
    }
    let total = arc[n];
    let m = ((total / spacing).round() as usize).max(8);
    let ds = total / m as f64;
    let resampled: Vec<Point> = (0..m).map(|k| point_at(poly, &arc, k as f64 * ds)).collect();
    let kappa: Vec<f64> = (0..m).map(|k| fit_window(&resampled, k)).collect();
    Ok(arc[..n]
        .iter()
        .map(|&s| {
            let t = s / ds;
            let k0 = (t.floor() as usize).min(m - 1);
            let w = t - k0 as f64;
            (1.0 - w) * kappa[k0] + w * kappa[(k0 + 1) % m]
        })
        .collect())
}

fn point_at(poly: &[Point], arc: &[f64], s: f64) -> Point {
    let n = poly.len();
    let i = match arc.binary_search_by(|a| a.total_cmp(&s)) {
        Ok(i) => i.min(n - 1),
        Err(i) => (i - 1).min(n - 1),
    };
    let len = arc[i + 1] - arc[i];
    let w = if len > 0.0 { (s - arc[i]) / len } else { 0.0 };
    let (a, b) = (poly[i], poly[(i + 1) % n]);
    [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
}

/// Least-squares circle `A (x^2 + y^2) + B x + D = y` through five points in
/// the frame of the chord at `k`.
fn fit_window(pts: &[Point], k: usize) -> f64 {
    let m = pts.len();
    let at = |o: isize| pts[(k as isize + o).rem_euclid(m as isize) as usize];
    let (c, prev, next) = (at(0), at(-1), at(1));
    let (tx, ty) = (next[0] - prev[0], next[1] - prev[1]);
    let norm = tx.hypot(ty);
    let (tx, ty) = (tx / norm, ty / norm);
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for o in -2..=2 {
        let q = at(o);
        let (dx, dy) = (q[0] - c[0], q[1] - c[1]);
        let x = dx * tx + dy * ty;
        let y = -dx * ty + dy * tx;
        let row = Vector3::new(x * x + y * y, x, 1.0);
        ata += row * row.transpose();
        atb += row * y;
    }
    let Some(sol) = ata.lu().solve(&atb) else {
        return 0.0;
    };
    let (a, b, d) = (sol[0], sol[1], sol[2]);
    let disc = b * b + 1.0 - 4.0 * a * d;
    if disc <= 0.0 {
        return 0.0;
    }
    2.0 * a / disc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize, Grid, Shape};

    #[test]
    fn circle_has_constant_curvature() {
        let g = Grid::new(256, 4.0).unwrap();
        let r = rasterize(&Shape::disk(2.0), &g).unwrap();
        let k = contour_curvature(&r).unwrap();
        for v in &k[0] {
            assert!((v - 0.5).abs() < 0.025, "{v}");
        }
    }

    #[test]
    fn clockwise_loop_flips_sign() {
        let ccw: Vec<Point> = (0..400)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / 400.0;
                [t.cos(), t.sin()]
            })
            .collect();
        let cw: Vec<Point> = ccw.iter().rev().copied().collect();
        let a = loop_curvature(&ccw, 0.15).unwrap();
        let b = loop_curvature(&cw, 0.15).unwrap();
        assert!(a.iter().all(|v| (v - 1.0).abs() < 0.02));
        assert!(b.iter().all(|v| (v + 1.0).abs() < 0.02));
        assert!(loop_curvature(&ccw[..7], 0.1).is_err());
    }
}
