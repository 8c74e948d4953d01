//! Free boundary condition through a second discretization: the boundary is
//! fitted locally as a quadratic graph over its tangent line and `|grad u|`
//! comes from a one-sided fit along the fitted normal.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::grid::{Point, Region, ScalarField};
use crate::report::Report;

/// Local graph fit `eta = c0 + c1 xi + c2 xi^2` in the frame of vertex `i`.
struct GraphFit {
    base: Point,
    normal: Point,
    curvature: f64,
}

fn fit_graph(poly: &[Point], i: usize, window: f64) -> Option<GraphFit> {
    let m = poly.len();
    let x = poly[i];
    let (a, b) = (poly[(i + m - 1) % m], poly[(i + 1) % m]);
    let (tx, ty) = (b[0] - a[0], b[1] - a[1]);
    let len = tx.hypot(ty);
    if len == 0.0 {
        return None;
    }
    let t = [tx / len, ty / len];
    // the region lies to the left of the traversal direction
    let n = [t[1], -t[0]];
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    let mut count = 0;
    let mut add = |q: Point| {
        let d = [q[0] - x[0], q[1] - x[1]];
        let xi = d[0] * t[0] + d[1] * t[1];
        let eta = d[0] * n[0] + d[1] * n[1];
        let row = Vector3::new(1.0, xi, xi * xi);
        ata += row * row.transpose();
        atb += row * eta;
    };
    add(x);
    count += 1;
    for dir in [1, m - 1] {
        let mut j = (i + dir) % m;
        let mut steps = 0;
        while steps < m / 2 {
            let q = poly[j];
            if (q[0] - x[0]).hypot(q[1] - x[1]) > window {
                break;
            }
            add(q);
            count += 1;
            j = (j + dir) % m;
            steps += 1;
        }
    }
    if count < 7 {
        return None;
    }
    let c = ata.lu().solve(&atb)?;
    let (c0, c1, c2) = (c[0], c[1], c[2]);
    let s = (1.0 + c1 * c1).sqrt();
    Some(GraphFit {
        base: [x[0] + c0 * n[0], x[1] + c0 * n[1]],
        normal: [(n[0] - c1 * t[0]) / s, (n[1] - c1 * t[1]) / s],
        curvature: -2.0 * c2 / s.powi(3),
    })
}

/// Slope at zero of the least-squares fit `u = a s + b s^2` along the inward
/// normal, sampled at two to five cells.
fn normal_slope(u: &ScalarField, base: Point, normal: Point) -> Option<f64> {
    let g = u.grid();
    let h = g.spacing();
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 2..=5 {
        let s = k as f64 * h;
        let q = [base[0] - s * normal[0], base[1] - s * normal[1]];
        if !g.contains_point(q) {
            return None;
        }
        let v = u.sample(q);
        if v >= 1.0 - 1e-12 {
            return None;
        }
        s11 += s * s;
        s12 += s * s * s;
        s22 += s * s * s * s;
        r1 += s * v;
        r2 += s * s * v;
    }
    let det = s11 * s22 - s12 * s12;
    Some((r1 * s22 - r2 * s12) / det)
}

/// Compares the curvature of the locally fitted graph with
/// `(p - 1) |grad u|^p` at every contour vertex away from the box.
pub fn graph_curvature_check(u: &ScalarField, omega: &Region, p: f64, tol: f64) -> Result<Report> {
    let g = *u.grid();
    if !g.same_as(omega.grid()) {
        return Err(Error::GridMismatch);
    }
    if omega.contour().is_empty() {
        return Err(Error::EmptyRegion);
    }
    let (h, half) = (g.spacing(), g.half_width());
    let window = 3.0 * (h * half / 8.0).sqrt().max(2.0 * h);
    let mut worst = 0.0f64;
    let mut sum = 0.0;
    let mut samples = 0usize;
    let mut skipped = 0usize;
    for poly in omega.contour() {
        for i in 0..poly.len() {
            let x = poly[i];
            if x[0].abs().max(x[1].abs()) > half - 2.0 * h {
                skipped += 1;
                continue;
            }
            let Some(fit) = fit_graph(poly, i, window) else {
                skipped += 1;
                continue;
            };
            let Some(slope) = normal_slope(u, fit.base, fit.normal) else {
                skipped += 1;
                continue;
            };
            let lhs = (p - 1.0) * slope.abs().powf(p);
            let rel = if fit.curvature > 0.0 {
                (lhs - fit.curvature).abs() / fit.curvature
            } else {
                f64::INFINITY
            };
            worst = worst.max(rel);
            sum += rel.min(1e300);
            samples += 1;
        }
    }
    let report = Report::new("graph_curvature", "free-boundary-graph-curvature", tol)
        .value("max_relative", worst, "1")
        .value("mean_relative", if samples > 0 { sum / samples as f64 } else { 0.0 }, "1")
        .value("margin", tol - worst, "1")
        .value("samples", samples as f64, "vertices")
        .value("skipped", skipped as f64, "vertices")
        .value("window", window, "length")
        .config("p", p)
        .config("n", g.n());
    if samples == 0 {
        return Ok(report.skipped("no contour vertex admits a graph fit"));
    }
    Ok(report.finish(worst < tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize, Grid, Shape};

    #[test]
    fn graph_fit_recovers_circle_curvature() {
        let g = Grid::new(256, 4.0).unwrap();
        let c = rasterize(&Shape::disk(2.0), &g).unwrap();
        let poly = &c.contour()[0];
        for i in (0..poly.len()).step_by(17) {
            let fit = fit_graph(poly, i, 0.5).unwrap();
            assert!((fit.curvature - 0.5).abs() < 0.01, "{}", fit.curvature);
            let r = fit.base[0].hypot(fit.base[1]);
            assert!((fit.normal[0] - fit.base[0] / r).abs() < 1e-2);
        }
    }

    #[test]
    fn normal_slope_of_a_linear_ramp() {
        let g = Grid::new(64, 2.0).unwrap();
        let u = ScalarField::from_fn(g, |x| (0.5 - 0.3 * x[0]).clamp(0.0, 0.9));
        let s = normal_slope(&u, [5.0 / 3.0, 0.0], [1.0, 0.0]).unwrap();
        assert!((s - 0.3).abs() < 1e-9, "{s}");
    }
}
