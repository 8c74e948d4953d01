use crate::error::{Error, Result};
use crate::grid::{Point, ScalarField};
use crate::report::Report;

const CIRCLE_SAMPLES: usize = 720;

/// Growth of `u` away from the boundary point `y`: `m(r)` is the largest
/// increase of `u` over `|x - y| <= r` (the largest decrease when `y` lies on
/// the inner boundary where `u = 1`), fitted by `s r + c r^2`.
pub fn hopf_growth_fit(u: &ScalarField, y: Point, radii: &[f64]) -> Result<Report> {
    let g = u.grid();
    let fixed = u.fixed();
    // nearest Dirichlet node of each kind
    let (mut d_inner, mut d_outer) = (f64::INFINITY, f64::INFINITY);
    for idx in 0..g.len() {
        if !fixed[idx] {
            continue;
        }
        let q = g.point(idx);
        let d = (q[0] - y[0]).hypot(q[1] - y[1]);
        if u.values()[idx] > 0.5 {
            d_inner = d_inner.min(d);
        } else {
            d_outer = d_outer.min(d);
        }
    }
    if !d_inner.is_finite() || !d_outer.is_finite() {
        return Err(Error::precondition("field has no ring structure"));
    }
    let inner = d_inner < d_outer;
    let reach = if inner { d_outer } else { d_inner };
    let report = Report::new("hopf_growth", "linear-growth-from-the-boundary", 0.0)
        .config("side", if inner { "inner" } else { "outer" })
        .config("y", vec![y[0], y[1]])
        .config("radii", radii.to_vec());
    for &r in radii {
        if !(r > 0.0) || r >= reach {
            return Err(Error::precondition(format!("radius {r} exceeds the reach {reach:.4} of the ring")));
        }
        if !g.contains_point([y[0] - r, y[1] - r]) || !g.contains_point([y[0] + r, y[1] + r]) {
            return Err(Error::precondition(format!("radius {r} leaves the grid")));
        }
    }
    if radii.len() < 2 {
        return Ok(report
            .value("radii_count", radii.len() as f64, "1")
            .skipped("insufficient data: the fit needs at least two radii"));
    }
    let growth: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let vals = (0..CIRCLE_SAMPLES).map(|k| {
                let t = k as f64 * std::f64::consts::TAU / CIRCLE_SAMPLES as f64;
                u.sample([y[0] + r * t.cos(), y[1] + r * t.sin()])
            });
            if inner {
                1.0 - vals.fold(f64::INFINITY, f64::min)
            } else {
                vals.fold(f64::NEG_INFINITY, f64::max)
            }
        })
        .collect();
    // least squares for m = s r + c r^2
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&r, &m) in radii.iter().zip(&growth) {
        a11 += r * r;
        a12 += r * r * r;
        a22 += r * r * r * r;
        b1 += r * m;
        b2 += r * r * m;
    }
    let det = a11 * a22 - a12 * a12;
    let (slope, curv) = if det.abs() > 1e-12 * a11 * a22 {
        ((b1 * a22 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det)
    } else {
        (b1 / a11, 0.0)
    };
    let residual = radii
        .iter()
        .zip(&growth)
        .map(|(&r, &m)| (m - slope * r - curv * r * r).abs())
        .fold(0.0, f64::max);
    let linearity = residual / growth.iter().fold(f64::MIN_POSITIVE, |a, &b| a.max(b.abs()));
    let min_ratio = radii.iter().zip(&growth).map(|(&r, &m)| m / r).fold(f64::INFINITY, f64::min);
    let max_ratio = radii.iter().zip(&growth).map(|(&r, &m)| m / r).fold(0.0, f64::max);
    Ok(report
        .value("slope", slope, "1/length")
        .value("quadratic_coefficient", curv, "1/length^2")
        .value("fit_residual", linearity, "1")
        .value("min_growth_ratio", min_ratio, "1/length")
        .value("max_growth_ratio", max_ratio, "1/length")
        .finish(slope > 0.0 && min_ratio > 0.0))
}
