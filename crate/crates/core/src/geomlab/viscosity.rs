use crate::error::{Error, Result};
use crate::report::Report;

use super::matrix::SymMatrix;

/// Tolerance below which a graph value counts as zero.
const FLAT_TOL: f64 = 1e-10;

/// Samples of a boundary written as a graph `e = g(x')` over its tangent
/// plane at the origin, with the body on the side `e > g`.
#[derive(Debug, Clone)]
pub struct LocalGraph {
    dim: usize,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    radius: f64,
}

impl LocalGraph {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if !(1..=2).contains(&dim) {
            return Err(Error::invalid("graph", "dimension must be 1 or 2"));
        }
        if points.len() != values.len() || points.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("graph", "points and values do not match"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("graph", "values must be finite"));
        }
        let radius = points.iter().map(|p| norm(p)).fold(0.0, f64::max);
        if radius <= 0.0 {
            return Err(Error::invalid("graph", "sample radius must be positive"));
        }
        let g = LocalGraph { dim, points, values, radius };
        let scale = g.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(k) = (0..g.values.len()).find(|&k| g.values[k] < -FLAT_TOL - 1e-6 * scale) {
            return Err(Error::precondition(format!(
                "graph dips below its tangent plane ({:.3e} at {:?}); no quadratic touches from inside",
                g.values[k], g.points[k]
            )));
        }
        Ok(g)
    }

    /// Samples `f` on `rings` circles of radii `radius * k / rings` with
    /// `angles` points each (two points per ring in 1D).
    pub fn sample(dim: usize, radius: f64, rings: usize, angles: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        if !(radius > 0.0) || rings == 0 {
            return Err(Error::invalid("radius", "sampling needs a positive radius and at least one ring"));
        }
        let mut points = Vec::new();
        for k in 1..=rings {
            let r = radius * k as f64 / rings as f64;
            match dim {
                1 => {
                    points.push(vec![r]);
                    points.push(vec![-r]);
                }
                2 => {
                    for a in 0..angles.max(4) {
                        let t = a as f64 * std::f64::consts::TAU / angles.max(4) as f64;
                        points.push(vec![r * t.cos(), r * t.sin()]);
                    }
                }
                _ => return Err(Error::invalid("graph", "dimension must be 1 or 2")),
            }
        }
        let values = points.iter().map(|p| f(p)).collect();
        Self::new(points, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Radius of the neighbourhood in which touching is tested.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Smallest `2 Tr A` over quadratics `<A x, x>` lying above the graph on
/// every sample, that is touching the boundary from inside.
pub fn viscosity_mean_curvature(g: &LocalGraph) -> Result<f64> {
    Ok(graph_mean_curvature_of(&touching_quadratic(g)?))
}

fn graph_mean_curvature_of(a: &SymMatrix) -> f64 {
    2.0 * a.trace()
}

/// The optimal touching quadratic found by the scan.
pub fn touching_quadratic(g: &LocalGraph) -> Result<SymMatrix> {
    if g.dim == 1 {
        let lam = g
            .points
            .iter()
            .zip(&g.values)
            .map(|(p, v)| v / (p[0] * p[0]))
            .fold(0.0, f64::max);
        return SymMatrix::diagonal(&[lam]);
    }
    let eval = |theta: f64| scan_angle(g, theta);
    let n_angles = 16;
    let step = std::f64::consts::FRAC_PI_2 / n_angles as f64;
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    for k in 0..n_angles {
        let theta = k as f64 * step;
        let (v, l1, l2) = eval(theta);
        if v < best.0 {
            best = (v, theta, l1, l2);
        }
    }
    // golden refinement of the best angle
    let (mut lo, mut hi) = (best.1 - step, best.1 + step);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let x1 = hi - phi * (hi - lo);
        let x2 = lo + phi * (hi - lo);
        let (f1, f2) = (eval(x1), eval(x2));
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f.0 < best.0 {
                best = (f.0, x, f.1, f.2);
            }
        }
        if f1.0 <= f2.0 {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let (_, theta, l1, l2) = best;
    let (c, s) = (theta.cos(), theta.sin());
    let a11 = l1 * c * c + l2 * s * s;
    let a22 = l1 * s * s + l2 * c * c;
    let a12 = (l1 - l2) * c * s;
    SymMatrix::from_rows(&[vec![a11, a12], vec![a12, a22]])
}

/// Minimizes `l1 + l2` over `l1` with `l2` the least admissible second
/// eigenvalue for axes rotated by `theta`.
fn scan_angle(g: &LocalGraph, theta: f64) -> (f64, f64, f64) {
    let (c, s) = (theta.cos(), theta.sin());
    let coords: Vec<(f64, f64, f64)> = g
        .points
        .iter()
        .zip(&g.values)
        .map(|(p, &v)| {
            let c1 = p[0] * c + p[1] * s;
            let c2 = -p[0] * s + p[1] * c;
            (c1 * c1, c2 * c2, v)
        })
        .collect();
    let r2 = g.radius * g.radius;
    let axis = 1e-12 * r2;
    // admissibility of l1 along the first axis, and the trivial upper bound
    let lo = coords
        .iter()
        .filter(|&&(_, q2, _)| q2 <= axis)
        .map(|&(q1, _, v)| v / q1)
        .fold(0.0, f64::max);
    let hi = coords.iter().map(|&(q1, q2, v)| v / (q1 + q2)).fold(0.0, f64::max).max(lo);
    let second = |l1: f64| {
        coords
            .iter()
            .filter(|&&(_, q2, _)| q2 > axis)
            .map(|&(q1, q2, v)| (v - l1 * q1) / q2)
            .fold(0.0, f64::max)
    };
    let objective = |l1: f64| l1 + second(l1);
    let n = 32;
    let mut best = (objective(lo), lo);
    let dl = (hi - lo) / (n - 1) as f64;
    for k in 1..n {
        let l1 = lo + k as f64 * dl;
        let v = objective(l1);
        if v < best.0 {
            best = (v, l1);
        }
    }
    if dl > 0.0 {
        let (mut a, mut b) = ((best.1 - dl).max(lo), (best.1 + dl).min(hi));
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let x1 = b - phi * (b - a);
            let x2 = a + phi * (b - a);
            let (f1, f2) = (objective(x1), objective(x2));
            for (x, f) in [(x1, f1), (x2, f2)] {
                if f < best.0 {
                    best = (f, x);
                }
            }
            if f1 <= f2 {
                b = x2;
            } else {
                a = x1;
            }
        }
    }
    (best.0, best.1, second(best.1))
}

/// Compares the full scan with the scan restricted to `diag(a, b)` with
/// `0 < a <= eps`, for a graph that vanishes along the first axis.
pub fn block_reduction_check(g: &LocalGraph, eps: f64, tol: f64) -> Result<Report> {
    if g.dim != 2 {
        return Err(Error::invalid("graph", "block reduction needs a two-dimensional graph"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    let r2 = g.radius * g.radius;
    let axis = 1e-12 * r2;
    let scale = g.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let on_axis: Vec<f64> = g
        .points
        .iter()
        .zip(&g.values)
        .filter(|(p, _)| p[1] * p[1] <= axis)
        .map(|(_, &v)| v)
        .collect();
    if on_axis.is_empty() || on_axis.iter().any(|v| v.abs() > FLAT_TOL + 1e-3 * scale) {
        return Err(Error::precondition("the graph does not contain a segment along the first axis"));
    }
    let full = viscosity_mean_curvature(g)?;
    let block_for = |a: f64| {
        let b = g
            .points
            .iter()
            .zip(&g.values)
            .filter(|(p, _)| p[1] * p[1] > axis)
            .map(|(p, &v)| (v - a * p[0] * p[0]) / (p[1] * p[1]))
            .fold(0.0, f64::max);
        2.0 * (a + b)
    };
    let block = (1..=32).map(|k| block_for(eps * k as f64 / 32.0)).fold(f64::INFINITY, f64::min);
    let rel = (block - full).abs() / full.abs().max(f64::MIN_POSITIVE);
    Ok(Report::new("block_reduction", "block-diagonal-touching-quadratics", tol)
        .value("full_scan", full, "1/length")
        .value("block_scan", block, "1/length")
        .value("relative_gap", rel, "1")
        .config("eps", eps)
        .config("stencil_radius", g.radius)
        .finish(rel <= tol || (full.abs() <= FLAT_TOL && block.abs() <= FLAT_TOL + 2.0 * eps)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_arc() {
        let g = LocalGraph::sample(1, 0.05, 10, 0, |x| 2.0 - (4.0 - x[0] * x[0]).sqrt()).unwrap();
        let k = viscosity_mean_curvature(&g).unwrap();
        assert!((k - 0.5).abs() < 0.05, "{k}");
        let g = LocalGraph::sample(2, 0.05, 10, 32, |x| 2.0 - (4.0 - x[0] * x[0] - x[1] * x[1]).sqrt()).unwrap();
        let k = viscosity_mean_curvature(&g).unwrap();
        assert!((k - 1.0).abs() < 0.1, "{k}");
    }

    #[test]
    fn flat_to_second_order() {
        let g = LocalGraph::sample(1, 0.05, 10, 0, |x| x[0].powi(4)).unwrap();
        assert!(viscosity_mean_curvature(&g).unwrap() < 1e-2);
        // the best majorant of |x|^4 on a disk of radius r is r^2 |x|^2
        let g = LocalGraph::sample(2, 0.05, 10, 32, |x| (x[0] * x[0] + x[1] * x[1]).powi(2)).unwrap();
        assert!(viscosity_mean_curvature(&g).unwrap() <= 4.0 * 0.05f64.powi(2) + 1e-9);
    }

    #[test]
    fn exact_quadratic_is_recovered() {
        let a = [[0.7, 0.2], [0.2, 0.3]];
        let g = LocalGraph::sample(2, 0.05, 8, 48, |x| {
            a[0][0] * x[0] * x[0] + 2.0 * a[0][1] * x[0] * x[1] + a[1][1] * x[1] * x[1]
        })
        .unwrap();
        let k = viscosity_mean_curvature(&g).unwrap();
        assert!((k - 2.0).abs() < 1e-3, "{k}");
    }

    #[test]
    fn negative_graph_is_rejected() {
        assert!(LocalGraph::sample(1, 0.05, 4, 0, |x| -x[0] * x[0]).is_err());
    }

    #[test]
    fn block_reduction_on_cylinder_and_quadratic() {
        let r = 1.5;
        let g = LocalGraph::sample(2, 0.05, 10, 32, |x| r - (r * r - x[1] * x[1]).sqrt()).unwrap();
        let rep = block_reduction_check(&g, 1e-3, 0.05).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.get("full_scan").unwrap() - 1.0 / r).abs() < 0.05 / r);
        let b = 0.4;
        for delta in [1e-2, 1e-4, 1e-5] {
            let g = LocalGraph::sample(2, 0.05, 10, 32, |x| delta * x[0] * x[0] + b * x[1] * x[1]).unwrap();
            if delta > 1e-3 {
                assert!(block_reduction_check(&g, 1e-3, 0.05).is_err());
                continue;
            }
            let rep = block_reduction_check(&g, 1e-3, 0.05).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert!((rep.get("full_scan").unwrap() - 2.0 * (b + delta)).abs() < 1e-3);
            assert!((rep.get("block_scan").unwrap() - 2.0 * b).abs() < 1e-2);
        }
        let g = LocalGraph::sample(2, 0.05, 10, 32, |x| x[0] * x[0] + b * x[1] * x[1]).unwrap();
        assert!(block_reduction_check(&g, 1e-3, 0.05).is_err());
    }
}
