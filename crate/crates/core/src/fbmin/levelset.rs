//! Signed distance maintenance and normal velocities for the shape descent.

use crate::grid::{Grid, Point, Polyline};

/// Signed distance rebuilt by fast sweeping from the nodes next to the
/// interface, whose values are kept so the zero level does not move.
pub(crate) fn reinitialize(grid: &Grid, phi: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let h = grid.spacing();
    let mut d = vec![f64::INFINITY; grid.len()];
    let mut any = false;
    for j in 0..n {
        for i in 0..n {
            let idx = grid.index(i, j);
            let s = phi[idx] < 0.0;
            let near = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)].iter().any(|&(di, dj)| {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                a >= 0 && b >= 0 && a < n as i64 && b < n as i64 && (phi[grid.index(a as usize, b as usize)] < 0.0) != s
            });
            if near {
                d[idx] = phi[idx].abs();
                any = true;
            }
        }
    }
    if !any {
        return phi.to_vec();
    }
    let fixed: Vec<bool> = d.iter().map(|v| v.is_finite()).collect();
    for _ in 0..2 {
        for (rev_i, rev_j) in [(false, false), (true, false), (false, true), (true, true)] {
            for jj in 0..n {
                let j = if rev_j { n - 1 - jj } else { jj };
                for ii in 0..n {
                    let i = if rev_i { n - 1 - ii } else { ii };
                    let idx = grid.index(i, j);
                    if fixed[idx] {
                        continue;
                    }
                    let a = neighbor_min(&d, grid, i, j, true);
                    let b = neighbor_min(&d, grid, i, j, false);
                    let cand = if !a.is_finite() && !b.is_finite() {
                        continue;
                    } else if (a - b).abs() >= h {
                        a.min(b) + h
                    } else {
                        0.5 * (a + b + (2.0 * h * h - (a - b) * (a - b)).sqrt())
                    };
                    if cand < d[idx] {
                        d[idx] = cand;
                    }
                }
            }
        }
    }
    d.iter().zip(phi).map(|(&v, &p)| if p < 0.0 { -v } else { v }).collect()
}

/// Catmull-Rom bicubic interpolation of node values, clamped at the box.
pub(crate) fn interpolate_cubic(grid: &Grid, values: &[f64], p: Point) -> f64 {
    let n = grid.n() as i64;
    let [fx, fy] = grid.locate(p);
    let (i0, j0) = (fx.floor() as i64, fy.floor() as i64);
    let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
    let weights = |t: f64| {
        let (t2, t3) = (t * t, t * t * t);
        [
            0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2),
        ]
    };
    let (wx, wy) = (weights(tx), weights(ty));
    let mut sum = 0.0;
    for (b, wyb) in wy.iter().enumerate() {
        let j = (j0 - 1 + b as i64).clamp(0, n - 1) as usize;
        for (a, wxa) in wx.iter().enumerate() {
            let i = (i0 - 1 + a as i64).clamp(0, n - 1) as usize;
            sum += wxa * wyb * values[grid.index(i, j)];
        }
    }
    sum
}

fn neighbor_min(d: &[f64], grid: &Grid, i: usize, j: usize, x_axis: bool) -> f64 {
    let n = grid.n();
    let (lo, hi) = if x_axis {
        (
            (i > 0).then(|| d[grid.index(i - 1, j)]),
            (i + 1 < n).then(|| d[grid.index(i + 1, j)]),
        )
    } else {
        (
            (j > 0).then(|| d[grid.index(i, j - 1)]),
            (j + 1 < n).then(|| d[grid.index(i, j + 1)]),
        )
    };
    lo.unwrap_or(f64::INFINITY).min(hi.unwrap_or(f64::INFINITY))
}

/// Solves `(I - alpha^2 d_ss) w = v` on a closed loop with arclength spacing
/// taken from the vertices.
pub(crate) fn sobolev_smooth(poly: &Polyline, v: &[f64], alpha: f64) -> Vec<f64> {
    let m = poly.len();
    if alpha <= 0.0 || m < 3 {
        return v.to_vec();
    }
    let seg: Vec<f64> = (0..m)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % m]);
            (b[0] - a[0]).hypot(b[1] - a[1]).max(1e-12)
        })
        .collect();
    // row i: -l_i w_{i-1} + d_i w_i - r_i w_{i+1} = v_i
    let a2 = alpha * alpha;
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    for i in 0..m {
        let (sm, sp) = (seg[(i + m - 1) % m], seg[i]);
        let avg = 0.5 * (sm + sp);
        lower[i] = a2 / (sm * avg);
        upper[i] = a2 / (sp * avg);
        diag[i] = 1.0 + lower[i] + upper[i];
    }
    cyclic_solve(&lower, &diag, &upper, v)
}

/// Cyclic tridiagonal solve by Sherman-Morrison on top of the Thomas algorithm.
fn cyclic_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let m = diag.len();
    // corner couplings: row 0 to m-1 and row m-1 to 0, both negative
    let alpha = -upper[m - 1];
    let beta = -lower[0];
    let gamma = -diag[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[m - 1] -= alpha * beta / gamma;
    let thomas = |r: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        c[0] = -upper[0] / b[0];
        d[0] = r[0] / b[0];
        for i in 1..m {
            let denom = b[i] + lower[i] * c[i - 1];
            c[i] = if i + 1 < m { -upper[i] / denom } else { 0.0 };
            d[i] = (r[i] + lower[i] * d[i - 1]) / denom;
        }
        let mut x = vec![0.0; m];
        x[m - 1] = d[m - 1];
        for i in (0..m - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    };
    let x = thomas(rhs);
    let mut u = vec![0.0; m];
    u[0] = gamma;
    u[m - 1] = alpha;
    let z = thomas(&u);
    let fact = (x[0] + beta * x[m - 1] / gamma) / (1.0 + z[0] + beta * z[m - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

/// Velocity at every node, copied from the nearest contour vertex. Nodes next
/// to the interface search all vertices; the rest inherit candidates from
/// their neighbours in alternating sweeps.
pub(crate) fn extend_velocity(grid: &Grid, phi: &[f64], loops: &[Polyline], v: &[Vec<f64>]) -> Vec<f64> {
    let pts: Vec<(Point, f64)> = loops
        .iter()
        .zip(v)
        .flat_map(|(l, vl)| l.iter().copied().zip(vl.iter().copied()))
        .collect();
    if pts.is_empty() {
        return vec![0.0; grid.len()];
    }
    let n = grid.n();
    let dist2 = |x: Point, k: usize| (pts[k].0[0] - x[0]).powi(2) + (pts[k].0[1] - x[1]).powi(2);
    let mut nearest: Vec<Option<usize>> = vec![None; grid.len()];
    for j in 0..n {
        for i in 0..n {
            let idx = grid.index(i, j);
            let s = phi[idx] < 0.0;
            let near = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)].iter().any(|&(di, dj)| {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                a >= 0 && b >= 0 && a < n as i64 && b < n as i64 && (phi[grid.index(a as usize, b as usize)] < 0.0) != s
            });
            if near {
                let x = grid.point(idx);
                nearest[idx] = (0..pts.len()).min_by(|&a, &b| dist2(x, a).total_cmp(&dist2(x, b)));
            }
        }
    }
    for _ in 0..2 {
        for (rev_i, rev_j) in [(false, false), (true, false), (false, true), (true, true)] {
            for jj in 0..n {
                let j = if rev_j { n - 1 - jj } else { jj };
                for ii in 0..n {
                    let i = if rev_i { n - 1 - ii } else { ii };
                    let idx = grid.index(i, j);
                    let x = grid.point(idx);
                    let mut best = nearest[idx];
                    for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                            continue;
                        }
                        if let Some(c) = nearest[grid.index(a as usize, b as usize)] {
                            if best.map_or(true, |k| dist2(x, c) < dist2(x, k)) {
                                best = Some(c);
                            }
                        }
                    }
                    nearest[idx] = best;
                }
            }
        }
    }
    nearest.iter().map(|k| k.map_or(0.0, |k| pts[k].1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reinitialization_keeps_the_interface() {
        let g = Grid::new(64, 2.0).unwrap();
        let phi: Vec<f64> = (0..g.len())
            .map(|k| {
                let p = g.point(k);
                p[0].hypot(p[1]) - 1.0 + 0.3 * (p[0] * p[0] - 0.5)
            })
            .collect();
        let before = crate::grid::marching_squares(&g, &phi);
        let after = crate::grid::marching_squares(&g, &reinitialize(&g, &phi));
        assert_eq!(before, after);
    }

    #[test]
    fn reinitialization_recovers_disk_distance() {
        let g = Grid::new(64, 2.0).unwrap();
        // a level set with the right zero level but the wrong slope
        let phi: Vec<f64> = (0..g.len())
            .map(|k| {
                let p = g.point(k);
                (p[0] * p[0] + p[1] * p[1]) - 1.0
            })
            .collect();
        let d = reinitialize(&g, &phi);
        let h = g.spacing();
        for k in 0..g.len() {
            let p = g.point(k);
            let exact = p[0].hypot(p[1]) - 1.0;
            assert!((d[k] - exact).abs() < 2.0 * h, "{} vs {exact}", d[k]);
        }
    }

    #[test]
    fn smoothing_keeps_constants_and_damps_oscillation() {
        let poly: Polyline = (0..100)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / 100.0;
                [t.cos(), t.sin()]
            })
            .collect();
        let c = sobolev_smooth(&poly, &vec![2.0; 100], 0.3);
        assert!(c.iter().all(|v| (v - 2.0).abs() < 1e-12));
        let osc: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = sobolev_smooth(&poly, &osc, 0.3);
        // the alternating mode has gain 1 / (1 + 4 alpha^2 / ds^2)
        let ds = 2.0 * (std::f64::consts::PI / 100.0).sin();
        let expected = 1.0 / (1.0 + 4.0 * 0.09 / (ds * ds));
        assert!(s.iter().zip(&osc).all(|(v, o)| (v / o - expected).abs() < 1e-9));
        // a single Fourier mode is scaled by 1 / (1 + alpha^2 k^2)
        let mode: Vec<f64> = (0..100).map(|i| (3.0 * i as f64 * std::f64::consts::TAU / 100.0).cos()).collect();
        let s = sobolev_smooth(&poly, &mode, 0.3);
        let gain = s[0] / mode[0];
        assert!((gain - 1.0 / (1.0 + 0.09 * 9.0)).abs() < 0.01, "{gain}");
    }

    #[test]
    fn cubic_interpolation_reproduces_quadratics() {
        let g = Grid::new(16, 2.0).unwrap();
        let f = |p: Point| 0.3 * p[0] * p[0] - p[0] * p[1] + 2.0 * p[1] - 0.5;
        let values: Vec<f64> = (0..g.len()).map(|k| f(g.point(k))).collect();
        for p in [[0.1, -0.37], [0.93, 0.41], [-1.2, 0.05]] {
            assert!((interpolate_cubic(&g, &values, p) - f(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn cyclic_solve_matches_dense_elimination() {
        let m = 9;
        let lower: Vec<f64> = (0..m).map(|i| 0.3 + 0.05 * i as f64).collect();
        let upper: Vec<f64> = (0..m).map(|i| 0.2 + 0.07 * i as f64).collect();
        let diag: Vec<f64> = (0..m).map(|i| 1.0 + lower[i] + upper[i]).collect();
        let rhs: Vec<f64> = (0..m).map(|i| (i as f64 * 1.3).sin()).collect();
        let x = cyclic_solve(&lower, &diag, &upper, &rhs);
        let mut a = nalgebra::DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            a[(i, i)] = diag[i];
            a[(i, (i + m - 1) % m)] = -lower[i];
            a[(i, (i + 1) % m)] = -upper[i];
        }
        let ax = &a * nalgebra::DVector::from_vec(x);
        for i in 0..m {
            assert!((ax[i] - rhs[i]).abs() < 1e-12, "row {i}: {} vs {}", ax[i], rhs[i]);
        }
    }
}
