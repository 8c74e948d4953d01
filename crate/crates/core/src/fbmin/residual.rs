use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geomlab::contour_curvature_with_spacing;
use crate::grid::{point_polyline_distance, Point, Region, ScalarField};
use crate::plap::{solve_p_capacitary, PLapConfig};

/// Free boundary residual `(p - 1) |grad u|^p - kappa` at one contour vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub point: Point,
    pub loop_index: usize,
    pub grad: f64,
    pub kappa: f64,
    pub residual: f64,
    /// The vertex lies on the box boundary, where only
    /// `(p - 1) |grad u|^p >= kappa` is expected.
    pub on_box: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbResidual {
    pub samples: Vec<ResidualSample>,
}

impl FbResidual {
    fn interior(&self) -> impl Iterator<Item = &ResidualSample> {
        self.samples.iter().filter(|s| !s.on_box)
    }

    /// `max |residual| / kappa` over vertices off the box boundary.
    pub fn max_relative(&self) -> f64 {
        self.interior()
            .map(|s| s.residual.abs() / s.kappa.abs().max(1e-12))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.interior().map(|s| s.residual.abs()).fold(0.0, f64::max)
    }

    /// Mean residual over vertices off the box boundary.
    pub fn mean(&self) -> f64 {
        let (s, n) = self.interior().fold((0.0, 0usize), |(s, n), v| (s + v.residual, n + 1));
        if n == 0 {
            0.0
        } else {
            s / n as f64
        }
    }

    /// Smallest `(p - 1) |grad u|^p - kappa` on the box boundary, if touched.
    pub fn box_margin(&self) -> Option<f64> {
        self.samples
            .iter()
            .filter(|s| s.on_box)
            .map(|s| s.residual)
            .reduce(f64::min)
    }
}

/// Residual settings. Curvature is fitted on a resampling of spacing
/// `sqrt(h * R / curvature_scale_divisor)` (at least `2h`), which shrinks
/// more slowly than `h` so that `O(h^2)` shape noise enters as `O(h)`; the
/// gradient uses samples `normal_cells` and twice that many cells inward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ResidualStencil {
    pub curvature_scale_divisor: f64,
    pub normal_cells: f64,
}

impl Default for ResidualStencil {
    fn default() -> Self {
        ResidualStencil {
            curvature_scale_divisor: 8.0,
            normal_cells: 3.0,
        }
    }
}

impl ResidualStencil {
    pub fn curvature_spacing(&self, h: f64, half_width: f64) -> f64 {
        (h * half_width / self.curvature_scale_divisor).sqrt().max(2.0 * h)
    }
}

/// Solves the capacitary problem of `(k, omega)` and evaluates the free
/// boundary residual along the boundary of `omega`.
pub fn fb_residual(k: &Region, omega: &Region, p: f64) -> Result<FbResidual> {
    let u = solve_p_capacitary(k, omega, &PLapConfig::with_p(p))?.field;
    fb_residual_of(&u, k, omega, p)
}

/// Residual of the solved potential `u` along the boundary of `omega`.
pub fn fb_residual_of(u: &ScalarField, k: &Region, omega: &Region, p: f64) -> Result<FbResidual> {
    residual_with(u, k, omega, p, ResidualStencil::default())
}

pub(crate) fn residual_with(
    u: &ScalarField,
    k: &Region,
    omega: &Region,
    p: f64,
    stencil: ResidualStencil,
) -> Result<FbResidual> {
    let g = u.grid();
    let h = g.spacing();
    let r = g.half_width();
    for x in omega.contour_points() {
        if k.contour().iter().any(|l| point_polyline_distance(*x, l) < h) {
            return Err(Error::precondition(format!(
                "free boundary touches K near ({:.3}, {:.3})",
                x[0], x[1]
            )));
        }
    }
    let curvature = contour_curvature_with_spacing(omega, stencil.curvature_spacing(h, r))?;
    let d = stencil.normal_cells * h;
    let mut samples = Vec::new();
    for (li, (poly, kappa)) in omega.contour().iter().zip(&curvature).enumerate() {
        let n = poly.len();
        for i in 0..n {
            let (prev, x, next) = (poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]);
            let (tx, ty) = (next[0] - prev[0], next[1] - prev[1]);
            let len = tx.hypot(ty).max(f64::MIN_POSITIVE);
            let nu = [ty / len, -tx / len];
            let back = |s: f64| [x[0] - s * nu[0], x[1] - s * nu[1]];
            let on_box = x[0].abs().max(x[1].abs()) > r - 2.0 * h;
            // quadratic through u = 0 on the boundary and two interior samples
            let (ua, ub) = (u.sample(back(d)), u.sample(back(2.0 * d)));
            let grad = ((4.0 * ua - ub) / (2.0 * d)).abs();
            samples.push(ResidualSample {
                point: x,
                loop_index: li,
                grad,
                kappa: kappa[i],
                residual: (p - 1.0) * grad.powf(p) - kappa[i],
                on_box,
            });
        }
    }
    Ok(FbResidual { samples })
}

