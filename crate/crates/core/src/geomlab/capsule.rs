//! Convex hull of two balls `B(0, r1)` and `B((d, 0, 0), r2)` in three
//! dimensions. Its lateral surface is a cone (or cylinder) of revolution
//! about the first axis; all quantities are analytic.

use crate::error::{Error, Result};
use crate::report::Report;

use super::viscosity::LocalGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    r1: f64,
    r2: f64,
    d: f64,
    /// Outward unit normal of the lateral line in the meridian half-plane.
    n: [f64; 2],
    len: f64,
}

impl Capsule {
    pub fn new(r1: f64, r2: f64, d: f64) -> Result<Self> {
        if !(r1 > 0.0 && r2 > 0.0 && d.is_finite()) {
            return Err(Error::invalid("radius", "ball radii must be positive"));
        }
        if d <= (r1 - r2).abs() * (1.0 + 1e-12) {
            return Err(Error::precondition(format!(
                "one ball lies inside the other (d = {d}, |r1 - r2| = {})",
                (r1 - r2).abs()
            )));
        }
        let nx = (r1 - r2) / d;
        let n = [nx, (1.0 - nx * nx).sqrt()];
        let len = (d * d - (r1 - r2).powi(2)).sqrt();
        Ok(Capsule { r1, r2, d, n, len })
    }

    /// Length of a ruling segment between the two tangency circles.
    pub fn ruling_length(&self) -> f64 {
        self.len
    }

    fn tangent(&self) -> [f64; 2] {
        [self.n[1], -self.n[0]]
    }

    /// Meridian point `(x, rho)` at arclength `s` from the first tangency circle.
    pub fn ruling_point(&self, s: f64) -> [f64; 2] {
        let t = self.tangent();
        [self.r1 * self.n[0] + s * t[0], self.r1 * self.n[1] + s * t[1]]
    }

    /// Mean curvature of the lateral surface at arclength `s`; the ruling
    /// direction contributes zero.
    pub fn lateral_curvature(&self, s: f64) -> f64 {
        self.n[1] / self.ruling_point(s)[1]
    }

    pub fn contains(&self, q: [f64; 3]) -> bool {
        let (x, rho) = (q[0], q[1].hypot(q[2]));
        if x.hypot(rho) < self.r1 || (x - self.d).hypot(rho) < self.r2 {
            return true;
        }
        let p = self.ruling_point(0.0);
        let (dx, dr) = (x - p[0], rho - p[1]);
        let t = self.tangent();
        let s = dx * t[0] + dr * t[1];
        (0.0..=self.len).contains(&s) && dx * self.n[0] + dr * self.n[1] < 0.0
    }

    /// Boundary near the lateral point at arclength `s` (on the meridian
    /// `z = 0`), as a graph over the tangent plane: the first coordinate runs
    /// along the ruling, the second around the axis.
    pub fn local_graph(&self, s: f64, radius: f64, rings: usize, angles: usize) -> Result<LocalGraph> {
        let p = self.ruling_point(s);
        let t = self.tangent();
        let depth = self.r1.min(self.r2);
        LocalGraph::sample(2, radius, rings, angles, |x| {
            let at = |e: f64| {
                [
                    p[0] + x[0] * t[0] - e * self.n[0],
                    p[1] + x[0] * t[1] - e * self.n[1],
                    x[1],
                ]
            };
            let (mut lo, mut hi) = (0.0, depth);
            if self.contains(at(lo)) {
                return 0.0;
            }
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if self.contains(at(mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
    }
}

/// `(s, kappa)` at `samples` interior points of a ruling segment.
pub fn capsule_ruling_profile(r1: f64, r2: f64, d: f64, samples: usize) -> Result<Vec<(f64, f64)>> {
    let c = Capsule::new(r1, r2, d)?;
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least two samples"));
    }
    Ok((0..samples)
        .map(|k| {
            let s = c.ruling_length() * (k + 1) as f64 / (samples + 1) as f64;
            (s, c.lateral_curvature(s))
        })
        .collect())
}

/// Midpoint concavity of `1 / kappa` along a sampled segment, with the
/// all-or-nothing rule for vanishing curvature.
pub fn hull_inverse_curvature_concavity_check(profile: &[(f64, f64)], tol: f64) -> Result<Report> {
    if profile.len() < 2 {
        return Err(Error::invalid("profile", "need at least two samples"));
    }
    if profile.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::precondition("profile is not sorted by arclength"));
    }
    if let Some(&(s, k)) = profile.iter().find(|&&(_, k)| !(k >= 0.0)) {
        return Err(Error::precondition(format!("negative curvature {k} at s = {s}")));
    }
    let report = Report::new("hull_inverse_curvature_concavity", "inverse-curvature-concave-on-hull-segments", tol)
        .config("samples", profile.len());
    let flat = profile.iter().filter(|&&(_, k)| k <= tol).count();
    if flat > 0 {
        let pass = flat == profile.len();
        return Ok(report
            .value("flat_samples", flat as f64, "1")
            .note("degenerate branch: zero curvature must hold along the whole segment")
            .finish(pass));
    }
    let s: Vec<f64> = profile.iter().map(|p| p.0).collect();
    let f: Vec<f64> = profile.iter().map(|p| 1.0 / p.1).collect();
    let interp = |x: f64| {
        let i = s.partition_point(|&v| v <= x).clamp(1, s.len() - 1);
        let w = (x - s[i - 1]) / (s[i] - s[i - 1]);
        (1.0 - w) * f[i - 1] + w * f[i]
    };
    let mut margin = f64::INFINITY;
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let m = interp(0.5 * (s[i] + s[j])) - 0.5 * (f[i] + f[j]);
            margin = margin.min(m);
        }
    }
    Ok(report
        .value("margin", margin, "length")
        .value("affine_deviation", affine_deviation(&s, &f), "length")
        .finish(margin >= -tol))
}

/// Largest distance of the samples from their least-squares line.
fn affine_deviation(s: &[f64], f: &[f64]) -> f64 {
    let n = s.len() as f64;
    let (ms, mf) = (s.iter().sum::<f64>() / n, f.iter().sum::<f64>() / n);
    let sxx: f64 = s.iter().map(|v| (v - ms).powi(2)).sum();
    let sxy: f64 = s.iter().zip(f).map(|(a, b)| (a - ms) * (b - mf)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    s.iter()
        .zip(f)
        .map(|(a, b)| (b - mf - slope * (a - ms)).abs())
        .fold(0.0, f64::max)
}
