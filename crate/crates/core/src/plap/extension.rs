use crate::error::{Error, Result};
use crate::grid::{point_polyline_distance, Region, ScalarField};
use crate::report::Report;

use super::discrete::RingProblem;
use super::solver::solve_p_capacitary;
use super::PLapConfig;

/// Subsamples per axis used to split a node's cell between the two domains.
const SUBSAMPLES: usize = 4;

/// The terms `A`, `B`, `C` of the extension inequality `0 <= A - B <= C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionTerms {
    /// Energy gap of the two potentials.
    pub energy_gap: f64,
    /// `(p - 1)` times the energy of the larger potential outside the smaller domain.
    pub extension_energy: f64,
    /// Flux term on the part of the smaller boundary inside the larger domain.
    pub flux: f64,
}

/// Solves both potentials and evaluates the three terms.
pub fn extension_terms(k: &Region, omega1: &Region, omega2: &Region, cfg: &PLapConfig) -> Result<ExtensionTerms> {
    check_nested(k, omega1)?;
    check_nested(omega1, omega2)?;
    let p = cfg.p;
    let u1 = solve_p_capacitary(k, omega1, cfg)?;
    let u2 = solve_p_capacitary(k, omega2, cfg)?;
    let energy_gap = u1.energy - u2.energy;
    let problem = RingProblem::new(k, omega2)?;
    let node_energy = problem.node_p_energy(&problem.restrict(&u2.field), p);
    let g = *k.grid();
    let mut outside = 0.0;
    for (idx, e) in node_energy.iter().enumerate() {
        if *e == 0.0 {
            continue;
        }
        outside += e * fraction_outside(g, omega1, omega2, idx);
    }
    let extension_energy = (p - 1.0) * outside;
    let flux = flux_term(&u1.field, &u2.field, omega1, omega2, p);
    Ok(ExtensionTerms {
        energy_gap,
        extension_energy,
        flux,
    })
}

fn check_nested(inner: &Region, outer: &Region) -> Result<()> {
    if !inner.grid().same_as(outer.grid()) {
        return Err(Error::GridMismatch);
    }
    if inner.mask().iter().zip(outer.mask()).any(|(&a, &b)| a && !b) {
        return Err(Error::precondition("domains are not nested"));
    }
    Ok(())
}

/// Share of the part of the node's cell inside `omega2` that lies outside `omega1`.
fn fraction_outside(g: crate::grid::Grid, omega1: &Region, omega2: &Region, idx: usize) -> f64 {
    let h = g.spacing();
    let c = g.point(idx);
    let (mut in2, mut between) = (0usize, 0usize);
    for a in 0..SUBSAMPLES {
        for b in 0..SUBSAMPLES {
            let q = [
                c[0] + h * ((a as f64 + 0.5) / SUBSAMPLES as f64 - 0.5),
                c[1] + h * ((b as f64 + 0.5) / SUBSAMPLES as f64 - 0.5),
            ];
            if g.interpolate(omega2.phi(), q) < 0.0 {
                in2 += 1;
                if g.interpolate(omega1.phi(), q) >= 0.0 {
                    between += 1;
                }
            }
        }
    }
    if in2 == 0 {
        0.0
    } else {
        between as f64 / in2 as f64
    }
}

/// `-p int u2 (|d u1|^(p-2) d_nu u1 - |grad u2|^(p-2) d_nu u2)` over the part
/// of the boundary of `omega1` farther than one cell from that of `omega2`.
fn flux_term(u1: &ScalarField, u2: &ScalarField, omega1: &Region, omega2: &Region, p: f64) -> f64 {
    let g = u1.grid();
    let h = g.spacing();
    let d = 2.0 * h;
    let mut total = 0.0;
    for poly in omega1.contour() {
        let n = poly.len();
        for i in 0..n {
            let (prev, x, next) = (poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]);
            if omega2.contour().iter().any(|l| point_polyline_distance(x, l) < h) {
                continue;
            }
            let (tx, ty) = (next[0] - prev[0], next[1] - prev[1]);
            let len = tx.hypot(ty);
            if len == 0.0 {
                continue;
            }
            // region on the left, so the outward normal is on the right
            let nu = [ty / len, -tx / len];
            let ds = 0.5 * len;
            let back = |s: f64| [x[0] - s * nu[0], x[1] - s * nu[1]];
            let dn1 = -(4.0 * u1.sample(back(d)) - u1.sample(back(2.0 * d))) / (2.0 * d);
            let grad2 = g.interpolate_gradient(u2.values(), x);
            let dn2 = grad2[0] * nu[0] + grad2[1] * nu[1];
            let g2 = grad2[0].hypot(grad2[1]);
            let flux1 = dn1.abs().powf(p - 2.0) * dn1;
            let flux2 = if g2 > 0.0 { g2.powf(p - 2.0) * dn2 } else { 0.0 };
            total += u2.sample(x) * (flux1 - flux2) * ds;
        }
    }
    -p * total
}

/// Checks `0 <= A - B` and `A - B <= C + tol`, with `tol = rel_tol (|A| + |B| + |C|)`.
pub fn extension_inequality_report(
    k: &Region,
    omega1: &Region,
    omega2: &Region,
    cfg: &PLapConfig,
    rel_tol: f64,
) -> Result<Report> {
    let t = extension_terms(k, omega1, omega2, cfg)?;
    let gap = t.energy_gap - t.extension_energy;
    let tol = rel_tol * (t.energy_gap.abs() + t.extension_energy.abs() + t.flux.abs());
    let lower = gap >= -tol;
    let upper = gap <= t.flux + tol;
    Ok(Report::new("extension_inequality", "p-harmonic-extension-energy-bound", tol)
        .value("A", t.energy_gap, "energy")
        .value("B", t.extension_energy, "energy")
        .value("C", t.flux, "energy")
        .value("lower_margin", gap, "energy")
        .value("upper_margin", t.flux - gap, "energy")
        .config("p", cfg.p)
        .config("n", k.grid().n())
        .config("lower_holds", lower)
        .config("upper_holds", upper)
        .finish(lower && upper))
}
