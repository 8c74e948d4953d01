use crate::error::{Error, Result};
use crate::geomlab::polygon_convexity_deficit;
use crate::grid::{Region, ScalarField};
use crate::report::Report;

use super::stencil::{interior_nodes, jet};

/// Nodes closer than this many cells to a Dirichlet node are not evaluated.
pub(crate) const STENCIL_MARGIN: usize = 3;

/// Largest polygon convexity deficit accepted for a ring boundary loop.
pub(crate) const RING_CONVEXITY_TOL: f64 = 1e-2;

pub(crate) fn require_convex_ring(ring: &Region) -> Result<()> {
    if ring.contour().len() < 2 {
        return Err(Error::precondition("ring needs an outer boundary and a hole"));
    }
    for l in ring.contour() {
        let d = polygon_convexity_deficit(l);
        if d > RING_CONVEXITY_TOL {
            return Err(Error::precondition(format!("ring boundary is not convex (deficit {d:.3e})")));
        }
    }
    Ok(())
}

/// Sign of `q |grad u|^(q-2) Delta u + q (q-2) |grad u|^(q-4) Delta_inf u` for
/// the p-capacitary potential `u` of a convex ring: non-positive for
/// `q <= p`, non-negative for `q >= p`. Values are compared after division by
/// `q |grad u|^(q-2) |D^2 u|`.
pub fn q_laplacian_sign_check(u: &ScalarField, p: f64, q: f64, ring: &Region, tol: f64) -> Result<Report> {
    if !(q > 1.0 && p > 1.0) {
        return Err(Error::invalid("q", "exponents must exceed 1"));
    }
    if !u.grid().same_as(ring.grid()) {
        return Err(Error::GridMismatch);
    }
    require_convex_ring(ring)?;
    let h = u.grid().spacing();
    let min_grad = 1e-6 / h;
    let (mut max_pos, mut min_neg) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut raw_max, mut count) = (0.0f64, 0usize);
    for idx in interior_nodes(u, ring, STENCIL_MARGIN) {
        let (i, j) = u.grid().ij(idx);
        let d = jet(u, i, j);
        if d.grad_norm() <= min_grad {
            continue;
        }
        let v = d.normalized_q_laplacian(q);
        max_pos = max_pos.max(v);
        min_neg = min_neg.min(v);
        raw_max = raw_max.max(d.q_laplacian(q).abs());
        count += 1;
    }
    let report = Report::new("q_laplacian_sign", "q-laplacian-sign-on-convex-rings", tol)
        .config("p", p)
        .config("q", q)
        .config("case", format!("q={q}"))
        .config("n", u.grid().n())
        .config("normalization", "q-Laplacian carries the factor q")
        .value("nodes", count as f64, "1");
    if count == 0 {
        return Ok(report.skipped("no interior nodes with nonvanishing gradient"));
    }
    let violation = if (q - p).abs() < 1e-12 {
        max_pos.max(-min_neg)
    } else if q < p {
        max_pos
    } else {
        -min_neg
    };
    let expected = if (q - p).abs() < 1e-12 {
        0.0
    } else if q < p {
        -1.0
    } else {
        1.0
    };
    Ok(report
        .value("expected_sign", expected, "1")
        .value("max_violation", violation, "1")
        .value("max_normalized", max_pos, "1")
        .value("min_normalized", min_neg, "1")
        .value("max_abs_q_laplacian", raw_max, "length^-q")
        .finish(violation <= tol))
}
