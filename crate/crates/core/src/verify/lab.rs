//! Matrix and hull-curvature machinery: the trace inequality for the harmonic
//! mean, inf-convolution of quadratics, capsule profiles and block reduction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LabSpec, Tolerances};
use crate::error::Result;
use crate::geomlab::{
    block_reduction_check, capsule_ruling_profile, contour_curvature, convex_hull, hull_inverse_curvature_concavity_check,
    inf_convolution_matrix, inf_convolution_value_numeric, random_spd, trace_inequality_check, Capsule,
};
use crate::grid::{rasterize, Grid, Shape};
use crate::report::Report;

const CAPSULES: [(f64, f64, f64); 4] = [(1.0, 1.0, 2.0), (1.0, 2.0, 4.0), (0.5, 1.5, 1.2), (2.0, 0.3, 5.0)];

fn errored(check: &str, anchor: &str, tol: f64, e: impl std::fmt::Display) -> Report {
    Report::new(check, anchor, tol).note(format!("error: {e}")).finish(false)
}

pub fn verify_lab(spec: &LabSpec, tol: &Tolerances, seed: u64) -> Report {
    let children = vec![
        trace_inequality(spec, tol, seed),
        inf_convolution(spec, tol, seed),
        capsule_profiles(spec, tol),
        two_disk_hull(tol),
        block_reduction(tol),
    ];
    children
        .into_iter()
        .fold(Report::new("lab", "hull-curvature-machinery", 0.0).config("seed", seed), Report::child)
        .from_children()
}

/// Summary over random pairs: the inequality itself, the harmonic mean
/// identity and equality in one dimension.
fn trace_inequality(spec: &LabSpec, tol: &Tolerances, seed: u64) -> Report {
    let anchor = "trace-of-harmonic-mean";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_margin, mut worst_identity, mut worst_equality) = (f64::INFINITY, 0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for trial in 0..spec.matrix_trials {
        let d = 1 + trial % spec.max_dim;
        let (b1, b2) = (random_spd(&mut rng, d), random_spd(&mut rng, d));
        match trace_inequality_check(&b1, &b2) {
            Ok(r) => {
                let margin = r.get("margin").unwrap_or(f64::NAN);
                worst_margin = worst_margin.min(margin / r.get("lhs").unwrap_or(1.0));
                worst_identity = worst_identity.max(r.get("identity_residual").unwrap_or(f64::INFINITY));
                if d == 1 {
                    worst_equality = worst_equality.max(margin.abs());
                }
                if !r.pass && failures.len() < 5 {
                    failures.push(format!("trial {trial} (dim {d}): margin {margin:e}"));
                }
            }
            Err(e) => failures.push(format!("trial {trial}: {e}")),
        }
    }
    let inequality = Report::new("inequality", anchor, 1e-12)
        .value("min_relative_margin", worst_margin, "1")
        .value("margin", worst_margin + 1e-12, "1")
        .config("trials", spec.matrix_trials)
        .config("max_dim", spec.max_dim);
    let inequality = failures.iter().fold(inequality, |r, f| r.note(f.clone())).finish(failures.is_empty());
    let identity = Report::new("harmonic_mean_identity", "harmonic-mean-two-forms", tol.harmonic_identity)
        .value("max_residual", worst_identity, "1")
        .value("margin", tol.harmonic_identity - worst_identity, "1")
        .config("trials", spec.matrix_trials)
        .finish(worst_identity <= tol.harmonic_identity);
    let equality = Report::new("one_dimensional_equality", anchor, tol.trace_equality)
        .value("max_gap", worst_equality, "1/length")
        .value("margin", tol.trace_equality - worst_equality, "1/length")
        .finish(worst_equality <= tol.trace_equality);
    Report::new("trace_inequality", anchor, 0.0)
        .child(inequality)
        .child(identity)
        .child(equality)
        .from_children()
}

/// Closed-form inf-convolution against direct minimization, `d <= 4`.
fn inf_convolution(spec: &LabSpec, tol: &Tolerances, seed: u64) -> Report {
    let anchor = "inf-convolution-harmonic-mean";
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let (mut worst, mut worst_identity) = (0.0f64, 0.0f64);
    let mut errors = Vec::new();
    for trial in 0..spec.inf_convolution_trials {
        let d = 1 + trial % spec.max_dim.min(4);
        let (b1, b2) = (random_spd(&mut rng, d), random_spd(&mut rng, d));
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        match inf_convolution_matrix(&b1, &b2) {
            Ok(conv) => {
                let exact = conv.matrix.quadratic_form(&x);
                let numeric = inf_convolution_value_numeric(&b1, &b2, &x);
                worst = worst.max((exact - numeric).abs() / exact.abs().max(1.0));
                worst_identity = worst_identity.max(conv.identity_residual);
            }
            Err(e) => errors.push(format!("trial {trial}: {e}")),
        }
    }
    let report = Report::new("inf_convolution", anchor, tol.inf_convolution)
        .value("max_relative_gap", worst, "1")
        .value("max_identity_residual", worst_identity, "1")
        .value("margin", tol.inf_convolution - worst, "1")
        .config("trials", spec.inf_convolution_trials);
    let ok = errors.is_empty() && worst <= tol.inf_convolution && worst_identity <= tol.harmonic_identity;
    errors.into_iter().fold(report, Report::note).finish(ok)
}

fn capsule_profiles(spec: &LabSpec, tol: &Tolerances) -> Report {
    let anchor = "inverse-curvature-concave-on-hull-segments";
    let children = CAPSULES.iter().map(|&(r1, r2, d)| {
        let name = format!("capsule r1={r1} r2={r2} d={d}");
        let run = || -> Result<Report> {
            let profile = capsule_ruling_profile(r1, r2, d, spec.profile_samples)?;
            let r = hull_inverse_curvature_concavity_check(&profile, tol.concavity)?;
            let dev = r.get("affine_deviation").unwrap_or(f64::INFINITY);
            // the lateral surface is a cone or a cylinder, on which 1/kappa is affine
            let affine = Report::new("cone_affine", "inverse-curvature-affine-on-cones", tol.affine)
                .value("deviation", dev, "length")
                .value("margin", tol.affine - dev, "length")
                .finish(dev <= tol.affine);
            Ok(Report::new(name.clone(), anchor, 0.0).child(r).child(affine).from_children())
        };
        run().unwrap_or_else(|e| errored(&name, anchor, 0.0, e))
    });
    children.fold(Report::new("capsule_profiles", anchor, 0.0), Report::child).from_children()
}

/// The flat sides of the hull of two disjoint disks take the zero-curvature
/// branch of the concavity check.
fn two_disk_hull(tol: &Tolerances) -> Report {
    let anchor = "inverse-curvature-concave-on-hull-segments";
    let run = || -> Result<Report> {
        let g = Grid::new(256, 4.0)?;
        let disks = Shape::Union(vec![Shape::disk_at([-1.5, 0.0], 1.0), Shape::disk_at([1.5, 0.0], 1.0)]);
        let hull = convex_hull(&rasterize(&disks, &g)?)?;
        let kappa = contour_curvature(&hull)?;
        let mut profile: Vec<(f64, f64)> = hull.contour()[0]
            .iter()
            .zip(&kappa[0])
            .filter(|(p, _)| p[1] > 0.0 && p[0].abs() < 1.0)
            .map(|(p, &k)| (p[0], k.max(0.0)))
            .collect();
        profile.sort_by(|a, b| a.0.total_cmp(&b.0));
        profile.dedup_by(|a, b| a.0 == b.0);
        let r = hull_inverse_curvature_concavity_check(&profile, tol.concavity)?;
        let flat = r.get("flat_samples").unwrap_or(0.0) as usize;
        let all_flat = flat == profile.len();
        Ok(Report::new("two_disk_hull", anchor, tol.concavity)
            .value("flat_samples", flat as f64, "1")
            .value("samples", profile.len() as f64, "1")
            .config("n", g.n())
            .child(r.clone())
            .finish(r.pass && all_flat && !profile.is_empty()))
    };
    run().unwrap_or_else(|e| errored("two_disk_hull", anchor, tol.concavity, e))
}

/// Touching quadratics restricted to block-diagonal form on capsule and
/// cylinder points.
fn block_reduction(tol: &Tolerances) -> Report {
    let anchor = "block-diagonal-touching-quadratics";
    let cases = [((1.0, 2.0, 4.0), 0.3), ((1.0, 2.0, 4.0), 0.5), ((1.0, 2.0, 4.0), 0.7), ((1.5, 1.5, 3.0), 0.4)];
    let children = cases.iter().map(|&((r1, r2, d), frac)| {
        let name = format!("capsule r1={r1} r2={r2} d={d} s={frac}");
        let run = || -> Result<Report> {
            let c = Capsule::new(r1, r2, d)?;
            let s = frac * c.ruling_length();
            let g = c.local_graph(s, 0.05, 10, 32)?;
            let r = block_reduction_check(&g, 1e-3, tol.block_reduction)?;
            let gap = r.get("relative_gap").unwrap_or(f64::INFINITY);
            Ok(r.value("margin", tol.block_reduction - gap, "1").config("case", name.clone()))
        };
        run().unwrap_or_else(|e| errored(&name, anchor, tol.block_reduction, e))
    });
    children.fold(Report::new("block_reduction", anchor, 0.0), Report::child).from_children()
}
