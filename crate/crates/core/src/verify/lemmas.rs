//! The analytic estimates behind the convexity argument, checked on
//! computed potentials.

use std::f64::consts::{E, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::graph::graph_curvature_check;
use super::{Artifacts, LemmasSpec, Tolerances};
use crate::error::Result;
use crate::fbmin::{minimize, MinimizeConfig};
use crate::geomlab::convex_hull_points;
use crate::grid::{rasterize, Grid, Point, Region, Shape};
use crate::plap::{
    barrier_subsolution_check, construct_barrier, extension_inequality_report, hopf_growth_fit,
    q_laplacian_sign_check, radial_extension_terms, radial_gradient, solve_p_capacitary, PLapConfig,
};
use crate::report::Report;

const RADIAL_TRIPLES: [(f64, f64, f64); 5] = [(2.0, 3.0, 2.0), (1.5, 2.5, 3.0), (2.0, 2.2, 1.5), (1.8, 2.6, 2.0), (2.2, 3.0, 2.5)];
const HOPF_ANGLES: [f64; 4] = [0.0, 0.7, 2.0, 4.4];
const HOPF_RADII: [f64; 5] = [0.05, 0.1, 0.15, 0.2, 0.25];
/// Inner and outer radius of the annulus used for the ring checks.
const RING: (f64, f64) = (1.0, 2.0);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn errored(check: &str, anchor: &str, tol: f64, e: impl std::fmt::Display) -> Report {
    Report::new(check, anchor, tol).note(format!("error: {e}")).finish(false)
}

fn group(check: &str, anchor: &str, children: Vec<Report>) -> Report {
    children.into_iter().fold(Report::new(check, anchor, 0.0), Report::child).from_children()
}

/// Extension bound, q-Laplacian signs, boundary growth, the barrier and the
/// free boundary condition as a graph curvature identity. Every check runs
/// on its own; a failure in one does not stop the others.
pub fn verify_analysis_lemmas(spec: &LemmasSpec, tol: &Tolerances, seed: u64, out: &Artifacts) -> Report {
    let grid = match Grid::new(spec.n, spec.half_width) {
        Ok(g) => g,
        Err(e) => return group("analysis_lemmas", "analysis-lemmas", vec![errored("setup", "analysis-lemmas", 0.0, e)]),
    };
    let tasks: Vec<Box<dyn Fn() -> Report + Sync + Send + '_>> = vec![
        Box::new(|| extension_radial(grid, tol)),
        Box::new(|| extension_random(grid, spec.random_triples, seed, tol)),
        Box::new(|| q_laplacian(grid, &spec.p, tol)),
        Box::new(|| hopf(grid, &spec.p, tol)),
        Box::new(|| barrier(grid, tol)),
        Box::new(|| graph_curvature(spec, tol, out)),
    ];
    let children: Vec<Report> = tasks.par_iter().map(|t| t()).collect();
    group("analysis_lemmas", "analysis-lemmas", children)
        .config("n", spec.n)
        .config("p", spec.p.clone())
}

fn disk(g: &Grid, r: f64) -> Result<Region> {
    rasterize(&Shape::disk(r), g)
}

fn extension_radial(g: Grid, tol: &Tolerances) -> Report {
    let children = RADIAL_TRIPLES
        .par_iter()
        .enumerate()
        .map(|(i, &(r1, r2, p))| {
            let name = format!("radial_triple[{i}]");
            let anchor = "p-harmonic-extension-energy-bound";
            let run = || -> Result<Report> {
                let cfg = PLapConfig::with_p(p);
                let r = extension_inequality_report(&disk(&g, 1.0)?, &disk(&g, r1)?, &disk(&g, r2)?, &cfg, tol.extension_relative)?;
                let (a, b, c) = radial_extension_terms(1.0, r1, r2, p, 2)?;
                let errs = [
                    rel(r.get("A").unwrap_or(f64::NAN), a),
                    rel(r.get("B").unwrap_or(f64::NAN), b),
                    rel(r.get("C").unwrap_or(f64::NAN), c),
                ];
                let worst = errs.iter().copied().fold(0.0, f64::max);
                let closed = Report::new("closed_form", "extension-terms-of-annuli", tol.extension_relative)
                    .value("A_exact", a, "energy")
                    .value("B_exact", b, "energy")
                    .value("C_exact", c, "energy")
                    .value("max_relative_error", worst, "1")
                    .value("margin", tol.extension_relative - worst, "1")
                    .config("n", g.n())
                    .finish(worst <= tol.extension_relative);
                Ok(Report::new(name.clone(), anchor, 0.0)
                    .config("radii", vec![1.0, r1, r2])
                    .config("p", p)
                    .child(r)
                    .child(closed)
                    .from_children())
            };
            run().unwrap_or_else(|e| errored(&name, anchor, 0.0, e))
        })
        .collect();
    group("extension_radial", "p-harmonic-extension-energy-bound", children)
}

/// Convex polygon through jittered points at radii in `[lo, hi]` about `c`.
fn random_convex(rng: &mut ChaCha8Rng, c: Point, lo: f64, hi: f64) -> Shape {
    let m = 7;
    let pts: Vec<Point> = (0..m)
        .map(|i| {
            let t = (i as f64 + rng.random_range(-0.3..0.3)) * TAU / m as f64;
            let r = rng.random_range(lo..hi);
            [c[0] + r * t.cos(), c[1] + r * t.sin()]
        })
        .collect();
    Shape::Polygon(convex_hull_points(&pts))
}

fn extension_random(g: Grid, count: usize, seed: u64, tol: &Tolerances) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0e47);
    let triples: Vec<(Shape, Shape, Shape, f64)> = (0..count)
        .map(|_| {
            let c = [rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)];
            let k = random_convex(&mut rng, c, 0.6, 0.9);
            let o1 = random_convex(&mut rng, c, 1.6, 1.9);
            let o2 = random_convex(&mut rng, c, 2.7, 3.0);
            let p = [1.5, 2.0, 3.0][rng.random_range(0..3)];
            (k, o1, o2, p)
        })
        .collect();
    let children = triples
        .par_iter()
        .enumerate()
        .map(|(i, (k, o1, o2, p))| {
            let name = format!("random_triple[{i}]");
            let anchor = "p-harmonic-extension-energy-bound";
            let run = || -> Result<Report> {
                let r = extension_inequality_report(
                    &rasterize(k, &g)?,
                    &rasterize(o1, &g)?,
                    &rasterize(o2, &g)?,
                    &PLapConfig::with_p(*p),
                    tol.extension_relative,
                )?;
                let lower = r.config.get("lower_holds").and_then(|v| v.as_bool()).unwrap_or(false);
                Ok(Report::new(name.clone(), anchor, r.tol)
                    .value("margin", r.get("lower_margin").unwrap_or(f64::NAN) + r.tol, "energy")
                    .config("k", k.to_string())
                    .config("omega1", o1.to_string())
                    .config("omega2", o2.to_string())
                    .config("p", *p)
                    .config("n", g.n())
                    .note("nonsmooth domains: only the lower bound is claimed")
                    .child(r)
                    .finish(lower))
            };
            run().unwrap_or_else(|e| errored(&name, anchor, 0.0, e))
        })
        .collect();
    group("extension_random", "p-harmonic-extension-energy-bound", children)
}

fn exponents(p: f64) -> [f64; 3] {
    [(0.5 * p + 0.5).max(1.0 + 1e-9), p, 2.0 * p]
}

fn q_laplacian(g: Grid, ps: &[f64], tol: &Tolerances) -> Report {
    let rings = [("radial", Shape::disk(RING.0), Shape::disk(RING.1)), ("square", Shape::square(2.0), Shape::disk(3.0))];
    let cases: Vec<(&str, &Shape, &Shape, f64)> =
        rings.iter().flat_map(|(l, k, o)| ps.iter().map(move |&p| (*l, k, o, p))).collect();
    let children = cases
        .par_iter()
        .map(|&(label, k, o, p)| {
            let name = format!("{label}_ring p={p}");
            let anchor = "q-laplacian-sign-on-convex-rings";
            let run = || -> Result<Report> {
                let (k, o) = (rasterize(k, &g)?, rasterize(o, &g)?);
                let ring = o.subtract(&k)?;
                let u = solve_p_capacitary(&k, &o, &PLapConfig::with_p(p))?.field;
                let checks = exponents(p)
                    .into_iter()
                    .map(|q| q_laplacian_sign_check(&u, p, q, &ring, tol.q_laplacian))
                    .collect::<Result<Vec<_>>>()?;
                Ok(group(&name, anchor, checks))
            };
            run().unwrap_or_else(|e| errored(&name, anchor, 0.0, e))
        })
        .collect();
    group("q_laplacian", "q-laplacian-sign-on-convex-rings", children)
}

fn hopf(g: Grid, ps: &[f64], tol: &Tolerances) -> Report {
    let (a, rho) = RING;
    let children = ps
        .par_iter()
        .map(|&p| {
            let name = format!("ring p={p}");
            let anchor = "linear-growth-from-the-boundary";
            let run = || -> Result<Report> {
                let u = solve_p_capacitary(&disk(&g, a)?, &disk(&g, rho)?, &PLapConfig::with_p(p))?.field;
                let mut fits = Vec::new();
                for angle in HOPF_ANGLES {
                    let (c, s) = (angle.cos(), angle.sin());
                    for (side, r) in [("inner", a), ("outer", rho)] {
                        let exact = radial_gradient(a, rho, p, 2, r)?;
                        let fit = hopf_growth_fit(&u, [r * c, r * s], &HOPF_RADII)?;
                        let slope = fit.get("slope").unwrap_or(f64::NAN);
                        let err = rel(slope, exact);
                        fits.push(
                            Report::new(format!("{side} angle={angle}"), anchor, tol.hopf_relative)
                                .value("slope", slope, "1/length")
                                .value("exact_slope", exact, "1/length")
                                .value("relative_error", err, "1")
                                .value("margin", tol.hopf_relative - err, "1")
                                .config("n", g.n())
                                .child(fit.clone())
                                .finish(fit.pass && err <= tol.hopf_relative),
                        );
                    }
                }
                Ok(group(&name, anchor, fits))
            };
            run().unwrap_or_else(|e| errored(&name, anchor, 0.0, e))
        })
        .collect();
    group("hopf", "linear-growth-from-the-boundary", children)
}

fn barrier(g: Grid, tol: &Tolerances) -> Report {
    let anchor = "barrier-is-p-subharmonic";
    let mut children: Vec<Report> = match disk(&g, RING.0).and_then(|k| {
        let o = disk(&g, RING.1)?;
        let w = solve_p_capacitary(&k, &o, &PLapConfig::default())?.field;
        Ok((o.subtract(&k)?, w))
    }) {
        Ok((ring, w)) => [1.5, 2.0, 3.0]
            .into_iter()
            .map(|p| match barrier_subsolution_check(&w, p, &ring, tol.barrier) {
                Ok((profile, r)) => {
                    let m = r.get("min_normalized").unwrap_or(f64::NAN);
                    r.value("margin", m + tol.barrier, "1")
                        .value("zeta_max", profile.zeta1.iter().copied().fold(0.0, f64::max), "1")
                }
                Err(e) => errored(&format!("barrier p={p}"), anchor, tol.barrier, e),
            })
            .collect(),
        Err(e) => vec![errored("barrier", anchor, tol.barrier, e)],
    };
    // unit weight at p = 3/2 has the closed form (e^t - 1) / (e - 1)
    let t: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let identity = match construct_barrier(&t, &vec![1.0; t.len()], 1.5) {
        Ok(b) => {
            let dev = b
                .f
                .iter()
                .zip(&t)
                .map(|(f, t)| (f - (t.exp() - 1.0) / (E - 1.0)).abs())
                .fold(0.0, f64::max);
            Report::new("unit_weight_profile", "barrier-unit-weight-closed-form", tol.barrier_identity)
                .value("max_deviation", dev, "1")
                .value("margin", tol.barrier_identity - dev, "1")
                .config("samples", t.len())
                .finish(dev <= tol.barrier_identity)
        }
        Err(e) => errored("unit_weight_profile", "barrier-unit-weight-closed-form", tol.barrier_identity, e),
    };
    children.push(identity);
    group("barrier", anchor, children)
}

fn graph_curvature(spec: &LemmasSpec, tol: &Tolerances, out: &Artifacts) -> Report {
    let anchor = "free-boundary-graph-curvature";
    let mut cases: Vec<(Shape, f64)> = spec.p.iter().map(|&p| (Shape::disk(1.0), p)).collect();
    cases.push((Shape::square(2.0), 2.0));
    let children = cases
        .par_iter()
        .map(|(k, p)| {
            let name = format!("{k} p={p}");
            let run = || -> Result<Report> {
                let cfg = MinimizeConfig {
                    p: *p,
                    n: spec.curvature_n,
                    half_width: spec.half_width,
                    k: k.clone(),
                    init: Shape::disk(2.5),
                    tol_fb_residual: tol.fb_residual,
                    ..Default::default()
                };
                let r = minimize(&cfg)?;
                let dir = out.sub("graph_curvature").sub(&name);
                dir.write("contour.csv", |w| r.omega.write_contour_csv(w))?;
                dir.write("trace.csv", |w| r.write_trace_csv(w))?;
                let check = graph_curvature_check(&r.potential, &r.omega, *p, tol.graph_curvature)?;
                let converged = Report::new("descent_converged", "descent-reaches-a-stationary-shape", tol.fb_residual)
                    .value("max_relative_residual", r.residual.max_relative, "1")
                    .config("n", cfg.n)
                    .note(format!("stop: {}", r.stop_reason))
                    .finish(r.converged);
                Ok(group(&name, anchor, vec![converged, check]))
            };
            run().unwrap_or_else(|e| errored(&name, anchor, 0.0, e))
        })
        .collect();
    group("graph_curvature", anchor, children)
}
