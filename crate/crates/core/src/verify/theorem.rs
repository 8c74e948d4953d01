//! Convexity and uniqueness of minimizers for convex cores; inclusion in the
//! minimizer of the hull and stability in a larger box for general cores.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Artifacts, InclusionSpec, MainTheoremSpec, Tolerances};
use crate::error::{Error, Result};
use crate::fbmin::{minimize, radial_optimal_radius, MinimizeConfig, MinimizerReport};
use crate::geomlab::{convex_hull_points, convexity_deficit};
use crate::grid::{contour_hausdorff, rasterize, region_contains, Grid, Region, Shape};
use crate::report::Report;

/// Cores with a larger hull deficit fail the convexity hypothesis.
const CONVEX_CORE_DEFICIT: f64 = 1e-3;
const LEVELS: [f64; 3] = [0.25, 0.5, 0.75];

fn norm(x: &[f64; 2]) -> f64 {
    x[0].hypot(x[1])
}

fn core_radius(k: &Region) -> f64 {
    k.contour_points().map(norm).fold(0.0, f64::max)
}

/// Runs one descent and stores its trace, contour, potential and summary.
fn run_descent(cfg: &MinimizeConfig, out: &Artifacts) -> Result<MinimizerReport> {
    let r = minimize(cfg)?;
    out.write("trace.csv", |w| r.write_trace_csv(w))?;
    out.write("contour.csv", |w| r.omega.write_contour_csv(w))?;
    out.write("field.csv", |w| r.potential.write_csv(w))?;
    out.write("minimizer.json", |w| Ok(serde_json::to_writer_pretty(w, &r)?))?;
    Ok(r)
}

fn convergence_report(label: &str, run: &Result<MinimizerReport>, tol: f64) -> Report {
    let base = Report::new(format!("descent_converged[{label}]"), "descent-reaches-a-stationary-shape", tol);
    match run {
        Ok(r) => {
            let last = r.trace.last().map(|t| t.iter).unwrap_or(0);
            base.value("max_relative_residual", r.residual.max_relative, "1")
                .value("margin", tol - r.residual.max_relative, "1")
                .value("total_energy", r.energy.total, "energy")
                .value("iterations", last as f64, "steps")
                .config("n", r.config.n)
                .config("init", r.config.init.to_string())
                .note(format!("stop: {}", r.stop_reason))
                .finish(r.converged)
        }
        Err(e) => base.note(format!("error: {e}")).finish(false),
    }
}

fn failed(check: &str, anchor: &str, tol: f64, reason: impl std::fmt::Display) -> Report {
    Report::new(check, anchor, tol).note(format!("not evaluated: {reason}")).finish(false)
}

/// Tight and loose centered disks and a disk shifted in a seeded direction.
fn initializations(k: &Region, half_width: f64, rng: &mut ChaCha8Rng) -> Result<Vec<(&'static str, Shape)>> {
    let h = k.grid().spacing();
    let rk = core_radius(k);
    let loose = 0.8 * half_width;
    let theta = rng.random_range(0.0..TAU);
    let shift = rng.random_range(0.3..0.6);
    let center = [shift * theta.cos(), shift * theta.sin()];
    let radius = rk + shift + 0.5;
    if loose < rk + 8.0 * h || radius + shift > half_width - 4.0 * h {
        return Err(Error::precondition(format!(
            "core of radius {rk:.3} leaves no room for three initial shapes in the box of half width {half_width}"
        )));
    }
    Ok(vec![
        ("tight", Shape::disk(rk + 4.0 * h)),
        ("loose", Shape::disk(loose)),
        ("asymmetric", Shape::disk_at(center, radius)),
    ])
}

fn descent_config(k: &Shape, init: Shape, p: f64, n: usize, half_width: f64, iters: usize, seed: u64, tol: &Tolerances) -> MinimizeConfig {
    MinimizeConfig {
        p,
        n,
        half_width,
        k: k.clone(),
        init,
        tol_fb_residual: tol.fb_residual,
        max_outer_iter: iters,
        seed,
        ..Default::default()
    }
}

/// For each convex core and exponent: three descents from different starts,
/// convexity of the limits and of the potential's level sets, and pairwise
/// agreement. Non-convex cores skip these and run the inclusion checks.
pub fn verify_main_theorem(spec: &MainTheoremSpec, tol: &Tolerances, seed: u64, out: &Artifacts) -> Report {
    let cases: Vec<(u64, &Shape, f64)> = spec
        .shapes
        .iter()
        .flat_map(|k| spec.p.iter().map(move |&p| (k, p)))
        .enumerate()
        .map(|(i, (k, p))| (i as u64, k, p))
        .collect();
    let children: Vec<Report> = cases
        .par_iter()
        .map(|&(i, k, p)| {
            let name = format!("{k} p={p}");
            main_case(k, p, spec, tol, seed.wrapping_add(i), &out.sub(&name)).config("case", name)
        })
        .collect();
    children
        .into_iter()
        .fold(
            Report::new("main_theorem", "convexity-and-uniqueness-of-minimizers", 0.0)
                .config("n", spec.n)
                .config("half_width", spec.half_width),
            Report::child,
        )
        .from_children()
}

fn main_case(k: &Shape, p: f64, spec: &MainTheoremSpec, tol: &Tolerances, seed: u64, out: &Artifacts) -> Report {
    let base = Report::new("case", "convexity-and-uniqueness-of-minimizers", 0.0)
        .config("k", k.to_string())
        .config("p", p)
        .config("n", spec.n);
    let setup = Grid::new(spec.n, spec.half_width).and_then(|g| Ok((g, rasterize(k, &g)?)));
    let (grid, k_region) = match setup {
        Ok(v) => v,
        Err(e) => return base.child(failed("setup", "convexity-and-uniqueness-of-minimizers", 0.0, e)).from_children(),
    };
    let h = grid.spacing();
    let deficit = convexity_deficit(&k_region).unwrap_or(f64::INFINITY);
    let hypothesis = Report::new("convex_core", "convexity-hypothesis-on-the-core", CONVEX_CORE_DEFICIT)
        .value("core_deficit", deficit, "1")
        .config("n", spec.n);
    if deficit > CONVEX_CORE_DEFICIT {
        let inclusion = inclusion_case(k, p, spec.n, spec.half_width, spec.max_outer_iter, tol, &out.sub("inclusion"));
        return base
            .child(hypothesis.skipped("the core is not convex; convexity and uniqueness are not claimed"))
            .child(Report::new("convexity", "convexity-of-minimizers", tol.convexity_deficit).skipped("core not convex"))
            .child(inclusion)
            .from_children();
    }
    let mut case = base.child(hypothesis.finish(true));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inits = match initializations(&k_region, spec.half_width, &mut rng) {
        Ok(v) => v,
        Err(e) => return case.child(failed("initializations", "uniqueness-of-minimizers", 0.0, e)).from_children(),
    };
    let runs: Vec<(&str, Result<MinimizerReport>)> = inits
        .into_iter()
        .map(|(label, init)| {
            let cfg = descent_config(k, init, p, spec.n, spec.half_width, spec.max_outer_iter, seed, tol);
            (label, run_descent(&cfg, &out.sub(label)))
        })
        .collect();
    for (label, run) in &runs {
        case = case.child(convergence_report(label, run, tol.fb_residual));
    }
    let finals: Vec<(&str, &MinimizerReport)> = runs.iter().filter_map(|(l, r)| r.as_ref().ok().map(|r| (*l, r))).collect();
    if finals.len() < runs.len() {
        return case
            .child(failed("convexity", "convexity-of-minimizers", tol.convexity_deficit, "a descent failed"))
            .from_children();
    }

    let mut convexity = Report::new("convexity", "convexity-of-minimizers", tol.convexity_deficit).config("n", spec.n);
    let mut worst = 0.0f64;
    for (label, r) in &finals {
        let d = convexity_deficit(&r.omega).unwrap_or(f64::INFINITY);
        convexity.set(&format!("deficit[{label}]"), d, "1");
        worst = worst.max(d);
    }
    convexity.set("margin", tol.convexity_deficit - worst, "1");
    case = case.child(convexity.finish(worst < tol.convexity_deficit));

    let mut levels = Report::new("level_set_convexity", "convex-level-sets-of-the-potential", tol.convexity_deficit)
        .config("n", spec.n)
        .config("levels", LEVELS.to_vec());
    let mut worst = 0.0f64;
    for (label, r) in &finals {
        for t in LEVELS {
            let phi: Vec<f64> = r.potential.values().iter().map(|u| t - u).collect();
            let d = Region::from_level_set(grid, phi)
                .and_then(|set| convexity_deficit(&set))
                .unwrap_or(f64::INFINITY);
            levels.set(&format!("deficit[{label},t={t}]"), d, "1");
            worst = worst.max(d);
        }
    }
    levels.set("margin", tol.convexity_deficit - worst, "1");
    case = case.child(levels.finish(worst < tol.convexity_deficit));

    let limit = tol.hausdorff_cells * h;
    let mut unique = Report::new("uniqueness", "uniqueness-of-minimizers", limit).config("n", spec.n);
    let mut worst = 0.0f64;
    for i in 0..finals.len() {
        for j in i + 1..finals.len() {
            let d = contour_hausdorff(finals[i].1.omega.contour(), finals[j].1.omega.contour());
            unique.set(&format!("hausdorff[{},{}]", finals[i].0, finals[j].0), d, "length");
            worst = worst.max(d);
        }
    }
    unique.set("margin", limit - worst, "length");
    case = case.child(unique.finish(worst <= limit));

    if let Shape::Disk { center: [cx, cy], radius } = *k {
        if cx == 0.0 && cy == 0.0 {
            case = case.child(radial_report(radius, p, &finals, limit, spec.n));
        }
    }
    case.from_children()
}

/// Distance of each limit from the circle of the optimal radius.
fn radial_report(a: f64, p: f64, finals: &[(&str, &MinimizerReport)], limit: f64, n: usize) -> Report {
    let base = Report::new("radial_oracle", "radial-free-boundary-oracle", limit).config("n", n);
    let rho = match radial_optimal_radius(a, p, 2) {
        Ok((rho, _)) => rho,
        Err(e) => return base.note(format!("oracle failed: {e}")).finish(false),
    };
    let mut report = base.value("optimal_radius", rho, "length");
    let mut worst = 0.0f64;
    for (label, r) in finals {
        let d = r.omega.contour_points().map(|x| (norm(x) - rho).abs()).fold(0.0, f64::max);
        report.set(&format!("distance[{label}]"), d, "length");
        worst = worst.max(d);
    }
    report.set("margin", limit - worst, "length");
    report.finish(worst <= limit)
}

/// Inclusion in the minimizer of the convex hull and boundedness for each
/// core, convex or not.
pub fn verify_inclusion_and_bounded(spec: &InclusionSpec, tol: &Tolerances, out: &Artifacts) -> Report {
    let children: Vec<Report> = spec
        .shapes
        .par_iter()
        .map(|k| {
            inclusion_case(k, spec.p, spec.n, spec.half_width, spec.max_outer_iter, tol, &out.sub(&k.to_string()))
                .config("case", k.to_string())
        })
        .collect();
    children
        .into_iter()
        .fold(
            Report::new("inclusion_and_bounded", "inclusion-in-hull-minimizer", 0.0)
                .config("p", spec.p)
                .config("n", spec.n)
                .config("half_width", spec.half_width),
            Report::child,
        )
        .from_children()
}

fn inclusion_case(k: &Shape, p: f64, n: usize, half_width: f64, iters: usize, tol: &Tolerances, out: &Artifacts) -> Report {
    let base = Report::new("inclusion_case", "inclusion-in-hull-minimizer", 0.0)
        .config("k", k.to_string())
        .config("p", p)
        .config("n", n);
    let setup = Grid::new(n, half_width).and_then(|g| Ok((g, rasterize(k, &g)?)));
    let (grid, k_region) = match setup {
        Ok(v) => v,
        Err(e) => return base.child(failed("setup", "inclusion-in-hull-minimizer", 0.0, e)).from_children(),
    };
    let h = grid.spacing();
    let points: Vec<[f64; 2]> = k_region.contour_points().copied().collect();
    let hull = Shape::Polygon(convex_hull_points(&points));
    let init = Shape::disk(core_radius(&k_region) + 0.75);
    let cfg = descent_config(k, init.clone(), p, n, half_width, iters, 0, tol);
    let cov_cfg = MinimizeConfig { k: hull.clone(), ..cfg.clone() };
    let big_cfg = MinimizeConfig {
        n: 2 * n,
        half_width: 2.0 * half_width,
        ..cfg.clone()
    };
    let core_run = run_descent(&cfg, &out.sub("core"));
    let hull_run = run_descent(&cov_cfg, &out.sub("hull"));
    let big_run = run_descent(&big_cfg, &out.sub("double_box"));
    let mut case = base
        .child(convergence_report("core", &core_run, tol.fb_residual))
        .child(convergence_report("hull", &hull_run, tol.fb_residual))
        .child(convergence_report("double_box", &big_run, tol.fb_residual));
    let (Ok(core), Ok(cov), Ok(big)) = (&core_run, &hull_run, &big_run) else {
        return case
            .child(failed("inclusion", "inclusion-in-hull-minimizer", 0.0, "a descent failed"))
            .from_children();
    };

    let slack = tol.inclusion_slack_cells * h;
    let excess = core
        .omega
        .mask()
        .iter()
        .zip(cov.omega.mask())
        .enumerate()
        .filter(|(_, (&a, &b))| a && !b)
        .map(|(idx, _)| cov.omega.distance_to_boundary(grid.point(idx)))
        .fold(0.0, f64::max);
    let contained = region_contains(&cov.omega, &core.omega, slack).unwrap_or(false);
    case = case.child(
        Report::new("inclusion", "inclusion-in-hull-minimizer", slack)
            .value("max_excess", excess, "length")
            .value("margin", slack - excess, "length")
            .config("n", n)
            .config("hull", hull.to_string())
            .finish(contained),
    );

    let d = convexity_deficit(&cov.omega).unwrap_or(f64::INFINITY);
    case = case.child(
        Report::new("hull_minimizer_convex", "convexity-of-minimizers", tol.convexity_deficit)
            .value("deficit", d, "1")
            .value("margin", tol.convexity_deficit - d, "1")
            .config("n", n)
            .finish(d < tol.convexity_deficit),
    );

    // the box constraint holds the region off the outermost cell and a half
    let gap = core
        .omega
        .contour_points()
        .map(|x| half_width - x[0].abs().max(x[1].abs()))
        .fold(f64::INFINITY, f64::min);
    case = case.child(
        Report::new("bounded", "boundedness-in-large-box", 2.0 * h)
            .value("distance_to_box", gap, "length")
            .value("margin", gap - 2.0 * h, "length")
            .config("n", n)
            .finish(gap > 2.0 * h),
    );

    let limit = tol.hausdorff_cells * h;
    let moved = contour_hausdorff(core.omega.contour(), big.omega.contour());
    case = case.child(
        Report::new("large_box_stability", "boundedness-in-large-box", limit)
            .value("hausdorff", moved, "length")
            .value("margin", limit - moved, "length")
            .config("n", n)
            .config("large_n", 2 * n)
            .config("large_half_width", 2.0 * half_width)
            .finish(moved <= limit),
    );

    let core_deficit = convexity_deficit(&k_region).unwrap_or(f64::INFINITY);
    let same = Report::new("convex_core_matches_hull", "inclusion-in-hull-minimizer", limit).config("n", n);
    let same = if core_deficit > CONVEX_CORE_DEFICIT {
        same.skipped("the core is not convex, so its hull differs from it")
    } else {
        let d = contour_hausdorff(core.omega.contour(), cov.omega.contour());
        same.value("hausdorff", d, "length").value("margin", limit - d, "length").finish(d <= limit)
    };
    case.child(same).from_children()
}
