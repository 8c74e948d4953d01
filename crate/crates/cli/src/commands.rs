use std::io::Write;

use fbconvex::fbmin::{minimize, MinimizeConfig};
use fbconvex::grid::{measure, Shape};
use fbconvex::plap::{radial_capacity, radial_gradient, radial_optimal_radius, sphere_area};
use fbconvex::report::{Report, Status};
use fbconvex::verify::{run_suite, verify_lab, LabSpec, SuiteSpec};

use crate::config::{FileConfig, RunConfig};
use crate::error::CliError;
use crate::output::OutDir;

pub struct OracleArgs {
    pub a: Option<f64>,
    pub dim: Option<u32>,
}

pub struct LabArgs {
    pub matrix_trials: Option<usize>,
}

pub struct VerifyArgs {
    pub suite: Option<String>,
    pub set_tol: Vec<String>,
}

pub fn solve(cfg: &RunConfig, file: &FileConfig) -> Result<(), CliError> {
    let mut m = MinimizeConfig::default();
    if let Some(p) = cfg.p {
        m.p = p;
    }
    if let Some(n) = cfg.n {
        m.n = n;
    }
    if let Some(r) = cfg.radius_r {
        m.half_width = r;
    }
    if let Some(k) = &cfg.k {
        m.k = k.clone();
    }
    m.init = cfg.init.clone().unwrap_or_else(|| Shape::disk(0.75 * m.half_width));
    if let Some(t) = cfg.tol_fb {
        m.tol_fb_residual = t;
    }
    if let Some(it) = cfg.max_iter {
        m.max_outer_iter = it;
    }
    if let Some(s) = cfg.seed {
        m.seed = s;
    }
    let extra = &file.solve;
    if let Some(v) = extra.step_scale {
        m.step_scale = v;
    }
    if let Some(v) = extra.smoothing_length {
        m.smoothing_length = v;
    }
    if let Some(v) = extra.max_move_cells {
        m.max_move_cells = v;
    }
    if let Some(v) = extra.coarse_levels {
        m.coarse_levels = v;
    }
    if let Some(v) = extra.reinit_every {
        m.reinit_every = v;
    }
    if let Some(v) = extra.tol_energy_stall {
        m.tol_energy_stall = v;
    }
    m.validate()?;

    let report = minimize(&m)?;
    let out = OutDir::create(&cfg.out_dir)?;
    out.write_json("config.json", cfg)?;
    out.write_json("report.json", &report)?;
    out.write("field.csv", |w| Ok(report.potential.write_csv(w)?))?;
    out.write("contour.csv", |w| Ok(report.omega.write_contour_csv(w)?))?;
    out.write("trace.csv", |w| Ok(report.write_trace_csv(w)?))?;
    out.write_manifest("solve")?;

    let (area, perimeter) = measure(&report.omega);
    let points: Vec<_> = report.omega.contour_points().collect();
    let mean_radius = points.iter().map(|x| x[0].hypot(x[1])).sum::<f64>() / points.len().max(1) as f64;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "converged: {}", report.converged)?;
    writeln!(stdout, "stop: {}", report.stop_reason)?;
    writeln!(stdout, "energy: {} (dirichlet {}, perimeter {})", report.energy.total, report.energy.dirichlet, report.energy.perimeter)?;
    writeln!(stdout, "max relative residual: {}", report.residual.max_relative)?;
    writeln!(stdout, "area: {area}  perimeter: {perimeter}  mean contour radius: {mean_radius}")?;
    writeln!(stdout, "clearance from K: {}  components: {}", report.clearance, report.components)?;
    writeln!(stdout, "outputs: {}", out.path().display())?;
    if !report.converged {
        return Err(CliError::NotConverged(format!(
            "descent stopped without converging: {} (max relative residual {})",
            report.stop_reason, report.residual.max_relative
        )));
    }
    Ok(())
}

pub fn oracle(cfg: &RunConfig, file: &FileConfig, args: &OracleArgs) -> Result<(), CliError> {
    let a = args.a.or(file.oracle.a).unwrap_or(1.0);
    let dim = args.dim.or(file.oracle.dim).unwrap_or(2);
    let p = cfg.p.unwrap_or(2.0);
    if !(a > 0.0 && a.is_finite()) {
        return Err(CliError::Usage(format!("`a`: core radius {a} must be positive")));
    }
    if dim < 2 {
        return Err(CliError::Usage(format!("`dim`: dimension {dim} must be at least 2")));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(CliError::Usage(format!("`p`: {p} must satisfy 1 < p < inf")));
    }
    let points = file.oracle.sweep_points.unwrap_or(200);
    if points < 2 {
        return Err(CliError::Usage("`sweep_points` must be at least 2".into()));
    }
    let (rho, energy) = radial_optimal_radius(a, p, dim)?;
    let curvature = (dim - 1) as f64 / rho;
    let lhs = (p - 1.0) * radial_gradient(a, rho, p, dim, rho)?.powf(p);
    let residual = (lhs - curvature).abs() / curvature;

    let out = OutDir::create(&cfg.out_dir)?;
    let top = (3.0 * rho).max(2.0 * a);
    out.write("oracle_sweep.csv", |w| {
        writeln!(w, "rho,capacity,perimeter,total")?;
        for i in 0..points {
            let r = a + (top - a) * (i + 1) as f64 / points as f64;
            let cap = radial_capacity(a, r, p, dim)?;
            let per = sphere_area(dim) * r.powi(dim as i32 - 1);
            writeln!(w, "{r},{cap},{per},{}", cap + per)?;
        }
        Ok(())
    })?;
    let report = Report::new("radial_oracle", "radial-free-boundary-oracle", 1e-6)
        .value("optimal_radius", rho, "length")
        .value("energy", energy, "energy")
        .value("fb_relative_residual", residual, "1")
        .config("a", a)
        .config("p", p)
        .config("dim", dim)
        .finish(residual < 1e-6);
    out.write_json("report.json", &report)?;
    out.write_manifest("oracle")?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "rho*: {rho}")?;
    writeln!(stdout, "E(rho*): {energy}")?;
    writeln!(stdout, "free boundary relative residual: {residual}")?;
    writeln!(stdout, "outputs: {}", out.path().display())?;
    Ok(())
}

fn leaf_lines(r: &Report, path: &str, out: &mut Vec<(String, Status, Option<f64>)>) {
    let here = if path.is_empty() { r.check.clone() } else { format!("{path}/{}", r.check) };
    let here = match r.config.get("case").and_then(|v| v.as_str()) {
        Some(case) => format!("{here}[{case}]"),
        None => here,
    };
    if r.children.is_empty() {
        out.push((here, r.status, r.get("margin")));
    } else {
        for c in &r.children {
            leaf_lines(c, &here, out);
        }
    }
}

/// Prints one line per leaf check and fails with the names of failed ones.
fn summarize(report: &Report) -> Result<(), CliError> {
    let mut leaves = Vec::new();
    leaf_lines(report, "", &mut leaves);
    let mut stdout = std::io::stdout().lock();
    for (name, status, margin) in &leaves {
        let tag = match status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        match margin {
            Some(m) => writeln!(stdout, "{tag} {name} (margin {m:e})")?,
            None => writeln!(stdout, "{tag} {name}")?,
        }
    }
    let failed: Vec<&str> = leaves
        .iter()
        .filter(|(_, s, _)| *s == Status::Fail)
        .map(|(n, _, _)| n.as_str())
        .collect();
    if report.pass {
        Ok(())
    } else if failed.is_empty() {
        Err(CliError::ChecksFailed(format!("{}: no check ran", report.check)))
    } else {
        Err(CliError::ChecksFailed(failed.join(", ")))
    }
}

pub fn lab(cfg: &RunConfig, file: &FileConfig, args: &LabArgs) -> Result<(), CliError> {
    let mut spec = LabSpec::default();
    if let Some(t) = args.matrix_trials.or(file.lab.matrix_trials) {
        spec.matrix_trials = t;
    }
    if let Some(t) = file.lab.inf_convolution_trials {
        spec.inf_convolution_trials = t;
    }
    if let Some(d) = file.lab.max_dim {
        if d == 0 {
            return Err(CliError::Usage("`max_dim` must be at least 1".into()));
        }
        spec.max_dim = d;
    }
    let seed = cfg.seed.unwrap_or(7);
    let report = verify_lab(&spec, &Default::default(), seed);
    let out = OutDir::create(&cfg.out_dir)?;
    out.write_json("report.json", &report)?;
    out.write_manifest("lab")?;
    summarize(&report)
}

pub fn verify(cfg: &RunConfig, file: &FileConfig, args: &VerifyArgs) -> Result<(), CliError> {
    let name = args.suite.clone().or(file.verify.suite.clone()).unwrap_or_else(|| "main".into());
    let mut spec = SuiteSpec::resolve(&name).map_err(|e| match e {
        fbconvex::Error::Io(io) => CliError::Usage(format!("suite `{name}`: {io}")),
        other => CliError::Core(other),
    })?;
    if let Some(s) = cfg.seed {
        spec.seed = s;
    }
    for (key, value) in &file.verify.tolerances {
        spec.tolerances.set(key, *value)?;
    }
    if let Some(t) = cfg.tol_fb {
        spec.tolerances.fb_residual = t;
    }
    for item in &args.set_tol {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("`set-tol`: expected name=value, got `{item}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|e| CliError::Usage(format!("`set-tol` {key}: {e}")))?;
        spec.tolerances.set(key.trim(), value)?;
    }
    if let Some(m) = spec.main_theorem.as_mut() {
        if let Some(k) = &cfg.k {
            m.shapes = vec![k.clone()];
        }
        if let Some(p) = cfg.p {
            m.p = vec![p];
        }
        if let Some(n) = cfg.n {
            m.n = n;
        }
        if let Some(r) = cfg.radius_r {
            m.half_width = r;
        }
        if let Some(it) = cfg.max_iter {
            m.max_outer_iter = it;
        }
    }
    let out = OutDir::create(&cfg.out_dir)?;
    spec.out_dir = Some(out.path().join("checks"));
    spec.validate()?;
    let report = run_suite(&spec)?;
    out.write_json("suite.json", &spec)?;
    out.write_json("report.json", &report)?;
    out.write_manifest("verify")?;
    summarize(&report)
}
