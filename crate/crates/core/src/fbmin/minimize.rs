use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{point_polyline_distance, rasterize, Grid, Region, ScalarField, Shape};
use crate::plap::PLapConfig;

use super::energy::{energy_with_potential, EnergyTerms};
use super::levelset::{extend_velocity, interpolate_cubic, reinitialize, sobolev_smooth};
use super::residual::{fb_residual_of, FbResidual};

const MAX_BACKTRACKS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeConfig {
    pub p: f64,
    /// Cells per side of the finest grid.
    pub n: usize,
    /// The box is `[-half_width, half_width]^2`.
    pub half_width: f64,
    pub k: Shape,
    pub init: Shape,
    /// Largest normal step per unit residual.
    pub step_scale: f64,
    /// Stop once `max |residual| / kappa` falls below this...
    pub tol_fb_residual: f64,
    /// ...and the relative energy decrease over the last five accepted steps
    /// below this.
    pub tol_energy_stall: f64,
    /// Outer iterations per grid level.
    pub max_outer_iter: usize,
    /// Recorded in the report; the descent itself draws no random numbers.
    pub seed: u64,
    /// Arclength scale of the velocity smoothing `(1 - l^2 d_ss)^-1`.
    pub smoothing_length: f64,
    /// Largest boundary displacement per step, in cells.
    pub max_move_cells: f64,
    /// Number of coarser grids (halving `n` each time) solved first.
    pub coarse_levels: usize,
    pub reinit_every: usize,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            p: 2.0,
            n: 128,
            half_width: 4.0,
            k: Shape::disk(1.0),
            init: Shape::disk(3.0),
            step_scale: 1.0,
            tol_fb_residual: 0.1,
            tol_energy_stall: 1e-6,
            max_outer_iter: 200,
            seed: 0,
            smoothing_length: 1.0,
            max_move_cells: 3.0,
            coarse_levels: 0,
            reinit_every: 5,
        }
    }
}

impl MinimizeConfig {
    pub fn validate(&self) -> Result<()> {
        PLapConfig::with_p(self.p).validate()?;
        if self.n < 16 {
            return Err(Error::invalid("n", "need at least 16 cells per side"));
        }
        if self.n >> self.coarse_levels < 16 {
            return Err(Error::invalid("coarse_levels", "coarsest grid would have fewer than 16 cells per side"));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::invalid("half_width", "must be positive"));
        }
        for (key, v) in [
            ("step_scale", self.step_scale),
            ("tol_fb_residual", self.tol_fb_residual),
            ("tol_energy_stall", self.tol_energy_stall),
            ("max_move_cells", self.max_move_cells),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(key, "must be positive"));
            }
        }
        if !(self.smoothing_length >= 0.0) {
            return Err(Error::invalid("smoothing_length", "must be non-negative"));
        }
        if self.max_outer_iter == 0 {
            return Err(Error::invalid("max_outer_iter", "must be at least 1"));
        }
        if self.reinit_every == 0 {
            return Err(Error::invalid("reinit_every", "must be at least 1"));
        }
        self.k.validate()?;
        self.init.validate()?;
        Ok(())
    }
}

/// One outer iteration: the state after the step was taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub n: usize,
    pub dirichlet: f64,
    pub perimeter: f64,
    pub total: f64,
    /// Max relative residual of the state.
    pub max_residual: f64,
    /// Time step of the accepted move; 0 for the initial state of a level.
    pub step: f64,
    pub backtracks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max_relative: f64,
    pub max_abs: f64,
    pub mean: f64,
    pub box_margin: Option<f64>,
    pub vertices: usize,
}

impl From<&FbResidual> for ResidualStats {
    fn from(r: &FbResidual) -> Self {
        ResidualStats {
            max_relative: r.max_relative(),
            max_abs: r.max_abs(),
            mean: r.mean(),
            box_margin: r.box_margin(),
            vertices: r.samples.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizerReport {
    pub config: MinimizeConfig,
    pub converged: bool,
    /// Why the descent stopped.
    pub stop_reason: String,
    pub energy: EnergyTerms,
    pub residual: ResidualStats,
    /// Smallest distance from the free boundary to `K`.
    pub clearance: f64,
    pub spacing: f64,
    pub components: usize,
    pub topology_changed: bool,
    pub trace: Vec<TraceRow>,
    #[serde(skip)]
    pub omega: Region,
    #[serde(skip)]
    pub k: Region,
    #[serde(skip)]
    pub potential: ScalarField,
    #[serde(skip)]
    pub fb: FbResidual,
}

impl MinimizerReport {
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,n,dirichlet,perimeter,total,max_residual,step,backtracks")?;
        for r in &self.trace {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.iter, r.n, r.dirichlet, r.perimeter, r.total, r.max_residual, r.step, r.backtracks
            )?;
        }
        Ok(())
    }
}

struct State {
    phi: Vec<f64>,
    omega: Region,
    energy: EnergyTerms,
    potential: ScalarField,
    fb: FbResidual,
}

struct Level {
    grid: Grid,
    k: Region,
    /// Upper bound on the level set keeping `K` dilated by `2h` inside.
    upper: Vec<f64>,
    /// Lower bound keeping the region off the last cell and a half of the box.
    lower: Vec<f64>,
    plap: PLapConfig,
}

impl Level {
    fn new(cfg: &MinimizeConfig, n: usize) -> Result<Self> {
        let grid = Grid::new(n, cfg.half_width)?;
        let h = grid.spacing();
        let k = rasterize(&cfg.k, &grid)?;
        let dk = reinitialize(&grid, k.phi());
        let upper = dk.iter().map(|d| d - 2.0 * h).collect();
        let r = cfg.half_width;
        let lower = (0..grid.len())
            .map(|idx| {
                let x = grid.point(idx);
                x[0].abs().max(x[1].abs()) - (r - 1.5 * h)
            })
            .collect();
        Ok(Level {
            grid,
            k,
            upper,
            lower,
            plap: PLapConfig::with_p(cfg.p),
        })
    }

    fn constrain(&self, phi: &mut [f64]) {
        for ((v, &hi), &lo) in phi.iter_mut().zip(&self.upper).zip(&self.lower) {
            *v = v.min(hi).max(lo);
        }
    }

    fn evaluate(&self, phi: Vec<f64>, p: f64, guess: Option<&ScalarField>) -> Result<State> {
        let omega = Region::from_level_set(self.grid, phi.clone())?;
        if self.k.mask().iter().zip(omega.mask()).any(|(&a, &b)| a && !b) {
            return Err(Error::precondition("the free boundary detached from K"));
        }
        let (energy, pot) = energy_with_potential(&self.k, &omega, &self.plap, guess)?;
        let fb = fb_residual_of(&pot.field, &self.k, &omega, p)?;
        Ok(State {
            phi,
            omega,
            energy,
            potential: pot.field,
            fb,
        })
    }
}

/// Level-set descent of the free boundary functional from `cfg.init`.
pub fn minimize(cfg: &MinimizeConfig) -> Result<MinimizerReport> {
    cfg.validate()?;
    let mut trace = Vec::new();
    let mut carried: Option<(Grid, Vec<f64>)> = None;
    let mut outcome = None;
    for level_index in (0..=cfg.coarse_levels).rev() {
        let level = Level::new(cfg, cfg.n >> level_index)?;
        let grid = level.grid;
        let h = grid.spacing();
        let phi = match &carried {
            None => {
                let init = rasterize(&cfg.init, &grid)?;
                let phi = reinitialize(&grid, init.phi());
                let clearance = level
                    .k
                    .contour_points()
                    .map(|x| -grid.interpolate(&phi, *x))
                    .fold(f64::INFINITY, f64::min);
                if clearance < 2.0 * h - 1e-9 {
                    return Err(Error::precondition(format!(
                        "initial region must contain K with clearance 2h = {:.3e}, got {clearance:.3e}",
                        2.0 * h
                    )));
                }
                phi
            }
            Some((coarse, values)) => {
                let fine: Vec<f64> = (0..grid.len()).map(|idx| interpolate_cubic(coarse, values, grid.point(idx))).collect();
                reinitialize(&grid, &fine)
            }
        };
        let (state, converged, reason) = descend(cfg, &level, phi, &mut trace)?;
        carried = Some((grid, state.phi.clone()));
        outcome = Some((level, state, converged, reason));
    }
    let (level, state, converged, stop_reason) = outcome.expect("at least one level");
    let components = state.omega.component_count();
    let clearance = state
        .omega
        .contour_points()
        .map(|x| {
            level
                .k
                .contour()
                .iter()
                .map(|l| point_polyline_distance(*x, l))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min);
    let init_components = rasterize(&cfg.init, &level.grid)?.component_count();
    Ok(MinimizerReport {
        config: cfg.clone(),
        converged,
        stop_reason,
        energy: state.energy,
        residual: ResidualStats::from(&state.fb),
        clearance,
        spacing: level.grid.spacing(),
        components,
        topology_changed: components != init_components,
        trace,
        omega: state.omega,
        k: level.k,
        potential: state.potential,
        fb: state.fb,
    })
}

fn descend(cfg: &MinimizeConfig, level: &Level, mut phi: Vec<f64>, trace: &mut Vec<TraceRow>) -> Result<(State, bool, String)> {
    let grid = level.grid;
    let h = grid.spacing();
    let n = grid.n();
    level.constrain(&mut phi);
    let mut state = level.evaluate(phi, cfg.p, None)?;
    trace.push(row(0, n, &state, 0.0, 0));
    const STALL_WINDOW: usize = 5;
    let mut accepted_totals = vec![state.energy.total];
    let mut stall = f64::INFINITY;
    let mut dt = cfg.step_scale;
    // shortened whenever the line search fails, to reach finer shape modes
    let min_alpha = h.min(cfg.smoothing_length);
    let mut alpha = cfg.smoothing_length;
    for iter in 1..=cfg.max_outer_iter {
        let max_rel = state.fb.max_relative();
        if max_rel < cfg.tol_fb_residual && stall < cfg.tol_energy_stall {
            return Ok((state, true, "residual and energy stall below tolerance".into()));
        }
        let loops = state.omega.contour();
        let mut offset = 0;
        let mut velocity = Vec::with_capacity(loops.len());
        for l in loops {
            let v: Vec<f64> = state.fb.samples[offset..offset + l.len()]
                .iter()
                .map(|s| if s.on_box { s.residual.min(0.0) } else { s.residual })
                .collect();
            offset += l.len();
            velocity.push(sobolev_smooth(l, &v, alpha));
        }
        let vmax = velocity.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if vmax == 0.0 {
            return Ok((state, max_rel < cfg.tol_fb_residual, "zero velocity".into()));
        }
        let ext = extend_velocity(&grid, &state.phi, loops, &velocity);
        // high shape modes relax at rate 1 / smoothing_length^2
        let stable = if alpha > 0.0 { alpha * alpha } else { f64::INFINITY };
        let mut step = dt.min(stable).min(cfg.max_move_cells * h / vmax);
        let reinit = iter % cfg.reinit_every == 0;
        let mut accepted = None;
        for backtrack in 0..=MAX_BACKTRACKS {
            let mut trial: Vec<f64> = state.phi.iter().zip(&ext).map(|(f, v)| f - step * v).collect();
            level.constrain(&mut trial);
            if reinit {
                trial = reinitialize(&grid, &trial);
                level.constrain(&mut trial);
            }
            // a trial that breaks the solver's preconditions counts as a rejected step
            match level.evaluate(trial, cfg.p, Some(&state.potential)) {
                Ok(next) if next.energy.total < state.energy.total => {
                    accepted = Some((next, backtrack));
                    break;
                }
                Ok(_) | Err(Error::Precondition(_)) | Err(Error::NotConverged { .. }) => {}
                Err(e) => return Err(e),
            }
            step *= 0.5;
        }
        let Some((next, backtracks)) = accepted else {
            if alpha > min_alpha {
                alpha = (0.5 * alpha).max(min_alpha);
                dt = cfg.step_scale;
                continue;
            }
            let converged = max_rel < cfg.tol_fb_residual;
            return Ok((state, converged, "line search found no energy decrease".into()));
        };
        accepted_totals.push(next.energy.total);
        if accepted_totals.len() > STALL_WINDOW {
            let old = accepted_totals[accepted_totals.len() - 1 - STALL_WINDOW];
            stall = (old - next.energy.total) / old.abs();
        }
        trace.push(row(iter, n, &next, step, backtracks));
        state = next;
        dt = (2.0 * step).min(cfg.step_scale);
    }
    let converged = state.fb.max_relative() < cfg.tol_fb_residual && stall < cfg.tol_energy_stall;
    Ok((state, converged, "outer iteration limit".into()))
}

fn row(iter: usize, n: usize, s: &State, step: f64, backtracks: usize) -> TraceRow {
    TraceRow {
        iter,
        n,
        dirichlet: s.energy.dirichlet,
        perimeter: s.energy.perimeter,
        total: s.energy.total,
        max_residual: s.fb.max_relative(),
        step,
        backtracks,
    }
}
