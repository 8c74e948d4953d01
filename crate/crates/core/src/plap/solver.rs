use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Region, ScalarField};

use super::discrete::{Integrand, RingProblem};
use super::sparse::pcg;
use super::PLapConfig;

/// Node visiting order of the nonlinear Gauss-Seidel sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepOrder {
    Lexicographic,
    /// Four colours by index parity; nodes of one colour never share a quadrant.
    Multicolor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Damped Newton with IC(0)-preconditioned conjugate gradients.
    Newton,
    GaussSeidel(SweepOrder),
}

/// Result of a capacitary solve.
#[derive(Debug, Clone)]
pub struct CapacitaryPotential {
    pub field: ScalarField,
    /// Unregularized discrete energy `sum w |g|^p` of the returned field.
    pub energy: f64,
    pub iterations: usize,
    /// Regularized energy after each iteration (non-increasing).
    pub energy_history: Vec<f64>,
}

pub fn solve_p_capacitary(k: &Region, omega: &Region, cfg: &PLapConfig) -> Result<CapacitaryPotential> {
    solve_p_capacitary_from(k, omega, cfg, None)
}

/// As [`solve_p_capacitary`], starting from `guess` on the free nodes.
pub fn solve_p_capacitary_from(
    k: &Region,
    omega: &Region,
    cfg: &PLapConfig,
    guess: Option<&ScalarField>,
) -> Result<CapacitaryPotential> {
    solve_inner(k, omega, cfg, guess, false)
}

/// Warm restart for a slightly moved domain: the regularization starts one
/// decade above its final value instead of running the full continuation.
pub(crate) fn solve_p_capacitary_warm(
    k: &Region,
    omega: &Region,
    cfg: &PLapConfig,
    guess: &ScalarField,
) -> Result<CapacitaryPotential> {
    solve_inner(k, omega, cfg, Some(guess), true)
}

fn solve_inner(
    k: &Region,
    omega: &Region,
    cfg: &PLapConfig,
    guess: Option<&ScalarField>,
    warm: bool,
) -> Result<CapacitaryPotential> {
    cfg.validate()?;
    check_nesting(k, omega)?;
    let problem = RingProblem::new(k, omega)?;
    let mut u = match guess {
        Some(g) if g.grid().same_as(k.grid()) => problem.restrict(g),
        Some(_) => return Err(Error::GridMismatch),
        None => problem.initial_guess(k, omega),
    };
    let eps_final = cfg.eps_reg.unwrap_or(1e-6 / k.grid().spacing());
    let mut schedule = eps_schedule(cfg.p, eps_final);
    if warm && schedule.len() > 2 {
        schedule.drain(..schedule.len() - 2);
    }
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    for (level, &eps) in schedule.iter().enumerate() {
        let f = Integrand { p: cfg.p, eps };
        let last = level + 1 == schedule.len();
        let (its, res, converged) = match cfg.scheme {
            Scheme::Newton => newton(&problem, &mut u, f, cfg, iterations, &mut history),
            Scheme::GaussSeidel(order) => gauss_seidel(&problem, &mut u, f, cfg, order, iterations, &mut history),
        };
        iterations += its;
        residual = res;
        if !converged && last {
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        if converged && last {
            return Ok(CapacitaryPotential {
                energy: problem.p_energy(&u, cfg.p),
                field: problem.to_field(&u),
                iterations,
                energy_history: history,
            });
        }
    }
    Err(Error::NotConverged {
        iterations,
        residual,
        last: Box::new(problem.to_field(&u)),
    })
}

/// `K` must sit inside `Omega` with a gap of about two cells.
fn check_nesting(k: &Region, omega: &Region) -> Result<()> {
    if !k.grid().same_as(omega.grid()) {
        return Err(Error::GridMismatch);
    }
    if k.is_empty() || omega.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let g = k.grid();
    let h = g.spacing();
    for (idx, (&a, &b)) in k.mask().iter().zip(omega.mask()).enumerate() {
        if a && !b {
            let [x, y] = g.point(idx);
            return Err(Error::precondition(format!("K is not contained in Omega near ({x:.3}, {y:.3})")));
        }
    }
    // contour positions are accurate to a fraction of a cell
    let min_gap = 1.5 * h;
    for p in k.contour_points() {
        if omega.distance_to_boundary(*p) < min_gap {
            return Err(Error::precondition(format!(
                "K comes within {:.3e} of the boundary of Omega (need about 2h = {:.3e})",
                omega.distance_to_boundary(*p),
                2.0 * h
            )));
        }
    }
    Ok(())
}

/// Decades from `1e4 * eps_final` down to `eps_final`; with the default
/// `eps_final = 1e-6 / h` this starts at `1e-2 / h`.
fn eps_schedule(p: f64, eps_final: f64) -> Vec<f64> {
    if p == 2.0 {
        return vec![eps_final];
    }
    (0..=4).rev().map(|k| eps_final * 10f64.powi(k)).collect()
}

/// Returns `(iterations, relative decrease of the last step, converged)`.
fn newton(
    pr: &RingProblem,
    u: &mut [f64],
    f: Integrand,
    cfg: &PLapConfig,
    done: usize,
    history: &mut Vec<f64>,
) -> (usize, f64, bool) {
    let m = pr.len();
    let mut grad = vec![0.0; m];
    let mut hess = pr.pattern.clone();
    let mut step = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut energy = pr.energy(u, f);
    let mut rel = f64::INFINITY;
    let mut its = 0;
    while done + its < cfg.max_iter {
        pr.assemble(u, f, &mut grad, &mut hess);
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        step.iter_mut().for_each(|s| *s = 0.0);
        pcg(&hess, &rhs, &mut step, 1e-10, 4 * m.max(50));
        // predicted decrease of the quadratic model
        let decrement: f64 = -grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>();
        its += 1;
        if !(decrement > 0.0) || 0.5 * decrement <= cfg.tol_rel_energy * energy.abs() {
            history.push(energy);
            return (its, (0.5 * decrement.max(0.0)) / energy.abs().max(f64::MIN_POSITIVE), true);
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            for i in 0..m {
                trial[i] = (u[i] + t * step[i]).clamp(0.0, 1.0);
            }
            let e = pr.energy(&trial, f);
            if e <= energy - 1e-4 * t * decrement || (e < energy && t < 1e-3) {
                u.copy_from_slice(&trial);
                rel = (energy - e) / energy.abs().max(f64::MIN_POSITIVE);
                energy = e;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        history.push(energy);
        if !accepted {
            // no descent left within floating point resolution
            return (its, 0.0, true);
        }
    }
    (its, rel, false)
}

fn gauss_seidel(
    pr: &RingProblem,
    u: &mut [f64],
    f: Integrand,
    cfg: &PLapConfig,
    order: SweepOrder,
    done: usize,
    history: &mut Vec<f64>,
) -> (usize, f64, bool) {
    let visit: Vec<usize> = match order {
        SweepOrder::Lexicographic => (0..pr.len()).collect(),
        SweepOrder::Multicolor => {
            let mut v: Vec<usize> = (0..pr.len()).collect();
            v.sort_by_key(|&k| {
                let (i, j) = pr.grid.ij(pr.nodes[k]);
                ((j % 2) * 2 + i % 2, k)
            });
            v
        }
    };
    let mut energy = pr.energy(u, f);
    let mut rel = f64::INFINITY;
    let mut its = 0;
    while done + its < cfg.max_iter {
        for &k in &visit {
            relax_node(pr, u, k, f);
        }
        its += 1;
        let e = pr.energy(u, f);
        rel = (energy - e) / energy.abs().max(f64::MIN_POSITIVE);
        energy = e;
        history.push(energy);
        if rel < cfg.tol_rel_energy {
            return (its, rel, true);
        }
    }
    (its, rel, false)
}

/// Exact 1D minimization in `[0, 1]` by safeguarded Newton on the derivative.
fn relax_node(pr: &RingProblem, u: &mut [f64], k: usize, f: Integrand) {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (_, dlo, _) = pr.local(u, k, lo, f);
    if dlo >= 0.0 {
        u[k] = lo;
        return;
    }
    let (_, dhi, _) = pr.local(u, k, hi, f);
    if dhi <= 0.0 {
        u[k] = hi;
        return;
    }
    let mut t = u[k].clamp(0.0, 1.0);
    for _ in 0..60 {
        let (_, d1, d2) = pr.local(u, k, t, f);
        if d1 > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let newton = t - d1 / d2;
        let next = if d2 > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - t).abs() < 1e-14 {
            t = next;
            break;
        }
        t = next;
    }
    u[k] = t;
}
