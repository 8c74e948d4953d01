use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Region, ScalarField};
use crate::report::Report;

use super::qlap::{require_convex_ring, STENCIL_MARGIN};
use super::stencil::{interior_nodes, jet};

const ENVELOPE_BINS: usize = 64;
const ENVELOPE_SAFETY: f64 = 1.1;

/// Reparametrization `f` of `[0, 1]` built from a weight `zeta1`, with its
/// first two derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierProfile {
    pub p: f64,
    pub t: Vec<f64>,
    pub zeta1: Vec<f64>,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    pub d2f: Vec<f64>,
}

impl BarrierProfile {
    fn locate(&self, t: f64) -> (usize, f64) {
        let t = t.clamp(0.0, 1.0);
        let i = self.t.partition_point(|&v| v <= t).clamp(1, self.t.len() - 1);
        let w = (t - self.t[i - 1]) / (self.t[i] - self.t[i - 1]);
        (i, w)
    }

    fn lerp(&self, v: &[f64], t: f64) -> f64 {
        let (i, w) = self.locate(t);
        (1.0 - w) * v[i - 1] + w * v[i]
    }

    pub fn value(&self, t: f64) -> f64 {
        self.lerp(&self.f, t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.lerp(&self.df, t)
    }

    /// `f'' = k zeta1 f'` with `k = (2 - p) / (p - 1)` (zero for `p >= 2`).
    pub fn second_derivative(&self, t: f64) -> f64 {
        let k = exponent(self.p);
        if k == 0.0 {
            return 0.0;
        }
        k * self.lerp(&self.zeta1, t) * self.derivative(t)
    }

    /// `f(0) = 0`, `f(1) = 1`, `f` increasing and convex on the samples.
    pub fn invariants_hold(&self, tol: f64) -> bool {
        let n = self.f.len();
        let increasing = self.f.windows(2).all(|w| w[1] > w[0]);
        let convex = (1..n.saturating_sub(1)).all(|i| {
            let (a, b, c) = (self.t[i - 1], self.t[i], self.t[i + 1]);
            let chord = self.f[i - 1] + (self.f[i + 1] - self.f[i - 1]) * (b - a) / (c - a);
            self.f[i] <= chord + tol
        });
        self.f[0].abs() <= tol && (self.f[n - 1] - 1.0).abs() <= tol && increasing && convex
    }
}

fn exponent(p: f64) -> f64 {
    if p >= 2.0 {
        0.0
    } else {
        (2.0 - p) / (p - 1.0)
    }
}

/// `f(t) = c int_0^t exp(-k int_tau^1 zeta1)` with `c` normalizing `f(1) = 1`;
/// the identity for `p >= 2`. The inner integral is the trapezoid rule and
/// the outer one is exact for piecewise linear exponents.
pub fn construct_barrier(t: &[f64], zeta1: &[f64], p: f64) -> Result<BarrierProfile> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::invalid("p", format!("{p} must satisfy 1 < p < inf")));
    }
    let n = t.len();
    if n < 2 || zeta1.len() != n {
        return Err(Error::invalid("zeta1", "need matching samples of t and zeta1, at least two"));
    }
    if t[0] != 0.0 || t[n - 1] != 1.0 || t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("t", "samples must increase from 0 to 1"));
    }
    if zeta1.iter().any(|z| !(*z >= 0.0)) {
        return Err(Error::invalid("zeta1", "must be non-negative"));
    }
    let k = exponent(p);
    let mut tail = vec![0.0; n];
    for i in (0..n - 1).rev() {
        tail[i] = tail[i + 1] + 0.5 * (zeta1[i] + zeta1[i + 1]) * (t[i + 1] - t[i]);
    }
    if !tail[0].is_finite() {
        return Err(Error::Numerical("zeta1 has no finite integral".into()));
    }
    let mut f = vec![0.0; n];
    for i in 1..n {
        let dt = t[i] - t[i - 1];
        let x = k * (tail[i] - tail[i - 1]);
        // int over the segment of exp(-k Z) with Z linear between the ends
        let factor = if x.abs() < 1e-12 { 1.0 - 0.5 * x } else { -(-x).exp_m1() / x };
        f[i] = f[i - 1] + dt * (-k * tail[i - 1]).exp() * factor;
    }
    let c = 1.0 / f[n - 1];
    f.iter_mut().for_each(|v| *v *= c);
    f[n - 1] = 1.0;
    let df: Vec<f64> = tail.iter().map(|z| c * (-k * z).exp()).collect();
    let d2f = df.iter().zip(zeta1).map(|(d, z)| k * z * d).collect();
    Ok(BarrierProfile {
        p,
        t: t.to_vec(),
        zeta1: zeta1.to_vec(),
        f,
        df,
        d2f,
    })
}

/// Nondecreasing staircase above `|grad w|^-4 Delta_inf w` as a function of
/// `w`, on 65 equispaced values of `t`.
pub fn fit_zeta_envelope(w: &ScalarField, ring: &Region) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = w.grid().spacing();
    let min_grad = 1e-6 / h;
    let mut bins = vec![0.0f64; ENVELOPE_BINS];
    for idx in interior_nodes(w, ring, STENCIL_MARGIN) {
        let (i, j) = w.grid().ij(idx);
        let d = jet(w, i, j);
        let g = d.grad_norm();
        if g <= min_grad {
            return Err(Error::precondition(format!(
                "gradient of w vanishes near {:?}",
                w.grid().point(idx)
            )));
        }
        let val = d.infinity_laplacian().abs() / g.powi(4);
        let b = ((w.values()[idx].clamp(0.0, 1.0) * ENVELOPE_BINS as f64) as usize).min(ENVELOPE_BINS - 1);
        bins[b] = bins[b].max(ENVELOPE_SAFETY * val);
    }
    for b in 1..ENVELOPE_BINS {
        bins[b] = bins[b].max(bins[b - 1]);
    }
    let t = (0..=ENVELOPE_BINS).map(|k| k as f64 / ENVELOPE_BINS as f64).collect();
    let mut zeta = bins.clone();
    zeta.push(bins[ENVELOPE_BINS - 1]);
    Ok((t, zeta))
}

/// Fits `zeta1` to the harmonic potential `w`, builds the barrier and checks
/// that `Delta_p f(w) >= 0`.
pub fn barrier_subsolution_check(w: &ScalarField, p: f64, ring: &Region, tol: f64) -> Result<(BarrierProfile, Report)> {
    require_convex_ring(ring)?;
    let (t, zeta) = fit_zeta_envelope(w, ring)?;
    let profile = construct_barrier(&t, &zeta, p)?;
    let report = barrier_subsolution_check_with(w, &profile, ring, tol)?;
    Ok((profile, report))
}

/// Sign of `Delta_p f(w)` at interior ring nodes for a given profile, divided
/// by `p |grad f(w)|^(p-2) |D^2 f(w)|`.
pub fn barrier_subsolution_check_with(w: &ScalarField, f: &BarrierProfile, ring: &Region, tol: f64) -> Result<Report> {
    if !w.grid().same_as(ring.grid()) {
        return Err(Error::GridMismatch);
    }
    let p = f.p;
    let h = w.grid().spacing();
    let min_grad = 1e-6 / h;
    let mut min_val = f64::INFINITY;
    let mut count = 0usize;
    for idx in interior_nodes(w, ring, STENCIL_MARGIN) {
        let (i, j) = w.grid().ij(idx);
        let d = jet(w, i, j);
        if d.grad_norm() <= min_grad {
            return Err(Error::precondition(format!(
                "gradient of w vanishes near {:?}",
                w.grid().point(idx)
            )));
        }
        let t = w.values()[idx];
        let composed = d.compose(f.derivative(t), f.second_derivative(t));
        min_val = min_val.min(composed.normalized_q_laplacian(p));
        count += 1;
    }
    let report = Report::new("barrier_subsolution", "barrier-is-p-subharmonic", tol)
        .config("p", p)
        .config("case", format!("p={p}"))
        .config("n", w.grid().n())
        .value("nodes", count as f64, "1");
    if count == 0 {
        return Ok(report.skipped("no interior nodes"));
    }
    Ok(report
        .value("min_normalized", min_val, "1")
        .value("f_invariants", if f.invariants_hold(1e-12) { 1.0 } else { 0.0 }, "1")
        .finish(min_val >= -tol && f.invariants_hold(1e-12)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_t(n: usize) -> Vec<f64> {
        (0..=n).map(|k| k as f64 / n as f64).collect()
    }

    #[test]
    fn identity_for_large_p_or_zero_weight() {
        let t = grid_t(50);
        let z: Vec<f64> = t.iter().map(|v| 3.0 + v).collect();
        let b = construct_barrier(&t, &z, 2.5).unwrap();
        assert!(b.f.iter().zip(&t).all(|(f, t)| (f - t).abs() < 1e-15));
        let b = construct_barrier(&t, &vec![0.0; 51], 1.5).unwrap();
        assert!(b.f.iter().zip(&t).all(|(f, t)| (f - t).abs() < 1e-14));
    }

    #[test]
    fn unit_weight_gives_exponential() {
        let t = grid_t(100);
        let b = construct_barrier(&t, &vec![1.0; 101], 1.5).unwrap();
        let e = std::f64::consts::E;
        for (f, t) in b.f.iter().zip(&t) {
            assert!((f - (t.exp() - 1.0) / (e - 1.0)).abs() < 1e-8);
        }
        assert!(b.invariants_hold(1e-12));
        assert!((b.second_derivative(0.3) - b.derivative(0.3)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let t = grid_t(4);
        assert!(construct_barrier(&t, &[1.0, -1.0, 1.0, 1.0, 1.0], 1.5).is_err());
        assert!(construct_barrier(&t, &[1.0; 5], 0.5).is_err());
        assert!(construct_barrier(&t, &[1.0, 1.0, f64::INFINITY, 1.0, 1.0], 1.5).is_err());
        assert!(construct_barrier(&[0.0, 0.6, 0.5, 1.0], &[1.0; 4], 1.5).is_err());
    }
}
