//! Closed forms for the p-capacitary potential of an annulus `a < |x| < rho`
//! in `R^n`.

use crate::error::{Error, Result};

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area(n: u32) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI * sphere_area(n - 2) / (n - 2) as f64,
    }
}

fn check(a: f64, rho: f64, p: f64, n: u32) -> Result<()> {
    if !(a > 0.0 && rho > a && rho.is_finite()) {
        return Err(Error::precondition(format!("need 0 < a < rho, got a = {a}, rho = {rho}")));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::invalid("p", format!("{p} must satisfy 1 < p < inf")));
    }
    if n < 2 {
        return Err(Error::invalid("n", "dimension must be at least 2"));
    }
    Ok(())
}

/// Exponent `(p - n) / (p - 1)`, or `None` on the logarithmic branch `p = n`.
fn exponent(p: f64, n: u32) -> Option<f64> {
    let n = n as f64;
    if (p - n).abs() < 1e-12 {
        None
    } else {
        Some((p - n) / (p - 1.0))
    }
}

/// Potential at radius `r`: 1 on `|x| = a`, 0 on `|x| = rho`.
pub fn radial_potential(a: f64, rho: f64, p: f64, n: u32, r: f64) -> Result<f64> {
    check(a, rho, p, n)?;
    if !(r >= a && r <= rho) {
        return Err(Error::precondition(format!("radius {r} outside [{a}, {rho}]")));
    }
    Ok(match exponent(p, n) {
        Some(b) => (r.powf(b) - rho.powf(b)) / (a.powf(b) - rho.powf(b)),
        None => (rho / r).ln() / (rho / a).ln(),
    })
}

/// `|u'(r)|` of the annulus potential.
pub fn radial_gradient(a: f64, rho: f64, p: f64, n: u32, r: f64) -> Result<f64> {
    check(a, rho, p, n)?;
    if !(r >= a && r <= rho) {
        return Err(Error::precondition(format!("radius {r} outside [{a}, {rho}]")));
    }
    Ok(match exponent(p, n) {
        Some(b) => (b * r.powf(b - 1.0) / (a.powf(b) - rho.powf(b))).abs(),
        None => 1.0 / (r * (rho / a).ln()),
    })
}

/// p-Dirichlet energy of the annulus potential.
pub fn radial_capacity(a: f64, rho: f64, p: f64, n: u32) -> Result<f64> {
    check(a, rho, p, n)?;
    let s = sphere_area(n);
    Ok(match exponent(p, n) {
        Some(b) => s * (b.abs() / (a.powf(b) - rho.powf(b)).abs()).powf(p - 1.0),
        None => s * (rho / a).ln().powf(1.0 - n as f64),
    })
}

/// The three terms of the extension inequality for concentric balls
/// `a < rho1 <= rho2`: energy gap `A`, extension energy `B` and flux term `C`.
pub fn radial_extension_terms(a: f64, rho1: f64, rho2: f64, p: f64, n: u32) -> Result<(f64, f64, f64)> {
    check(a, rho1, p, n)?;
    if rho2 < rho1 {
        return Err(Error::precondition("need rho1 <= rho2"));
    }
    if rho2 == rho1 {
        return Ok((0.0, 0.0, 0.0));
    }
    let s = sphere_area(n);
    let big_a = radial_capacity(a, rho1, p, n)? - radial_capacity(a, rho2, p, n)?;
    let big_b = match exponent(p, n) {
        Some(b) => {
            let d = (a.powf(b) - rho2.powf(b)).abs();
            (p - 1.0) * s * (b.abs() / d).powf(p) * (rho2.powf(b) - rho1.powf(b)) / b
        }
        None => (p - 1.0) * s * (rho2 / rho1).ln() / (rho2 / a).ln().powf(n as f64),
    };
    let g1 = radial_gradient(a, rho1, p, n, rho1)?;
    let g2 = radial_gradient(a, rho2, p, n, rho1)?;
    let u2 = radial_potential(a, rho2, p, n, rho1)?;
    let big_c = p * s * rho1.powi(n as i32 - 1) * u2 * (g1.powf(p - 1.0) - g2.powf(p - 1.0));
    Ok((big_a, big_b, big_c))
}

/// Optimal outer radius of `Cap_p(a, rho) + |S^{n-1}| rho^(n-1)`, returned
/// with its energy.
pub fn radial_optimal_radius(a: f64, p: f64, n: u32) -> Result<(f64, f64)> {
    check(a, 2.0 * a, p, n)?;
    let s = sphere_area(n);
    let energy = |rho: f64| -> f64 {
        radial_capacity(a, rho, p, n).unwrap_or(f64::INFINITY) + s * rho.powi(n as i32 - 1)
    };
    // geometric scan of rho - a, then golden section on the bracket
    let radii: Vec<f64> = (0..=160).map(|k| a * (1.0 + 1e-4 * 1.15f64.powi(k))).collect();
    let values: Vec<f64> = radii.iter().map(|&r| energy(r)).collect();
    let best = (0..values.len())
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("nonempty scan");
    if best == 0 || best + 1 == values.len() {
        return Err(Error::Numerical("no interior minimum of the radial energy was bracketed".into()));
    }
    let (mut lo, mut hi) = (radii[best - 1], radii[best + 1]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (energy(x1), energy(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = energy(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = energy(x2);
        }
    }
    let rho = 0.5 * (lo + hi);
    let lhs = (p - 1.0) * radial_gradient(a, rho, p, n, rho)?.powf(p);
    let rhs = (n - 1) as f64 / rho;
    if ((lhs - rhs) / rhs).abs() > 1e-6 {
        return Err(Error::Numerical(format!(
            "free boundary identity off at the radial optimum: {lhs} vs {rhs}"
        )));
    }
    Ok((rho, energy(rho)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn potential_examples() {
        assert_relative_eq!(radial_potential(1.0, 2.0, 2.0, 2, 2f64.sqrt()).unwrap(), 0.5, epsilon = 1e-14);
        assert_relative_eq!(radial_potential(1.0, 4.0, 3.0, 2, 2.25).unwrap(), 0.5, epsilon = 1e-14);
        for (p, n) in [(2.0, 2), (1.5, 2), (3.0, 2), (2.5, 3), (3.0, 3)] {
            assert_relative_eq!(radial_potential(0.5, 1.7, p, n, 0.5).unwrap(), 1.0, epsilon = 1e-13);
            assert!(radial_potential(0.5, 1.7, p, n, 1.7).unwrap().abs() < 1e-13);
        }
        assert!(radial_potential(2.0, 1.0, 2.0, 2, 1.5).is_err());
        assert!(radial_potential(1.0, 2.0, 2.0, 2, 2.5).is_err());
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert_relative_eq!(sphere_area(4), 2.0 * PI * PI, epsilon = 1e-12);
        assert_relative_eq!(sphere_area(5), 8.0 * PI * PI / 3.0, epsilon = 1e-12);
    }

    /// Midpoint quadrature of `|u'|^p |S| r^(n-1)` with `u'` from central
    /// differences of the potential itself.
    fn quadrature_capacity(a: f64, rho: f64, p: f64, n: u32) -> f64 {
        let m = 20000;
        let dr = (rho - a) / m as f64;
        (0..m)
            .map(|k| {
                let r = a + (k as f64 + 0.5) * dr;
                let d = (radial_potential(a, rho, p, n, r + 0.25 * dr).unwrap()
                    - radial_potential(a, rho, p, n, r - 0.25 * dr).unwrap())
                    / (0.5 * dr);
                d.abs().powf(p) * sphere_area(n) * r.powi(n as i32 - 1) * dr
            })
            .sum()
    }

    #[test]
    fn capacity_matches_quadrature() {
        for (p, n) in [(2.0, 2), (1.5, 2), (3.0, 2), (2.5, 3), (3.0, 3), (1.8, 3)] {
            let exact = radial_capacity(1.0, 2.5, p, n).unwrap();
            assert_relative_eq!(exact, quadrature_capacity(1.0, 2.5, p, n), max_relative = 1e-6);
        }
    }

    #[test]
    fn extension_terms_for_log_potentials() {
        let (a, b, c) = radial_extension_terms(1.0, 2.0, 3.0, 2.0, 2).unwrap();
        assert_relative_eq!(a, 3.3455, max_relative = 1e-3);
        assert_relative_eq!(b, 2.1108, max_relative = 1e-3);
        assert_relative_eq!(c, 2.4695, max_relative = 1e-3);
        assert!(0.0 <= a - b && a - b <= c);
        assert_eq!(radial_extension_terms(1.0, 2.0, 2.0, 2.0, 2).unwrap(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn optimal_radius_log_case() {
        let (rho, _) = radial_optimal_radius(1.0, 2.0, 2).unwrap();
        // independent root of rho ln^2 rho = 1 by bisection
        let (mut lo, mut hi) = (1.5f64, 3.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.ln().powi(2) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_relative_eq!(rho, lo, max_relative = 1e-7);
        assert!((rho - 2.0207).abs() < 1e-4);
        for p in [1.5, 3.0, 4.0] {
            assert!(radial_optimal_radius(1.0, p, 2).is_ok());
        }
        assert!(radial_optimal_radius(0.0, 2.0, 2).is_err());
    }
}
