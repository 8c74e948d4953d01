use fbconvex::grid::{measure, rasterize, Grid, Region, Shape};
use fbconvex::plap::{p_energy, solve_p_capacitary, PLapConfig, Scheme, SweepOrder};
use fbconvex::Error;
use proptest::prelude::*;

fn ring(n: usize, half: f64, k: Shape, omega: Shape) -> (Region, Region) {
    let g = Grid::new(n, half).unwrap();
    (rasterize(&k, &g).unwrap(), rasterize(&omega, &g).unwrap())
}

/// Annulus potential evaluated independently of the library.
fn annulus(a: f64, rho: f64, p: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| {
        if (p - 2.0).abs() < 1e-12 {
            (rho / r).ln() / (rho / a).ln()
        } else {
            let b = (p - 2.0) / (p - 1.0);
            (r.powf(b) - rho.powf(b)) / (a.powf(b) - rho.powf(b))
        }
    }
}

fn max_error(n: usize, p: f64) -> f64 {
    let (k, o) = ring(n, 2.5, Shape::disk(1.0), Shape::disk(2.0));
    let sol = solve_p_capacitary(&k, &o, &PLapConfig::with_p(p)).unwrap();
    let exact = annulus(1.0, 2.0, p);
    let g = *sol.field.grid();
    (0..g.len())
        .filter(|&i| !sol.field.fixed()[i])
        .map(|i| {
            let [x, y] = g.point(i);
            (sol.field.values()[i] - exact(x.hypot(y))).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn log_potential_at_sqrt2() {
    let (k, o) = ring(256, 2.5, Shape::disk(1.0), Shape::disk(2.0));
    let sol = solve_p_capacitary(&k, &o, &PLapConfig::with_p(2.0)).unwrap();
    let s = 2f64.sqrt();
    for q in [[s, 0.0], [0.0, -s], [1.0, 1.0]] {
        let v = sol.field.sample(q);
        assert!((v - 0.5).abs() < 0.01, "u{q:?} = {v}");
    }
}

#[test]
fn p3_potential_at_radius_2_25() {
    let (k, o) = ring(128, 4.5, Shape::disk(1.0), Shape::disk(4.0));
    let sol = solve_p_capacitary(&k, &o, &PLapConfig::with_p(3.0)).unwrap();
    let v = sol.field.sample([2.25, 0.0]);
    assert!((v - 0.5).abs() < 0.01, "u = {v}");
}

#[test]
fn second_order_for_p2() {
    let errs: Vec<f64> = [64, 128, 256].iter().map(|&n| max_error(n, 2.0)).collect();
    let order = (errs[0] / errs[2]).log2() / 2.0;
    assert!(order >= 1.5, "errors {errs:?}, order {order}");
}

#[test]
fn converges_for_other_exponents() {
    for p in [1.5, 3.0] {
        let errs: Vec<f64> = [64, 256].iter().map(|&n| max_error(n, p)).collect();
        assert!(errs[1] < 5e-3 && errs[1] < errs[0] / 2.5, "p {p}: {errs:?}");
    }
}

#[test]
fn solution_respects_bounds_and_boundary_data() {
    let (k, o) = ring(64, 3.0, Shape::square(1.2), Shape::ellipse(2.4, 1.8));
    for p in [1.5, 2.0, 4.0] {
        let sol = solve_p_capacitary(&k, &o, &PLapConfig::with_p(p)).unwrap();
        for i in 0..k.grid().len() {
            let v = sol.field.values()[i];
            assert!((0.0..=1.0).contains(&v));
            if k.mask()[i] {
                assert!(v == 1.0 && sol.field.fixed()[i]);
            } else if !o.mask()[i] {
                assert!(v == 0.0 && sol.field.fixed()[i]);
            }
        }
    }
}

#[test]
fn energy_history_is_non_increasing() {
    let (k, o) = ring(64, 3.0, Shape::lshape(1.6, 1.6, 0.7), Shape::disk(2.4));
    for p in [1.5, 2.0, 3.0] {
        for scheme in [Scheme::Newton, Scheme::GaussSeidel(SweepOrder::Multicolor)] {
            let cfg = PLapConfig {
                scheme,
                max_iter: 5000,
                tol_rel_energy: 1e-9,
                ..PLapConfig::with_p(p)
            };
            let sol = solve_p_capacitary(&k, &o, &cfg).unwrap();
            for w in sol.energy_history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-14), "p {p} {scheme:?}: {} -> {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn sweep_orders_agree_with_newton() {
    let (k, o) = ring(32, 3.0, Shape::disk(1.0), Shape::ellipse(2.5, 2.0));
    for p in [1.5, 2.0, 3.0] {
        let reference = solve_p_capacitary(&k, &o, &PLapConfig::with_p(p)).unwrap();
        for order in [SweepOrder::Lexicographic, SweepOrder::Multicolor] {
            let cfg = PLapConfig {
                scheme: Scheme::GaussSeidel(order),
                tol_rel_energy: 1e-14,
                max_iter: 20000,
                ..PLapConfig::with_p(p)
            };
            let gs = solve_p_capacitary(&k, &o, &cfg).unwrap();
            let diff = gs.field.max_abs_diff(&reference.field);
            assert!(diff < 1e-4, "p {p} {order:?}: {diff}");
        }
    }
}

#[test]
fn thin_gap_is_a_ramp() {
    let g = Grid::new(128, 2.0).unwrap();
    let h = g.spacing();
    let k = rasterize(&Shape::disk(1.0), &g).unwrap();
    let o = rasterize(&Shape::disk(1.0 + 2.0 * h), &g).unwrap();
    let per = measure(&k).1;
    for p in [1.5, 2.0, 3.0] {
        let sol = solve_p_capacitary(&k, &o, &PLapConfig::with_p(p)).unwrap();
        let ratio = sol.energy * (2.0 * h).powf(p - 1.0) / per;
        assert!((0.7..1.3).contains(&ratio), "p {p}: ratio {ratio}");
    }
}

#[test]
fn preconditions_are_enforced() {
    let (k, o) = ring(64, 3.0, Shape::disk(2.0), Shape::disk(1.0));
    assert!(matches!(solve_p_capacitary(&k, &o, &PLapConfig::default()), Err(Error::Precondition(_))));
    let g = Grid::new(64, 3.0).unwrap();
    let touching = rasterize(&Shape::disk(1.0 + 0.5 * g.spacing()), &g).unwrap();
    let k = rasterize(&Shape::disk(1.0), &g).unwrap();
    assert!(matches!(solve_p_capacitary(&k, &touching, &PLapConfig::default()), Err(Error::Precondition(_))));
    assert!(matches!(
        solve_p_capacitary(&k, &o, &PLapConfig::with_p(1.0)),
        Err(Error::InvalidArgument { .. })
    ));
}

#[test]
fn iteration_cap_returns_last_iterate() {
    let (k, o) = ring(32, 3.0, Shape::disk(1.0), Shape::disk(2.0));
    let cfg = PLapConfig {
        scheme: Scheme::GaussSeidel(SweepOrder::Lexicographic),
        max_iter: 3,
        ..PLapConfig::with_p(2.0)
    };
    match solve_p_capacitary(&k, &o, &cfg) {
        Err(Error::NotConverged { iterations, last, .. }) => {
            assert_eq!(iterations, 3);
            assert!(last.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn midpoint_energy_of_log_potential() {
    // u = ln(e/r) on 1 < r < e has energy 2 pi
    let e = std::f64::consts::E;
    let (k, o) = ring(256, 3.2, Shape::disk(1.0), Shape::disk(e));
    let sol = solve_p_capacitary(&k, &o, &PLapConfig::with_p(2.0)).unwrap();
    let domain = o.subtract(&k).unwrap();
    let mid = p_energy(&sol.field, 2.0, &domain);
    let two_pi = 2.0 * std::f64::consts::PI;
    assert!((mid - two_pi).abs() / two_pi < 0.03, "{mid}");
    assert!((sol.energy - two_pi).abs() / two_pi < 0.005, "{}", sol.energy);
}

#[test]
fn dilation_scales_field_and_energy() {
    for p in [1.5, 2.0, 3.0] {
        let (k, o) = ring(64, 2.5, Shape::disk(1.0), Shape::ellipse(2.0, 1.6));
        let base = solve_p_capacitary(&k, &o, &PLapConfig::with_p(p)).unwrap();
        let s = 1.7;
        let (ks, os) = ring(64, 2.5 * s, Shape::disk(s), Shape::ellipse(2.0 * s, 1.6 * s));
        let scaled = solve_p_capacitary(&ks, &os, &PLapConfig::with_p(p)).unwrap();
        let diff = scaled.field.max_abs_diff(&base.field);
        assert!(diff < 1e-7, "p {p}: {diff}");
        let expected = base.energy * s.powf(2.0 - p);
        assert!((scaled.energy - expected).abs() < 1e-7 * expected, "p {p}");
        // same physical box, different sampling: agreement to discretization error
        let (kf, of) = ring(128, 2.5 * s, Shape::disk(s), Shape::ellipse(2.0 * s, 1.6 * s));
        let fine = solve_p_capacitary(&kf, &of, &PLapConfig::with_p(p)).unwrap();
        for q in [[1.5, 0.0], [0.0, 1.3], [1.0, 0.8]] {
            let a = base.field.sample(q);
            let b = fine.field.sample([q[0] * s, q[1] * s]);
            assert!((a - b).abs() < 0.02, "p {p} at {q:?}: {a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, .. ProptestConfig::default() })]

    #[test]
    fn larger_inner_set_gives_larger_potential(
        r1 in 0.5f64..1.0,
        grow in 0.15f64..0.5,
        ea in 2.3f64..2.8,
        eb in 1.9f64..2.3,
        cx in -0.2f64..0.2,
        p in prop::sample::select(vec![1.5, 2.0, 3.0]),
    ) {
        let g = Grid::new(48, 3.0).unwrap();
        let o = rasterize(&Shape::ellipse(ea, eb), &g).unwrap();
        let small = rasterize(&Shape::disk_at([cx, 0.0], r1), &g).unwrap();
        let big = rasterize(&Shape::Ellipse { center: [cx, 0.0], a: r1 + grow, b: r1 + 0.5 * grow }, &g).unwrap();
        let u1 = solve_p_capacitary(&small, &o, &PLapConfig::with_p(p)).unwrap();
        let u2 = solve_p_capacitary(&big, &o, &PLapConfig::with_p(p)).unwrap();
        for (a, b) in u1.field.values().iter().zip(u2.field.values()) {
            prop_assert!(*b >= *a - 1e-8, "{} < {}", b, a);
        }
    }
}
