//! Zero-level extraction on the cell-center lattice.
//!
//! Loops are oriented with the negative side (the region) on the left, so
//! outer boundaries run counterclockwise and holes clockwise. Samples beyond
//! the lattice count as outside, which closes loops that reach the box.

use std::collections::{HashMap, HashSet};

use super::{Grid, Point};

pub type Polyline = Vec<Point>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    /// Lattice edge from `(i, j)` to `(i + 1, j)`.
    H(i64, i64),
    /// Lattice edge from `(i, j)` to `(i, j + 1)`.
    V(i64, i64),
}

pub fn marching_squares(grid: &Grid, phi: &[f64]) -> Vec<Polyline> {
    let n = grid.n() as i64;
    let h = grid.spacing();
    let pad = h;
    let value = |i: i64, j: i64| -> f64 {
        if i < 0 || j < 0 || i >= n || j >= n {
            pad
        } else {
            phi[(j * n + i) as usize]
        }
    };
    let coord = |i: i64| -grid.half_width() + (i as f64 + 0.5) * h;
    let position = |key: EdgeKey| -> Point {
        let (a, b, pa, pb) = match key {
            EdgeKey::H(i, j) => (value(i, j), value(i + 1, j), [coord(i), coord(j)], [coord(i + 1), coord(j)]),
            EdgeKey::V(i, j) => (value(i, j), value(i, j + 1), [coord(i), coord(j)], [coord(i), coord(j + 1)]),
        };
        let t = (a / (a - b)).clamp(0.0, 1.0);
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };

    let mut next: HashMap<EdgeKey, EdgeKey> = HashMap::new();
    for j in -1..n {
        for i in -1..n {
            let corners = [value(i, j), value(i + 1, j), value(i + 1, j + 1), value(i, j + 1)];
            let inside = corners.map(|v| v < 0.0);
            let count = inside.iter().filter(|&&b| b).count();
            if count == 0 || count == 4 {
                continue;
            }
            // square edges in counterclockwise order: bottom, right, top, left
            let edges = [EdgeKey::H(i, j), EdgeKey::V(i + 1, j), EdgeKey::H(i, j + 1), EdgeKey::V(i, j)];
            let mut exits = Vec::with_capacity(2);
            let mut entries = Vec::with_capacity(2);
            for e in 0..4 {
                let (a, b) = (inside[e], inside[(e + 1) % 4]);
                if a && !b {
                    exits.push(e);
                } else if !a && b {
                    entries.push(e);
                }
            }
            if exits.len() == 1 {
                next.insert(edges[exits[0]], edges[entries[0]]);
            } else {
                let center = corners.iter().sum::<f64>() / 4.0;
                for &x in &exits {
                    // connected insides pair an exit with the following entry,
                    // separated insides with the preceding one
                    let partner = if center < 0.0 { (x + 1) % 4 } else { (x + 3) % 4 };
                    debug_assert!(entries.contains(&partner));
                    next.insert(edges[x], edges[partner]);
                }
            }
        }
    }

    // deterministic traversal order
    let mut starts: Vec<EdgeKey> = next.keys().copied().collect();
    starts.sort_by_key(|k| match *k {
        EdgeKey::H(i, j) => (j, i, 0),
        EdgeKey::V(i, j) => (j, i, 1),
    });
    let mut loops = Vec::new();
    let mut visited: HashSet<EdgeKey> = HashSet::with_capacity(next.len());
    for start in starts {
        if visited.contains(&start) {
            continue;
        }
        let mut poly: Polyline = Vec::new();
        let mut key = start;
        loop {
            visited.insert(key);
            let p = position(key);
            let dup = poly
                .last()
                .is_some_and(|q: &Point| (q[0] - p[0]).abs() + (q[1] - p[1]).abs() < 1e-12 * h);
            if !dup {
                poly.push(p);
            }
            key = match next.get(&key) {
                Some(k) => *k,
                None => break,
            };
            if key == start {
                break;
            }
        }
        if poly.len() > 1 {
            let (f, l) = (poly[0], poly[poly.len() - 1]);
            if (f[0] - l[0]).abs() + (f[1] - l[1]).abs() < 1e-12 * h {
                poly.pop();
            }
        }
        if poly.len() >= 3 {
            loops.push(poly);
        }
    }
    loops
}

pub(crate) fn loop_length(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .sum()
}
