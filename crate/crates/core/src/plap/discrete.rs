//! Discrete p-energy of a ring `Omega \ K` on the cell-center lattice.
//!
//! Every free node owns four quadrants (east/west times north/south). In a
//! quadrant the gradient is built from the one-sided differences towards the
//! two axis neighbours. A neighbour inside `K` or outside `Omega` is replaced
//! by the interface point found by linear interpolation of the level set, at
//! distance `theta * h`, carrying the Dirichlet value.
//!
//! With extents `e = 1/2` towards a free neighbour and `e = theta` towards an
//! interface, a quadrant has weight `(e_x + e_y) h^2 / 4` and scales the
//! difference along axis `c` by `sqrt(2 e_c / (e_x + e_y))`. For `p = 2` the
//! energy is then exactly the symmetric cut-cell Laplacian, which is second
//! order in the maximum norm.

use crate::error::{Error, Result};
use crate::grid::{Grid, Region, ScalarField};

use super::sparse::Csr;

/// Smallest admissible interface fraction; closer cuts are snapped to it.
pub(crate) const MIN_THETA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Neighbor {
    Free(usize),
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub(crate) struct Quadrant {
    pub owner: usize,
    pub nx: Neighbor,
    pub ny: Neighbor,
    /// Scaled inverse step lengths along x and y.
    pub ax: f64,
    pub ay: f64,
    pub weight: f64,
    /// CSR slots of the local Hessian, row-major over `vars()`.
    slots: [usize; 9],
}

impl Quadrant {
    /// Free variables of the quadrant with their x and y derivative weights.
    fn vars(&self) -> ([usize; 3], [f64; 3], [f64; 3], usize) {
        let mut idx = [self.owner, 0, 0];
        let mut cx = [-self.ax, 0.0, 0.0];
        let mut cy = [-self.ay, 0.0, 0.0];
        let mut m = 1;
        if let Neighbor::Free(k) = self.nx {
            idx[m] = k;
            cx[m] = self.ax;
            m += 1;
        }
        if let Neighbor::Free(k) = self.ny {
            idx[m] = k;
            cy[m] = self.ay;
            m += 1;
        }
        (idx, cx, cy, m)
    }

    #[inline]
    pub fn gradient(&self, u: &[f64]) -> [f64; 2] {
        let ui = u[self.owner];
        let vx = match self.nx {
            Neighbor::Free(k) => u[k],
            Neighbor::Fixed(v) => v,
        };
        let vy = match self.ny {
            Neighbor::Free(k) => u[k],
            Neighbor::Fixed(v) => v,
        };
        [self.ax * (vx - ui), self.ay * (vy - ui)]
    }
}

/// Regularized integrand `(|g|^2 + eps^2)^(p/2)` and its derivatives.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Integrand {
    pub p: f64,
    pub eps: f64,
}

impl Integrand {
    #[inline]
    pub fn value(&self, g: [f64; 2]) -> f64 {
        let s = g[0] * g[0] + g[1] * g[1] + self.eps * self.eps;
        s.powf(0.5 * self.p)
    }

    /// `(F, F'/|g|, second coefficient)` with `dF/dg = a g` and
    /// `d2F/dg2 = a I + b g g^T`.
    #[inline]
    pub fn derivatives(&self, g: [f64; 2]) -> (f64, f64, f64) {
        let p = self.p;
        let s = g[0] * g[0] + g[1] * g[1] + self.eps * self.eps;
        let f = s.powf(0.5 * p);
        let a = p * f / s;
        let b = p * (p - 2.0) * f / (s * s);
        (f, a, b)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RingProblem {
    pub grid: Grid,
    /// Grid node of each unknown.
    pub nodes: Vec<usize>,
    /// Unknown index of each grid node.
    pub unknown: Vec<Option<usize>>,
    pub in_k: Vec<bool>,
    pub quads: Vec<Quadrant>,
    /// Quadrants touching each unknown.
    pub touching: Vec<Vec<usize>>,
    pub pattern: Csr,
}

impl RingProblem {
    pub fn new(k: &Region, omega: &Region) -> Result<Self> {
        let grid = *k.grid();
        if !grid.same_as(omega.grid()) {
            return Err(Error::GridMismatch);
        }
        let n = grid.n();
        let h = grid.spacing();
        let (pk, po) = (k.phi(), omega.phi());
        let in_k: Vec<bool> = pk.iter().map(|&v| v < 0.0).collect();
        let mut unknown = vec![None; grid.len()];
        let mut nodes = Vec::new();
        for idx in 0..grid.len() {
            if !in_k[idx] && po[idx] < 0.0 {
                unknown[idx] = Some(nodes.len());
                nodes.push(idx);
            }
        }
        if nodes.is_empty() {
            return Err(Error::precondition("the ring between K and Omega has no interior nodes"));
        }

        // neighbour along one axis: free unknown, or an interface cut (value, theta)
        let axis = |idx: usize, di: i64, dj: i64| -> (Neighbor, f64) {
            let (i, j) = grid.ij(idx);
            let (ni, nj) = (i as i64 + di, j as i64 + dj);
            if ni < 0 || nj < 0 || ni >= n as i64 || nj >= n as i64 {
                return (Neighbor::Fixed(0.0), 0.5);
            }
            let nb = grid.index(ni as usize, nj as usize);
            if let Some(u) = unknown[nb] {
                return (Neighbor::Free(u), 1.0);
            }
            if in_k[nb] {
                let t = pk[idx] / (pk[idx] - pk[nb]);
                (Neighbor::Fixed(1.0), t.clamp(MIN_THETA, 1.0))
            } else {
                let t = po[idx] / (po[idx] - po[nb]);
                (Neighbor::Fixed(0.0), t.clamp(MIN_THETA, 1.0))
            }
        };

        let mut quads = Vec::with_capacity(4 * nodes.len());
        for (owner, &idx) in nodes.iter().enumerate() {
            let xs = [axis(idx, 1, 0), axis(idx, -1, 0)];
            let ys = [axis(idx, 0, 1), axis(idx, 0, -1)];
            for &(nx, tx) in &xs {
                for &(ny, ty) in &ys {
                    let ex = if matches!(nx, Neighbor::Free(_)) { 0.5 } else { tx };
                    let ey = if matches!(ny, Neighbor::Free(_)) { 0.5 } else { ty };
                    let sum = ex + ey;
                    quads.push(Quadrant {
                        owner,
                        nx,
                        ny,
                        ax: (2.0 * ex / sum).sqrt() / (tx * h),
                        ay: (2.0 * ey / sum).sqrt() / (ty * h),
                        weight: 0.25 * sum * h * h,
                        slots: [0; 9],
                    });
                }
            }
        }

        let m = nodes.len();
        let mut rows: Vec<Vec<usize>> = vec![Vec::with_capacity(9); m];
        let mut touching: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (qi, q) in quads.iter().enumerate() {
            let (idx, _, _, cnt) = q.vars();
            for a in 0..cnt {
                touching[idx[a]].push(qi);
                for b in 0..cnt {
                    rows[idx[a]].push(idx[b]);
                }
            }
        }
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
        }
        let pattern = Csr::with_pattern(rows);
        for q in quads.iter_mut() {
            let (idx, _, _, cnt) = q.vars();
            for a in 0..cnt {
                for b in 0..cnt {
                    q.slots[a * 3 + b] = pattern.slot(idx[a], idx[b]).expect("pattern");
                }
            }
        }
        Ok(RingProblem {
            grid,
            nodes,
            unknown,
            in_k,
            quads,
            touching,
            pattern,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Initial guess interpolating between the two level sets.
    pub fn initial_guess(&self, k: &Region, omega: &Region) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|&idx| {
                let a = -omega.phi()[idx];
                let b = k.phi()[idx].max(0.0);
                if a + b > 0.0 {
                    a / (a + b)
                } else {
                    1.0
                }
            })
            .collect()
    }

    /// Restriction of a full-grid field to the unknowns, clamped to `[0, 1]`.
    pub fn restrict(&self, field: &ScalarField) -> Vec<f64> {
        self.nodes.iter().map(|&idx| field.values()[idx].clamp(0.0, 1.0)).collect()
    }

    pub fn energy(&self, u: &[f64], f: Integrand) -> f64 {
        self.quads.iter().map(|q| q.weight * f.value(q.gradient(u))).sum()
    }

    /// Unregularized energy `sum w |g|^p`.
    pub fn p_energy(&self, u: &[f64], p: f64) -> f64 {
        self.quads
            .iter()
            .map(|q| {
                let g = q.gradient(u);
                q.weight * (g[0] * g[0] + g[1] * g[1]).powf(0.5 * p)
            })
            .sum()
    }

    /// Unregularized energy of the quadrants owned by each grid node.
    pub fn node_p_energy(&self, u: &[f64], p: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for q in &self.quads {
            let g = q.gradient(u);
            out[self.nodes[q.owner]] += q.weight * (g[0] * g[0] + g[1] * g[1]).powf(0.5 * p);
        }
        out
    }

    /// Energy gradient and Hessian (the latter written into `hess`).
    pub fn assemble(&self, u: &[f64], f: Integrand, grad: &mut [f64], hess: &mut Csr) -> f64 {
        grad.iter_mut().for_each(|v| *v = 0.0);
        hess.clear();
        let mut energy = 0.0;
        for q in &self.quads {
            let g = q.gradient(u);
            let (val, a, b) = f.derivatives(g);
            let w = q.weight;
            energy += w * val;
            let (idx, cx, cy, cnt) = q.vars();
            let (gx, gy) = (w * a * g[0], w * a * g[1]);
            // local Hessian in g-space: w (a I + b g g^T)
            let hxx = w * (a + b * g[0] * g[0]);
            let hxy = w * b * g[0] * g[1];
            let hyy = w * (a + b * g[1] * g[1]);
            for r in 0..cnt {
                grad[idx[r]] += cx[r] * gx + cy[r] * gy;
                let (rx, ry) = (cx[r] * hxx + cy[r] * hxy, cx[r] * hxy + cy[r] * hyy);
                for c in 0..cnt {
                    hess.vals[q.slots[r * 3 + c]] += rx * cx[c] + ry * cy[c];
                }
            }
        }
        energy
    }

    /// Energy of the quadrants touching unknown `k` with `u[k]` replaced by `t`,
    /// together with its first and second derivatives in `t`.
    pub fn local(&self, u: &mut [f64], k: usize, t: f64, f: Integrand) -> (f64, f64, f64) {
        let saved = u[k];
        u[k] = t;
        let (mut e, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for &qi in &self.touching[k] {
            let q = &self.quads[qi];
            let g = q.gradient(u);
            let (val, a, b) = f.derivatives(g);
            let (idx, cx, cy, cnt) = q.vars();
            let (mut sx, mut sy) = (0.0, 0.0);
            for r in 0..cnt {
                if idx[r] == k {
                    sx += cx[r];
                    sy += cy[r];
                }
            }
            let gs = g[0] * sx + g[1] * sy;
            e += q.weight * val;
            d1 += q.weight * a * gs;
            d2 += q.weight * (a * (sx * sx + sy * sy) + b * gs * gs);
        }
        u[k] = saved;
        (e, d1, d2)
    }

    /// Full-grid field: 1 on K, 0 outside Omega, `u` on the unknowns.
    pub fn to_field(&self, u: &[f64]) -> ScalarField {
        let mut values = vec![0.0; self.grid.len()];
        let mut fixed = vec![true; self.grid.len()];
        for idx in 0..self.grid.len() {
            match self.unknown[idx] {
                Some(k) => {
                    values[idx] = u[k];
                    fixed[idx] = false;
                }
                None if self.in_k[idx] => values[idx] = 1.0,
                None => {}
            }
        }
        ScalarField::new(self.grid, values, fixed).expect("finite iterate")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize, Shape};

    fn ring(n: usize) -> RingProblem {
        let g = Grid::new(n, 3.0).unwrap();
        let k = rasterize(&Shape::disk(1.0), &g).unwrap();
        let o = rasterize(&Shape::disk(2.0), &g).unwrap();
        RingProblem::new(&k, &o).unwrap()
    }

    #[test]
    fn assembled_gradient_matches_finite_differences() {
        let pr = ring(24);
        let f = Integrand { p: 1.7, eps: 1e-3 };
        let u: Vec<f64> = (0..pr.len()).map(|i| 0.5 + 0.3 * ((i as f64) * 0.37).sin()).collect();
        let mut grad = vec![0.0; pr.len()];
        let mut hess = pr.pattern.clone();
        pr.assemble(&u, f, &mut grad, &mut hess);
        for k in [0, pr.len() / 3, pr.len() / 2, pr.len() - 1] {
            let step = 1e-6;
            let mut up = u.clone();
            up[k] += step;
            let mut um = u.clone();
            um[k] -= step;
            let fd = (pr.energy(&up, f) - pr.energy(&um, f)) / (2.0 * step);
            assert!((fd - grad[k]).abs() < 1e-5 * (1.0 + grad[k].abs()), "{fd} vs {}", grad[k]);
            let (_, d1, d2) = pr.local(&mut u.clone(), k, u[k], f);
            assert!((d1 - grad[k]).abs() < 1e-9 * (1.0 + d1.abs()));
            let diag = hess.vals[hess.slot(k, k).unwrap()];
            assert!((d2 - diag).abs() < 1e-9 * (1.0 + d2.abs()));
        }
    }

    #[test]
    fn weights_tile_the_ring() {
        let pr = ring(128);
        let total: f64 = pr.quads.iter().map(|q| q.weight).sum();
        let exact = std::f64::consts::PI * 3.0;
        assert!((total - exact).abs() / exact < 0.01, "{total}");
    }
}
