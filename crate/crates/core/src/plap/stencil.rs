//! Centred finite differences of a solved potential away from its boundary.

use crate::grid::{Region, ScalarField};

/// Gradient and Hessian at a node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Jet {
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl Jet {
    pub fn grad_norm(&self) -> f64 {
        self.grad[0].hypot(self.grad[1])
    }

    pub fn laplacian(&self) -> f64 {
        self.hess[0][0] + self.hess[1][1]
    }

    /// `<D^2 u grad u, grad u>`.
    pub fn infinity_laplacian(&self) -> f64 {
        let [gx, gy] = self.grad;
        let h = self.hess;
        gx * gx * h[0][0] + 2.0 * gx * gy * h[0][1] + gy * gy * h[1][1]
    }

    pub fn hess_norm(&self) -> f64 {
        let h = self.hess;
        (h[0][0] * h[0][0] + 2.0 * h[0][1] * h[0][1] + h[1][1] * h[1][1]).sqrt()
    }

    /// Jet of `f(u)` given `f'` and `f''` at `u`.
    pub fn compose(&self, d1: f64, d2: f64) -> Jet {
        let [gx, gy] = self.grad;
        let h = self.hess;
        Jet {
            grad: [d1 * gx, d1 * gy],
            hess: [
                [d1 * h[0][0] + d2 * gx * gx, d1 * h[0][1] + d2 * gx * gy],
                [d1 * h[0][1] + d2 * gx * gy, d1 * h[1][1] + d2 * gy * gy],
            ],
        }
    }

    /// `(Delta u + (q - 2) Delta_inf u / |grad u|^2) / |D^2 u|`, that is the
    /// q-Laplacian divided by `q |grad u|^(q-2) |D^2 u|`.
    pub fn normalized_q_laplacian(&self, q: f64) -> f64 {
        let g2 = self.grad[0] * self.grad[0] + self.grad[1] * self.grad[1];
        let hn = self.hess_norm();
        if hn == 0.0 {
            return 0.0;
        }
        (self.laplacian() + (q - 2.0) * self.infinity_laplacian() / g2) / hn
    }

    /// `q |grad u|^(q-2) Delta u + q (q-2) |grad u|^(q-4) Delta_inf u`.
    pub fn q_laplacian(&self, q: f64) -> f64 {
        let g = self.grad_norm();
        q * g.powf(q - 2.0) * self.laplacian() + q * (q - 2.0) * g.powf(q - 4.0) * self.infinity_laplacian()
    }
}

pub(crate) fn jet(u: &ScalarField, i: usize, j: usize) -> Jet {
    let h = u.grid().spacing();
    let v = |a: usize, b: usize| u.get(a, b);
    let c = v(i, j);
    let gx = (v(i + 1, j) - v(i - 1, j)) / (2.0 * h);
    let gy = (v(i, j + 1) - v(i, j - 1)) / (2.0 * h);
    let hxx = (v(i + 1, j) - 2.0 * c + v(i - 1, j)) / (h * h);
    let hyy = (v(i, j + 1) - 2.0 * c + v(i, j - 1)) / (h * h);
    let hxy = (v(i + 1, j + 1) - v(i + 1, j - 1) - v(i - 1, j + 1) + v(i - 1, j - 1)) / (4.0 * h * h);
    Jet {
        grad: [gx, gy],
        hess: [[hxx, hxy], [hxy, hyy]],
    }
}

/// Nodes of `ring` whose whole `(2 margin + 1)^2` neighbourhood is free.
pub(crate) fn interior_nodes(u: &ScalarField, ring: &Region, margin: usize) -> Vec<usize> {
    let g = u.grid();
    let n = g.n();
    let fixed = u.fixed();
    let mut out = Vec::new();
    for j in margin..n.saturating_sub(margin) {
        for i in margin..n.saturating_sub(margin) {
            let idx = g.index(i, j);
            if !ring.mask()[idx] {
                continue;
            }
            let free = (j - margin..=j + margin).all(|b| (i - margin..=i + margin).all(|a| !fixed[g.index(a, b)]));
            if free {
                out.push(idx);
            }
        }
    }
    out
}
