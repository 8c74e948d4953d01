//! Minimal CSR storage with an IC(0)-preconditioned conjugate gradient.

#[derive(Debug, Clone)]
pub(crate) struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds an all-zero matrix from per-row sorted column lists.
    pub fn with_pattern(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        let vals = vec![0.0; cols.len()];
        Csr { n, row_ptr, cols, vals }
    }

    pub fn slot(&self, row: usize, col: usize) -> Option<usize> {
        let (a, b) = (self.row_ptr[row], self.row_ptr[row + 1]);
        self.cols[a..b].binary_search(&col).ok().map(|k| a + k)
    }

    pub fn clear(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }
}

/// Incomplete Cholesky factor restricted to the lower pattern of `a`.
pub(crate) struct IncompleteCholesky {
    l: Csr,
    diag: Vec<usize>,
}

impl IncompleteCholesky {
    pub fn new(a: &Csr) -> Self {
        let rows: Vec<Vec<usize>> = (0..a.n)
            .map(|i| {
                a.cols[a.row_ptr[i]..a.row_ptr[i + 1]]
                    .iter()
                    .copied()
                    .filter(|&j| j <= i)
                    .collect()
            })
            .collect();
        let mut l = Csr::with_pattern(rows);
        let mut diag = vec![0; a.n];
        for i in 0..a.n {
            let (li0, li1) = (l.row_ptr[i], l.row_ptr[i + 1]);
            for k in li0..li1 {
                let j = l.cols[k];
                let aij = a.vals[a.slot(i, j).expect("pattern")];
                // sum over common columns c < j of L_ic L_jc
                let mut s = 0.0;
                let (mut p, mut q) = (li0, l.row_ptr[j]);
                let qend = l.row_ptr[j + 1];
                while p < k && q < qend {
                    let (cp, cq) = (l.cols[p], l.cols[q]);
                    if cq >= j {
                        break;
                    }
                    match cp.cmp(&cq) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            s += l.vals[p] * l.vals[q];
                            p += 1;
                            q += 1;
                        }
                    }
                }
                if j < i {
                    l.vals[k] = (aij - s) / l.vals[diag[j]];
                } else {
                    let d = aij - s;
                    // breakdown guard: fall back to the unmodified diagonal
                    let d = if d > 1e-12 * aij.abs() { d } else { aij.abs().max(1e-300) };
                    l.vals[k] = d.sqrt();
                    diag[i] = k;
                }
            }
        }
        IncompleteCholesky { l, diag }
    }

    /// Solves `L L^T z = r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let l = &self.l;
        for i in 0..l.n {
            let mut s = r[i];
            for k in l.row_ptr[i]..self.diag[i] {
                s -= l.vals[k] * z[l.cols[k]];
            }
            z[i] = s / l.vals[self.diag[i]];
        }
        for i in (0..l.n).rev() {
            z[i] /= l.vals[self.diag[i]];
            let zi = z[i];
            for k in l.row_ptr[i]..self.diag[i] {
                z[l.cols[k]] -= l.vals[k] * zi;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned CG; returns `(iterations, relative residual)`.
pub(crate) fn pcg(a: &Csr, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> (usize, f64) {
    let n = a.n;
    let pre = IncompleteCholesky::new(a);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return (0, 0.0);
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = dot(&r, &r).sqrt() / bnorm;
    for it in 0..max_iter {
        if res <= rel_tol {
            return (it, res);
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return (it, res);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (max_iter, res)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> Csr {
        let rows = (0..n)
            .map(|i| {
                let mut r = Vec::new();
                if i > 0 {
                    r.push(i - 1);
                }
                r.push(i);
                if i + 1 < n {
                    r.push(i + 1);
                }
                r
            })
            .collect();
        let mut a = Csr::with_pattern(rows);
        for i in 0..n {
            let k = a.slot(i, i).unwrap();
            a.vals[k] = 2.0;
            if i > 0 {
                let k = a.slot(i, i - 1).unwrap();
                a.vals[k] = -1.0;
            }
            if i + 1 < n {
                let k = a.slot(i, i + 1).unwrap();
                a.vals[k] = -1.0;
            }
        }
        a
    }

    #[test]
    fn ic0_is_exact_for_tridiagonal() {
        // no fill-in on a tridiagonal matrix, so one PCG step solves it
        let a = laplacian_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; 50];
        let (it, res) = pcg(&a, &b, &mut x, 1e-12, 100);
        assert!(it <= 2 && res < 1e-12, "{it} {res}");
        let mut ax = vec![0.0; 50];
        a.matvec(&x, &mut ax);
        for i in 0..50 {
            assert!((ax[i] - b[i]).abs() < 1e-9);
        }
    }
}
