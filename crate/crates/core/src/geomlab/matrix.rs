use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::Report;

/// Small dense symmetric matrix; serialized as a JSON array of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    m: DMatrix<f64>,
    spd: bool,
}

impl SymMatrix {
    /// Accepts a matrix symmetric up to rounding and stores its symmetric part.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::invalid("matrix", format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix", "entries must be finite"));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        if (&m - m.transpose()).amax() > 1e-12 * scale {
            return Err(Error::invalid("matrix", "not symmetric"));
        }
        let m = 0.5 * (&m + m.transpose());
        let spd = m.clone().symmetric_eigenvalues().min() > 0.0;
        Ok(SymMatrix { m, spd })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("matrix", "rows must all have the matrix dimension"));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn is_spd(&self) -> bool {
        self.spd
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.m.clone().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// `<A x, x>`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        v.dot(&(&self.m * &v))
    }

    fn require_spd(&self, name: &str) -> Result<()> {
        if self.spd {
            Ok(())
        } else {
            Err(Error::invalid(name, "matrix is not positive definite"))
        }
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(a: SymMatrix) -> Self {
        a.m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// Random SPD matrix `G G^T + 0.1 I` with entries of `G` uniform in `[-1, 1]`.
pub fn random_spd<R: Rng>(rng: &mut R, dim: usize) -> SymMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let a = &g * g.transpose() + DMatrix::identity(dim, dim) * 0.1;
    SymMatrix::new(a).expect("symmetric by construction")
}

/// Mean curvature `2 Tr A` of the graph `e = <A x, x>` at the origin.
pub fn graph_mean_curvature(a: &SymMatrix) -> f64 {
    2.0 * a.trace()
}

#[derive(Debug, Clone)]
pub struct InfConvolution {
    /// `2 (B1^-1 + B2^-1)^-1`.
    pub matrix: SymMatrix,
    /// Relative Frobenius gap between `B1 (B1 + B2)^-1 B2` and `(B1^-1 + B2^-1)^-1`.
    pub identity_residual: f64,
    /// `Y` with optimal `y' = Y x'`, namely `2 (B1 + B2)^-1 B2`.
    pub minimizer_map: DMatrix<f64>,
}

/// Quadratic form of `x -> inf_{y + z = 2x} (<B1 y, y> + <B2 z, z>) / 2`.
pub fn inf_convolution_matrix(b1: &SymMatrix, b2: &SymMatrix) -> Result<InfConvolution> {
    b1.require_spd("B1")?;
    b2.require_spd("B2")?;
    if b1.dim() != b2.dim() {
        return Err(Error::invalid("B2", "dimension differs from B1"));
    }
    let inv = |m: &DMatrix<f64>| {
        m.clone()
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| Error::Numerical("Cholesky factorization failed".into()))
    };
    let (m1, m2) = (b1.matrix(), b2.matrix());
    let harmonic = inv(&(inv(m1)? + inv(m2)?))?;
    let sum_inv = inv(&(m1 + m2))?;
    let product = m1 * &sum_inv * m2;
    let identity_residual = (&product - &harmonic).norm() / harmonic.norm();
    let matrix = SymMatrix::new(0.5 * (&harmonic + harmonic.transpose()) * 2.0)?;
    Ok(InfConvolution {
        matrix,
        identity_residual,
        minimizer_map: 2.0 * sum_inv * m2,
    })
}

/// `min_y (<B1 y, y> + <B2 (2x - y), 2x - y>) / 2` by conjugate gradients on
/// the objective itself, without forming any inverse.
pub fn inf_convolution_value_numeric(b1: &SymMatrix, b2: &SymMatrix, x: &[f64]) -> f64 {
    let (m1, m2) = (b1.matrix(), b2.matrix());
    let x = DVector::from_column_slice(x);
    let objective = |y: &DVector<f64>| {
        let z = 2.0 * &x - y;
        0.5 * (y.dot(&(m1 * y)) + z.dot(&(m2 * &z)))
    };
    let grad = |y: &DVector<f64>| m1 * y - m2 * (2.0 * &x - y);
    let mut y = x.clone();
    let mut g = grad(&y);
    let mut d = -&g;
    for _ in 0..4 * x.len() + 10 {
        if g.norm() <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
        // curvature of the objective along d, from a difference of gradients
        let hd = grad(&(&y + &d)) - &g;
        let curv = d.dot(&hd);
        if curv <= 0.0 {
            break;
        }
        let t = -g.dot(&d) / curv;
        y += t * &d;
        let g_new = grad(&y);
        let beta = (g_new.dot(&g_new) / g.dot(&g)).max(0.0);
        d = -&g_new + beta * d;
        g = g_new;
    }
    objective(&y)
}

/// Checks `1 / Tr(2 (B1^-1 + B2^-1)^-1) >= 1 / (2 Tr B1) + 1 / (2 Tr B2)`.
pub fn trace_inequality_check(b1: &SymMatrix, b2: &SymMatrix) -> Result<Report> {
    let conv = inf_convolution_matrix(b1, b2)?;
    let lhs = 1.0 / conv.matrix.trace();
    let rhs = 1.0 / (2.0 * b1.trace()) + 1.0 / (2.0 * b2.trace());
    let tol = 1e-12 * lhs;
    let margin = lhs - rhs;
    Ok(Report::new("trace_inequality", "trace-of-harmonic-mean", tol)
        .value("lhs", lhs, "1/length")
        .value("rhs", rhs, "1/length")
        .value("margin", margin, "1/length")
        .value("identity_residual", conv.identity_residual, "1")
        .config("dim", b1.dim())
        .finish(margin >= -tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn symmetry_and_spd_flag() {
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).map(|m| !m.is_spd()).unwrap());
        assert!(SymMatrix::diagonal(&[1.0, 2.0]).unwrap().is_spd());
        let a: SymMatrix = serde_json::from_str("[[2.0, 1.0], [1.0, 2.0]]").unwrap();
        assert_eq!(a.eigenvalues().len(), 2);
        assert_eq!(serde_json::to_string(&a).unwrap(), "[[2.0,1.0],[1.0,2.0]]");
    }

    #[test]
    fn graph_curvature_examples() {
        assert_eq!(graph_mean_curvature(&SymMatrix::diagonal(&[1.0, 2.0]).unwrap()), 6.0);
        assert_eq!(graph_mean_curvature(&SymMatrix::diagonal(&[0.0, 0.0]).unwrap()), 0.0);
        let rho = 3.0;
        assert_relative_eq!(graph_mean_curvature(&SymMatrix::diagonal(&[0.5 / rho]).unwrap()), 1.0 / rho);
    }

    #[test]
    fn inf_convolution_examples() {
        let b = SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let m = inf_convolution_matrix(&b, &b).unwrap();
        assert!((m.matrix.matrix() - b.matrix()).amax() < 1e-14);
        let m = inf_convolution_matrix(&SymMatrix::diagonal(&[1.0]).unwrap(), &SymMatrix::diagonal(&[3.0]).unwrap())
            .unwrap();
        assert_relative_eq!(m.matrix.get(0, 0), 1.5, epsilon = 1e-14);
        // grid search over y of (y^2 + 3 (2 - y)^2) / 2 at x = 1
        let best = (0..=200000)
            .map(|k| {
                let y = k as f64 * 1e-5;
                0.5 * (y * y + 3.0 * (2.0 - y).powi(2))
            })
            .fold(f64::INFINITY, f64::min);
        assert!((best - 1.5).abs() < 1e-8);
        let m = inf_convolution_matrix(
            &SymMatrix::diagonal(&[1.0, 1.0]).unwrap(),
            &SymMatrix::diagonal(&[1.0, 4.0]).unwrap(),
        )
        .unwrap();
        assert!((m.matrix.matrix() - DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.6]))).amax() < 1e-14);
        assert!(m.identity_residual < 1e-14);
        let non_spd = SymMatrix::diagonal(&[1.0, -1.0]).unwrap();
        assert!(inf_convolution_matrix(&non_spd, &non_spd).is_err());
    }

    #[test]
    fn trace_inequality_examples() {
        let r = trace_inequality_check(&SymMatrix::diagonal(&[2.0]).unwrap(), &SymMatrix::diagonal(&[4.0]).unwrap())
            .unwrap();
        assert!(r.pass);
        assert_relative_eq!(r.get("lhs").unwrap(), 0.375, epsilon = 1e-14);
        assert_relative_eq!(r.get("rhs").unwrap(), 0.375, epsilon = 1e-14);
        let r = trace_inequality_check(
            &SymMatrix::diagonal(&[1.0, 1.0]).unwrap(),
            &SymMatrix::diagonal(&[1.0, 4.0]).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(r.get("lhs").unwrap(), 1.0 / 2.6, epsilon = 1e-14);
        assert_relative_eq!(r.get("rhs").unwrap(), 0.35, epsilon = 1e-14);
    }
}
