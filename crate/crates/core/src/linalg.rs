//! Dense factorizations shared by the orthogonalization and estimation code.

use nalgebra::{DMatrix, DVector};

use crate::error::{OgpError, Result};

const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-6;

/// Cholesky factor `A + jitter I = L L^T` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    l: DMatrix<f64>,
    jitter: f64,
}

impl SpdFactor {
    /// Factors `a`; on failure retries with diagonal jitter `1e-12 tr(A)/n`, growing by
    /// tenfold steps up to `1e-6 tr(A)/n`, then gives up.
    pub fn new(a: &DMatrix<f64>, context: &str) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || n != a.ncols() {
            return Err(OgpError::Dimension(format!(
                "{context}: expected a non-empty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(OgpError::Conditioning(format!("{context}: non-finite entry")));
        }
        if let Some(l) = cholesky_lower(a) {
            return Ok(SpdFactor { l, jitter: 0.0 });
        }
        let scale = a.trace() / n as f64;
        let mut rel = JITTER_START;
        while rel <= JITTER_MAX * (1.0 + 1e-9) {
            let jitter = rel * scale;
            let mut b = a.clone();
            for i in 0..n {
                b[(i, i)] += jitter;
            }
            if let Some(l) = cholesky_lower(&b) {
                log::debug!("{context}: factored with jitter {jitter:e}");
                return Ok(SpdFactor { l, jitter });
            }
            rel *= 10.0;
        }
        Err(OgpError::NotPositiveDefinite {
            context: context.to_string(),
            jitter: JITTER_MAX * scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// `L^{-1} B`.
    pub fn solve_lower(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.l
            .solve_lower_triangular(b)
            .expect("Cholesky factor has a positive diagonal")
    }

    pub fn solve_lower_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.l
            .solve_lower_triangular(b)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `A^{-1} b` by two triangular solves.
    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let y = self.solve_lower_vec(b);
        self.l
            .tr_solve_lower_triangular(&y)
            .expect("Cholesky factor has a positive diagonal")
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let y = self.solve_lower(b);
        self.l
            .tr_solve_lower_triangular(&y)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `b^T A^{-1} b`.
    pub fn quad_form(&self, b: &DVector<f64>) -> f64 {
        self.solve_lower_vec(b).norm_squared()
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }
}

fn cholesky_lower(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = nalgebra::Cholesky::new(a.clone())?;
    let l = chol.unpack();
    if l.diagonal().iter().all(|d| d.is_finite() && *d > 0.0) {
        Some(l)
    } else {
        None
    }
}

/// Indices of columns that are (numerically) linear combinations of earlier columns.
pub fn dependent_columns(g: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for k in 0..g.ncols() {
        let col = g.column(k).into_owned();
        let norm0 = col.norm();
        if norm0 == 0.0 {
            dependent.push(k);
            continue;
        }
        let mut v = col;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let r = v.norm();
        if r <= 1e-10 * norm0 {
            dependent.push(k);
        } else {
            basis.push(v / r);
        }
    }
    dependent
}

/// Errors with the dependent column indices unless `g` has full column rank.
pub fn require_full_column_rank(g: &DMatrix<f64>) -> Result<()> {
    if g.nrows() < g.ncols() {
        return Err(OgpError::RankDeficient {
            columns: (g.nrows()..g.ncols()).collect(),
        });
    }
    let dep = dependent_columns(g);
    if dep.is_empty() {
        Ok(())
    } else {
        Err(OgpError::RankDeficient { columns: dep })
    }
}

/// Least-squares solution of a full-column-rank system by Householder QR.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    require_full_column_rank(a)?;
    let p = a.ncols();
    let qr = a.clone().qr();
    let qtb = qr.q().transpose() * b;
    let r = qr.r();
    let rhs = qtb.rows(0, p).into_owned();
    r.solve_upper_triangular(&rhs)
        .ok_or_else(|| OgpError::Conditioning("singular triangular factor in least squares".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jitter_ladder_rescues_semidefinite_matrix() {
        let a = DMatrix::from_element(2, 2, 3.0);
        let f = SpdFactor::new(&a, "test").unwrap();
        assert!(f.jitter() > 0.0 && f.jitter() <= 1e-6 * 3.0);
    }

    #[test]
    fn indefinite_matrix_fails() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            SpdFactor::new(&a, "H"),
            Err(OgpError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn solves_and_log_det() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let f = SpdFactor::new(&a, "a").unwrap();
        assert_eq!(f.jitter(), 0.0);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = f.solve_vec(&b);
        assert!((&a * &x - &b).norm() < 1e-13);
        assert!((f.log_det() - a.determinant().ln()).abs() < 1e-13);
        assert!((f.quad_form(&b) - b.dot(&x)).abs() < 1e-13);
    }

    #[test]
    fn dependent_columns_are_named() {
        let g = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 2.0, 1.0, 1.0, 2.0, 1.0, 2.0, 2.0, 1.0, 3.0, 2.0]);
        assert_eq!(dependent_columns(&g), vec![2]);
        match require_full_column_rank(&g) {
            Err(OgpError::RankDeficient { columns }) => assert_eq!(columns, vec![2]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn least_squares_recovers_exact_fit() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let beta = DVector::from_vec(vec![0.3, -1.2]);
        let b = &a * &beta;
        let x = least_squares(&a, &b).unwrap();
        assert!((x - beta).norm() < 1e-13);
    }
}
