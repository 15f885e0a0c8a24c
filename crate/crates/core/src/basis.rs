//! Regression bases `g(u)` evaluated on canonical coordinates.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::domain::Domain;
use crate::error::{OgpError, Result};

/// A user-supplied basis evaluated on canonical coordinates.
pub type BasisFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum BasisKind {
    /// `g_i(u) = prod_{j in sets[i]} u_j`, dimensions zero-based.
    Monomial(Vec<Vec<usize>>),
    /// Row `i` is `(a_i0, a_i1, ..., a_id)` and `g_i(u) = a_i0 + sum_j a_ij u_j`.
    Affine(DMatrix<f64>),
    Opaque(BasisFn),
}

/// The vector of regression functions `g(u)` with `p` components on `[-1, 1]^d`.
#[derive(Clone)]
pub struct Basis {
    dim: usize,
    len: usize,
    kind: BasisKind,
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("Basis");
        s.field("dim", &self.dim).field("len", &self.len);
        match &self.kind {
            BasisKind::Monomial(sets) => s.field("monomial", sets),
            BasisKind::Affine(c) => s.field("affine", &c.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>()),
            BasisKind::Opaque(_) => s.field("opaque", &"<fn>"),
        };
        s.finish()
    }
}

impl Basis {
    /// Monomial basis from zero-based index sets.
    pub fn monomial(dim: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if dim == 0 {
            return Err(OgpError::Dimension("basis needs d >= 1".into()));
        }
        if sets.is_empty() {
            return Err(OgpError::InvalidParameter("basis needs at least one term".into()));
        }
        let mut normalized: Vec<Vec<usize>> = Vec::with_capacity(sets.len());
        for set in sets {
            let mut s = set.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != set.len() {
                return Err(OgpError::InvalidParameter(format!("repeated index in term {set:?}")));
            }
            if let Some(&j) = s.iter().find(|&&j| j >= dim) {
                return Err(OgpError::Dimension(format!("term index {j} out of range for d={dim}")));
            }
            if normalized.contains(&s) {
                return Err(OgpError::InvalidParameter(format!("duplicate term {s:?}")));
            }
            normalized.push(s);
        }
        Ok(Basis {
            dim,
            len: normalized.len(),
            kind: BasisKind::Monomial(normalized),
        })
    }

    /// `g(u) = 1`.
    pub fn constant(dim: usize) -> Self {
        Self::monomial(dim, vec![vec![]]).expect("constant basis is valid")
    }

    /// `g(u) = (1, u_1, ..., u_d)`.
    pub fn linear(dim: usize) -> Self {
        let mut sets = vec![vec![]];
        sets.extend((0..dim).map(|j| vec![j]));
        Self::monomial(dim, sets).expect("linear basis is valid")
    }

    /// Affine basis from a `p x (d + 1)` coefficient matrix in canonical coordinates.
    pub fn affine(coeffs: DMatrix<f64>) -> Result<Self> {
        if coeffs.ncols() < 2 || coeffs.nrows() == 0 {
            return Err(OgpError::Dimension(format!(
                "affine coefficients must be p x (d+1) with p, d >= 1, got {}x{}",
                coeffs.nrows(),
                coeffs.ncols()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(OgpError::InvalidParameter("non-finite affine coefficient".into()));
        }
        Ok(Basis {
            dim: coeffs.ncols() - 1,
            len: coeffs.nrows(),
            kind: BasisKind::Affine(coeffs),
        })
    }

    /// Affine basis whose rows are written in original coordinates `a_0 + sum_j a_j x_j`.
    pub fn affine_from_original(domain: &Domain, rows: &[Vec<f64>]) -> Result<Self> {
        let d = domain.dim();
        let (slope, offset) = domain.affine_coefficients();
        let mut coeffs = DMatrix::zeros(rows.len(), d + 1);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d + 1 {
                return Err(OgpError::Dimension(format!(
                    "affine row {i} has {} entries, expected {}",
                    row.len(),
                    d + 1
                )));
            }
            // x_j = (u_j - b_j) / a_j
            let mut c0 = row[0];
            for j in 0..d {
                c0 -= row[j + 1] * offset[j] / slope[j];
                coeffs[(i, j + 1)] = row[j + 1] / slope[j];
            }
            coeffs[(i, 0)] = c0;
        }
        Self::affine(coeffs)
    }

    pub fn opaque(dim: usize, len: usize, f: BasisFn) -> Result<Self> {
        if dim == 0 || len == 0 {
            return Err(OgpError::Dimension("opaque basis needs d >= 1 and p >= 1".into()));
        }
        Ok(Basis {
            dim,
            len,
            kind: BasisKind::Opaque(f),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of basis functions `p`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dim {
            return Err(OgpError::Dimension(format!(
                "basis has d={}, point has {} coordinates",
                self.dim,
                u.len()
            )));
        }
        Ok(self.eval_unchecked(u))
    }

    pub(crate) fn eval_unchecked(&self, u: &[f64]) -> Vec<f64> {
        match &self.kind {
            BasisKind::Monomial(sets) => sets
                .iter()
                .map(|s| s.iter().map(|&j| u[j]).product())
                .collect(),
            BasisKind::Affine(c) => (0..c.nrows())
                .map(|i| c[(i, 0)] + (0..self.dim).map(|j| c[(i, j + 1)] * u[j]).sum::<f64>())
                .collect(),
            BasisKind::Opaque(f) => f(u),
        }
    }

    /// The `n x p` model matrix with row `i` equal to `g(design[i])`.
    pub fn model_matrix(&self, design: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        if design.is_empty() {
            return Err(OgpError::Dimension("design needs at least one point".into()));
        }
        let mut g = DMatrix::zeros(design.len(), self.len);
        for (i, row) in design.iter().enumerate() {
            let vals = self.eval(row)?;
            if vals.len() != self.len {
                return Err(OgpError::Surrogate {
                    input: row.clone(),
                    message: format!("basis returned {} values, expected {}", vals.len(), self.len),
                });
            }
            for (k, v) in vals.into_iter().enumerate() {
                g[(i, k)] = v;
            }
        }
        Ok(g)
    }

    /// Writes the basis as a linear combination of monomials, `g = A m(u)`.
    ///
    /// Returns the monomial sets and the mixing matrix (`None` means identity).
    /// Opaque bases have no such representation.
    pub fn monomial_combination(&self) -> Option<(Vec<Vec<usize>>, Option<DMatrix<f64>>)> {
        match &self.kind {
            BasisKind::Monomial(sets) => Some((sets.clone(), None)),
            BasisKind::Affine(c) => {
                let mut sets = vec![vec![]];
                sets.extend((0..self.dim).map(|j| vec![j]));
                Some((sets, Some(c.clone())))
            }
            BasisKind::Opaque(_) => None,
        }
    }

    /// Maps canonical trend coefficients to coefficients of the same trend written in
    /// original coordinates. Only defined for monomial bases of degree at most one that
    /// contain the constant term (or whose domain is already centred).
    pub fn coefficients_to_original(&self, domain: &Domain, beta: &[f64]) -> Option<Vec<f64>> {
        let BasisKind::Monomial(sets) = &self.kind else {
            return None;
        };
        if sets.iter().any(|s| s.len() > 1) || domain.dim() != self.dim || beta.len() != sets.len() {
            return None;
        }
        let (slope, offset) = domain.affine_coefficients();
        let constant = sets.iter().position(|s| s.is_empty());
        let mut out = vec![0.0; beta.len()];
        let mut shift = 0.0;
        for (i, s) in sets.iter().enumerate() {
            if let Some(&j) = s.first() {
                out[i] = beta[i] * slope[j];
                shift += beta[i] * offset[j];
            }
        }
        match constant {
            Some(c) => out[c] = beta[c] + shift,
            None if shift == 0.0 => {}
            None => return None,
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_plus_linear() {
        let b = Basis::monomial(1, vec![vec![], vec![0]]).unwrap();
        assert_eq!(b.eval(&[0.3]).unwrap(), vec![1.0, 0.3]);
    }

    #[test]
    fn product_rule() {
        let b = Basis::monomial(2, vec![vec![], vec![0], vec![1], vec![0, 1]]).unwrap();
        let v = b.eval(&[0.5, -0.4]).unwrap();
        assert_eq!(v[..3], [1.0, 0.5, -0.4]);
        assert!((v[3] + 0.2).abs() < 1e-15);
    }

    #[test]
    fn product_rule_on_grid() {
        let sets = vec![vec![], vec![0], vec![2], vec![0, 1], vec![0, 1, 2]];
        let b = Basis::monomial(3, sets.clone()).unwrap();
        let grid: Vec<f64> = (0..5).map(|i| -1.0 + 0.5 * i as f64).collect();
        for &a in &grid {
            for &c in &grid {
                for &e in &grid {
                    let u = [a, c, e];
                    let v = b.eval(&u).unwrap();
                    for (k, s) in sets.iter().enumerate() {
                        let expect: f64 = s.iter().map(|&j| u[j]).product();
                        assert_eq!(v[k], expect);
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_sets() {
        assert!(Basis::monomial(2, vec![vec![], vec![]]).is_err());
        assert!(Basis::monomial(2, vec![vec![2]]).is_err());
        assert!(Basis::monomial(2, vec![vec![0, 0]]).is_err());
        // order inside a set does not matter
        assert!(Basis::monomial(2, vec![vec![0, 1], vec![1, 0]]).is_err());
    }

    #[test]
    fn model_matrices() {
        let c = Basis::constant(1);
        let g = c.model_matrix(&[vec![0.1], vec![0.2], vec![-0.9]]).unwrap();
        assert_eq!(g, DMatrix::from_element(3, 1, 1.0));

        let l = Basis::linear(1);
        let g = l.model_matrix(&[vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(g, DMatrix::from_row_slice(3, 2, &[1.0, -1.0, 1.0, 0.0, 1.0, 1.0]));

        let dom = Domain::new(vec![0.0], vec![1.0]).unwrap();
        let design: Vec<Vec<f64>> = (0..=8)
            .map(|i| dom.to_canonical(&[i as f64 / 8.0]).unwrap())
            .collect();
        let g = l.model_matrix(&design).unwrap();
        assert_eq!(g.shape(), (9, 2));
        for i in 0..9 {
            assert_eq!(g[(i, 1)], -1.0 + 0.25 * i as f64);
        }
    }

    #[test]
    fn affine_surrogate_in_original_coordinates() {
        // y0(x) = -7.97 + (2920, -0.257, 0.0119, 0.266) x on an arbitrary box
        let dom = Domain::new(
            vec![0.001, 10.0, 100.0, 1.0],
            vec![0.004, 40.0, 300.0, 5.0],
        )
        .unwrap();
        let rows = vec![
            vec![1.0, 0.0, 0.0, 0.0, 0.0],
            vec![-7.97, 2920.0, -0.257, 0.0119, 0.266],
        ];
        let b = Basis::affine_from_original(&dom, &rows).unwrap();
        assert_eq!(b.len(), 2);
        let x = [0.0025, 17.0, 250.0, 2.5];
        let y0 = -7.97 + 2920.0 * x[0] - 0.257 * x[1] + 0.0119 * x[2] + 0.266 * x[3];
        let v = b.eval(&dom.to_canonical(&x).unwrap()).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14);
        assert!((v[1] - y0).abs() < 1e-12 * y0.abs().max(1.0));
    }

    #[test]
    fn back_transform_of_linear_trend() {
        let dom = Domain::new(vec![0.0], vec![1.0]).unwrap();
        let b = Basis::linear(1);
        // m(u) = 0.7 + 0.45 u = 0.7 + 0.45 (2x - 1) = 0.25 + 0.9 x
        let orig = b.coefficients_to_original(&dom, &[0.7, 0.45]).unwrap();
        assert!((orig[0] - 0.25).abs() < 1e-15 && (orig[1] - 0.9).abs() < 1e-15);
        let inter = Basis::monomial(2, vec![vec![], vec![0, 1]]).unwrap();
        assert!(inter.coefficients_to_original(&Domain::canonical(2), &[1.0, 1.0]).is_none());
    }
}
