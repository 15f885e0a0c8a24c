//! Nyström discretization of the Karhunen–Loève eigenproblem
//! `int c(u, s) f(s) ds = lambda f(u)` on the canonical cube.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{OgpError, Result};
use crate::estimate::Covariance;
use crate::quadrature::{TensorGrid, DEFAULT_NODE_BUDGET};

/// Symmetric covariance evaluator `(u, v) -> c(u, v)`.
pub type Evaluator = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Largest node count for which the dense eigenproblem is attempted.
pub const DENSE_NODE_LIMIT: usize = 4096;

const SIGN_THRESHOLD: f64 = 1e-8;

impl Covariance {
    /// Wraps the covariance as an [`Evaluator`]; evaluation errors become NaN.
    pub fn evaluator(&self) -> Evaluator {
        let cov = self.clone();
        Arc::new(move |u, v| cov.eval(u, v).unwrap_or(f64::NAN))
    }
}

#[derive(Clone)]
pub struct EigenSystem {
    /// Descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// `values[(a, k)] = f_k(nodes[a])`, orthonormal under the quadrature weights.
    pub values: DMatrix<f64>,
    evaluator: Evaluator,
}

impl std::fmt::Debug for EigenSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EigenSystem")
            .field("eigenvalues", &self.eigenvalues)
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenSummary {
    pub eigenvalues: Vec<f64>,
    pub quad_order: usize,
    pub dim: usize,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.nodes.first().map_or(0, Vec::len)
    }

    /// Nyström extension `f_k(u) = lambda_k^{-1} sum_a w_a c(u, x_a) f_k(x_a)`.
    pub fn eigenfunction(&self, k: usize, u: &[f64]) -> f64 {
        let lam = self.eigenvalues[k];
        if lam <= 0.0 {
            return 0.0;
        }
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(a, (x, w))| w * (self.evaluator)(u, x) * self.values[(a, k)])
            .sum();
        s / lam
    }

    /// Quadrature inner product `int f_k(s) q(s) ds` over the nodes.
    pub fn integral_against(&self, k: usize, mut q: impl FnMut(&[f64]) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(a, (x, w))| w * q(x) * self.values[(a, k)])
            .sum()
    }

    pub fn summary(&self, quad_order: usize) -> EigenSummary {
        EigenSummary {
            eigenvalues: self.eigenvalues.clone(),
            quad_order,
            dim: self.dim(),
        }
    }
}

/// Leading `k` eigenpairs of `W^{1/2} K W^{1/2}` on a tensor Gauss–Legendre grid with
/// `quad_order` nodes per dimension.
pub fn nystrom_eigensystem(evaluator: Evaluator, dim: usize, quad_order: usize, k: usize) -> Result<EigenSystem> {
    if dim == 0 {
        return Err(OgpError::Dimension("dimension must be positive".into()));
    }
    if quad_order == 0 {
        return Err(OgpError::InvalidParameter("quadrature order must be positive".into()));
    }
    if k > quad_order {
        return Err(OgpError::InvalidParameter(format!(
            "requested {k} eigenpairs from a quadrature of order {quad_order}"
        )));
    }
    let grid = TensorGrid::new(quad_order, dim, DEFAULT_NODE_BUDGET.min(DENSE_NODE_LIMIT))?;
    let (nodes, weights): (Vec<Vec<f64>>, Vec<f64>) = grid.points().unzip();
    let n = nodes.len();
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();

    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = sw[i] * sw[j] * evaluator(&nodes[i], &nodes[j]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(OgpError::Conditioning("covariance evaluation failed on the quadrature grid".into()));
    }
    let scale = (0..n).map(|i| a[(i, i)] / weights[i]).fold(0.0f64, f64::max);
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));

    let mut eigenvalues = Vec::with_capacity(k);
    let mut values = DMatrix::zeros(n, k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        let lam = eig.eigenvalues[idx];
        if lam < -1e-10 * scale {
            log::warn!("eigenvalue {lam:e} below tolerance for a covariance of scale {scale:e}");
        }
        eigenvalues.push(lam.max(0.0));
        for a in 0..n {
            values[(a, col)] = eig.eigenvectors[(a, idx)] / sw[a];
        }
        fix_sign(values.column_mut(col).as_mut_slice());
    }
    Ok(EigenSystem {
        eigenvalues,
        nodes,
        weights,
        values,
        evaluator,
    })
}

fn fix_sign(col: &mut [f64]) {
    if let Some(first) = col.iter().find(|v| v.abs() > SIGN_THRESHOLD) {
        if *first < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// `grid.len() x k` table of Nyström-extended eigenfunctions. Each column is signed so
/// its first entry above `1e-8` in magnitude is positive.
pub fn eigenfunction_table(es: &EigenSystem, grid: &[Vec<f64>]) -> DMatrix<f64> {
    let k = es.len();
    let mut t = DMatrix::zeros(grid.len(), k);
    for c in 0..k {
        for (r, u) in grid.iter().enumerate() {
            t[(r, c)] = es.eigenfunction(c, u);
        }
        fix_sign(t.column_mut(c).as_mut_slice());
    }
    t
}
