//! Separable stationary covariance families.
//!
//! Lengthscales follow the unscaled convention: the squared exponential uses
//! `exp{-(d/psi)^2}`, the exponential `exp{-|d|/psi}` and the Matérn-3/2
//! `(1 + |d|/psi) exp{-|d|/psi}`. The effect integrals in [`crate::effects`] are
//! derived for exactly these forms.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{OgpError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    SquaredExponential,
    Exponential,
    Matern32,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::SquaredExponential, Family::Exponential, Family::Matern32];

    pub fn name(self) -> &'static str {
        match self {
            Family::SquaredExponential => "squared_exponential",
            Family::Exponential => "exponential",
            Family::Matern32 => "matern32",
        }
    }

    /// Unit-variance one-dimensional correlation at separation `delta`.
    #[inline]
    pub fn correlation(self, delta: f64, psi: f64) -> f64 {
        let r = delta.abs() / psi;
        match self {
            Family::SquaredExponential => (-r * r).exp(),
            Family::Exponential => (-r).exp(),
            Family::Matern32 => (1.0 + r) * (-r).exp(),
        }
    }

    /// Whether the correlation has a derivative discontinuity at zero separation.
    pub fn has_kink(self) -> bool {
        !matches!(self, Family::SquaredExponential)
    }
}

impl std::str::FromStr for Family {
    type Err = OgpError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared_exponential" | "gaussian" | "se" => Ok(Family::SquaredExponential),
            "exponential" | "exp" => Ok(Family::Exponential),
            "matern32" | "matern" => Ok(Family::Matern32),
            other => Err(OgpError::Config(format!("unknown kernel family {other:?}"))),
        }
    }
}

/// Covariance family, variance and per-dimension lengthscales (canonical units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: Family,
    pub variance: f64,
    pub lengthscales: Vec<f64>,
}

/// A Gram matrix plus any warnings raised while assembling it.
#[derive(Debug, Clone)]
pub struct Gram {
    pub matrix: DMatrix<f64>,
    pub warnings: Vec<String>,
}

impl KernelSpec {
    pub fn new(family: Family, variance: f64, lengthscales: Vec<f64>) -> Result<Self> {
        let k = KernelSpec {
            family,
            variance,
            lengthscales,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(OgpError::InvalidParameter(format!(
                "variance must be positive, got {}",
                self.variance
            )));
        }
        if self.lengthscales.is_empty() {
            return Err(OgpError::Dimension("kernel needs at least one lengthscale".into()));
        }
        if let Some((j, p)) = self
            .lengthscales
            .iter()
            .enumerate()
            .find(|(_, p)| !(**p > 0.0 && p.is_finite()))
        {
            return Err(OgpError::InvalidParameter(format!(
                "lengthscale {j} must be positive, got {p}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn with_lengthscales(&self, lengthscales: Vec<f64>) -> Self {
        KernelSpec {
            lengthscales,
            ..self.clone()
        }
    }

    pub fn with_variance(&self, variance: f64) -> Self {
        KernelSpec {
            variance,
            ..self.clone()
        }
    }

    /// Unit-variance correlation `prod_j c_j(u_j, v_j)`.
    #[inline]
    pub fn correlation(&self, u: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.dim());
        debug_assert_eq!(v.len(), self.dim());
        match self.family {
            // single exponential keeps the product bit-stable for the common case
            Family::SquaredExponential => {
                let s: f64 = u
                    .iter()
                    .zip(v)
                    .zip(&self.lengthscales)
                    .map(|((a, b), p)| {
                        let r = (a - b) / p;
                        r * r
                    })
                    .sum();
                (-s).exp()
            }
            f => u
                .iter()
                .zip(v)
                .zip(&self.lengthscales)
                .map(|((a, b), p)| f.correlation(a - b, *p))
                .product(),
        }
    }

    /// `c(u, v) = sigma^2 prod_j c_j(u_j, v_j)`.
    #[inline]
    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        self.variance * self.correlation(u, v)
    }

    /// Symmetric `n x n` covariance matrix; duplicate rows produce a warning.
    pub fn cov_matrix(&self, design: &[Vec<f64>]) -> Result<Gram> {
        self.check_design(design)?;
        let n = design.len();
        let mut c = DMatrix::zeros(n, n);
        for i in 0..n {
            c[(i, i)] = self.variance;
            for j in (i + 1)..n {
                let v = self.eval(&design[i], &design[j]);
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        Ok(Gram {
            matrix: c,
            warnings: duplicate_warnings(design),
        })
    }

    /// The vector `(c(u, x_1), ..., c(u, x_n))`.
    pub fn cross_cov(&self, u: &[f64], design: &[Vec<f64>]) -> Result<DVector<f64>> {
        if u.len() != self.dim() {
            return Err(OgpError::Dimension(format!(
                "point has {} coordinates, kernel has d={}",
                u.len(),
                self.dim()
            )));
        }
        self.check_design(design)?;
        Ok(DVector::from_iterator(
            design.len(),
            design.iter().map(|x| self.eval(u, x)),
        ))
    }

    fn check_design(&self, design: &[Vec<f64>]) -> Result<()> {
        if let Some((i, row)) = design.iter().enumerate().find(|(_, r)| r.len() != self.dim()) {
            return Err(OgpError::Dimension(format!(
                "design row {i} has {} coordinates, kernel has d={}",
                row.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

pub(crate) fn duplicate_warnings(design: &[Vec<f64>]) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..design.len() {
        for j in (i + 1)..design.len() {
            if design[i] == design[j] {
                out.push(format!(
                    "design rows {i} and {j} coincide; the covariance matrix is singular"
                ));
            }
        }
    }
    out
}
