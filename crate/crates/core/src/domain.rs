//! Box-shaped input domains and the affine map onto the canonical cube `[-1, 1]^d`.
//!
//! Every model in this crate works in canonical coordinates. A [`Domain`] records the
//! original box so that data, lengthscales and trend coefficients can be moved between
//! the two coordinate systems.

use serde::{Deserialize, Serialize};

use crate::error::{OgpError, Result};

/// Relative slack (in units of box width) accepted when checking that a point lies inside.
pub const INSIDE_TOL: f64 = 1e-12;

/// An axis-aligned box `[lower_1, upper_1] x ... x [lower_d, upper_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain", into = "RawDomain")]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawDomain> for Domain {
    type Error = OgpError;
    fn try_from(raw: RawDomain) -> Result<Self> {
        Domain::new(raw.lower, raw.upper)
    }
}

impl From<Domain> for RawDomain {
    fn from(d: Domain) -> Self {
        RawDomain {
            lower: d.lower,
            upper: d.upper,
        }
    }
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(OgpError::Dimension(format!(
                "lower has {} entries, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.is_empty() {
            return Err(OgpError::Dimension("domain needs d >= 1".into()));
        }
        for (j, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(OgpError::DegenerateBound {
                    index: j,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Domain { lower, upper })
    }

    /// The canonical cube itself.
    pub fn canonical(dim: usize) -> Self {
        Domain {
            lower: vec![-1.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    /// Maps `x` to `u_j = (2 x_j - lower_j - upper_j) / (upper_j - lower_j)`.
    ///
    /// Points within [`INSIDE_TOL`] of the boundary are accepted and clamped onto it.
    pub fn to_canonical(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        x.iter()
            .enumerate()
            .map(|(j, &xj)| {
                let (lo, hi) = (self.lower[j], self.upper[j]);
                let slack = INSIDE_TOL * (hi - lo);
                if !(xj >= lo - slack && xj <= hi + slack) {
                    return Err(OgpError::OutOfDomain {
                        index: j,
                        value: xj,
                        lower: lo,
                        upper: hi,
                    });
                }
                let u = (2.0 * xj - lo - hi) / (hi - lo);
                Ok(u.clamp(-1.0, 1.0))
            })
            .collect()
    }

    /// Inverse of [`Domain::to_canonical`]; endpoints are reproduced exactly.
    pub fn from_canonical(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        Ok(u.iter()
            .enumerate()
            .map(|(j, &uj)| {
                let (lo, hi) = (self.lower[j], self.upper[j]);
                if uj <= -1.0 {
                    lo
                } else if uj >= 1.0 {
                    hi
                } else {
                    0.5 * (lo + hi) + 0.5 * uj * (hi - lo)
                }
            })
            .collect())
    }

    /// Rescales lengthscales given on the original box to canonical units (`2 / width`).
    pub fn lengthscales_to_canonical(&self, psi: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(psi)?;
        Ok(psi
            .iter()
            .enumerate()
            .map(|(j, p)| p * 2.0 / self.width(j))
            .collect())
    }

    /// Slope `a_j` and offset `b_j` of `u_j = a_j x_j + b_j`.
    pub fn affine_coefficients(&self) -> (Vec<f64>, Vec<f64>) {
        (0..self.dim())
            .map(|j| {
                let w = self.width(j);
                (2.0 / w, -(self.lower[j] + self.upper[j]) / w)
            })
            .unzip()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(OgpError::Dimension(format!(
                "point has {} coordinates, domain has d={}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}
