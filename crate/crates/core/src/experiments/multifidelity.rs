//! Multi-fidelity model `y(x) = b1 + b2 y0(x) + z(x)` where `y0` is a cheap surrogate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{join, num, Tabular, SCHEMA_VERSION};
use crate::basis::Basis;
use crate::design::latin_hypercube;
use crate::domain::Domain;
use crate::error::{OgpError, Result};
use crate::estimate::{fit_fixed, Dataset, Method};
use crate::kernel::{Family, KernelSpec};
use crate::ortho::{OrthoMode, OrthoSettings};

pub type SurrogateFn = Arc<dyn Fn(&[f64]) -> std::result::Result<f64, String> + Send + Sync>;

/// Low-fidelity response in original coordinates.
#[derive(Clone)]
pub enum Surrogate {
    /// `y0(x) = intercept + slopes . x`; orthogonalized in closed form.
    Affine { intercept: f64, slopes: Vec<f64> },
    /// Any evaluator; orthogonalized by quadrature.
    Callable(SurrogateFn),
}

impl std::fmt::Debug for Surrogate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Surrogate::Affine { intercept, slopes } => f
                .debug_struct("Affine")
                .field("intercept", intercept)
                .field("slopes", slopes)
                .finish(),
            Surrogate::Callable(_) => f.write_str("Callable(..)"),
        }
    }
}

impl Surrogate {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = match self {
            Surrogate::Affine { intercept, slopes } => {
                Ok(intercept + slopes.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            }
            Surrogate::Callable(f) => f(x),
        };
        match v {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(v) => Err(OgpError::Surrogate {
                input: x.to_vec(),
                message: format!("non-finite value {v}"),
            }),
            Err(message) => Err(OgpError::Surrogate {
                input: x.to_vec(),
                message,
            }),
        }
    }

    /// The basis `(1, y0)` on the canonical cube of `domain`.
    pub fn basis(&self, domain: &Domain) -> Result<Basis> {
        match self {
            Surrogate::Affine { intercept, slopes } => {
                if slopes.len() != domain.dim() {
                    return Err(OgpError::Dimension(format!(
                        "surrogate has {} slopes for d={}",
                        slopes.len(),
                        domain.dim()
                    )));
                }
                let mut one = vec![0.0; domain.dim() + 1];
                one[0] = 1.0;
                let mut y0 = vec![*intercept];
                y0.extend_from_slice(slopes);
                Basis::affine_from_original(domain, &[one, y0])
            }
            Surrogate::Callable(f) => {
                let f = f.clone();
                let domain = domain.clone();
                // errors surface as NaN here and are reported by the quadrature setup
                Basis::opaque(
                    domain.dim(),
                    2,
                    Arc::new(move |u: &[f64]| {
                        let y0 = domain
                            .from_canonical(u)
                            .ok()
                            .and_then(|x| f(&x).ok())
                            .unwrap_or(f64::NAN);
                        vec![1.0, y0]
                    }),
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiFidelityConfig {
    /// Lengthscales as multiples of each input's range.
    pub lengthscale_factor: f64,
    pub methods: Vec<Method>,
    /// Nodes per dimension for the quadrature path; `None` uses the default order.
    #[serde(default)]
    pub quadrature_order: Option<usize>,
    /// Use quadrature even for an affine surrogate.
    #[serde(default)]
    pub force_quadrature: bool,
}

impl Default for MultiFidelityConfig {
    fn default() -> Self {
        MultiFidelityConfig {
            lengthscale_factor: 2.0,
            methods: vec![Method::Ls, Method::Ogp, Method::Uk],
            quadrature_order: None,
            force_quadrature: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiFidelityRow {
    pub method: Method,
    /// Coefficients of `(1, y0)`.
    pub beta_hat: Vec<f64>,
    pub sigma2_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiFidelityReport {
    pub schema_version: u32,
    pub config: MultiFidelityConfig,
    pub orthogonalization: OrthoMode,
    /// Canonical lengthscales of the Matérn kernel.
    pub lengthscales: Vec<f64>,
    pub n: usize,
    pub rows: Vec<MultiFidelityRow>,
}

impl MultiFidelityReport {
    pub fn beta(&self, method: Method) -> Option<&[f64]> {
        self.rows.iter().find(|r| r.method == method).map(|r| r.beta_hat.as_slice())
    }
}

/// Fits `(b1, b2)` under each configured method with a Matérn 3/2 kernel whose lengthscales
/// are `lengthscale_factor` times the input ranges.
pub fn study_multifidelity(
    x: &[Vec<f64>],
    y: &[f64],
    domain: &Domain,
    surrogate: &Surrogate,
    cfg: &MultiFidelityConfig,
) -> Result<MultiFidelityReport> {
    // evaluate the surrogate on the data first so a failure echoes the original input
    for row in x {
        surrogate.eval(row)?;
    }
    let design = x.iter().map(|r| domain.to_canonical(r)).collect::<Result<Vec<_>>>()?;
    let data = Dataset::new(design, y.to_vec())?;
    let basis = surrogate.basis(domain)?;
    let ortho = match surrogate {
        Surrogate::Affine { .. } if !cfg.force_quadrature => OrthoSettings::closed_form(),
        _ => OrthoSettings::quadrature(cfg.quadrature_order),
    };
    let psi_orig: Vec<f64> = (0..domain.dim())
        .map(|j| cfg.lengthscale_factor * domain.width(j))
        .collect();
    let psi = domain.lengthscales_to_canonical(&psi_orig)?;
    let kernel = KernelSpec::new(Family::Matern32, 1.0, psi.clone())?;
    let rows = cfg
        .methods
        .iter()
        .map(|&method| {
            let fit = fit_fixed(&data, method, &basis, &kernel, &ortho)?;
            Ok(MultiFidelityRow {
                method,
                beta_hat: fit.beta_hat,
                sigma2_hat: fit.sigma2_hat,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiFidelityReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        orthogonalization: ortho.mode,
        lengthscales: psi,
        n: data.len(),
        rows,
    })
}

/// Synthetic high-fidelity data `y = b1 + b2 y0(x) + s r(u)` where `r` is orthogonal to
/// every affine function on the canonical cube, so `(b1, b2)` is the projection target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub intercept: f64,
    pub slopes: Vec<f64>,
    pub beta: (f64, f64),
    pub residual_scale: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            lower: vec![0.0, 10.0],
            upper: vec![4.0, 30.0],
            intercept: 1.5,
            slopes: vec![0.8, -0.05],
            beta: (0.5, 1.2),
            residual_scale: 0.3,
            n: 30,
            seed: 0,
        }
    }
}

/// Smooth residual orthogonal to `1, u_1, ..., u_d` on `[-1, 1]^d`.
pub fn orthogonal_residual(u: &[f64]) -> f64 {
    use std::f64::consts::PI;
    let d = u.len();
    let mut r = u[0] * u[0] - 1.0 / 3.0;
    for v in &u[1..] {
        r += (PI * v).cos();
    }
    if d >= 2 {
        r += 0.5 * (PI * u[0]).sin() * (PI * u[d - 1]).sin();
    }
    r
}

pub struct SyntheticData {
    pub domain: Domain,
    pub surrogate: Surrogate,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

pub fn synthetic_multifidelity(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    let domain = Domain::new(cfg.lower.clone(), cfg.upper.clone())?;
    let surrogate = Surrogate::Affine {
        intercept: cfg.intercept,
        slopes: cfg.slopes.clone(),
    };
    let design = latin_hypercube(cfg.n, domain.dim(), cfg.seed);
    let mut x = Vec::with_capacity(cfg.n);
    let mut y = Vec::with_capacity(cfg.n);
    for u in &design {
        let xi = domain.from_canonical(u)?;
        y.push(cfg.beta.0 + cfg.beta.1 * surrogate.eval(&xi)? + cfg.residual_scale * orthogonal_residual(u));
        x.push(xi);
    }
    Ok(SyntheticData { domain, surrogate, x, y })
}

impl Tabular for MultiFidelityReport {
    fn csv_header(&self) -> Vec<String> {
        ["method", "orthogonalization", "beta1", "beta2", "sigma2", "lengthscales"]
            .map(String::from)
            .to_vec()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mode = match self.orthogonalization {
            OrthoMode::ClosedForm => "closed_form",
            OrthoMode::Quadrature => "quadrature",
        };
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.method.name().to_string(),
                    mode.to_string(),
                    num(r.beta_hat[0]),
                    num(r.beta_hat[1]),
                    num(r.sigma2_hat),
                    join(&self.lengthscales),
                ]
            })
            .collect()
    }
}
