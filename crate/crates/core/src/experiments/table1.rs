//! One-dimensional comparison: `y(x) = sin(2x)` on `[0, 1]` with trend `b1 + b2 x`,
//! two observation schemes and fixed kernels.

use serde::{Deserialize, Serialize};

use super::{join, num, Tabular, SCHEMA_VERSION};
use crate::basis::Basis;
use crate::design::linspace;
use crate::domain::Domain;
use crate::error::Result;
use crate::estimate::{fit_fixed, rmspe, Dataset, Method};
use crate::kernel::{Family, KernelSpec};
use crate::ortho::OrthoSettings;

/// Clustered design in the right half of the domain.
pub const SCHEME_1: [f64; 7] = [0.3725, 0.6225, 0.7475, 0.8100, 0.8725, 0.9350, 0.9975];

/// Nine equally spaced points `0, 1/8, ..., 1`.
pub fn scheme_2() -> Vec<f64> {
    (0..=8).map(|i| i as f64 / 8.0).collect()
}

pub fn truth(x: f64) -> f64 {
    (2.0 * x).sin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Study1dConfig {
    pub rows: Vec<(Method, Family)>,
    /// Lengthscale on the canonical interval. One corresponds to `exp{-4 (x - x')^2}`,
    /// `exp{-2|x - x'|}` and the matching Matérn kernel on `[0, 1]`.
    pub lengthscale: f64,
    pub grid_points: usize,
    #[serde(default)]
    pub ortho: OrthoSettings,
}

impl Default for Study1dConfig {
    fn default() -> Self {
        use Family::*;
        use Method::*;
        Study1dConfig {
            rows: vec![
                (Ls, SquaredExponential),
                (Ogp, SquaredExponential),
                (Uk, SquaredExponential),
                (Ogp, Matern32),
                (Uk, Matern32),
                (Ogp, Exponential),
                (Uk, Exponential),
            ],
            lengthscale: 1.0,
            grid_points: 400,
            ortho: OrthoSettings::closed_form(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeResult {
    pub rmspe: f64,
    /// `(b1, b2)` for the trend `b1 + b2 x` on `[0, 1]`.
    pub beta_hat: Vec<f64>,
    pub beta_hat_canonical: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study1dRow {
    pub method: Method,
    pub family: Family,
    pub scheme1: SchemeResult,
    pub scheme2: SchemeResult,
    pub delta_beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study1dReport {
    pub schema_version: u32,
    pub config: Study1dConfig,
    pub rows: Vec<Study1dRow>,
}

impl Study1dReport {
    pub fn row(&self, method: Method, family: Family) -> Option<&Study1dRow> {
        self.rows.iter().find(|r| r.method == method && r.family == family)
    }
}

fn run_scheme(points: &[f64], method: Method, family: Family, cfg: &Study1dConfig) -> Result<SchemeResult> {
    let domain = Domain::new(vec![0.0], vec![1.0])?;
    let design = points
        .iter()
        .map(|x| domain.to_canonical(&[*x]))
        .collect::<Result<Vec<_>>>()?;
    let data = Dataset::new(design, points.iter().map(|x| truth(*x)).collect())?;
    let basis = Basis::linear(1);
    let kernel = KernelSpec::new(family, 1.0, vec![cfg.lengthscale])?;
    let fit = fit_fixed(&data, method, &basis, &kernel, &cfg.ortho)?;
    let predictor = fit.predictor(&data, &basis, family, &cfg.ortho)?;
    let grid: Vec<Vec<f64>> = linspace(0.0, 1.0, cfg.grid_points).into_iter().map(|x| vec![x]).collect();
    let err = rmspe(
        |x| predictor.predict_mean(&domain.to_canonical(x)?),
        |x| truth(x[0]),
        &grid,
    )?;
    let beta_hat = basis
        .coefficients_to_original(&domain, &fit.beta_hat)
        .expect("linear basis maps to original coordinates");
    Ok(SchemeResult {
        rmspe: err,
        beta_hat,
        beta_hat_canonical: fit.beta_hat,
    })
}

pub fn study_1d(cfg: &Study1dConfig) -> Result<Study1dReport> {
    let s2 = scheme_2();
    let rows = cfg
        .rows
        .iter()
        .map(|&(method, family)| {
            let scheme1 = run_scheme(&SCHEME_1, method, family, cfg)?;
            let scheme2 = run_scheme(&s2, method, family, cfg)?;
            let delta_beta = scheme1
                .beta_hat
                .iter()
                .zip(&scheme2.beta_hat)
                .map(|(a, b)| (a - b).abs())
                .collect();
            Ok(Study1dRow {
                method,
                family,
                scheme1,
                scheme2,
                delta_beta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Study1dReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        rows,
    })
}

impl Tabular for Study1dReport {
    fn csv_header(&self) -> Vec<String> {
        ["method", "family", "scheme", "rmspe", "beta1", "beta2", "beta_canonical"]
            .map(String::from)
            .to_vec()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        for r in &self.rows {
            for (k, s) in [(1, &r.scheme1), (2, &r.scheme2)] {
                out.push(vec![
                    r.method.name().to_string(),
                    r.family.name().to_string(),
                    k.to_string(),
                    num(s.rmspe),
                    num(s.beta_hat[0]),
                    num(s.beta_hat[1]),
                    join(&s.beta_hat_canonical),
                ]);
            }
        }
        out
    }
}
