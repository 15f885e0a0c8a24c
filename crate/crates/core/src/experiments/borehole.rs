//! Borehole replication study with lengthscales fitted by maximum likelihood.

use serde::{Deserialize, Serialize};

use super::{join, mean_std, num, MeanStd, Tabular, SCHEMA_VERSION};
use crate::basis::Basis;
use crate::design::{latin_hypercube, uniform_points};
use crate::domain::Domain;
use crate::error::{OgpError, Result};
use crate::estimate::{fit_mle, Bounds, Dataset, Method, MleOptions};
use crate::kernel::Family;
use crate::ortho::OrthoSettings;

pub const BOREHOLE_LOWER: [f64; 8] = [0.05, 100.0, 63070.0, 990.0, 63.1, 700.0, 1120.0, 9855.0];
pub const BOREHOLE_UPPER: [f64; 8] = [0.15, 5000.0, 115600.0, 1110.0, 116.0, 820.0, 1680.0, 12045.0];

pub fn borehole_domain() -> Domain {
    Domain::new(BOREHOLE_LOWER.to_vec(), BOREHOLE_UPPER.to_vec()).expect("valid box")
}

/// Water flow through a borehole. `x = (rw, r, Tu, Hu, Tl, Hl, L, Kw)` in original units.
pub fn borehole(x: &[f64]) -> Result<f64> {
    if x.len() != 8 {
        return Err(OgpError::Dimension(format!("borehole takes 8 inputs, got {}", x.len())));
    }
    for (j, v) in x.iter().enumerate() {
        let (lo, hi) = (BOREHOLE_LOWER[j], BOREHOLE_UPPER[j]);
        let tol = 1e-12 * (hi - lo);
        if !(*v >= lo - tol && *v <= hi + tol) {
            return Err(OgpError::OutOfDomain {
                index: j,
                value: *v,
                lower: lo,
                upper: hi,
            });
        }
    }
    let (rw, r, tu, hu, tl, hl, l, kw) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]);
    let lr = (r / rw).ln();
    let denom = lr * (1.0 + 2.0 * tu * l / (lr * rw * rw * kw) + tu / tl);
    Ok(2.0 * std::f64::consts::PI * tu * (hu - hl) / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoreholeConfig {
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// Lengthscale box on the canonical cube.
    pub bounds: (f64, f64),
    pub mle: MleOptions,
    /// Size of the uniform Monte Carlo grid used for RMSPE.
    pub mc_points: usize,
    pub mc_seed: u64,
    pub methods: Vec<Method>,
}

impl BoreholeConfig {
    /// Reduced scale: `n` in {20, 40}, ten replicates.
    pub fn desk() -> Self {
        BoreholeConfig {
            sizes: vec![20, 40],
            replicates: 10,
            seed: 0,
            bounds: (0.1, 5.0),
            mle: MleOptions::default(),
            mc_points: 10_000,
            mc_seed: 20_000_000,
            methods: Method::ALL.to_vec(),
        }
    }

    /// `n` in {20, 40, 80, 160}, fifty replicates.
    pub fn full() -> Self {
        BoreholeConfig {
            sizes: vec![20, 40, 80, 160],
            replicates: 50,
            ..Self::desk()
        }
    }
}

impl Default for BoreholeConfig {
    fn default() -> Self {
        Self::desk()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoreholeRun {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub method: Method,
    pub beta_hat: Vec<f64>,
    pub beta_hat_original: Vec<f64>,
    pub psi_hat: Vec<f64>,
    pub sigma2_hat: f64,
    pub neg_log_lik: f64,
    pub rmspe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoreholeFailure {
    pub n: usize,
    pub replicate: usize,
    pub method: Method,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoreholeSummary {
    pub n: usize,
    pub method: Method,
    pub runs: usize,
    pub excluded: usize,
    pub beta: Vec<MeanStd>,
    pub beta_original: Vec<MeanStd>,
    pub rmspe: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoreholeReport {
    pub schema_version: u32,
    pub config: BoreholeConfig,
    pub runs: Vec<BoreholeRun>,
    pub failures: Vec<BoreholeFailure>,
    pub summary: Vec<BoreholeSummary>,
}

impl BoreholeReport {
    pub fn summary_for(&self, n: usize, method: Method) -> Option<&BoreholeSummary> {
        self.summary.iter().find(|s| s.n == n && s.method == method)
    }

    pub fn run(&self, n: usize, replicate: usize, method: Method) -> Option<&BoreholeRun> {
        self.runs
            .iter()
            .find(|r| r.n == n && r.replicate == replicate && r.method == method)
    }
}

fn replicate(
    n: usize,
    rep: usize,
    cfg: &BoreholeConfig,
    grid: &[Vec<f64>],
    truth: &[f64],
) -> Vec<std::result::Result<BoreholeRun, BoreholeFailure>> {
    let domain = borehole_domain();
    let seed = cfg.seed + rep as u64;
    let design = latin_hypercube(n, 8, seed);
    let response: Result<Vec<f64>> = design
        .iter()
        .map(|u| domain.from_canonical(u).and_then(|x| borehole(&x)))
        .collect();
    let data = response.and_then(|y| Dataset::new(design, y));
    let basis = Basis::linear(8);
    let bounds = Bounds::uniform(8, cfg.bounds.0, cfg.bounds.1);
    let ortho = OrthoSettings::closed_form();
    cfg.methods
        .iter()
        .map(|&method| {
            let fail = |e: OgpError| BoreholeFailure {
                n,
                replicate: rep,
                method,
                error: e.to_string(),
            };
            let data = data.as_ref().map_err(|e| fail(e.clone()))?;
            let mle = MleOptions {
                seed: cfg.mle.seed.wrapping_add(seed),
                ..cfg.mle.clone()
            };
            let fit = fit_mle(data, method, &basis, Family::SquaredExponential, &bounds, &mle, &ortho)
                .map_err(fail)?;
            let pred = fit
                .predictor(data, &basis, Family::SquaredExponential, &ortho)
                .map_err(fail)?;
            let mut sq = 0.0;
            for (u, t) in grid.iter().zip(truth) {
                sq += (pred.predict_mean(u).map_err(fail)? - t).powi(2);
            }
            let err = (sq / grid.len() as f64).sqrt();
            Ok(BoreholeRun {
                n,
                replicate: rep,
                seed,
                method,
                beta_hat_original: basis
                    .coefficients_to_original(&domain, &fit.beta_hat)
                    .expect("linear basis"),
                beta_hat: fit.beta_hat,
                psi_hat: fit.psi_hat,
                sigma2_hat: fit.sigma2_hat,
                neg_log_lik: fit.neg_log_lik,
                rmspe: err,
            })
        })
        .collect()
}

/// Replicate `r` uses the Latin hypercube seeded with `seed + r`; the same design is shared
/// by all methods. Failed fits are excluded from the summary and listed.
pub fn study_borehole(cfg: &BoreholeConfig) -> Result<BoreholeReport> {
    if cfg.replicates < 2 {
        return Err(OgpError::Config("borehole study needs at least two replicates".into()));
    }
    if cfg.sizes.iter().any(|&n| n <= 9) {
        return Err(OgpError::Config("sample sizes must exceed the 9 trend coefficients".into()));
    }
    let domain = borehole_domain();
    let grid = uniform_points(cfg.mc_points, 8, cfg.mc_seed);
    let truth = grid
        .iter()
        .map(|u| domain.from_canonical(u).and_then(|x| borehole(&x)))
        .collect::<Result<Vec<f64>>>()?;
    let jobs: Vec<(usize, usize)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| (0..cfg.replicates).map(move |r| (n, r)))
        .collect();
    let work = |&(n, r): &(usize, usize)| replicate(n, r, cfg, &grid, &truth);
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        jobs.par_iter().flat_map_iter(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = jobs.iter().flat_map(work).collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(run) => runs.push(run),
            Err(f) => {
                log::warn!("borehole n={} replicate {} {}: {}", f.n, f.replicate, f.method, f.error);
                failures.push(f);
            }
        }
    }
    let mut summary = Vec::new();
    for &n in &cfg.sizes {
        for &method in &cfg.methods {
            let sel: Vec<&BoreholeRun> = runs.iter().filter(|r| r.n == n && r.method == method).collect();
            let col = |f: &dyn Fn(&BoreholeRun) -> f64| mean_std(&sel.iter().map(|r| f(r)).collect::<Vec<_>>());
            summary.push(BoreholeSummary {
                n,
                method,
                runs: sel.len(),
                excluded: failures.iter().filter(|f| f.n == n && f.method == method).count(),
                beta: (0..9).map(|i| col(&|r| r.beta_hat[i])).collect(),
                beta_original: (0..9).map(|i| col(&|r| r.beta_hat_original[i])).collect(),
                rmspe: col(&|r| r.rmspe),
            });
        }
    }
    Ok(BoreholeReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        runs,
        failures,
        summary,
    })
}

impl Tabular for BoreholeReport {
    fn csv_header(&self) -> Vec<String> {
        ["n", "replicate", "seed", "method", "rmspe", "neg_log_lik", "sigma2", "beta", "beta_original", "psi"]
            .map(String::from)
            .to_vec()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.runs
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.replicate.to_string(),
                    r.seed.to_string(),
                    r.method.name().to_string(),
                    num(r.rmspe),
                    num(r.neg_log_lik),
                    num(r.sigma2_hat),
                    join(&r.beta_hat),
                    join(&r.beta_hat_original),
                    join(&r.psi_hat),
                ]
            })
            .collect()
    }
}
