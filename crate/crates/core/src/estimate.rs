//! Trend estimation, BLUP prediction and profile-likelihood fitting for the three
//! compared methods:
//!
//! * `OGP` — generalized least squares and kriging under the orthogonalized covariance `c*`;
//! * `UK`  — universal kriging, generalized least squares under `c`;
//! * `LS`  — ordinary least squares for the trend, kriging of the residual under `c`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::design::latin_hypercube;
use crate::error::{OgpError, Result};
use crate::kernel::{Family, Gram, KernelSpec};
use crate::linalg::{least_squares, require_full_column_rank, SpdFactor};
use crate::optimize::{nelder_mead_box, NelderMeadOptions};
use crate::ortho::{OrthoKernel, OrthoSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "OGP")]
    Ogp,
    #[serde(rename = "UK")]
    Uk,
    #[serde(rename = "LS")]
    Ls,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ogp, Method::Uk, Method::Ls];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ogp => "OGP",
            Method::Uk => "UK",
            Method::Ls => "LS",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = OgpError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "OGP" => Ok(Method::Ogp),
            "UK" => Ok(Method::Uk),
            "LS" => Ok(Method::Ls),
            _ => Err(OgpError::Config(format!("unknown method {s:?} (expected OGP, UK or LS)"))),
        }
    }
}

/// Observations at canonical design points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub design: Vec<Vec<f64>>,
    pub response: Vec<f64>,
}

impl Dataset {
    pub fn new(design: Vec<Vec<f64>>, response: Vec<f64>) -> Result<Self> {
        if design.is_empty() {
            return Err(OgpError::Dimension("dataset needs at least one observation".into()));
        }
        if design.len() != response.len() {
            return Err(OgpError::Dimension(format!(
                "{} design rows but {} responses",
                design.len(),
                response.len()
            )));
        }
        let d = design[0].len();
        if d == 0 || design.iter().any(|r| r.len() != d) {
            return Err(OgpError::Dimension("design rows must share a positive dimension".into()));
        }
        if let Some(i) = response.iter().position(|y| !y.is_finite()) {
            return Err(OgpError::InvalidParameter(format!("response {i} is not finite")));
        }
        Ok(Dataset { design, response })
    }

    pub fn len(&self) -> usize {
        self.response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.response.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.design[0].len()
    }

    pub fn y(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.response)
    }
}

/// The covariance a method works with: `c` for UK and LS, `c*` for OGP.
#[derive(Debug, Clone)]
pub enum Covariance {
    Plain(KernelSpec),
    Ortho(OrthoKernel),
}

impl Covariance {
    pub fn for_method(
        method: Method,
        kernel: &KernelSpec,
        basis: &Basis,
        ortho: &OrthoSettings,
    ) -> Result<Self> {
        match method {
            Method::Ogp => Ok(Covariance::Ortho(OrthoKernel::new(kernel, basis, ortho)?)),
            Method::Uk | Method::Ls => {
                kernel.validate()?;
                Ok(Covariance::Plain(kernel.clone()))
            }
        }
    }

    pub fn kernel(&self) -> &KernelSpec {
        match self {
            Covariance::Plain(k) => k,
            Covariance::Ortho(o) => o.kernel(),
        }
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        match self {
            Covariance::Plain(k) => Ok(k.eval(u, v)),
            Covariance::Ortho(o) => o.eval(u, v),
        }
    }

    pub fn gram(&self, design: &[Vec<f64>]) -> Result<Gram> {
        match self {
            Covariance::Plain(k) => k.cov_matrix(design),
            Covariance::Ortho(o) => o.gram(design),
        }
    }

    pub fn cross(&self, u: &[f64], design: &[Vec<f64>]) -> Result<DVector<f64>> {
        match self {
            Covariance::Plain(k) => k.cross_cov(u, design),
            Covariance::Ortho(o) => o.cross(u, design),
        }
    }

    fn check_method(&self, method: Method) -> Result<()> {
        match (method, self) {
            (Method::Ogp, Covariance::Ortho(_)) => Ok(()),
            (Method::Uk | Method::Ls, Covariance::Plain(_)) => Ok(()),
            (m, Covariance::Ortho(_)) => Err(OgpError::Config(format!(
                "method {m} needs the plain covariance, got the orthogonalized one"
            ))),
            (m, Covariance::Plain(_)) => Err(OgpError::Config(format!(
                "method {m} needs the orthogonalized covariance"
            ))),
        }
    }
}

/// `(G^T C^{-1} G)^{-1} G^T C^{-1} Y` without forming any inverse.
pub fn gls_beta(g: &DMatrix<f64>, c: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let factor = SpdFactor::new(c, "covariance matrix")?;
    gls_with_factor(g, &factor, y)
}

fn gls_with_factor(g: &DMatrix<f64>, factor: &SpdFactor, y: &DVector<f64>) -> Result<DVector<f64>> {
    require_full_column_rank(g)?;
    let gt = factor.solve_lower(g);
    let yt = factor.solve_lower_vec(y);
    least_squares(&gt, &yt)
}

/// Ordinary least squares `(G^T G)^{-1} G^T Y` via QR.
pub fn ls_beta(g: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    least_squares(g, y)
}

/// Covariance of `beta_hat - beta` under the model: `B C B^T` for `beta_hat = B Y`.
fn estimator_covariance(method: Method, g: &DMatrix<f64>, c: &DMatrix<f64>, factor: &SpdFactor) -> Result<DMatrix<f64>> {
    let p = g.ncols();
    match method {
        Method::Ogp | Method::Uk => {
            // (G^T C^{-1} G)^{-1} = R^{-1} R^{-T} with L^{-1} G = Q R
            let r = factor.solve_lower(g).qr().r();
            let rinv = r
                .solve_upper_triangular(&DMatrix::identity(p, p))
                .ok_or_else(|| OgpError::Conditioning("singular GLS factor".into()))?;
            Ok(&rinv * rinv.transpose())
        }
        Method::Ls => {
            let qr = g.clone().qr();
            let q = qr.q();
            let rinv = qr
                .r()
                .solve_upper_triangular(&DMatrix::identity(p, p))
                .ok_or_else(|| OgpError::Conditioning("singular least-squares factor".into()))?;
            let pmat = &rinv * q.transpose();
            Ok(&pmat * c * pmat.transpose())
        }
    }
}

/// The predictor split into trend and stochastic parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub mean: f64,
    pub trend: f64,
    pub stochastic: f64,
}

/// A fitted kriging predictor for one method.
#[derive(Debug, Clone)]
pub struct Predictor {
    method: Method,
    cov: Covariance,
    basis: Basis,
    data: Dataset,
    g: DMatrix<f64>,
    factor: SpdFactor,
    beta: DVector<f64>,
    /// `C^{-1} (Y - G beta)`.
    weights: DVector<f64>,
    beta_cov: DMatrix<f64>,
    warnings: Vec<String>,
}

impl Predictor {
    pub fn new(method: Method, cov: Covariance, basis: &Basis, data: &Dataset) -> Result<Self> {
        cov.check_method(method)?;
        if basis.dim() != data.dim() || cov.kernel().dim() != data.dim() {
            return Err(OgpError::Dimension(format!(
                "data d={}, basis d={}, kernel d={}",
                data.dim(),
                basis.dim(),
                cov.kernel().dim()
            )));
        }
        if data.len() < basis.len() {
            return Err(OgpError::Dimension(format!(
                "{} observations cannot identify {} trend coefficients",
                data.len(),
                basis.len()
            )));
        }
        let g = basis.model_matrix(&data.design)?;
        let gram = cov.gram(&data.design)?;
        let factor = SpdFactor::new(&gram.matrix, "covariance matrix")?;
        let y = data.y();
        let beta = match method {
            Method::Ls => ls_beta(&g, &y)?,
            Method::Ogp | Method::Uk => gls_with_factor(&g, &factor, &y)?,
        };
        let resid = &y - &g * &beta;
        let weights = factor.solve_vec(&resid);
        let beta_cov = estimator_covariance(method, &g, &gram.matrix, &factor)?;
        let mut warnings = gram.warnings;
        if factor.jitter() > 0.0 {
            warnings.push(format!("covariance matrix factored with jitter {:e}", factor.jitter()));
        }
        if let Covariance::Ortho(o) = &cov {
            warnings.extend(o.warnings().iter().cloned());
        }
        Ok(Predictor {
            method,
            cov,
            basis: basis.clone(),
            data: data.clone(),
            g,
            factor,
            beta,
            weights,
            beta_cov,
            warnings,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn covariance(&self) -> &Covariance {
        &self.cov
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn jitter(&self) -> f64 {
        self.factor.jitter()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Ratio of the largest to smallest squared Cholesky pivot, a cheap lower bound on
    /// the condition number of the covariance matrix.
    pub fn condition_estimate(&self) -> f64 {
        let d = self.factor.lower().diagonal();
        let max = d.iter().fold(0.0f64, |m, v| m.max(*v));
        let min = d.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        (max / min).powi(2)
    }

    /// Trend part `beta^T g(u)`.
    pub fn trend(&self, u: &[f64]) -> Result<f64> {
        let g = self.basis.eval(u)?;
        Ok(g.iter().zip(self.beta.iter()).map(|(a, b)| a * b).sum())
    }

    /// `y_hat(u) = beta^T g(u) + c(u, D) C^{-1} (Y - G beta)` with the method's covariance.
    pub fn predict(&self, u: &[f64]) -> Result<Prediction> {
        let trend = self.trend(u)?;
        let cross = self.cov.cross(u, &self.data.design)?;
        let stochastic = cross.dot(&self.weights);
        Ok(Prediction {
            mean: trend + stochastic,
            trend,
            stochastic,
        })
    }

    pub fn predict_mean(&self, u: &[f64]) -> Result<f64> {
        self.predict(u).map(|p| p.mean)
    }

    /// Mean squared prediction error at `u` under the method's model:
    /// `c(u,u) - r^T r + delta^T B C B^T delta` with `r = L^{-1} c(u, D)` and
    /// `delta = g(u) - G^T C^{-1} c(u, D)`.
    pub fn variance(&self, u: &[f64]) -> Result<f64> {
        let prior = self.cov.eval(u, u)?;
        let cross = self.cov.cross(u, &self.data.design)?;
        let r = self.factor.solve_lower_vec(&cross);
        let c_inv_cross = self.factor.solve_vec(&cross);
        let g = DVector::from_vec(self.basis.eval(u)?);
        let delta = g - self.g.transpose() * c_inv_cross;
        let v = prior - r.norm_squared() + delta.dot(&(&self.beta_cov * &delta));
        let scale = self.cov.kernel().variance;
        if v < -1e-10 * scale {
            return Err(OgpError::Conditioning(format!(
                "negative prediction variance {v:e} at {u:?}"
            )));
        }
        Ok(v.max(0.0))
    }
}

/// One evaluation of the concentrated negative log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEval {
    /// `log sigma2_hat + (1/n) log det C`, or `+inf` when `C` cannot be factored.
    pub objective: f64,
    /// `(1/n) (Y - G beta)^T C^{-1} (Y - G beta)` for unit-variance `C`.
    pub sigma2: f64,
    pub beta: Vec<f64>,
    pub jitter: f64,
}

/// Profile objective at lengthscales `psi` (canonical units). The variance is concentrated
/// out, so `C` is built with unit variance.
pub fn neg_log_profile_lik(
    psi: &[f64],
    data: &Dataset,
    method: Method,
    basis: &Basis,
    family: Family,
    ortho: &OrthoSettings,
) -> Result<ProfileEval> {
    let n = data.len();
    let p = basis.len();
    if n <= p {
        return Err(OgpError::Dimension(format!("profile likelihood needs n > p, got n={n}, p={p}")));
    }
    if psi.len() != data.dim() {
        return Err(OgpError::Dimension(format!(
            "{} lengthscales for d={}",
            psi.len(),
            data.dim()
        )));
    }
    let kernel = KernelSpec::new(family, 1.0, psi.to_vec())?;
    let barrier = |why: &OgpError| {
        log::debug!("profile likelihood barrier at psi={psi:?}: {why}");
        ProfileEval {
            objective: f64::INFINITY,
            sigma2: f64::NAN,
            beta: vec![f64::NAN; p],
            jitter: f64::NAN,
        }
    };
    let cov = match Covariance::for_method(method, &kernel, basis, ortho) {
        Ok(c) => c,
        Err(e) if e.is_numerical() => return Ok(barrier(&e)),
        Err(e) => return Err(e),
    };
    let g = basis.model_matrix(&data.design)?;
    let c = cov.gram(&data.design)?.matrix;
    let factor = match SpdFactor::new(&c, "covariance matrix") {
        Ok(f) => f,
        Err(e) => return Ok(barrier(&e)),
    };
    let y = data.y();
    let beta = match method {
        Method::Ls => ls_beta(&g, &y)?,
        _ => gls_with_factor(&g, &factor, &y)?,
    };
    let resid = &y - &g * &beta;
    let sigma2 = factor.quad_form(&resid) / n as f64;
    let objective = sigma2.ln() + factor.log_det() / n as f64;
    Ok(ProfileEval {
        objective: if objective.is_finite() { objective } else { f64::INFINITY },
        sigma2,
        beta: beta.iter().copied().collect(),
        jitter: factor.jitter(),
    })
}

/// Box for the lengthscale search (canonical units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Self {
        Bounds {
            lower: vec![lower; dim],
            upper: vec![upper; dim],
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.lower.len() != dim || self.upper.len() != dim {
            return Err(OgpError::Dimension(format!("bounds must have d={dim} entries")));
        }
        for (j, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(*lo > 0.0 && lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(OgpError::InvalidParameter(format!(
                    "lengthscale bounds at j={j} must satisfy 0 < lower <= upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MleOptions {
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    /// Simplex diameter (in log-lengthscale) at which a start stops.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Initial simplex edge as a fraction of each side of the log-lengthscale box.
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
}

fn default_starts() -> usize {
    5
}
fn default_max_evals() -> usize {
    500
}
fn default_tol() -> f64 {
    1e-6
}
fn default_initial_step() -> f64 {
    0.5
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            starts: default_starts(),
            seed: 0,
            max_evals: default_max_evals(),
            tol: default_tol(),
            initial_step: default_initial_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartLog {
    pub start: usize,
    pub initial_psi: Vec<f64>,
    pub psi: Vec<f64>,
    pub objective: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub condition_estimate: f64,
    pub jitter: f64,
    pub h_jitter: f64,
    pub evaluations: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub starts: Vec<StartLog>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Estimated trend, lengthscales and variance for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: Method,
    pub beta_hat: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_hat_original: Option<Vec<f64>>,
    pub psi_hat: Vec<f64>,
    pub sigma2_hat: f64,
    pub neg_log_lik: f64,
    pub diagnostics: Diagnostics,
}

impl FitResult {
    pub fn kernel(&self, family: Family) -> Result<KernelSpec> {
        KernelSpec::new(family, self.sigma2_hat, self.psi_hat.clone())
    }

    /// Rebuilds the predictor this fit describes.
    pub fn predictor(&self, data: &Dataset, basis: &Basis, family: Family, ortho: &OrthoSettings) -> Result<Predictor> {
        let kernel = self.kernel(family)?;
        let cov = Covariance::for_method(self.method, &kernel, basis, ortho)?;
        Predictor::new(self.method, cov, basis, data)
    }
}

/// Fit with the lengthscales held at `kernel.lengthscales`; the variance is profiled.
pub fn fit_fixed(
    data: &Dataset,
    method: Method,
    basis: &Basis,
    kernel: &KernelSpec,
    ortho: &OrthoSettings,
) -> Result<FitResult> {
    let prof = neg_log_profile_lik(&kernel.lengthscales, data, method, basis, kernel.family, ortho)?;
    if !prof.objective.is_finite() {
        return Err(OgpError::Conditioning(format!(
            "covariance matrix cannot be factored at psi={:?}",
            kernel.lengthscales
        )));
    }
    finish_fit(data, method, basis, kernel.family, ortho, kernel.lengthscales.clone(), prof, vec![], 1)
}

#[allow(clippy::too_many_arguments)]
fn finish_fit(
    data: &Dataset,
    method: Method,
    basis: &Basis,
    family: Family,
    ortho: &OrthoSettings,
    psi: Vec<f64>,
    prof: ProfileEval,
    starts: Vec<StartLog>,
    evaluations: usize,
) -> Result<FitResult> {
    let kernel = KernelSpec::new(family, prof.sigma2.max(f64::MIN_POSITIVE), psi.clone())?;
    let cov = Covariance::for_method(method, &kernel, basis, ortho)?;
    let h_jitter = match &cov {
        Covariance::Ortho(o) => o.jitter(),
        Covariance::Plain(_) => 0.0,
    };
    let pred = Predictor::new(method, cov, basis, data)?;
    Ok(FitResult {
        method,
        beta_hat: pred.beta().iter().copied().collect(),
        beta_hat_original: None,
        psi_hat: psi,
        sigma2_hat: prof.sigma2,
        neg_log_lik: prof.objective,
        diagnostics: Diagnostics {
            condition_estimate: pred.condition_estimate(),
            jitter: pred.jitter(),
            h_jitter,
            evaluations,
            starts,
            warnings: pred.warnings().to_vec(),
        },
    })
}

/// Maximum-likelihood lengthscales by multi-start Nelder–Mead in log-lengthscale.
///
/// Starts are the centre of the log box plus `starts - 1` Latin hypercube draws from it.
/// The best start wins; ties go to the lowest start index.
pub fn fit_mle(
    data: &Dataset,
    method: Method,
    basis: &Basis,
    family: Family,
    bounds: &Bounds,
    options: &MleOptions,
    ortho: &OrthoSettings,
) -> Result<FitResult> {
    let d = data.dim();
    bounds.validate(d)?;
    if options.starts == 0 {
        return Err(OgpError::InvalidParameter("need at least one start".into()));
    }
    let lo: Vec<f64> = bounds.lower.iter().map(|v| v.ln()).collect();
    let hi: Vec<f64> = bounds.upper.iter().map(|v| v.ln()).collect();
    let free: Vec<usize> = (0..d).filter(|&j| hi[j] > lo[j]).collect();
    let to_psi = |z: &[f64]| -> Vec<f64> {
        let mut psi: Vec<f64> = bounds.lower.clone();
        for (k, &j) in free.iter().enumerate() {
            psi[j] = z[k].exp().clamp(bounds.lower[j], bounds.upper[j]);
        }
        psi
    };
    let objective = |z: &[f64]| -> f64 {
        match neg_log_profile_lik(&to_psi(z), data, method, basis, family, ortho) {
            Ok(p) => p.objective,
            Err(e) => {
                log::debug!("objective error: {e}");
                f64::INFINITY
            }
        }
    };

    let flo: Vec<f64> = free.iter().map(|&j| lo[j]).collect();
    let fhi: Vec<f64> = free.iter().map(|&j| hi[j]).collect();
    let mut initial: Vec<Vec<f64>> = vec![flo.iter().zip(&fhi).map(|(a, b)| 0.5 * (a + b)).collect()];
    if options.starts > 1 && !free.is_empty() {
        let lhs = latin_hypercube(options.starts - 1, free.len(), options.seed);
        initial.extend(lhs.into_iter().map(|row| {
            row.iter()
                .enumerate()
                .map(|(k, u)| flo[k] + 0.5 * (u + 1.0) * (fhi[k] - flo[k]))
                .collect()
        }));
    }
    let nm = NelderMeadOptions {
        max_evals: options.max_evals,
        diameter_tol: options.tol,
        initial_step: options.initial_step,
        restart: true,
    };

    let run = |(i, z0): (usize, &Vec<f64>)| {
        let m = nelder_mead_box(&objective, z0, &flo, &fhi, &nm);
        StartLog {
            start: i,
            initial_psi: to_psi(z0),
            psi: to_psi(&m.x),
            objective: m.value,
            evaluations: m.evals,
            converged: m.converged,
        }
    };
    let logs: Vec<StartLog> = if free.is_empty() {
        vec![run((0, &initial[0]))]
    } else {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            initial.par_iter().enumerate().map(run).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            initial.iter().enumerate().map(run).collect()
        }
    };

    let best = logs
        .iter()
        .filter(|l| l.objective.is_finite())
        .min_by(|a, b| a.objective.total_cmp(&b.objective).then(a.start.cmp(&b.start)))
        .cloned();
    let Some(best) = best else {
        return Err(OgpError::OptimizationFailed(
            logs.iter()
                .map(|l| format!("start {} from psi={:?}: objective {}", l.start, l.initial_psi, l.objective))
                .collect(),
        ));
    };
    let evaluations = logs.iter().map(|l| l.evaluations).sum();
    let prof = neg_log_profile_lik(&best.psi, data, method, basis, family, ortho)?;
    finish_fit(data, method, basis, family, ortho, best.psi.clone(), prof, logs, evaluations)
}

/// Root mean squared difference between `predict` and `truth` over `grid`.
pub fn rmspe(
    mut predict: impl FnMut(&[f64]) -> Result<f64>,
    mut truth: impl FnMut(&[f64]) -> f64,
    grid: &[Vec<f64>],
) -> Result<f64> {
    if grid.is_empty() {
        return Err(OgpError::Dimension("RMSPE grid is empty".into()));
    }
    let mut s = 0.0;
    for x in grid {
        let e = predict(x)? - truth(x);
        s += e * e;
    }
    Ok((s / grid.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_data() -> Dataset {
        let design: Vec<Vec<f64>> = (0..=8).map(|i| vec![-1.0 + 0.25 * i as f64]).collect();
        let y = design.iter().map(|x| (x[0] + 1.0).sin()).collect();
        Dataset::new(design, y).unwrap()
    }

    fn se(psi: f64) -> KernelSpec {
        KernelSpec::new(Family::SquaredExponential, 1.0, vec![psi]).unwrap()
    }

    #[test]
    fn identity_covariance_gives_least_squares() {
        let data = line_data();
        let g = Basis::linear(1).model_matrix(&data.design).unwrap();
        let y = data.y();
        let a = gls_beta(&g, &DMatrix::identity(9, 9), &y).unwrap();
        let b = ls_beta(&g, &y).unwrap();
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn gls_is_scale_invariant() {
        let data = line_data();
        let g = Basis::linear(1).model_matrix(&data.design).unwrap();
        let c = se(0.7).cov_matrix(&data.design).unwrap().matrix;
        let a = gls_beta(&g, &c, &data.y()).unwrap();
        let b = gls_beta(&g, &(&c * 37.5), &data.y()).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn ls_of_constant_is_mean() {
        let data = line_data();
        let g = Basis::constant(1).model_matrix(&data.design).unwrap();
        let b = ls_beta(&g, &data.y()).unwrap();
        let mean = data.response.iter().sum::<f64>() / 9.0;
        assert!((b[0] - mean).abs() < 1e-14);
    }

    #[test]
    fn exact_linear_data() {
        let data = line_data();
        let g = Basis::linear(1).model_matrix(&data.design).unwrap();
        let beta = DVector::from_vec(vec![0.4, -2.0]);
        let y = &g * &beta;
        assert!((ls_beta(&g, &y).unwrap() - &beta).norm() < 1e-12);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let data = line_data();
        let b = Basis::affine(DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0])).unwrap();
        let g = b.model_matrix(&data.design).unwrap();
        match ls_beta(&g, &data.y()) {
            Err(OgpError::RankDeficient { columns }) => assert_eq!(columns, vec![2]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_covariance_is_a_config_error() {
        let data = line_data();
        let b = Basis::linear(1);
        let err = Predictor::new(Method::Ogp, Covariance::Plain(se(1.0)), &b, &data).unwrap_err();
        assert!(matches!(err, OgpError::Config(_)));
        let ortho = Covariance::for_method(Method::Ogp, &se(1.0), &b, &OrthoSettings::closed_form()).unwrap();
        assert!(matches!(Predictor::new(Method::Uk, ortho, &b, &data), Err(OgpError::Config(_))));
    }

    #[test]
    fn predictors_interpolate_and_have_zero_variance_at_data() {
        let data = line_data();
        let b = Basis::linear(1);
        for m in Method::ALL {
            let cov = Covariance::for_method(m, &se(0.8), &b, &OrthoSettings::closed_form()).unwrap();
            let p = Predictor::new(m, cov, &b, &data).unwrap();
            for (x, y) in data.design.iter().zip(&data.response) {
                let pr = p.predict(x).unwrap();
                assert!((pr.mean - y).abs() < 1e-8, "{m}: {} vs {y}", pr.mean);
                assert!((pr.trend + pr.stochastic - pr.mean).abs() < 1e-15);
                assert!(p.variance(x).unwrap() < 1e-8);
            }
        }
    }

    #[test]
    fn far_predictions_revert_to_trend() {
        let data = line_data();
        let b = Basis::linear(1);
        let cov = Covariance::for_method(Method::Uk, &se(0.3), &b, &OrthoSettings::closed_form()).unwrap();
        let p = Predictor::new(Method::Uk, cov, &b, &data).unwrap();
        let pr = p.predict(&[40.0]).unwrap();
        assert!(pr.stochastic.abs() < 1e-6);
    }

    #[test]
    fn uk_variance_matches_dense_formula() {
        let design = vec![vec![-0.9], vec![0.9]];
        let data = Dataset::new(design.clone(), vec![0.3, -0.1]).unwrap();
        let k = KernelSpec::new(Family::SquaredExponential, 2.0, vec![0.5]).unwrap();
        let b = Basis::constant(1);
        let p = Predictor::new(Method::Uk, Covariance::Plain(k.clone()), &b, &data).unwrap();
        let u = [0.0];
        // dense oracle with explicit inverses
        let c = k.cov_matrix(&design).unwrap().matrix;
        let ci = c.clone().try_inverse().unwrap();
        let r = k.cross_cov(&u, &design).unwrap();
        let g = DMatrix::from_element(2, 1, 1.0);
        let a = (g.transpose() * &ci * &g)[(0, 0)];
        let delta = 1.0 - (g.transpose() * &ci * &r)[(0, 0)];
        let expect = 2.0 - (r.transpose() * &ci * &r)[(0, 0)] + delta * delta / a;
        let got = p.variance(&u).unwrap();
        assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
        assert!(got > 0.0 && got <= 2.0 * (1.0 + 1.0 / a));
    }

    #[test]
    fn profile_objective_ignores_row_order() {
        let data = line_data();
        let mut rev = data.clone();
        rev.design.reverse();
        rev.response.reverse();
        for m in Method::ALL {
            let a = neg_log_profile_lik(&[0.6], &data, m, &Basis::linear(1), Family::Matern32, &OrthoSettings::closed_form()).unwrap();
            let b = neg_log_profile_lik(&[0.6], &rev, m, &Basis::linear(1), Family::Matern32, &OrthoSettings::closed_form()).unwrap();
            assert!((a.objective - b.objective).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_bounds_return_immediately() {
        let data = line_data();
        let fit = fit_mle(
            &data,
            Method::Uk,
            &Basis::linear(1),
            Family::SquaredExponential,
            &Bounds::uniform(1, 1.0, 1.0),
            &MleOptions::default(),
            &OrthoSettings::closed_form(),
        )
        .unwrap();
        assert_eq!(fit.psi_hat, vec![1.0]);
        assert!(fit.diagnostics.evaluations <= 1);
    }

    #[test]
    fn rmspe_of_zero_against_sine() {
        let grid: Vec<Vec<f64>> = crate::design::linspace(0.0, 1.0, 400).into_iter().map(|x| vec![x]).collect();
        let r = rmspe(|_| Ok(0.0), |x| (2.0 * x[0]).sin(), &grid).unwrap();
        // direct mean of sin^2(2x) on the same grid
        let direct = (grid.iter().map(|x| (2.0 * x[0]).sin().powi(2)).sum::<f64>() / 400.0).sqrt();
        assert!((r - direct).abs() < 1e-15);
        // continuous limit sqrt(1/2 - sin(4)/8)
        assert!((r - (0.5 - 4f64.sin() / 8.0).sqrt()).abs() < 2e-3, "{r}");
        assert_eq!(rmspe(|x| Ok(x[0]), |x| x[0], &grid).unwrap(), 0.0);
    }
}
