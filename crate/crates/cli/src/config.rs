//! JSON run configuration. Every run writes back the resolved form with defaults filled in.

use ogp_core::estimate::{Bounds, MleOptions};
use ogp_core::experiments::SCHEMA_VERSION;
use ogp_core::{Basis, Domain, Family, KernelSpec, Method, OgpError, OrthoSettings, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub domain: Domain,
    pub basis: BasisConfig,
    pub kernel: KernelConfig,
    pub method: Method,
    #[serde(default)]
    pub orthogonalization: OrthoSettings,
    /// Lengthscales are held at `kernel.lengthscales` when absent.
    #[serde(default)]
    pub mle: Option<MleConfig>,
}

/// Trend basis. Monomial terms use one-based input indices; affine rows are
/// `[a0, a1, ..., ad]` in original coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisConfig {
    Constant,
    Linear,
    Monomial { terms: Vec<Vec<usize>> },
    Affine { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Canonical,
    Original,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: Family,
    #[serde(default = "one")]
    pub variance: f64,
    pub lengthscales: Vec<f64>,
    /// Units of `lengthscales` and of the MLE bounds.
    #[serde(default)]
    pub units: Units,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MleConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "defaults::starts")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::max_evals")]
    pub max_evals: usize,
    #[serde(default = "defaults::tol")]
    pub tol: f64,
    #[serde(default = "defaults::initial_step")]
    pub initial_step: f64,
}

mod defaults {
    use ogp_core::estimate::MleOptions;

    pub fn starts() -> usize {
        MleOptions::default().starts
    }
    pub fn max_evals() -> usize {
        MleOptions::default().max_evals
    }
    pub fn tol() -> f64 {
        MleOptions::default().tol
    }
    pub fn initial_step() -> f64 {
        MleOptions::default().initial_step
    }
}

impl MleConfig {
    pub fn options(&self) -> MleOptions {
        MleOptions {
            starts: self.starts,
            seed: self.seed,
            max_evals: self.max_evals,
            tol: self.tol,
            initial_step: self.initial_step,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| OgpError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(OgpError::Config(format!(
                "schema_version {} not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        cfg.basis()?;
        cfg.kernel()?;
        cfg.bounds()?;
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Lengthscale units normalized to canonical and the quadrature order filled in.
    pub fn resolved(&self) -> Result<Self> {
        let mut r = self.clone();
        r.kernel = KernelConfig {
            lengthscales: self.kernel()?.lengthscales,
            units: Units::Canonical,
            ..self.kernel.clone()
        };
        if let Some(b) = self.bounds()? {
            let m = r.mle.as_mut().expect("bounds imply mle");
            m.lower = b.lower;
            m.upper = b.upper;
        }
        r.orthogonalization = self.orthogonalization.resolved(self.dim());
        Ok(r)
    }

    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn basis(&self) -> Result<Basis> {
        let d = self.dim();
        match &self.basis {
            BasisConfig::Constant => Ok(Basis::constant(d)),
            BasisConfig::Linear => Ok(Basis::linear(d)),
            BasisConfig::Monomial { terms } => {
                let sets = terms
                    .iter()
                    .map(|t| {
                        t.iter()
                            .map(|&j| {
                                j.checked_sub(1).ok_or_else(|| {
                                    OgpError::Config("monomial term indices start at 1".into())
                                })
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Basis::monomial(d, sets)
            }
            BasisConfig::Affine { rows } => Basis::affine_from_original(&self.domain, rows),
        }
    }

    fn to_canonical(&self, psi: &[f64]) -> Result<Vec<f64>> {
        match self.kernel.units {
            Units::Canonical => {
                if psi.len() != self.dim() {
                    return Err(OgpError::Dimension(format!(
                        "{} lengthscales for d={}",
                        psi.len(),
                        self.dim()
                    )));
                }
                Ok(psi.to_vec())
            }
            Units::Original => self.domain.lengthscales_to_canonical(psi),
        }
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        let psi = self.to_canonical(&self.kernel.lengthscales)?;
        KernelSpec::new(self.kernel.family, self.kernel.variance, psi)
    }

    pub fn bounds(&self) -> Result<Option<Bounds>> {
        self.mle
            .as_ref()
            .map(|m| {
                Ok(Bounds {
                    lower: self.to_canonical(&m.lower)?,
                    upper: self.to_canonical(&m.upper)?,
                })
            })
            .transpose()
    }
}
