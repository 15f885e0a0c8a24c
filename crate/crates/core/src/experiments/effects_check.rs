//! Sweep comparing closed-form kernel effects with Gauss–Legendre quadrature.

use serde::{Deserialize, Serialize};

use super::{num, Tabular, SCHEMA_VERSION};
use crate::design::linspace;
use crate::effects::{compare_effects, EffectsDiscrepancy};
use crate::kernel::Family;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectsCheckConfig {
    pub lengthscales: Vec<f64>,
    pub order: usize,
    pub probes: usize,
}

impl Default for EffectsCheckConfig {
    fn default() -> Self {
        EffectsCheckConfig {
            lengthscales: vec![0.3, 0.5, 1.0, 2.0, 5.0],
            order: 64,
            probes: 33,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectsCheckRow {
    pub family: Family,
    pub lengthscale: f64,
    pub discrepancy: EffectsDiscrepancy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectsCheckReport {
    pub schema_version: u32,
    pub config: EffectsCheckConfig,
    pub rows: Vec<EffectsCheckRow>,
}

impl EffectsCheckReport {
    /// Largest relative discrepancy for `family` over the lengthscale grid.
    pub fn max_relative(&self, family: Family) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.family == family)
            .map(|r| r.discrepancy.max_relative())
            .fold(0.0, f64::max)
    }

    pub fn max_il(&self) -> f64 {
        self.rows.iter().map(|r| r.discrepancy.il_abs).fold(0.0, f64::max)
    }
}

pub fn effects_check(cfg: &EffectsCheckConfig) -> EffectsCheckReport {
    let probes = linspace(-1.0, 1.0, cfg.probes);
    let rows = Family::ALL
        .iter()
        .flat_map(|&family| {
            let probes = &probes;
            cfg.lengthscales.iter().map(move |&psi| EffectsCheckRow {
                family,
                lengthscale: psi,
                discrepancy: compare_effects(family, psi, cfg.order, probes),
            })
        })
        .collect();
    EffectsCheckReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        rows,
    }
}

impl Tabular for EffectsCheckReport {
    fn csv_header(&self) -> Vec<String> {
        ["family", "lengthscale", "mean", "linear", "im", "ill", "il_abs"]
            .map(String::from)
            .to_vec()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let d = &r.discrepancy;
                vec![
                    r.family.name().to_string(),
                    num(r.lengthscale),
                    num(d.mean),
                    num(d.linear),
                    num(d.im),
                    num(d.ill),
                    num(d.il_abs),
                ]
            })
            .collect()
    }
}
