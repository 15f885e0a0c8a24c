//! Test functions and study drivers. Every report is a pure function of its config and
//! seed and carries both.

pub mod borehole;
pub mod effects_check;
pub mod multifidelity;
pub mod table1;

use serde::Serialize;

pub use borehole::{borehole, borehole_domain, study_borehole, BoreholeConfig, BoreholeReport};
pub use effects_check::{effects_check, EffectsCheckConfig, EffectsCheckReport};
pub use multifidelity::{
    study_multifidelity, synthetic_multifidelity, MultiFidelityConfig, MultiFidelityReport, Surrogate,
    SyntheticConfig,
};
pub use table1::{study_1d, Study1dConfig, Study1dReport};

/// Version of every report and config schema written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

/// Flat tabular view of a report, one row per run.
pub trait Tabular {
    fn csv_header(&self) -> Vec<String>;
    fn csv_rows(&self) -> Vec<Vec<String>>;
}

/// Shortest round-trip representation.
pub(crate) fn num(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn join(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation; the values are sorted first so the result does
/// not depend on the order replicates finished in.
pub fn mean_std(values: &[f64]) -> MeanStd {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    if v.is_empty() {
        return MeanStd { mean: f64::NAN, std: f64::NAN };
    }
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() < 2 {
        0.0
    } else {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    MeanStd { mean, std }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_known_values() {
        let m = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m.mean, 5.0);
        assert!((m.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[1.0]).std, 0.0);
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-17, 123456.789] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
