//! Browser bindings for one-dimensional models on `[0, 1]`. Arrays cross the boundary as
//! flat `Float64Array`s.

use ogp_core::design::linspace;
use ogp_core::{fit_fixed, nystrom_eigensystem, Basis, Covariance, Dataset, Domain, Family, KernelSpec, Method};
use ogp_core::{eigenfunction_table, OrthoSettings, Result};
use wasm_bindgen::prelude::*;

const QUAD_ORDER: usize = 64;

fn domain() -> Domain {
    Domain::new(vec![0.0], vec![1.0]).expect("unit interval")
}

fn canonical(xs: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = domain();
    xs.iter().map(|&x| d.to_canonical(&[x])).collect()
}

fn grid(m: usize) -> Vec<Vec<f64>> {
    linspace(-1.0, 1.0, m).into_iter().map(|u| vec![u]).collect()
}

fn parse(method: &str, family: &str) -> Result<(Method, Family)> {
    Ok((method.parse()?, family.parse()?))
}

/// Fits a linear trend with the lengthscale fixed and returns
/// `[b1, b2, mean(grid)..., variance(grid)...]`, coefficients on `[0, 1]`.
pub fn fit_1d_values(method: &str, family: &str, lengthscale: f64, xs: &[f64], ys: &[f64], m: usize) -> Result<Vec<f64>> {
    let (method, family) = parse(method, family)?;
    let basis = Basis::linear(1);
    let data = Dataset::new(canonical(xs)?, ys.to_vec())?;
    let kernel = KernelSpec::new(family, 1.0, vec![lengthscale])?;
    let ortho = OrthoSettings::closed_form();
    let fit = fit_fixed(&data, method, &basis, &kernel, &ortho)?;
    let pred = fit.predictor(&data, &basis, family, &ortho)?;
    let mut out = basis
        .coefficients_to_original(&domain(), &fit.beta_hat)
        .expect("linear basis maps back");
    let g = grid(m);
    let mut var = Vec::with_capacity(m);
    for u in &g {
        out.push(pred.predict_mean(u)?);
        var.push(pred.variance(u)?);
    }
    out.extend(var);
    Ok(out)
}

/// Predictive variance on an `m`-point grid at unit process variance. The response is
/// irrelevant to the variance, so zeros are used.
pub fn variance_profile_values(method: &str, family: &str, lengthscale: f64, xs: &[f64], m: usize) -> Result<Vec<f64>> {
    let (method, family) = parse(method, family)?;
    let basis = Basis::linear(1);
    let data = Dataset::new(canonical(xs)?, vec![0.0; xs.len()])?;
    let kernel = KernelSpec::new(family, 1.0, vec![lengthscale])?;
    let cov = Covariance::for_method(method, &kernel, &basis, &OrthoSettings::closed_form())?;
    let pred = ogp_core::Predictor::new(method, cov, &basis, &data)?;
    grid(m).iter().map(|u| pred.variance(u)).collect()
}

/// `[lambda_1..lambda_k, f_1(grid)..., ..., f_k(grid)...]` for the plain kernel or, with
/// `orthogonal`, the kernel orthogonalized against `(1, x)`.
pub fn eigenfunction_values(family: &str, lengthscale: f64, orthogonal: bool, k: usize, m: usize) -> Result<Vec<f64>> {
    let family: Family = family.parse()?;
    let kernel = KernelSpec::new(family, 1.0, vec![lengthscale])?;
    let method = if orthogonal { Method::Ogp } else { Method::Uk };
    let cov = Covariance::for_method(method, &kernel, &Basis::linear(1), &OrthoSettings::closed_form())?;
    let es = nystrom_eigensystem(cov.evaluator(), 1, QUAD_ORDER, k)?;
    let t = eigenfunction_table(&es, &grid(m));
    let mut out = es.eigenvalues.clone();
    for c in 0..k {
        out.extend(t.column(c).iter());
    }
    Ok(out)
}

fn js(e: ogp_core::OgpError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn fit_1d(method: &str, family: &str, lengthscale: f64, xs: &[f64], ys: &[f64], m: usize) -> Result<Vec<f64>, JsError> {
    fit_1d_values(method, family, lengthscale, xs, ys, m).map_err(js)
}

#[wasm_bindgen]
pub fn variance_profile(method: &str, family: &str, lengthscale: f64, xs: &[f64], m: usize) -> Result<Vec<f64>, JsError> {
    variance_profile_values(method, family, lengthscale, xs, m).map_err(js)
}

#[wasm_bindgen]
pub fn eigenfunctions(family: &str, lengthscale: f64, orthogonal: bool, k: usize, m: usize) -> Result<Vec<f64>, JsError> {
    eigenfunction_values(family, lengthscale, orthogonal, k, m).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scheme2() -> (Vec<f64>, Vec<f64>) {
        let xs: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        let ys = xs.iter().map(|x| (2.0 * x).sin()).collect();
        (xs, ys)
    }

    #[test]
    fn fit_interpolates_and_reports_trend() {
        let (xs, ys) = scheme2();
        let out = fit_1d_values("OGP", "squared_exponential", 1.0, &xs, &ys, 9).unwrap();
        assert_eq!(out.len(), 2 + 18);
        assert!((out[0] - 0.22).abs() < 0.005 && (out[1] - 0.98).abs() < 0.005, "{:?}", &out[..2]);
        for (i, y) in ys.iter().enumerate() {
            assert!((out[2 + i] - y).abs() < 1e-8);
            assert!(out[11 + i].abs() < 1e-8);
        }
    }

    #[test]
    fn variance_vanishes_at_design_points() {
        let xs = [0.0, 0.5, 1.0];
        let v = variance_profile_values("UK", "matern32", 1.0, &xs, 5).unwrap();
        assert!(v.iter().all(|&x| x >= 0.0));
        for i in [0, 2, 4] {
            assert!(v[i] < 1e-10, "{v:?}");
        }
        assert!(v[1] > 1e-4 && v[3] > 1e-4);
    }

    #[test]
    fn orthogonal_eigenfunctions_lose_the_constant_mode() {
        let plain = eigenfunction_values("squared_exponential", 1.0, false, 3, 201).unwrap();
        let ortho = eigenfunction_values("squared_exponential", 1.0, true, 3, 201).unwrap();
        assert!(ortho[0] < plain[0]);
        // trapezoid integral of f_1 over the canonical interval
        let integral = |v: &[f64]| (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1])) * 0.01;
        assert!(integral(&plain[3..204]).abs() > 1.0);
        assert!(integral(&ortho[3..204]).abs() < 1e-3);
    }

    #[test]
    fn bad_names_are_errors() {
        assert!(fit_1d_values("BLUP", "matern32", 1.0, &[0.0, 1.0], &[0.0, 1.0], 3).is_err());
        assert!(eigenfunction_values("cauchy", 1.0, true, 3, 5).is_err());
    }
}
