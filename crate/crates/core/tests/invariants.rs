//! Randomized invariants over kernels, bases, designs and estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ogp_core::design::latin_hypercube;
use ogp_core::estimate::gls_beta;
use ogp_core::{
    fit_fixed, Basis, Covariance, Dataset, Domain, Family, KernelSpec, Method, OrthoKernel, OrthoSettings,
    Predictor,
};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

fn min_eig(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Heredity-closed monomial sets of degree at most two in `d` inputs.
fn monomial_sets(d: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(any::<bool>(), d + d * (d - 1) / 2).prop_map(move |mask| {
        let mut sets = vec![vec![]];
        sets.extend((0..d).filter(|&j| mask[j]).map(|j| vec![j]));
        let mut k = d;
        for a in 0..d {
            for b in a + 1..d {
                if mask[k] && mask[a] && mask[b] {
                    sets.push(vec![a, b]);
                }
                k += 1;
            }
        }
        sets
    })
}

fn smooth(u: &[f64]) -> f64 {
    u.iter().enumerate().map(|(j, v)| ((j + 1) as f64 * v).sin()).sum::<f64>() + u[0] * u[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn plain_gram_is_psd(fam in family(), d in 1usize..4, n in 2usize..50, seed in 0u64..1000,
                         psi in 0.2f64..3.0, s2 in 0.1f64..10.0) {
        let k = KernelSpec::new(fam, s2, vec![psi; d]).unwrap();
        let c = k.cov_matrix(&latin_hypercube(n, d, seed)).unwrap().matrix;
        prop_assert!(min_eig(c) >= -1e-10 * s2);
    }

    #[test]
    fn ortho_gram_is_psd(fam in family(), (d, sets) in (1usize..4).prop_flat_map(|d| (Just(d), monomial_sets(d))),
                         n in 2usize..40, seed in 0u64..1000, psi in 0.3f64..3.0, s2 in 0.1f64..10.0) {
        let k = KernelSpec::new(fam, s2, vec![psi; d]).unwrap();
        let basis = Basis::monomial(d, sets).unwrap();
        let o = OrthoKernel::new(&k, &basis, &OrthoSettings::closed_form()).unwrap();
        let c = o.gram(&latin_hypercube(n, d, seed)).unwrap().matrix;
        prop_assert!(min_eig(c) >= -1e-8 * s2);
    }

    #[test]
    fn reparametrized_basis_leaves_ortho_kernel_unchanged(
        fam in family(), d in 1usize..3, psi in 0.4f64..3.0,
        a in prop::collection::vec(-2.0f64..2.0, 16), seed in 0u64..1000,
    ) {
        let p = d + 1;
        let mut m = DMatrix::from_fn(p, p, |i, j| a[i * 4 + j]);
        for i in 0..p {
            m[(i, i)] += 3.0;
        }
        prop_assume!(m.determinant().abs() > 0.5);
        let k = KernelSpec::new(fam, 1.0, vec![psi; d]).unwrap();
        let set = OrthoSettings::closed_form();
        let plain = OrthoKernel::new(&k, &Basis::linear(d), &set).unwrap();
        let mixed = OrthoKernel::new(&k, &Basis::affine(m).unwrap(), &set).unwrap();
        for pair in latin_hypercube(6, 2 * d, seed) {
            let (u, v) = pair.split_at(d);
            let x = plain.eval(u, v).unwrap();
            let y = mixed.eval(u, v).unwrap();
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(plain.eval(u, u).unwrap()), "{x} vs {y}");
        }
    }

    #[test]
    fn gls_is_scale_invariant(n in 4usize..20, seed in 0u64..1000, alpha in 1e-3f64..1e3, psi in 0.3f64..2.0) {
        let design = latin_hypercube(n, 2, seed);
        let g = Basis::linear(2).model_matrix(&design).unwrap();
        let c = KernelSpec::new(Family::Matern32, 1.0, vec![psi; 2]).unwrap().cov_matrix(&design).unwrap().matrix;
        let y = DVector::from_iterator(n, design.iter().map(|u| smooth(u)));
        let b1 = gls_beta(&g, &c, &y).unwrap();
        let b2 = gls_beta(&g, &(c * alpha), &y).unwrap();
        prop_assert!((b1 - &b2).amax() <= 1e-12 * b2.amax().max(1.0));
    }

    #[test]
    fn every_method_interpolates(fam in family(), n in 4usize..25, seed in 0u64..1000, psi in 0.3f64..1.5,
                                 method in prop::sample::select(Method::ALL.to_vec())) {
        let design = latin_hypercube(n, 2, seed);
        let y: Vec<f64> = design.iter().map(|u| smooth(u)).collect();
        let range = y.iter().cloned().fold(f64::MIN, f64::max) - y.iter().cloned().fold(f64::MAX, f64::min);
        let data = Dataset::new(design.clone(), y.clone()).unwrap();
        let basis = Basis::linear(2);
        let k = KernelSpec::new(fam, 1.0, vec![psi; 2]).unwrap();
        let cov = Covariance::for_method(method, &k, &basis, &OrthoSettings::closed_form()).unwrap();
        let pred = Predictor::new(method, cov, &basis, &data).unwrap();
        for (u, yi) in design.iter().zip(&y) {
            prop_assert!((pred.predict_mean(u).unwrap() - yi).abs() <= 1e-8 * range);
        }
    }

    #[test]
    fn row_permutation_changes_nothing(fam in family(), n in 4usize..20, seed in 0u64..1000, shift in 1usize..19,
                                       method in prop::sample::select(Method::ALL.to_vec())) {
        let design = latin_hypercube(n, 2, seed);
        let y: Vec<f64> = design.iter().map(|u| smooth(u)).collect();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + shift) % n).collect();
        prop_assume!({ let mut s = perm.clone(); s.sort(); s.dedup(); s.len() == n });
        let a = Dataset::new(design.clone(), y.clone()).unwrap();
        let b = Dataset::new(perm.iter().map(|&i| design[i].clone()).collect(), perm.iter().map(|&i| y[i]).collect()).unwrap();
        let basis = Basis::linear(2);
        let k = KernelSpec::new(fam, 1.0, vec![0.8; 2]).unwrap();
        let set = OrthoSettings::closed_form();
        let fa = fit_fixed(&a, method, &basis, &k, &set).unwrap();
        let fb = fit_fixed(&b, method, &basis, &k, &set).unwrap();
        for (x, y) in fa.beta_hat.iter().zip(&fb.beta_hat) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
        let pa = fa.predictor(&a, &basis, fam, &set).unwrap();
        let pb = fb.predictor(&b, &basis, fam, &set).unwrap();
        for u in latin_hypercube(5, 2, seed + 1) {
            let (x, y) = (pa.predict_mean(&u).unwrap(), pb.predict_mean(&u).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn model_matrix_has_full_rank((d, sets) in (1usize..4).prop_flat_map(|d| (Just(d), monomial_sets(d))),
                                  extra in 0usize..10, seed in 0u64..1000) {
        let basis = Basis::monomial(d, sets).unwrap();
        let g = basis.model_matrix(&latin_hypercube(basis.len() + extra + 1, d, seed)).unwrap();
        let sv = g.clone().svd(false, false).singular_values;
        let smax = sv.max();
        prop_assert!(sv.iter().all(|s| *s > 1e-10 * smax), "{sv:?}");
    }

    #[test]
    fn monomial_value_is_coordinate_product((d, sets) in (1usize..4).prop_flat_map(|d| (Just(d), monomial_sets(d))),
                                            seed in 0u64..1000) {
        let basis = Basis::monomial(d, sets.clone()).unwrap();
        for u in latin_hypercube(7, d, seed) {
            let g = basis.eval(&u).unwrap();
            for (gi, set) in g.iter().zip(&sets) {
                prop_assert_eq!(*gi, set.iter().map(|&j| u[j]).product::<f64>());
            }
        }
    }

    #[test]
    fn canonical_round_trip(lo in prop::collection::vec(-1e3f64..1e3, 1..5), w in prop::collection::vec(1e-3f64..1e3, 4),
                            t in prop::collection::vec(0.0f64..=1.0, 4)) {
        let d = lo.len();
        let hi: Vec<f64> = lo.iter().zip(&w).map(|(a, b)| a + b).collect();
        let dom = Domain::new(lo.clone(), hi).unwrap();
        let x: Vec<f64> = (0..d).map(|j| lo[j] + t[j] * w[j]).collect();
        let back = dom.from_canonical(&dom.to_canonical(&x).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(w.iter().cloned().fold(0.0, f64::max)));
        }
    }
}
