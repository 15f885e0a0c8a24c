//! Orthogonalized covariance `c*(u, v) = c(u, v) - h(u)^T H^{-1} h(v)`.
//!
//! `h(u) = int c(u, s) g(s) ds` and `H = int int c(s', s) g(s) g(s')^T ds ds'` over the
//! canonical cube. A process with covariance `c*` has sample paths orthogonal to every
//! component of `g`. Both integrals are either assembled from closed-form effect tables
//! (monomial and affine bases) or computed by tensor Gauss–Legendre product integration.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::effects::{closed_form_verified, h_from_point_effects, EffectTable};
use crate::error::{OgpError, Result};
use crate::kernel::{duplicate_warnings, Gram, KernelSpec};
use crate::linalg::SpdFactor;
use crate::quadrature::{
    apply_along_axes, check_budget, contract_axes, default_order, LagrangeRule,
    DEFAULT_NODE_BUDGET,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrthoMode {
    ClosedForm,
    Quadrature,
}

/// How `h` and `H` are obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrthoSettings {
    pub mode: OrthoMode,
    /// Gauss–Legendre nodes per dimension; `None` picks [`default_order`].
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default = "default_budget")]
    pub node_budget: usize,
}

fn default_budget() -> usize {
    DEFAULT_NODE_BUDGET
}

impl Default for OrthoSettings {
    fn default() -> Self {
        OrthoSettings::closed_form()
    }
}

impl OrthoSettings {
    pub fn closed_form() -> Self {
        OrthoSettings {
            mode: OrthoMode::ClosedForm,
            order: None,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn quadrature(order: Option<usize>) -> Self {
        OrthoSettings {
            mode: OrthoMode::Quadrature,
            order,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    /// Fills in the default order so that the setting can be echoed back.
    pub fn resolved(&self, dim: usize) -> Self {
        let mut s = self.clone();
        if s.mode == OrthoMode::Quadrature && s.order.is_none() {
            s.order = Some(default_order(dim));
        }
        s
    }
}

#[derive(Debug, Clone)]
enum Projector {
    ClosedForm {
        table: EffectTable,
        sets: Vec<Vec<usize>>,
        mix: Option<DMatrix<f64>>,
    },
    Quadrature(QuadratureProjector),
}

/// Product-integration evaluator of `h` on a fixed tensor grid of basis values.
#[derive(Debug, Clone)]
struct QuadratureProjector {
    lagrange: LagrangeRule,
    dim: usize,
    /// `g_i` sampled on the tensor grid, one flat array per basis function.
    samples: Vec<Vec<f64>>,
}

impl QuadratureProjector {
    fn new(basis: &Basis, order: usize, budget: usize) -> Result<Self> {
        if order < 2 {
            return Err(OgpError::InvalidParameter(format!(
                "quadrature order must be at least 2, got {order}"
            )));
        }
        let dim = basis.dim();
        let nodes = check_budget(order, dim, budget)?;
        let lagrange = LagrangeRule::new(order);
        let p = basis.len();
        let mut samples = vec![vec![0.0; nodes]; p];
        let mut point = vec![0.0; dim];
        for idx in 0..nodes {
            let mut rest = idx;
            for j in (0..dim).rev() {
                point[j] = lagrange.rule.nodes[rest % order];
                rest /= order;
            }
            let g = basis.eval_unchecked(&point);
            if g.len() != p || g.iter().any(|v| !v.is_finite()) {
                return Err(OgpError::Surrogate {
                    input: point.clone(),
                    message: format!("basis returned {g:?}, expected {p} finite values"),
                });
            }
            for (s, v) in samples.iter_mut().zip(g) {
                s[idx] = v;
            }
        }
        Ok(QuadratureProjector {
            lagrange,
            dim,
            samples,
        })
    }

    fn h(&self, kernel: &KernelSpec, u: &[f64]) -> Vec<f64> {
        let weights: Vec<Vec<f64>> = (0..self.dim)
            .map(|j| {
                self.lagrange
                    .kernel_weights(kernel.family, kernel.lengthscales[j], u[j])
            })
            .collect();
        let refs: Vec<&[f64]> = weights.iter().map(|w| w.as_slice()).collect();
        self.samples
            .iter()
            .map(|s| contract_axes(s, self.lagrange.order(), &refs))
            .collect()
    }

    fn h_matrix(&self, kernel: &KernelSpec) -> DMatrix<f64> {
        let m = self.lagrange.order();
        let mats: Vec<Vec<f64>> = kernel
            .lengthscales
            .iter()
            .map(|&psi| self.lagrange.kernel_matrix(kernel.family, psi))
            .collect();
        let refs: Vec<&[f64]> = mats.iter().map(|k| k.as_slice()).collect();
        let applied: Vec<Vec<f64>> = self
            .samples
            .iter()
            .map(|s| apply_along_axes(s, m, &refs))
            .collect();
        let p = self.samples.len();
        let mut h = DMatrix::from_fn(p, p, |i, k| {
            self.samples[i]
                .iter()
                .zip(&applied[k])
                .map(|(a, b)| a * b)
                .sum::<f64>()
        });
        let sym = (&h + h.transpose()) * 0.5;
        h.copy_from(&sym);
        h
    }
}

/// The orthogonalized kernel for a fixed base kernel and basis.
#[derive(Debug, Clone)]
pub struct OrthoKernel {
    kernel: KernelSpec,
    basis: Basis,
    projector: Projector,
    /// Unit-variance `H`.
    h_matrix: DMatrix<f64>,
    factor: SpdFactor,
    /// Diagonal of `H` when the shortcut formula applies.
    shortcut: Option<Vec<f64>>,
    settings: OrthoSettings,
    warnings: Vec<String>,
}

impl OrthoKernel {
    pub fn new(kernel: &KernelSpec, basis: &Basis, settings: &OrthoSettings) -> Result<Self> {
        kernel.validate()?;
        if kernel.dim() != basis.dim() {
            return Err(OgpError::Dimension(format!(
                "kernel has d={}, basis has d={}",
                kernel.dim(),
                basis.dim()
            )));
        }
        let mut warnings = Vec::new();
        let mut settings = settings.resolved(basis.dim());
        if settings.mode == OrthoMode::ClosedForm && !closed_form_verified(kernel.family) {
            warnings.push(format!(
                "closed-form effects for {} failed validation; using quadrature",
                kernel.family.name()
            ));
            settings = OrthoSettings {
                mode: OrthoMode::Quadrature,
                ..settings
            }
            .resolved(basis.dim());
        }
        let projector = match settings.mode {
            OrthoMode::ClosedForm => {
                let (sets, mix) = basis.monomial_combination().ok_or_else(|| {
                    OgpError::NoClosedForm("an opaque basis".into())
                })?;
                Projector::ClosedForm {
                    table: EffectTable::closed_form(kernel)?,
                    sets,
                    mix,
                }
            }
            OrthoMode::Quadrature => Projector::Quadrature(QuadratureProjector::new(
                basis,
                settings.order.expect("resolved"),
                settings.node_budget,
            )?),
        };
        let (h_matrix, shortcut) = match &projector {
            Projector::ClosedForm { table, sets, mix } => {
                let hm = table.h_matrix(sets);
                match mix {
                    None => {
                        let diagonal = table.dims.iter().all(|e| e.il == 0.0);
                        let shortcut = diagonal.then(|| hm.diagonal().iter().copied().collect());
                        (hm, shortcut)
                    }
                    Some(a) => (a * hm * a.transpose(), None),
                }
            }
            Projector::Quadrature(q) => (q.h_matrix(kernel), None),
        };
        let factor = SpdFactor::new(&h_matrix, "orthogonalization matrix H")?;
        let pivots = factor.lower().diagonal();
        let (pmin, pmax) = pivots
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        if (pmin / pmax).powi(2) < 1e-12 {
            // Cholesky can succeed on a numerically singular H; a degenerate basis lands here
            return Err(OgpError::NotPositiveDefinite {
                context: "orthogonalization matrix H (basis functions are linearly dependent)".into(),
                jitter: factor.jitter(),
            });
        }
        if factor.jitter() > 0.0 {
            warnings.push(format!("H factored with jitter {:e}", factor.jitter()));
        }
        let shortcut = shortcut.filter(|_| factor.jitter() == 0.0);
        Ok(OrthoKernel {
            kernel: kernel.clone(),
            basis: basis.clone(),
            projector,
            h_matrix,
            factor,
            shortcut,
            settings,
            warnings,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// The settings actually used, with defaults filled in.
    pub fn settings(&self) -> &OrthoSettings {
        &self.settings
    }

    pub fn mode(&self) -> OrthoMode {
        self.settings.mode
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn jitter(&self) -> f64 {
        self.factor.jitter()
    }

    pub fn uses_shortcut(&self) -> bool {
        self.shortcut.is_some()
    }

    /// `H` including the variance factor.
    pub fn h_matrix(&self) -> DMatrix<f64> {
        &self.h_matrix * self.kernel.variance
    }

    /// `h(u)` including the variance factor.
    pub fn h_vector(&self, u: &[f64]) -> Result<DVector<f64>> {
        self.check_point(u)?;
        Ok(self.unit_h(u) * self.kernel.variance)
    }

    fn unit_h(&self, u: &[f64]) -> DVector<f64> {
        match &self.projector {
            Projector::ClosedForm { table, sets, mix } => {
                let hm = DVector::from_vec(h_from_point_effects(sets, &table.point_effects(u)));
                match mix {
                    None => hm,
                    Some(a) => a * hm,
                }
            }
            Projector::Quadrature(q) => DVector::from_vec(q.h(&self.kernel, u)),
        }
    }

    /// Whitened projection `L^{-1} h(u)` (unit variance), or `h / sqrt(diag H)` on the
    /// shortcut path.
    fn whitened(&self, u: &[f64]) -> DVector<f64> {
        let h = self.unit_h(u);
        match &self.shortcut {
            Some(diag) => DVector::from_iterator(
                h.len(),
                h.iter().zip(diag).map(|(v, d)| v / d.sqrt()),
            ),
            None => self.factor.solve_lower_vec(&h),
        }
    }

    /// `c*(u, v)`.
    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_point(u)?;
        self.check_point(v)?;
        let corr = self.kernel.correlation(u, v);
        let sub = match &self.shortcut {
            Some(diag) => {
                let hu = self.unit_h(u);
                let hv = if u == v { hu.clone() } else { self.unit_h(v) };
                hu.iter().zip(hv.iter()).zip(diag).map(|((a, b), d)| a * b / d).sum()
            }
            None => {
                let zu = self.whitened(u);
                if u == v {
                    zu.norm_squared()
                } else {
                    zu.dot(&self.whitened(v))
                }
            }
        };
        Ok(self.kernel.variance * (corr - sub))
    }

    /// `C* = C - W H^{-1} W^T` for the design, with rows of `W` equal to `h(x_i)`.
    pub fn gram(&self, design: &[Vec<f64>]) -> Result<Gram> {
        for x in design {
            self.check_point(x)?;
        }
        let n = design.len();
        let z: Vec<DVector<f64>> = design.iter().map(|x| self.whitened(x)).collect();
        let var = self.kernel.variance;
        let mut c = DMatrix::zeros(n, n);
        for i in 0..n {
            c[(i, i)] = var * (1.0 - z[i].norm_squared());
            for j in (i + 1)..n {
                let v = var * (self.kernel.correlation(&design[i], &design[j]) - z[i].dot(&z[j]));
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        Ok(Gram {
            matrix: c,
            warnings: duplicate_warnings(design),
        })
    }

    /// `(c*(u, x_1), ..., c*(u, x_n))`.
    pub fn cross(&self, u: &[f64], design: &[Vec<f64>]) -> Result<DVector<f64>> {
        self.check_point(u)?;
        let zu = self.whitened(u);
        let var = self.kernel.variance;
        design
            .iter()
            .map(|x| {
                self.check_point(x)?;
                Ok(var * (self.kernel.correlation(u, x) - zu.dot(&self.whitened(x))))
            })
            .collect::<Result<Vec<_>>>()
            .map(DVector::from_vec)
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.kernel.dim() {
            return Err(OgpError::Dimension(format!(
                "point has {} coordinates, kernel has d={}",
                u.len(),
                self.kernel.dim()
            )));
        }
        Ok(())
    }
}
