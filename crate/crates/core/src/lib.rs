//! Orthogonal Gaussian process models.
//!
//! A kriging model `y(x) = beta^T g(x) + z(x)` whose stochastic term uses the covariance
//! `c*(u, v) = c(u, v) - h(u)^T H^{-1} h(v)`. Sample paths of `z` are then orthogonal to
//! the trend basis over the input domain, which makes `beta` identifiable as the
//! projection of `y` onto the basis.
//!
//! All modelling happens on the canonical cube `[-1, 1]^d`; [`Domain`] maps original
//! coordinates onto it.

pub mod basis;
pub mod design;
pub mod domain;
pub mod effects;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod kernel;
pub mod linalg;
pub mod optimize;
pub mod ortho;
pub mod quadrature;
pub mod spectra;

pub use basis::Basis;
pub use domain::Domain;
pub use error::{OgpError, Result};
pub use estimate::{fit_fixed, fit_mle, Covariance, Dataset, FitResult, Method, Predictor};
pub use kernel::{Family, KernelSpec};
pub use ortho::{OrthoKernel, OrthoMode, OrthoSettings};
pub use spectra::{eigenfunction_table, nystrom_eigensystem, EigenSystem};
