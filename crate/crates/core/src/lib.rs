//! Riemannian optimization on the manifold of symmetric positive definite
//! matrices under the Alpha-Procrustes family of metrics (with the
//! affine-invariant metric as a baseline).
//!
//! Modules, bottom-up:
//!
//! * [`linalg`]: symmetric eigendecomposition, spectral functions, Loewner
//!   matrices, Fréchet derivatives, Lyapunov solves, Haar sampling.
//! * [`geometry`]: metrics, gradients, exponential maps, distances, tangent
//!   coordinates.
//! * [`submersion`]: the quotient map `A ↦ (α²AAᵀ)^{1/(2α)}` and a lifted
//!   finite-difference Hessian oracle.
//! * [`hessian`]: Hessian matrices and spectrum reports at minimizers.
//! * [`problems`]: weighted least squares, trace regression, Sylvester.
//! * [`optim`]: steepest descent and trust-region solvers.
//! * [`harness`]: experiment configs, sweeps, CSV traces, tables, plots.

// `!(x > y)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod hessian;
pub mod linalg;
pub mod optim;
pub mod problems;
pub mod submersion;

pub use error::{Error, Result};
pub use geometry::{distance, exp_map, metric_inner, riemannian_gradient, MetricSpec};
pub use linalg::{eig_sym, SpdPoint, SymMatrix};
pub use optim::{rsd_solve, rtr_solve, RsdConfig, RtrConfig, RunTrace};
pub use problems::ObjectiveProblem;
