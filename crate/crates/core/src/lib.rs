//! Variational solver for one-dimensional few-electron systems.
//!
//! The library has three solver stacks sharing one system description:
//!
//! * [`ecg`] + [`svm`]: explicitly correlated Gaussian bases with analytic
//!   matrix elements, grown and refined by stochastic trial competition and
//!   solved as a generalized eigenproblem ([`linalg`]).
//! * [`cavity`]: the same electronic bases coupled to a single quantized
//!   photon mode (dipole form with self-interaction), organized in
//!   photon-number blocks.
//! * [`dft`]: a 400-point grid Kohn-Sham LSDA baseline for the same systems.
//!
//! [`observables`] derives energy decompositions, density diagnostics, and
//! cross-method comparison reports from either stack.
//!
//! The math core ([`ecg::quadform`], [`ecg::elements`], [`quad`], [`linalg`])
//! is generic over the floating-point type through [`scalar::Scalar`];
//! drivers run at [`Real`] = `f64`.

pub mod cavity;
pub mod dft;
pub mod ecg;
pub mod error;
pub mod linalg;
pub mod observables;
pub mod perm;
pub mod quad;
pub mod scalar;
pub mod svm;
pub mod system;

/// Scalar type used by all concrete drivers.
pub type Real = f64;

/// Quadratic form over the driver scalar.
pub type QForm = ecg::quadform::QuadraticForm<Real>;

pub use error::{Error, Result};
pub use system::{CavitySpec, Confinement, SystemSpec};
