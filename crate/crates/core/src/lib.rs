//! Chebyshev step schedules for gradient descent and Chebyshev-periodical
//! successive over-relaxation (Chebyshev-PSOR) for fixed-point iterations.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectral`]: dense matrices, symmetric eigensolvers, power iteration and
//!   spectral bound estimation.
//! - [`chebyshev`]: Chebyshev polynomials, step / SOR-factor schedules, the
//!   closed-form rate formulas and the incremental-training permutation search.
//! - [`graddesc`]: gradient descent on quadratic objectives with pluggable
//!   schedules, the momentum and semi-iterative baselines, and exact analysis of
//!   the one-period iteration matrix.
//! - [`psor`]: a generic fixed-point engine with periodic SOR factors, local
//!   rate reports and the affine-composite Jacobian machinery.
//! - [`apps`]: Jacobi, ISTA/FISTA for Lasso and modified Richardson deblurring
//!   built on [`psor`].

pub mod apps;
pub mod chebyshev;
mod error;
pub mod graddesc;
pub mod psor;
pub mod rng;
pub mod spectral;
pub mod trace;

pub use error::{Error, Result};

pub use chebyshev::{RateReport, ScheduleKind, StepSchedule};
pub use graddesc::QuadraticProblem;
pub use psor::{AffineCompositeOperator, FixedPointOperator, PsorConfig};
pub use spectral::{DenseMatrix, Eigendecomposition, SpectralBounds};
pub use trace::IterationTrace;
