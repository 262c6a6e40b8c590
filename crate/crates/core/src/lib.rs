//! Multiparameter ergodic averages of kernels on finite-dimensional von Neumann
//! algebras: block-diagonal algebras with weighted traces, kernels as
//! superoperators, Cesàro averages and their limits, recurrence families from
//! free-group actions, and maximal-inequality certificates.

pub mod algebra;
pub mod cesaro;
pub mod error;
pub mod freegroup;
pub mod instance;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod maximal;

pub use algebra::{Algebra, NormKind, Operator};
pub use cesaro::{ConvergenceReport, Grid, MultiIndex, Verdict};
pub use error::{Error, Result};
pub use freegroup::{DpQuery, RecurrenceFamily};
pub use kernel::{Kernel, KernelReport, Provenance};
pub use linalg::Matrix;
pub use maximal::{BrunelWeights, ProjectionCertificate};
