//! Numerical workbench for covariant quantum error-correcting codes.
//!
//! The crate builds explicit encoding isometries for a family of
//! symmetry-covariant codes (rotor codes with sharp and smooth cutoffs,
//! qudit perfect codes, Dicke/thermodynamic codes, W-state codes, and
//! finite-group codes), exposes the erasure noise model through the
//! complementary-channel picture, and evaluates:
//!
//! * certified upper bounds on the worst-case recovery infidelity
//!   (reference-state and minorization certificates),
//! * certified lower bounds (charge-spread bounds, correlation bounds,
//!   environment-distinguishability bounds, and the approximate
//!   Eastin–Knill dimension bounds),
//! * exact Knill–Laflamme erasure checks and transversal-gate checks for
//!   finite-group codes,
//! * heuristic estimates of the worst-case infidelity used to sanity-check
//!   that every lower bound sits below every certificate.

pub mod bounds;
pub mod certify;
pub mod codespace;
pub mod fidelity;
pub mod groupcodes;
pub mod noise;
pub mod numkit;
pub mod reptheory;
pub mod special;

pub use bounds::{BoundDirection, BoundReport, EnvObservable};
pub use certify::Certificate;
pub use codespace::{ChargeSpec, CovariantCode, SparseState};
pub use fidelity::{EstimateKind, FidelityEstimate};
pub use groupcodes::{BuiltinGroup, FiniteGroup, GroupCode, Side};
pub use noise::{ErasureEvent, ErasureModel, ReducedFamily};
pub use numkit::{CMat, SubsystemShape, C64};
pub use reptheory::{DimBound, EkMetric, YoungDiagram};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite entry encountered in matrix construction")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dense dimension {got} exceeds budget {budget}")]
    BudgetExceeded { got: usize, budget: usize },
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("matrix is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid group table: {0}")]
    InvalidGroup(String),
    #[error("minorization requires a commuting (jointly diagonal) family; use the reference-state certificate instead")]
    NonCommutingFamily,
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
