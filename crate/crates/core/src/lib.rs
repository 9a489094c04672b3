//! Two-weight constants for fractional Riesz transforms on atomic measures.
//!
//! Everything here works with pairs of finitely atomic measures (σ, ω) on ℝⁿ.
//! The library evaluates truncated fractional Riesz transforms exactly (finite
//! sums, no quadrature), computes the Muckenhoupt-type, testing, weak
//! boundedness and energy constants as suprema over configurable families of
//! dyadic cubes and partitions, and ships a diagnostic suite that measures the
//! empirical comparability constants between them.

pub mod constants;
pub mod energy;
pub mod geometry;
pub mod measure;
pub mod numeric;
pub mod report;
pub mod transform;
pub mod verify;

pub use constants::{ConstantsReport, Direction, Evaluator, PartitionStrategy, Witness};
pub use geometry::{Cube, GoodnessParams, GridSpec, Place, ShadowInterval};
pub use measure::{Atom, DiscreteMeasure, LineSpec, Scenario, WhichMeasure};
pub use transform::{KernelParams, Truncation};
pub use verify::{CheckResult, GeneratorConfig};

/// Library-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input violates a documented invariant (dimension mismatch, common
    /// point masses, parameter out of admissible range, ...).
    #[error("validation error: {0}")]
    Validation(String),
    /// A level/parent walk left the configured grid range.
    #[error("range error: {0}")]
    Range(String),
    /// Kernel evaluated at the origin.
    #[error("singularity error: {0}")]
    Singularity(String),
    /// Mean of a measure with zero mass on the requested cube.
    #[error("undefined mean: {0}")]
    UndefinedMean(String),
    /// Malformed configuration or report payload.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
