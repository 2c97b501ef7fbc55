//! Shared error type for field evaluation, transformation, and verification.

use crate::field::Point2;

/// Failure modes surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The requested point lies outside a field's domain of definition.
    #[error("point ({}, {}) lies outside the field domain", .0.x, .0.y)]
    Domain(Point2),

    /// A field or derivative evaluated to NaN or infinity.
    #[error("non-finite value at ({}, {})", .0.x, .0.y)]
    NonFinite(Point2),

    /// A grid operation found no valid node to work with.
    #[error("every grid node is masked out")]
    EmptyMask,

    /// Malformed grid geometry or grid file contents.
    #[error("invalid grid: {0}")]
    Grid(String),

    /// A constructor received parameters outside its admissible range.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// A lookup by name found no matching catalog entry or transformation.
    #[error("unknown {0}")]
    Unknown(String),

    /// A transformation seed vanishes where it must not.
    #[error("seed solution vanishes near ({}, {})", .0.x, .0.y)]
    ZeroSeed(Point2),

    /// The nonlocal pair variable vanishes where a division by it is needed.
    #[error("pair variable vanishes near ({}, {})", .0.x, .0.y)]
    ZeroQ(Point2),

    /// The Laplacian vanishes where the first integral divides by it.
    #[error("Laplacian vanishes at ({}, {}); first integral undefined", .0.x, .0.y)]
    ZeroLaplacian(Point2),

    /// No axis-parallel integration path connects the base point to the target.
    #[error(
        "integration path from ({}, {}) to ({}, {}) crosses an excluded region",
        .0.x, .0.y, .1.x, .1.y
    )]
    PathBlocked(Point2, Point2),

    /// The shift-transform coefficient denominator is numerically zero.
    #[error("transformation coefficients degenerate at ({}, {}): |F| = {:.3e}", .0.x, .0.y, .1)]
    Degenerate(Point2, f64),

    /// The pair (Y, Y_h) does not satisfy the cross-derivative condition that
    /// makes the nonlocal variable path-independent.
    #[error("pair compatibility residual {0:.3e} exceeds the allowed {1:.3e}")]
    Compatibility(f64, f64),

    /// A shift function failed certification against the constraint system.
    #[error("shift-system residual {0:.3e} exceeds the certification tolerance {1:.3e}")]
    Certification(f64, f64),

    /// A closed-form family was evaluated outside the branch it is defined on.
    #[error("out-of-range branch: {0}")]
    Branch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
