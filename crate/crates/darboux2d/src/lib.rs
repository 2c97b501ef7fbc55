//! Construction and verification of exactly solvable two-dimensional
//! stationary Schrödinger operators (Δ − u)Y = 0. Potentials and solutions
//! are produced by Moutard transformations and by a nonlocal Darboux
//! transformation of the associated Fokker–Planck form, then checked
//! numerically on reference grids.

pub mod catalog;
pub mod darboux;
pub mod error;
pub mod field;
pub mod grid;
pub mod jet;
pub mod moutard;
pub mod nonlocal;
pub mod record;
pub mod render;
pub mod verify;

pub use catalog::CatalogEntry;
pub use error::{Error, Result};
pub use field::{Point2, ScalarField2};
pub use grid::{GridData, GridSpec};
pub use jet::Jet3;
