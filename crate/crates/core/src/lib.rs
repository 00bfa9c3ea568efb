//! Pseudospectral NLS evolution and numerical checks of bilinear virial
//! identities on periodic boxes and on 2D domains with a Dirichlet obstacle.

pub mod data;
pub mod error;
pub mod field;
pub mod grid;
pub mod manifest;
pub mod diagnostics;
pub mod domain;
pub mod nls;
pub mod radon;
pub mod spectral;
pub mod verify;
pub mod virial;

pub use error::{Error, Result};
pub use field::ComplexField;
pub use grid::{Direction, ExactDirection, Grid};
