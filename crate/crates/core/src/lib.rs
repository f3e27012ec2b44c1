//! Light-cone traces of solutions of the wave equation in odd dimensions,
//! the isometries they satisfy and their inversion through the Radon
//! transform.

pub mod error;
pub mod fd;
pub mod fields;
pub mod geometry;
pub mod identities;
pub mod io;
pub mod jet;
pub mod radon;
pub mod sphmean;
pub mod spline;
pub mod sum;
pub mod trace;

pub use error::{Error, Result};
