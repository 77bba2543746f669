//! Maslov-type index iteration theory for closed orbits.
//!
//! The crate computes rotation functions and mean indices of symplectic paths,
//! upper and lower Conley-Zehnder indices, splitting numbers from basic normal
//! forms, precise iteration formulas, common index jump events, and
//! step-by-step irrational ellipticity certificates for orbit systems such as
//! the irrational ellipsoids.

pub mod certify;
pub mod cijt;
pub mod cli;
pub mod error;
pub mod exact;
pub mod iteration;
pub mod json;
pub mod linalg;
pub mod orbits;
pub mod par;
pub mod path;
pub mod sp_core;
pub mod splitting;
pub mod tol;

pub use error::{Error, Result};
pub use exact::{Real, Surd};
