//! Symbolic verification of kappa-deformed and dual kappa-deformed
//! Poincaré algebras: brackets on realizations, structure-table algebras,
//! deformation constraints, coproducts and Poincaré limits.

pub mod bases;
pub mod canonical;
pub mod config;
pub mod error;
pub mod expr;
pub mod hopf;
pub mod report;
pub mod suite;

pub use error::{Error, Result};
