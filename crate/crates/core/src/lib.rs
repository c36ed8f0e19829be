//! Linearized Korteweg-de Vries solver on a bounded interval.

pub mod assembly;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod orthopoly;
pub mod petrov_galerkin;
pub mod stepper;
pub mod transforms;
pub mod ztbc;

pub use error::{KdvError, Result, Stage};
