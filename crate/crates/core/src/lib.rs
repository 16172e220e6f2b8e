//! Phase-field cohesive zone model for monotonic, cyclic and fatigue fracture
//! of quasi-brittle solids.

pub mod assembly;
pub mod config;
pub mod constitutive;
pub mod error;
pub mod mesh;
pub mod postproc;
pub mod runner;
pub mod solver;

pub use error::{Error, Result};
