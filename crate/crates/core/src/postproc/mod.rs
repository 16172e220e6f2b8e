//! Post-processing: crack tracing, fracture mechanics fits and output writers.

pub mod crack;
pub mod fatigue;
pub mod output;
