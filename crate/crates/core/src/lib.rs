//! Simulation toolkit for coherently controlled tasks in entanglement-based quantum
//! networks: a labeled-register state engine, graph-state rewriting, controlled
//! measurements via auxiliary swaps, network protocols and entanglement measures.

pub mod error;
pub mod linalg;
pub mod engine;
pub mod random;
pub mod graphstate;
pub mod ctrltask;
pub mod network;
pub mod entmetrics;
pub mod scenarios;

pub use engine::{DensityState, MeasurementRecord, Policy, PostSelect, PureState, Register, Sample, Scripted};
pub use error::{Error, Result};
