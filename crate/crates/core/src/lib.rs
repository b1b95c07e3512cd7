//! Floquet master-equation simulator for few two-level emitters in a
//! laser-driven cavity, kept beyond the rotating-wave approximation.

pub mod cli;
pub mod dissipator;
pub mod dynamics;
pub mod error;
pub mod floquet;
pub mod linalg;
pub mod measures;
pub mod model;
pub mod semiclassical;

pub use error::{Error, Result};
