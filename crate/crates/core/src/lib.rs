//! Quantum measurement resources: assemblage monotones, correlation
//! hierarchies, analytic bounds and distance quantifiers, solved as conic
//! programs.

pub mod altdist;
pub mod assemblage;
pub mod bounds;
pub mod config;
pub mod conic;
pub mod correlations;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod monotones;
pub mod random;
pub mod repro;
pub mod strategies;

pub use assemblage::{Povm, WeightedAssemblage};
pub use config::{SolverConfig, Tolerances};
pub use error::{Error, Result};
pub use exec::Execution;
