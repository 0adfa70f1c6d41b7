//! Ground states of the attractive two-dimensional Gross–Pitaevskii energy
//!
//! ```text
//! E_a(u) = ∫|∇u|² + ∫V u² - (a/2)∫u⁴,   ∫u² = 1,
//! ```
//!
//! with the ring trap `V(x) = (|x| - A)²`, and the diagnostics that compare
//! computed minimizers against their blow-up asymptotics as `a` approaches
//! the critical strength `a* = ‖Q‖₂²`.

pub mod asymptotics;
pub mod config;
pub mod dump;
pub mod error;
pub mod gn;
pub mod grid;
pub mod interp;
pub mod par;
pub mod pipeline;
pub mod potential;
pub mod solver;
pub mod spectral;
pub mod townes;

pub use config::{RunConfig, Schedule};
pub use error::{AnalysisError, ConfigError, FieldError, PipelineError, ProfileError, SolverError};
pub use grid::{Field2D, Grid2D};
pub use potential::PotentialSpec;
pub use solver::{GroundState, Method, SolveConfig};
pub use townes::RadialProfile;
