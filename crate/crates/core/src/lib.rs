//! Energy-optimal planning for vehicles that switch locomotion modes
//! (drive/swim/fly). The toolkit builds mode-constrained probabilistic
//! roadmaps, prices edges either by direct trajectory optimization or by a
//! learned surrogate trained on optimizer output, searches the roadmap,
//! and smooths the winning path with a multi-phase trajectory
//! optimization across mode switches.
//!
//! The numerical core is generic over the scalar type ([`real::Real`],
//! `f32` or `f64`); the aliases at the crate root fix `f64`, which is what
//! the CLI and the built-in scenes use.

pub mod costmodel;
pub mod error;
pub mod graph;
pub mod hybrid;
pub mod linalg;
pub mod models;
pub mod pipeline;
pub mod real;
pub mod sampling;
pub mod scene;
pub mod trajopt;

pub use error::{GraphError, HybridError, ModelError, PipelineError, SampleError, SolveError};
pub use real::Real;

/// `f64` hybrid system, the default scalar for scenes and the CLI.
pub type System = hybrid::HybridSystem<f64>;
pub type Mode = hybrid::Mode<f64>;
pub type Guard = hybrid::Guard<f64>;
pub type VirtualConstraint = hybrid::VirtualConstraint<f64>;
