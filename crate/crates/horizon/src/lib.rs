//! Simulation and verification laboratory for the stationary horizon.
//!
//! The crate builds up from scalar queueing maps on finite windows to
//! multiline sorting (melonization), a continuous queue map on
//! piecewise-linear paths, samplers for the prelimit Busemann-style line
//! families and their diffusive scaling limit, an independent last-passage
//! oracle, and the statistical machinery that checks every identity the
//! construction promises.

pub mod cq;
pub mod error;
pub mod io;
pub mod lpp;
pub mod melon;
pub mod path;
pub mod queue;
pub mod sampler;
pub mod seq;
pub mod stats;
pub mod suites;

pub use error::{Error, Result};
pub use path::PiecewiseLinearPath;
pub use queue::BoundaryMode;
pub use seq::{DensityVector, LineEnsemble, Window};
