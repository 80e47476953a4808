//! Sparse linear array design for maximum beamformer output SINR.
//!
//! Given an N-point uniform candidate grid and a scenario of one desired
//! source plus interferers, the toolkit selects P sensor positions and the
//! matching beamforming weights. Sensor selection runs a successive convex
//! approximation with a reweighted mixed l1/l-inf group penalty; the full
//! data correlation matrix it needs is recovered either by trace-regularized
//! PSD-Toeplitz matrix completion (free designs) or by sub-diagonal averaging
//! (fully augmentable hybrid designs). Exhaustive enumeration oracles and a
//! Monte Carlo experiment runner round out the crate.
//!
//! The `parallel` feature (on by default) runs enumeration and Monte Carlo
//! trials on a rayon pool; without it every entry point falls back to the
//! sequential code path.

pub mod completion;
pub mod covariance;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod oracle;
pub(crate) mod parallel;
pub mod sca;
pub mod signal;

pub use error::{Error, Result};
