//! Chi-bar-squared processes for likelihood-ratio tests whose nuisance
//! parameters are unidentified under the null, whose interest parameters sit
//! on the boundary of the parameter space, or whose information degenerates.
//!
//! The crate is organised bottom-up:
//!
//! * [`cone`] projects onto polyhedral cones and their linear images.
//! * [`chibar`] computes mixture weights, CDFs, quantiles and noncentral draws.
//! * [`gp`] discretises the nuisance index set, factors the joint covariance of
//!   the standardised score process and simulates the supremum statistic.
//! * [`linkage`] enumerates inheritance vectors of pedigrees and builds the
//!   score, information and Walsh spectral quantities of linkage MOD scores.
//! * [`models`] registers the worked models and runs finite-sample LRTs.
//!
//! Monte Carlo routines take a seed and derive one counter-based substream per
//! block or replicate, so results do not depend on the thread count. With the
//! `parallel` feature (default) blocks run on the rayon pool; without it they
//! run sequentially and produce identical output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chibar;
pub mod cone;
mod error;
pub mod gp;
pub mod linkage;
pub mod models;
pub mod par;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
