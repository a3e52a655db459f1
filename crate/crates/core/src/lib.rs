//! Workbench for spatially-coupled precoded rateless codes on the binary erasure channel.
//!
//! A `(d_l, d_r, d_g, L, w)` code precodes the information bits with a spatially-coupled
//! `(d_l, d_r, L, w)` LDPC code and then emits an endless stream of degree-`d_g` parities
//! drawn across a window of `w` neighbouring sections. The crate provides
//!
//! * [`ensemble`]: parameters, design rate, overhead/degree conversions, the Poisson inner degree law;
//! * [`density_evolution`]: the coupled density-evolution recursion and threshold search;
//! * [`stability`]: the Jacobian band matrix at the decoded fixed point and the threshold lower bounds;
//! * [`codec`]: a finite-length encoder, erasure channel, peeling decoder and Monte Carlo harness.

pub mod codec;
pub mod density_evolution;
pub mod ensemble;
mod error;
pub mod stability;

pub use ensemble::{EnsembleParams, PoissonDegree};
pub use error::{Error, Result};
