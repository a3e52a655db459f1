//! Finite-length realisation of the code: precode sampling, encoding, the rateless channel
//! stream over BEC(eps), peeling decoding and a Monte Carlo harness.
//!
//! Bits are numbered `section * M + index`. Coordinates that fall outside sections
//! `0..L` refer to shortened bits, which are fixed to zero and known to the decoder.

mod channel;
mod gf2;
mod graph;
mod monte_carlo;
mod peeling;

pub use channel::{
    channel_degree_histogram, channel_stream, total_variation, ChannelNodeDescriptor,
};
pub use gf2::{dense_rank, BitMatrix, SystematicEncoder, DENSE_ENCODER_MAX_BITS};
pub use graph::{sample_precode, PrecodeGraph, SampleOptions};
pub use monte_carlo::{
    crossing_point, crossing_width, isotonic_fit, monte_carlo, run_trial, wilson_interval,
    CodewordMode, McRow, SimOptions, TrialOutcome, DEFAULT_RESIDUAL_TOLERANCE,
};
pub use peeling::{peel, peel_system, Factor, PeelOutcome, Schedule, TrialResult};
