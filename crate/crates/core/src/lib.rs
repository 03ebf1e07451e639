//! Broadcast channels with noncausal state information at the transmitter:
//! information measures, channel models, rate regions, Fourier–Motzkin
//! elimination, a random-coding simulator, the Gaussian writing-on-dirty-paper
//! construction and additive-exponential-noise bounds.

pub mod aen_bounds;
pub mod channels;
pub mod coding_sim;
pub mod error;
pub mod fmelim;
pub mod gaussian_wdp;
pub mod geometry;
pub mod io;
pub mod par;
pub mod prob;
pub mod regions;
pub mod simplex;

pub use error::{Error, Result};
pub use par::Exec;
