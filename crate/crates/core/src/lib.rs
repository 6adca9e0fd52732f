//! Online signature verification with split feature sets.
//!
//! Raw pen trajectories are extended with delta and delta-delta channels,
//! z-scored, split into two channel sets, matched per set with either LBG
//! vector quantization or dynamic time warping, and the two distances are
//! fused with a trained weight `alpha`. Evaluation reports identification
//! rate and minimum detection cost for random and skilled forgeries.

pub mod dtw;
pub mod error;
pub mod features;
pub mod fusion;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod signal;
pub mod synth;
pub mod vq;

pub use error::{Error, Result};
