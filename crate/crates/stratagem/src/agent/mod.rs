//! Learner-facing views of the game: fixed-length state encoders and the
//! reward functions.

pub mod encode;
pub mod reward;
