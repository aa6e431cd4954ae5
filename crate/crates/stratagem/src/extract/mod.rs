//! The intent extraction model: featurization, the multi-head linear
//! classifier, training, and cross-validated evaluation.

pub mod eval;
pub mod features;
pub mod model;
