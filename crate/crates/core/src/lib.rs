//! Identifier-substitution adversarial attacks on code comment generators,
//! robustness metrics, and masked training.

pub mod attack;
pub mod cli;
pub mod corpus;
pub mod embed;
pub mod lang;
pub mod metrics;
pub mod model;
pub mod synth;
