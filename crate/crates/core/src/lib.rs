//! Code-word detection toolkit: synthetic corpus construction, a ladder of
//! text classifiers, evaluation metrics and an Analysis of Competing
//! Hypotheses scoring engine.

pub mod ach;
pub mod classify;
pub mod corpus;
pub mod exec;
pub mod metrics;
pub mod tagger;

pub use exec::Execution;
