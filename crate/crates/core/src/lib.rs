//! Synthesis of long categorical sequences with paired semi-Markov chains.
//!
//! Sequences are characterized as chains of `(state, duration)` episodes.
//! New sequences are generated by drawing the next state from transitions
//! observed near the current time of day, then drawing its duration, with an
//! optional pre-clustering step and a time-varying Markov chain baseline.

pub mod cli;
pub mod clustering;
pub mod error;
pub mod eval;
pub mod groundtruth;
pub mod seqcore;
pub mod synth;

pub use error::{Error, Result};
