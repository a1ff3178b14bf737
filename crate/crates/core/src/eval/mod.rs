//! Comparison of synthesized corpora against their source: duration
//! distributions, episode counts, entropy, two-sample KS tests and ECDF
//! curves.

mod ecdf;
mod ks;
mod report;
mod stats;

pub use ecdf::*;
pub use ks::*;
pub use report::*;
pub use stats::*;
