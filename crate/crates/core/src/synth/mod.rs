//! Sequence generation engines.
//!
//! [`PairedModel`] runs the episode-level paired chain of order 1 to
//! [`MAX_ORDER`]; [`TvmcModel`] is the interval-level time-varying baseline.
//! [`synthesize_batch`] drives either engine over a corpus or its clusters.
//!
//! When a candidate query is empty the paired engine walks a fixed ladder:
//! the window grows to `2 delta` then `4 delta`, then the context order is
//! reduced one step at a time (each again from `delta`), and as a last
//! resort a single chain step is taken. Each rung taken is counted in
//! [`FallbackCounts`].

mod batch;
mod config;
mod index;
mod paired;
mod sampler;
mod tvmc;

use rand::Rng;

use crate::seqcore::{Corpus, StateId};

pub use batch::{
    buffer_rng, output_id, sequence_rng, synthesize_batch, try_synthesize_batch, BatchOutcome, BatchOutput,
    BatchRequest, SequenceProvenance,
};
pub use config::{
    BandwidthRule, BufferStrategy, DurationScope, Engine, RuleName, SamplerConfig, SynthesisConfig, MAX_ORDER,
};
pub use index::{CandidateIndex, Query, Record};
pub use paired::{
    synthesize_paired_mc, EmittedEpisode, EpisodeOrigin, FallbackCounts, PairedModel, PairedOutput, SynthesisState,
};
pub use sampler::{sample_state, sample_transition, silverman_bandwidth, DurationSampler};
pub use tvmc::{extend_with_buffer, synthesize_tvmc, TvmcModel, TvmcOutput};

/// Opening state and duration for a new sequence: the state in proportion
/// to how often it opens a source sequence, the duration from opening
/// episodes in that state.
pub fn initialize<R: Rng + ?Sized>(corpus: &Corpus, sampler: &DurationSampler, rng: &mut R) -> Option<(StateId, u32)> {
    let index = CandidateIndex::build(corpus);
    let (state, durations) = index.initial_state(rng)?;
    Some((state, sampler.sample(&durations, rng)))
}
