//! Batch generation over an optional cluster assignment.
//!
//! Every output ordinal draws from its own ChaCha stream keyed by
//! `(seed, ordinal)`, so results do not depend on the worker count or on
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::{sample_cluster, ClusterAssignment, ClusterWeights};
use crate::error::{Error, Result};
use crate::seqcore::{Corpus, IntervalSequence};

use super::config::{Engine, SynthesisConfig};
use super::paired::{FallbackCounts, PairedModel};
use super::tvmc::{synthesize_tvmc, TvmcModel};

/// Independent generator for output `ordinal`.
pub fn sequence_rng(seed: u64, ordinal: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ordinal);
    rng
}

/// Generator for the buffer extension of cluster `cluster`; streams are
/// taken from the top of the range so they never meet output ordinals.
pub fn buffer_rng(seed: u64, cluster: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - cluster as u64);
    rng
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceProvenance {
    pub id: String,
    pub ordinal: usize,
    pub cluster: Option<usize>,
    pub engine: Engine,
    pub fallbacks: FallbackCounts,
}

#[derive(Debug)]
pub struct BatchOutput {
    pub corpus: Corpus,
    pub provenance: Vec<SequenceProvenance>,
}

impl BatchOutput {
    pub fn total_fallbacks(&self) -> FallbackCounts {
        let mut total = FallbackCounts::default();
        for p in &self.provenance {
            total.add(&p.fallbacks);
        }
        total
    }
}

/// A batch that may have stopped early: `output` holds every sequence
/// before the first failing ordinal.
#[derive(Debug)]
pub struct BatchOutcome {
    pub output: BatchOutput,
    pub failure: Option<Error>,
}

#[derive(Debug, Clone, Copy)]
pub struct BatchRequest<'a> {
    pub engine: Engine,
    pub count: usize,
    pub assignment: Option<&'a ClusterAssignment>,
    /// Per-cluster draw weights; cluster sizes when absent.
    pub weights: Option<&'a ClusterWeights>,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
}

enum Model {
    Paired(PairedModel),
    Tvmc(TvmcModel),
}

struct Generated {
    states: Vec<u16>,
    cluster: Option<usize>,
    fallbacks: FallbackCounts,
}

pub fn output_id(ordinal: usize) -> String {
    format!("syn{:06}", ordinal + 1)
}

/// Generates `count` sequences, returning an error for the first ordinal
/// that fails.
pub fn synthesize_batch(corpus: &Corpus, config: &SynthesisConfig, req: &BatchRequest<'_>) -> Result<BatchOutput> {
    let outcome = try_synthesize_batch(corpus, config, req)?;
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(outcome.output),
    }
}

/// Like [`synthesize_batch`] but keeps the successful prefix on failure.
/// Model construction errors are still returned as `Err`.
pub fn try_synthesize_batch(corpus: &Corpus, config: &SynthesisConfig, req: &BatchRequest<'_>) -> Result<BatchOutcome> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::data("cannot synthesize from an empty corpus"));
    }
    let target = config.resolve_length(corpus.sequence_length())?;

    let groups: Vec<Corpus> = match req.assignment {
        Some(a) => {
            if a.len() != corpus.len() {
                return Err(Error::data("cluster assignment does not cover the corpus"));
            }
            a.members().iter().map(|m| corpus.subset(m)).collect()
        }
        None => vec![corpus.clone()],
    };
    let weights = match (req.assignment, req.weights) {
        (Some(_), Some(w)) if w.len() != groups.len() => {
            return Err(Error::config(format!(
                "{} cluster weights given for {} clusters",
                w.len(),
                groups.len()
            )))
        }
        (Some(_), Some(w)) => Some(w.clone()),
        (Some(a), None) => Some(ClusterWeights::from_sizes(a)),
        (None, _) => None,
    };

    let models = groups
        .iter()
        .enumerate()
        .map(|(c, g)| match req.engine {
            Engine::PairedMc => PairedModel::new(g, config, &mut buffer_rng(config.seed, c)).map(Model::Paired),
            Engine::Tvmc => TvmcModel::fit(g).map(Model::Tvmc),
        })
        .collect::<Result<Vec<_>>>()?;

    let generate = |ordinal: usize| -> Result<Generated> {
        let mut rng = sequence_rng(config.seed, ordinal as u64);
        let cluster = weights.as_ref().map(|w| sample_cluster(w, &mut rng));
        match &models[cluster.unwrap_or(0)] {
            Model::Paired(m) => {
                let out = m.synthesize(config, &mut rng)?;
                Ok(Generated {
                    states: out.states,
                    cluster,
                    fallbacks: out.fallbacks,
                })
            }
            Model::Tvmc(m) => {
                let out = synthesize_tvmc(m, target, &mut rng);
                Ok(Generated {
                    states: out.states,
                    cluster,
                    fallbacks: FallbackCounts {
                        tvmc_steps: out.fallbacks,
                        ..Default::default()
                    },
                })
            }
        }
    };

    let results: Vec<Result<Generated>> = if req.workers == 0 {
        (0..req.count).into_par_iter().map(generate).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(req.workers)
            .build()
            .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?
            .install(|| (0..req.count).into_par_iter().map(generate).collect())
    };

    let mut sequences = Vec::with_capacity(req.count);
    let mut provenance = Vec::with_capacity(req.count);
    let mut failure = None;
    for (ordinal, result) in results.into_iter().enumerate() {
        match result {
            Ok(g) => {
                let id = output_id(ordinal);
                let mut seq = IntervalSequence::new(id.clone(), g.states);
                seq.interval_minutes = corpus.interval_minutes();
                sequences.push(seq);
                provenance.push(SequenceProvenance {
                    id,
                    ordinal,
                    cluster: g.cluster,
                    engine: req.engine,
                    fallbacks: g.fallbacks,
                });
            }
            Err(e) => {
                failure = Some(Error::Generation {
                    ordinal,
                    source: Box::new(e),
                });
                break;
            }
        }
    }
    let out_corpus = if sequences.is_empty() {
        Corpus::empty(corpus.alphabet().clone())
    } else {
        Corpus::new(corpus.alphabet().clone(), sequences)?
    };
    Ok(BatchOutcome {
        output: BatchOutput {
            corpus: out_corpus,
            provenance,
        },
        failure,
    })
}
