//! Episode-level synthesis: alternate a state draw from transitions observed
//! near the current time with a duration draw for that state.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seqcore::{Corpus, StateId};

use super::config::{BufferStrategy, DurationScope, SynthesisConfig, MAX_ORDER};
use super::index::{CandidateIndex, Query};
use super::sampler::{sample_state, DurationSampler};
use super::tvmc::{extend_with_buffer, TvmcModel};

/// How an emitted episode was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EpisodeOrigin {
    Initial,
    /// Drawn from the index with the given context order and window half-width.
    Candidate {
        order: usize,
        window: u32,
    },
    /// A single interval from the time-varying chain after every query failed.
    TvmcStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmittedEpisode {
    pub state: StateId,
    pub start: u32,
    /// Duration as placed, clipped at the internal horizon.
    pub duration: u32,
    /// Duration as drawn.
    pub sampled_duration: u32,
    pub origin: EpisodeOrigin,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FallbackCounts {
    /// Episodes that needed a window wider than `delta` at full order.
    pub widened: usize,
    /// Episodes drawn at a reduced context order.
    pub reduced_order: usize,
    /// Single-interval chain steps taken when every query was empty.
    pub tvmc_steps: usize,
}

impl FallbackCounts {
    pub fn total(&self) -> usize {
        self.widened + self.reduced_order + self.tvmc_steps
    }

    pub fn add(&mut self, other: &FallbackCounts) {
        self.widened += other.widened;
        self.reduced_order += other.reduced_order;
        self.tvmc_steps += other.tvmc_steps;
    }
}

#[derive(Debug, Clone)]
pub struct PairedOutput {
    /// Exactly the target length.
    pub states: Vec<StateId>,
    /// Episodes up to the internal horizon `n + delta`.
    pub episodes: Vec<EmittedEpisode>,
    pub fallbacks: FallbackCounts,
}

/// In-progress generation: emitted episodes and the current end time.
#[derive(Debug, Clone, Default)]
pub struct SynthesisState {
    pub episodes: Vec<EmittedEpisode>,
    pub t_c: u32,
}

impl SynthesisState {
    pub fn current(&self) -> StateId {
        self.episodes.last().expect("initialized").state
    }

    /// States before the current one, most recent first, padded with `None`.
    pub fn earlier(&self) -> [Option<StateId>; MAX_ORDER - 1] {
        let mut out = [None; MAX_ORDER - 1];
        let n = self.episodes.len();
        for (back, slot) in out.iter_mut().enumerate() {
            if back + 2 <= n {
                *slot = Some(self.episodes[n - 2 - back].state);
            }
        }
        out
    }

    fn emit(&mut self, state: StateId, sampled: u32, horizon: u32, origin: EpisodeOrigin) {
        let duration = sampled.min(horizon - self.t_c);
        self.episodes.push(EmittedEpisode {
            state,
            start: self.t_c,
            duration,
            sampled_duration: sampled,
            origin,
        });
        self.t_c += duration;
    }
}

/// Everything needed to synthesize from one (sub-)corpus: the candidate
/// index over the buffered sources and a chain model for fallback steps.
#[derive(Debug, Clone)]
pub struct PairedModel {
    index: CandidateIndex,
    tvmc: TvmcModel,
    source_length: usize,
    buffer: u32,
}

impl PairedModel {
    /// `rng` drives the buffer extension only.
    pub fn new<R: Rng + ?Sized>(corpus: &Corpus, config: &SynthesisConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(Error::data("cannot synthesize from an empty corpus"));
        }
        let buffer = config.buffer_length();
        let indexed = match config.buffer {
            BufferStrategy::Tvmc => extend_with_buffer(corpus, buffer as usize, rng)?,
            BufferStrategy::None => corpus.clone(),
        };
        Ok(PairedModel {
            index: CandidateIndex::build(&indexed),
            tvmc: TvmcModel::fit(corpus)?,
            source_length: corpus.sequence_length(),
            buffer,
        })
    }

    pub fn index(&self) -> &CandidateIndex {
        &self.index
    }

    pub fn source_length(&self) -> usize {
        self.source_length
    }

    /// Generates one sequence. Episodes are drawn until the end time reaches
    /// `target + buffer`; the last one is clipped there and the result is
    /// truncated to `target` intervals.
    pub fn synthesize<R: Rng + ?Sized>(&self, config: &SynthesisConfig, rng: &mut R) -> Result<PairedOutput> {
        config.validate()?;
        let target = config.resolve_length(self.source_length)?;
        let horizon = target as u32 + self.buffer;
        let sampler = DurationSampler::new(config.sampler);
        let mut fallbacks = FallbackCounts::default();
        let mut st = SynthesisState::default();

        let (s0, first_durations) = self
            .index
            .initial_state(rng)
            .ok_or_else(|| Error::data("index has no sequences"))?;
        let d0 = sampler.sample(&first_durations, rng);
        st.emit(s0, d0, horizon, EpisodeOrigin::Initial);

        let windows = ladder_windows(config.delta);
        let mut pairs: Vec<(StateId, u32)> = Vec::new();
        while st.t_c < horizon {
            let a_c = st.current();
            let earlier = st.earlier();
            let mut found = None;
            'ladder: for order in (1..=config.order).rev() {
                for &window in &windows {
                    let q = Query {
                        prev: a_c,
                        earlier: &earlier,
                        t_c: st.t_c,
                        window,
                        order,
                    };
                    let hits = self.index.candidates(&q);
                    if !hits.is_empty() {
                        pairs.clear();
                        pairs.extend(hits.iter().map(|r| (r.state, r.duration)));
                        found = Some((order, window));
                        break 'ladder;
                    }
                }
            }
            match found {
                Some((order, window)) => {
                    if order < config.order {
                        fallbacks.reduced_order += 1;
                    } else if window > config.delta {
                        fallbacks.widened += 1;
                    }
                    let state = sample_state(&pairs, rng)?;
                    let duration = match config.duration_scope {
                        DurationScope::Window => {
                            let durations: Vec<u32> = pairs.iter().filter(|p| p.0 == state).map(|p| p.1).collect();
                            sampler.sample(&durations, rng)
                        }
                        DurationScope::AllDay => sampler.sample(self.index.all_durations(state), rng),
                    };
                    st.emit(state, duration, horizon, EpisodeOrigin::Candidate { order, window });
                }
                None if config.tvmc_fallback => {
                    fallbacks.tvmc_steps += 1;
                    let (s, _) = self.tvmc.step(st.t_c as usize, a_c, rng);
                    if s == a_c {
                        let last = st.episodes.last_mut().expect("initialized");
                        last.duration += 1;
                        last.sampled_duration += 1;
                        last.origin = EpisodeOrigin::TvmcStep;
                        st.t_c += 1;
                    } else {
                        st.emit(s, 1, horizon, EpisodeOrigin::TvmcStep);
                    }
                }
                None => return Err(Error::Stall { t_c: st.t_c as usize }),
            }
        }

        let mut states = Vec::with_capacity(horizon as usize);
        for ep in &st.episodes {
            states.extend(std::iter::repeat_n(ep.state, ep.duration as usize));
        }
        states.truncate(target);
        Ok(PairedOutput {
            states,
            episodes: st.episodes,
            fallbacks,
        })
    }
}

/// Window half-widths tried in turn: `delta`, `2 delta`, `4 delta`.
fn ladder_windows(delta: u32) -> Vec<u32> {
    let mut w = vec![delta, delta.saturating_mul(2), delta.saturating_mul(4)];
    w.dedup();
    w
}

/// Convenience wrapper: fit a model on `corpus` and draw one sequence.
pub fn synthesize_paired_mc<R: Rng + ?Sized>(
    corpus: &Corpus,
    config: &SynthesisConfig,
    rng: &mut R,
) -> Result<Vec<StateId>> {
    let model = PairedModel::new(corpus, config, rng)?;
    Ok(model.synthesize(config, rng)?.states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqcore::{IntervalSequence, StateAlphabet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corpus(rows: Vec<Vec<u16>>, k: usize) -> Corpus {
        let ab = StateAlphabet::new((0..k).map(|i| format!("s{i}"))).unwrap();
        Corpus::new(
            ab,
            rows.into_iter()
                .enumerate()
                .map(|(i, r)| IntervalSequence::new(format!("q{i}"), r))
                .collect(),
        )
        .unwrap()
    }

    fn day(runs: &[(u16, usize)]) -> Vec<u16> {
        runs.iter().flat_map(|&(s, d)| std::iter::repeat_n(s, d)).collect()
    }

    #[test]
    fn repeated_sequence_is_reproduced() {
        let row = day(&[(0, 420), (2, 30), (1, 510), (2, 25), (0, 455)]);
        let c = corpus(vec![row.clone(); 6], 3);
        for order in 1..=3 {
            let cfg = SynthesisConfig {
                order,
                ..Default::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(order as u64);
            let model = PairedModel::new(&c, &cfg, &mut rng).unwrap();
            for _ in 0..10 {
                let out = model.synthesize(&cfg, &mut rng).unwrap();
                assert_eq!(out.states, row);
                assert_eq!(out.fallbacks, FallbackCounts::default());
            }
        }
    }

    #[test]
    fn output_length_is_exact() {
        let rows = vec![
            day(&[(0, 400), (1, 600), (0, 440)]),
            day(&[(0, 500), (2, 100), (1, 500), (0, 340)]),
            day(&[(1, 30), (0, 800), (2, 610)]),
        ];
        let c = corpus(rows, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for delta in [0, 15, 60, 240] {
            for buffer in [BufferStrategy::Tvmc, BufferStrategy::None] {
                let cfg = SynthesisConfig {
                    delta,
                    buffer,
                    ..Default::default()
                };
                let model = PairedModel::new(&c, &cfg, &mut rng).unwrap();
                for _ in 0..20 {
                    let out = model.synthesize(&cfg, &mut rng).unwrap();
                    assert_eq!(out.states.len(), 1440);
                    assert!(out.states.iter().all(|&s| s < 3));
                    let end = out.episodes.last().map(|e| e.start + e.duration);
                    assert_eq!(end, Some(1440 + cfg.buffer_length()));
                }
            }
        }
    }

    #[test]
    fn shorter_target_length() {
        let c = corpus(vec![day(&[(0, 50), (1, 50)]), day(&[(1, 30), (0, 70)])], 2);
        let cfg = SynthesisConfig {
            delta: 5,
            target_length: Some(60),
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = PairedModel::new(&c, &cfg, &mut rng).unwrap();
        assert_eq!(model.synthesize(&cfg, &mut rng).unwrap().states.len(), 60);
    }

    #[test]
    fn stall_without_chain_fallback() {
        // State 1 is never left, so an episode of 1 that ends before the
        // horizon has no candidate at any window.
        let c = corpus(vec![day(&[(0, 10), (1, 10)]), day(&[(0, 12), (1, 8)])], 2);
        let cfg = SynthesisConfig {
            delta: 2,
            buffer: BufferStrategy::None,
            tvmc_fallback: false,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = PairedModel::new(&c, &cfg, &mut rng).unwrap();
        let mut stalled = false;
        for _ in 0..20 {
            match model.synthesize(&cfg, &mut rng) {
                Err(e) => {
                    assert!(e.stall_time().is_some());
                    stalled = true;
                }
                Ok(out) => assert_eq!(out.states.len(), 20),
            }
        }
        assert!(stalled);

        let cfg = SynthesisConfig {
            tvmc_fallback: true,
            ..cfg
        };
        for _ in 0..20 {
            let out = model.synthesize(&cfg, &mut rng).unwrap();
            assert_eq!(out.states.len(), 20);
        }
    }

    #[test]
    fn ladder_counts_widening_and_order_reduction() {
        // Transitions 0 -> 1 happen at 100 or 130; with delta 10 a query at
        // 115 needs the 4x window.
        let c = corpus(vec![day(&[(0, 100), (1, 100)]), day(&[(0, 130), (1, 70)])], 2);
        let model = PairedModel::new(
            &c,
            &SynthesisConfig {
                buffer: BufferStrategy::None,
                ..Default::default()
            },
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        let q = |t_c, window| Query {
            prev: 0,
            earlier: &[],
            t_c,
            window,
            order: 1,
        };
        assert!(model.index().candidates(&q(115, 10)).is_empty());
        assert_eq!(model.index().candidates(&q(115, 40)).len(), 2);
        assert_eq!(ladder_windows(10), vec![10, 20, 40]);
        assert_eq!(ladder_windows(0), vec![0]);
    }

    #[test]
    fn context_tracking() {
        let mut st = SynthesisState::default();
        st.emit(0, 5, 100, EpisodeOrigin::Initial);
        assert_eq!(st.earlier(), [None, None]);
        st.emit(1, 5, 100, EpisodeOrigin::Initial);
        st.emit(2, 500, 100, EpisodeOrigin::Initial);
        assert_eq!(st.current(), 2);
        assert_eq!(st.earlier(), [Some(1), Some(0)]);
        assert_eq!(st.t_c, 100);
        assert_eq!(st.episodes[2].duration, 90);
        assert_eq!(st.episodes[2].sampled_duration, 500);
    }
}
