//! Time-ordered index of observed episode transitions.

use rand::Rng;

use crate::seqcore::{rle_encode, Corpus, StateId};

use super::config::MAX_ORDER;

/// One observed non-initial episode together with the states that preceded it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Record {
    pub state: StateId,
    pub duration: u32,
    /// Start offset in intervals (0-based).
    pub start: u32,
    /// `context[0]` is the immediately preceding state, `context[1]` the one
    /// before it, and so on; `None` past the start of the sequence.
    pub context: [Option<StateId>; MAX_ORDER],
    /// Position of the source sequence in the indexed corpus.
    pub source: u32,
}

impl Record {
    pub fn preceding(&self) -> StateId {
        self.context[0].expect("non-initial episodes have a predecessor")
    }
}

/// A candidate lookup: transitions out of `prev` whose start lies within
/// `window` of `t_c`, additionally matching `earlier` (the states before
/// `prev`, most recent first) for orders above one.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub prev: StateId,
    pub earlier: &'a [Option<StateId>],
    pub t_c: u32,
    pub window: u32,
    pub order: usize,
}

impl Query<'_> {
    /// Whether `r` satisfies the query; the definition the index must agree with.
    pub fn matches(&self, r: &Record) -> bool {
        r.context[0] == Some(self.prev)
            && r.start.abs_diff(self.t_c) <= self.window
            && (1..self.order).all(|i| r.context[i] == self.earlier.get(i - 1).copied().flatten())
    }
}

#[derive(Debug, Clone)]
pub struct CandidateIndex {
    /// Records grouped by preceding state, each group sorted by start time.
    by_prev: Vec<Vec<Record>>,
    /// `(state, duration)` of every sequence's first episode.
    first: Vec<(StateId, u32)>,
    /// Every observed duration per state, initial episodes included.
    all_durations: Vec<Vec<u32>>,
    sequence_length: u32,
}

impl CandidateIndex {
    pub fn build(corpus: &Corpus) -> Self {
        let states = corpus.alphabet().len();
        let mut by_prev: Vec<Vec<Record>> = vec![Vec::new(); states];
        let mut first = Vec::with_capacity(corpus.len());
        let mut all_durations: Vec<Vec<u32>> = vec![Vec::new(); states];
        for (source, seq) in corpus.sequences().iter().enumerate() {
            let eseq = rle_encode(seq);
            let eps = &eseq.episodes;
            if let Some(ep) = eps.first() {
                first.push((ep.state, ep.duration));
            }
            for (i, ep) in eps.iter().enumerate() {
                all_durations[ep.state as usize].push(ep.duration);
                if i == 0 {
                    continue;
                }
                let mut context = [None; MAX_ORDER];
                for (back, slot) in context.iter_mut().enumerate() {
                    if back < i {
                        *slot = Some(eps[i - 1 - back].state);
                    }
                }
                by_prev[eps[i - 1].state as usize].push(Record {
                    state: ep.state,
                    duration: ep.duration,
                    start: ep.start,
                    context,
                    source: source as u32,
                });
            }
        }
        for group in &mut by_prev {
            group.sort_by_key(|r| (r.start, r.source));
        }
        CandidateIndex {
            by_prev,
            first,
            all_durations,
            sequence_length: corpus.sequence_length() as u32,
        }
    }

    /// Every record matching `q`, ordered by start time then source.
    pub fn candidates(&self, q: &Query<'_>) -> Vec<&Record> {
        let Some(group) = self.by_prev.get(q.prev as usize) else {
            return Vec::new();
        };
        let lo = q.t_c.saturating_sub(q.window);
        let hi = q.t_c.saturating_add(q.window);
        let from = group.partition_point(|r| r.start < lo);
        let to = group.partition_point(|r| r.start <= hi);
        group[from..to].iter().filter(|r| q.matches(r)).collect()
    }

    pub fn records(&self) -> impl Iterator<Item = &Record> {
        self.by_prev.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.by_prev.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn first_episodes(&self) -> &[(StateId, u32)] {
        &self.first
    }

    pub fn all_durations(&self, state: StateId) -> &[u32] {
        self.all_durations.get(state as usize).map_or(&[], Vec::as_slice)
    }

    pub fn sequence_length(&self) -> u32 {
        self.sequence_length
    }

    /// Initial state drawn in proportion to how often it opens a sequence,
    /// and the observed durations of opening episodes in that state.
    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(StateId, Vec<u32>)> {
        if self.first.is_empty() {
            return None;
        }
        let state = self.first[rng.random_range(0..self.first.len())].0;
        let durations = self
            .first
            .iter()
            .filter(|(s, _)| *s == state)
            .map(|&(_, d)| d)
            .collect();
        Some((state, durations))
    }
}
