//! Time-varying Markov chain: per-interval transition counts conditioned on
//! the previous interval's state.

use rand::Rng;

use crate::error::{Error, Result};
use crate::seqcore::{Corpus, IntervalSequence, StateId};

/// Transition counts for every interval of the day. The table at `t`
/// counts `(state at t-1, state at t)` pairs across sequences; the table at
/// 0 pairs each sequence's last interval with its first, so the day wraps
/// and any `t >= n` can reuse the table at `t mod n`.
#[derive(Debug, Clone)]
pub struct TvmcModel {
    length: usize,
    states: usize,
    transitions: Vec<u32>,
    marginals: Vec<u32>,
}

impl TvmcModel {
    pub fn fit(corpus: &Corpus) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::data("cannot fit a time-varying chain to an empty corpus"));
        }
        let n = corpus.sequence_length();
        let k = corpus.alphabet().len();
        let mut transitions = vec![0u32; n * k * k];
        let mut marginals = vec![0u32; n * k];
        for seq in corpus.sequences() {
            let s = &seq.states;
            for t in 0..n {
                let prev = s[(t + n - 1) % n] as usize;
                let cur = s[t] as usize;
                transitions[(t * k + prev) * k + cur] += 1;
                marginals[t * k + cur] += 1;
            }
        }
        Ok(TvmcModel {
            length: n,
            states: k,
            transitions,
            marginals,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    /// Observed frequencies of each state at interval `t mod n`.
    pub fn marginal(&self, t: usize) -> &[u32] {
        let t = t % self.length;
        &self.marginals[t * self.states..(t + 1) * self.states]
    }

    /// Counts of next states at `t mod n` after `prev` at the interval before.
    pub fn transition_row(&self, t: usize, prev: StateId) -> &[u32] {
        let t = t % self.length;
        let base = (t * self.states + prev as usize) * self.states;
        &self.transitions[base..base + self.states]
    }

    /// First-interval state, in proportion to observed frequencies.
    pub fn initial<R: Rng + ?Sized>(&self, rng: &mut R) -> StateId {
        draw(self.marginal(0), rng).expect("fitted corpus is non-empty")
    }

    /// State at interval `t` given `prev` at `t - 1`. When no sequence was
    /// in `prev` at that time the conditioning is dropped and the state is
    /// drawn from the marginal at `t`; the flag reports that fallback.
    pub fn step<R: Rng + ?Sized>(&self, t: usize, prev: StateId, rng: &mut R) -> (StateId, bool) {
        match draw(self.transition_row(t, prev), rng) {
            Some(s) => (s, false),
            None => {
                log::debug!("tvmc: no sequence in state {prev} before t={t}; using marginal");
                (draw(self.marginal(t), rng).expect("marginals are non-empty"), true)
            }
        }
    }
}

fn draw<R: Rng + ?Sized>(counts: &[u32], rng: &mut R) -> Option<StateId> {
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    if total == 0 {
        return None;
    }
    let mut r = rng.random_range(0..total);
    for (s, &c) in counts.iter().enumerate() {
        if r < c as u64 {
            return Some(s as StateId);
        }
        r -= c as u64;
    }
    unreachable!("r < total")
}

/// Output of one time-varying chain synthesis.
#[derive(Debug, Clone)]
pub struct TvmcOutput {
    pub states: Vec<StateId>,
    /// Intervals drawn from the unconditioned marginal.
    pub fallbacks: usize,
}

/// Generates `length` intervals, starting from the first-interval
/// distribution and stepping one interval at a time.
pub fn synthesize_tvmc<R: Rng + ?Sized>(model: &TvmcModel, length: usize, rng: &mut R) -> TvmcOutput {
    let mut states = Vec::with_capacity(length);
    let mut fallbacks = 0;
    if length == 0 {
        return TvmcOutput { states, fallbacks };
    }
    let mut cur = model.initial(rng);
    states.push(cur);
    for t in 1..length {
        let (s, fell_back) = model.step(t, cur, rng);
        fallbacks += usize::from(fell_back);
        states.push(s);
        cur = s;
    }
    TvmcOutput { states, fallbacks }
}

/// Continues every sequence for `delta` further intervals with chain steps
/// using wrapped interval statistics. The original intervals are unchanged.
pub fn extend_with_buffer<R: Rng + ?Sized>(corpus: &Corpus, delta: usize, rng: &mut R) -> Result<Corpus> {
    if delta == 0 || corpus.is_empty() {
        return Ok(corpus.clone());
    }
    let model = TvmcModel::fit(corpus)?;
    let n = corpus.sequence_length();
    let sequences = corpus
        .sequences()
        .iter()
        .map(|seq| {
            let mut states = Vec::with_capacity(n + delta);
            states.extend_from_slice(&seq.states);
            let mut cur = *states.last().expect("sequences are non-empty");
            for t in n..n + delta {
                cur = model.step(t, cur, rng).0;
                states.push(cur);
            }
            IntervalSequence {
                id: seq.id.clone(),
                states,
                interval_minutes: seq.interval_minutes,
            }
        })
        .collect();
    Corpus::new(corpus.alphabet().clone(), sequences)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqcore::StateAlphabet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corpus(rows: Vec<Vec<u16>>) -> Corpus {
        let k = rows.iter().flatten().max().map_or(1, |&m| m as usize + 1);
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

    #[test]
    fn identical_corpus_is_reproduced() {
        let row = vec![0, 0, 1, 1, 1, 2, 0, 0];
        let c = corpus(vec![row.clone(); 5]);
        let m = TvmcModel::fit(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let out = synthesize_tvmc(&m, row.len(), &mut rng);
            assert_eq!(out.states, row);
            assert_eq!(out.fallbacks, 0);
        }
    }

    #[test]
    fn degenerate_switch_time() {
        // A (0) until t=100 then B (1), in every sequence.
        let mut rows = vec![];
        for _ in 0..10 {
            let mut r = vec![0u16; 100];
            r.extend(vec![1u16; 100]);
            rows.push(r);
        }
        let m = TvmcModel::fit(&corpus(rows)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let out = synthesize_tvmc(&m, 200, &mut rng);
            assert!(out.states[..100].iter().all(|&s| s == 0));
            assert!(out.states[100..].iter().all(|&s| s == 1));
        }
    }

    #[test]
    fn unseen_conditioning_falls_back_to_marginal() {
        let m = TvmcModel::fit(&corpus(vec![vec![0, 0, 0], vec![1, 1, 1]])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        // Both rows are constant, so each state only follows itself.
        assert_eq!(m.step(1, 0, &mut rng), (0, false));
        let wide = TvmcModel::fit(&corpus(vec![vec![0, 0, 2], vec![0, 0, 2]])).unwrap();
        let (s, fell_back) = wide.step(2, 1, &mut rng);
        assert!(fell_back);
        assert_eq!(s, 2);
    }

    #[test]
    fn buffer_extension() {
        let c = corpus(vec![vec![0; 10]; 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ext = extend_with_buffer(&c, 4, &mut rng).unwrap();
        assert!(ext.sequences().iter().all(|s| s.states == vec![0; 14]));

        let src = corpus(vec![vec![0, 1, 1, 2, 0], vec![1, 1, 0, 0, 2], vec![2, 0, 1, 1, 1]]);
        let ext = extend_with_buffer(&src, 7, &mut rng).unwrap();
        for (a, b) in src.sequences().iter().zip(ext.sequences()) {
            assert_eq!(b.len(), 12);
            assert_eq!(&b.states[..5], &a.states[..]);
        }
    }

    #[test]
    fn wrap_table_pairs_last_with_first() {
        let m = TvmcModel::fit(&corpus(vec![vec![1, 0, 0, 2]])).unwrap();
        assert_eq!(m.transition_row(0, 2), &[0, 1, 0]);
        assert_eq!(m.transition_row(4, 2), &[0, 1, 0]);
        assert_eq!(m.transition_row(3, 0), &[0, 0, 1]);
    }
}
