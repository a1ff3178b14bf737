use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqcore::{rle_encode, Corpus, IntervalSequence, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DurationMode {
    /// Every episode's duration.
    Individual,
    /// Total time per sequence spent in the state.
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DurationSample {
    pub state: StateId,
    pub mode: DurationMode,
    pub values: Vec<u32>,
}

impl DurationSample {
    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| f64::from(v)).collect()
    }
}

/// Durations of `state` across the corpus. In combined mode sequences that
/// never visit the state contribute a zero unless `exclude_zero` is set.
pub fn episode_durations(
    corpus: &Corpus,
    state: StateId,
    mode: DurationMode,
    exclude_zero: bool,
) -> Result<DurationSample> {
    if state as usize >= corpus.alphabet().len() {
        return Err(Error::UnknownState(state.to_string()));
    }
    let values = match mode {
        DurationMode::Individual => corpus
            .sequences()
            .iter()
            .flat_map(|s| rle_encode(s).episodes)
            .filter(|e| e.state == state)
            .map(|e| e.duration)
            .collect(),
        DurationMode::Combined => corpus
            .sequences()
            .iter()
            .map(|s| s.states.iter().filter(|&&x| x == state).count() as u32)
            .filter(|&total| !(exclude_zero && total == 0))
            .collect(),
    };
    Ok(DurationSample { state, mode, values })
}

/// Same as [`episode_durations`] but addressed by label.
pub fn episode_durations_by_label(
    corpus: &Corpus,
    label: &str,
    mode: DurationMode,
    exclude_zero: bool,
) -> Result<DurationSample> {
    let state = corpus
        .alphabet()
        .index_of(label)
        .ok_or_else(|| Error::UnknownState(label.to_string()))?;
    episode_durations(corpus, state, mode, exclude_zero)
}

/// Every episode duration regardless of state.
pub fn all_episode_durations(corpus: &Corpus) -> Vec<u32> {
    corpus
        .sequences()
        .iter()
        .flat_map(|s| rle_encode(s).episodes)
        .map(|e| e.duration)
        .collect()
}

/// Shannon entropy (natural log) of the state time shares within one sequence.
pub fn sequence_entropy(seq: &IntervalSequence) -> f64 {
    if seq.states.is_empty() {
        return 0.0;
    }
    let k = seq.states.iter().copied().max().unwrap_or(0) as usize + 1;
    let mut counts = vec![0usize; k];
    for &s in &seq.states {
        counts[s as usize] += 1;
    }
    let n = seq.states.len() as f64;
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum::<f64>();
    h.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
    pub sd: f64,
    pub n: usize,
}

impl MeanSd {
    pub fn of<I: IntoIterator<Item = f64>>(values: I) -> Option<MeanSd> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Some(MeanSd { mean, sd, n })
    }
}

/// Mean and SD of per-sequence episode counts, overall and per state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeCounts {
    pub overall: MeanSd,
    /// Indexed by state.
    pub per_state: Vec<MeanSd>,
}

pub fn episode_count_stats(corpus: &Corpus) -> Result<EpisodeCounts> {
    if corpus.is_empty() {
        return Err(Error::data("episode counts need a non-empty corpus"));
    }
    let k = corpus.alphabet().len();
    let mut overall = Vec::with_capacity(corpus.len());
    let mut per_state = vec![Vec::with_capacity(corpus.len()); k];
    for seq in corpus.sequences() {
        let eps = rle_encode(seq).episodes;
        overall.push(eps.len() as f64);
        let mut counts = vec![0usize; k];
        for e in &eps {
            counts[e.state as usize] += 1;
        }
        for (s, c) in counts.into_iter().enumerate() {
            per_state[s].push(c as f64);
        }
    }
    Ok(EpisodeCounts {
        overall: MeanSd::of(overall).expect("non-empty"),
        per_state: per_state
            .into_iter()
            .map(|v| MeanSd::of(v).expect("non-empty"))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqcore::StateAlphabet;
    use proptest::prelude::*;

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

    #[test]
    fn individual_and_combined() {
        // A x3, B x2, A x5.
        let c = corpus(vec![vec![0, 0, 0, 1, 1, 0, 0, 0, 0, 0]], 3);
        let ind = episode_durations(&c, 0, DurationMode::Individual, false).unwrap();
        assert_eq!(ind.values, vec![3, 5]);
        let comb = episode_durations(&c, 0, DurationMode::Combined, false).unwrap();
        assert_eq!(comb.values, vec![8]);
        let absent = episode_durations(&c, 2, DurationMode::Combined, true).unwrap();
        assert!(absent.values.is_empty());
        let zero = episode_durations(&c, 2, DurationMode::Combined, false).unwrap();
        assert_eq!(zero.values, vec![0]);
        assert!(episode_durations(&c, 3, DurationMode::Combined, false).is_err());
        assert!(episode_durations_by_label(&c, "nope", DurationMode::Combined, false).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(sequence_entropy(&IntervalSequence::new("a", vec![2; 10])), 0.0);
        let h = sequence_entropy(&IntervalSequence::new("a", vec![0, 1, 0, 1]));
        assert!((h - std::f64::consts::LN_2).abs() < 1e-15);
        let h = sequence_entropy(&IntervalSequence::new("a", vec![0, 1, 2, 3]));
        assert!((h - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn count_stats() {
        let c = corpus(vec![vec![0, 1, 0, 1]; 3], 2);
        let s = episode_count_stats(&c).unwrap();
        assert_eq!((s.overall.mean, s.overall.sd), (4.0, 0.0));
        assert_eq!(s.per_state[0].mean, 2.0);
        let c = corpus(vec![vec![0, 0, 1, 1], vec![0, 1, 0, 1]], 2);
        let s = episode_count_stats(&c).unwrap();
        assert_eq!(s.overall.mean, 3.0);
        assert!((s.overall.sd - 2f64.sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn combined_durations_conserve_length(rows in prop::collection::vec(prop::collection::vec(0u16..4, 30), 1..10)) {
            let c = corpus(rows, 4);
            let per_state: Vec<Vec<u32>> = (0..4)
                .map(|s| episode_durations(&c, s, DurationMode::Combined, false).unwrap().values)
                .collect();
            for i in 0..c.len() {
                prop_assert_eq!(per_state.iter().map(|v| v[i]).sum::<u32>(), 30);
            }
        }

        #[test]
        fn entropy_bounds(states in prop::collection::vec(0u16..6, 1..200)) {
            let h = sequence_entropy(&IntervalSequence::new("s", states));
            prop_assert!(h >= 0.0);
            prop_assert!(h <= 6f64.ln() + 1e-12);
        }
    }
}
