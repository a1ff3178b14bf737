//! Sequence representations and corpus handling.
//!
//! A sequence is stored in its interval view (one state per sampling slot).
//! The episode view, a chain of `(state, duration)` runs, is derived on
//! demand by [`rle_encode`] and is what the paired synthesis engine consumes.

mod io;
mod preprocess;
mod rle;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    load_assignment_csv, load_continuous, load_corpus, save_assignment_csv, save_corpus, write_corpus, CorpusFormat,
    LoadOptions,
};
pub use preprocess::{discretize, discretized_alphabet, smooth_rolling};
pub use rle::{rle_decode, rle_encode};

/// Index of a state within a [`StateAlphabet`].
pub type StateId = u16;

/// Ordered set of distinct, case-sensitive state labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct StateAlphabet {
    labels: Vec<String>,
    #[serde(skip)]
    lookup: HashMap<String, StateId>,
}

impl StateAlphabet {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut alphabet = StateAlphabet {
            labels: Vec::new(),
            lookup: HashMap::new(),
        };
        for label in labels {
            let label = label.into();
            if alphabet.lookup.contains_key(&label) {
                return Err(Error::data(format!("duplicate state label {label:?}")));
            }
            alphabet.push(label)?;
        }
        if alphabet.labels.is_empty() {
            return Err(Error::data("alphabet must contain at least one state"));
        }
        Ok(alphabet)
    }

    /// Appends `label` if absent and returns its index.
    pub(crate) fn intern(&mut self, label: &str) -> Result<StateId> {
        match self.lookup.get(label) {
            Some(&id) => Ok(id),
            None => self.push(label.to_string()),
        }
    }

    fn push(&mut self, label: String) -> Result<StateId> {
        if label.is_empty() {
            return Err(Error::data("state labels must be non-empty"));
        }
        let id = StateId::try_from(self.labels.len()).map_err(|_| Error::data("alphabet exceeds 65535 states"))?;
        self.lookup.insert(label.clone(), id);
        self.labels.push(label);
        Ok(id)
    }

    pub(crate) fn empty() -> Self {
        StateAlphabet {
            labels: Vec::new(),
            lookup: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, id: StateId) -> &str {
        &self.labels[id as usize]
    }

    pub fn index_of(&self, label: &str) -> Option<StateId> {
        self.lookup.get(label).copied()
    }
}

impl TryFrom<Vec<String>> for StateAlphabet {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        StateAlphabet::new(labels)
    }
}

impl From<StateAlphabet> for Vec<String> {
    fn from(alphabet: StateAlphabet) -> Self {
        alphabet.labels
    }
}

/// A fixed-length categorical sequence, one state per interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalSequence {
    pub id: String,
    pub states: Vec<StateId>,
    pub interval_minutes: u32,
}

impl IntervalSequence {
    pub fn new(id: impl Into<String>, states: Vec<StateId>) -> Self {
        IntervalSequence {
            id: id.into(),
            states,
            interval_minutes: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// A maximal run of one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Episode {
    pub state: StateId,
    pub duration: u32,
    pub start: u32,
}

impl Episode {
    pub fn end(&self) -> u32 {
        self.start + self.duration
    }
}

/// Run-length view of a sequence. Adjacent episodes always differ in state
/// and `start` is the running sum of the preceding durations.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EpisodeSequence {
    pub episodes: Vec<Episode>,
    pub total_length: u32,
}

impl EpisodeSequence {
    /// Builds a canonical episode sequence from `(state, duration)` runs,
    /// merging adjacent runs of the same state.
    pub fn from_runs<I>(runs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (StateId, u32)>,
    {
        let mut episodes: Vec<Episode> = Vec::new();
        let mut total: u32 = 0;
        for (state, duration) in runs {
            if duration == 0 {
                return Err(Error::data("episode duration must be at least 1"));
            }
            match episodes.last_mut() {
                Some(last) if last.state == state => last.duration += duration,
                _ => episodes.push(Episode {
                    state,
                    duration,
                    start: total,
                }),
            }
            total = total
                .checked_add(duration)
                .ok_or_else(|| Error::data("sequence length overflows u32"))?;
        }
        Ok(EpisodeSequence {
            episodes,
            total_length: total,
        })
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// Checks the canonical-form invariants.
    pub fn is_canonical(&self) -> bool {
        let mut expected_start = 0u32;
        for (i, ep) in self.episodes.iter().enumerate() {
            if ep.duration == 0 || ep.start != expected_start {
                return false;
            }
            if i > 0 && self.episodes[i - 1].state == ep.state {
                return false;
            }
            expected_start += ep.duration;
        }
        expected_start == self.total_length
    }
}

/// A non-negative real-valued series, e.g. accelerometer counts per minute.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSeries {
    pub id: String,
    pub values: Vec<f64>,
}

/// A collection of aligned sequences sharing one alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    alphabet: StateAlphabet,
    sequences: Vec<IntervalSequence>,
    cluster_labels: Option<BTreeMap<String, usize>>,
}

impl Corpus {
    /// Validates ids, state indices, and that every sequence has the same
    /// non-zero length and interval unit.
    pub fn new(alphabet: StateAlphabet, sequences: Vec<IntervalSequence>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(sequences.len());
        if let Some(first) = sequences.first() {
            if first.is_empty() {
                return Err(Error::data(format!("sequence {:?} is empty", first.id)));
            }
            if first.interval_minutes == 0 {
                return Err(Error::data("interval_minutes must be positive"));
            }
        }
        for seq in &sequences {
            if !seen.insert(seq.id.as_str()) {
                return Err(Error::data(format!("duplicate sequence id {:?}", seq.id)));
            }
            let first = &sequences[0];
            if seq.len() != first.len() {
                return Err(Error::data(format!(
                    "sequence {:?} has length {}, expected {}",
                    seq.id,
                    seq.len(),
                    first.len()
                )));
            }
            if seq.interval_minutes != first.interval_minutes {
                return Err(Error::data(format!(
                    "sequence {:?} has a different interval unit",
                    seq.id
                )));
            }
            if let Some(bad) = seq.states.iter().find(|&&s| s as usize >= alphabet.len()) {
                return Err(Error::data(format!(
                    "sequence {:?} uses state index {bad} outside the alphabet",
                    seq.id
                )));
            }
        }
        Ok(Corpus {
            alphabet,
            sequences,
            cluster_labels: None,
        })
    }

    pub fn empty(alphabet: StateAlphabet) -> Self {
        Corpus {
            alphabet,
            sequences: Vec::new(),
            cluster_labels: None,
        }
    }

    /// Attaches user-supplied cluster labels; every sequence id must be covered.
    pub fn with_cluster_labels(mut self, labels: BTreeMap<String, usize>) -> Result<Self> {
        if let Some(missing) = self.sequences.iter().find(|s| !labels.contains_key(&s.id)) {
            return Err(Error::data(format!(
                "cluster labels do not cover sequence {:?}",
                missing.id
            )));
        }
        self.cluster_labels = Some(labels);
        Ok(self)
    }

    pub fn alphabet(&self) -> &StateAlphabet {
        &self.alphabet
    }

    pub fn sequences(&self) -> &[IntervalSequence] {
        &self.sequences
    }

    pub fn cluster_labels(&self) -> Option<&BTreeMap<String, usize>> {
        self.cluster_labels.as_ref()
    }

    /// Cluster label for each sequence in corpus order, if labels are attached.
    pub fn label_vector(&self) -> Option<Vec<usize>> {
        let labels = self.cluster_labels.as_ref()?;
        Some(self.sequences.iter().map(|s| labels[&s.id]).collect())
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Common sequence length, or 0 for an empty corpus.
    pub fn sequence_length(&self) -> usize {
        self.sequences.first().map_or(0, IntervalSequence::len)
    }

    pub fn interval_minutes(&self) -> u32 {
        self.sequences.first().map_or(1, |s| s.interval_minutes)
    }

    /// The sub-corpus of the sequences at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            alphabet: self.alphabet.clone(),
            sequences: indices.iter().map(|&i| self.sequences[i].clone()).collect(),
            cluster_labels: None,
        }
    }

    pub fn episodes(&self) -> Vec<EpisodeSequence> {
        self.sequences.iter().map(rle_encode).collect()
    }
}
