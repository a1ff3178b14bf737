use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqcore::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Number of positions at which two aligned sequences differ.
    #[default]
    Hamming,
}

/// Dense symmetric matrix of pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from the upper triangle given by `f(i, j)` for `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                if !(d.is_finite() && d >= 0.0) {
                    return Err(Error::data(format!("invalid distance {d} between {i} and {j}")));
                }
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
        Ok(DistanceMatrix { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn scaled(&self, factor: f64) -> DistanceMatrix {
        DistanceMatrix {
            n: self.n,
            entries: self.entries.iter().map(|d| d * factor).collect(),
        }
    }

    pub(crate) fn into_entries(self) -> Vec<f64> {
        self.entries
    }
}

/// Pairwise distances between all sequences of `corpus`. Rows are computed
/// in parallel on the current rayon pool.
pub fn pairwise_distance(corpus: &Corpus, metric: Metric) -> Result<DistanceMatrix> {
    let seqs = corpus.sequences();
    let n = seqs.len();
    if n < 2 {
        return Err(Error::data("pairwise distances need at least two sequences"));
    }
    let len = seqs[0].len();
    if let Some(bad) = seqs.iter().find(|s| s.len() != len) {
        return Err(Error::data(format!("sequence {:?} has unequal length", bad.id)));
    }
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = &seqs[i].states;
            seqs[i + 1..]
                .iter()
                .map(|other| match metric {
                    Metric::Hamming => a.iter().zip(&other.states).filter(|(x, y)| x != y).count() as f64,
                })
                .collect()
        })
        .collect();
    let mut entries = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &d) in row.iter().enumerate() {
            let j = i + 1 + off;
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqcore::{IntervalSequence, StateAlphabet};

    fn corpus(rows: &[&[u16]]) -> Corpus {
        let ab = StateAlphabet::new(["A", "B"]).unwrap();
        Corpus::new(
            ab,
            rows.iter()
                .enumerate()
                .map(|(i, r)| IntervalSequence::new(format!("s{i}"), r.to_vec()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn hamming_examples() {
        let c = corpus(&[&[0, 1, 1, 0], &[0, 1, 0, 1], &[0, 1, 1, 0]]);
        let d = pairwise_distance(&c, Metric::Hamming).unwrap();
        assert_eq!(d.get(0, 1), 2.0);
        assert_eq!(d.get(0, 2), 0.0);
        for i in 0..3 {
            assert_eq!(d.get(i, i), 0.0);
            for j in 0..3 {
                assert_eq!(d.get(i, j), d.get(j, i));
            }
        }
    }

    #[test]
    fn needs_two_sequences() {
        let c = corpus(&[&[0, 1]]);
        assert!(pairwise_distance(&c, Metric::Hamming).is_err());
    }
}
