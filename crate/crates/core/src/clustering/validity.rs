use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};

use super::{Dendrogram, DistanceMatrix};

/// A partition of `n` sequences into `k` non-empty clusters labelled `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl ClusterAssignment {
    /// Labels must already be contiguous (`0..k`, each used at least once).
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        if sizes.contains(&0) {
            return Err(Error::data("cluster labels must be contiguous from 0"));
        }
        Ok(ClusterAssignment { labels, sizes })
    }

    /// Renumbers arbitrary labels to `0..k` in ascending order of the
    /// original label values.
    pub fn from_raw(raw: &[usize]) -> Self {
        let mut order: BTreeMap<usize, usize> = raw.iter().map(|&l| (l, 0)).collect();
        for (rank, v) in order.values_mut().enumerate() {
            *v = rank;
        }
        let labels = raw.iter().map(|l| order[l]).collect();
        ClusterAssignment::new(labels).expect("ranks are contiguous")
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Member indices of each cluster, in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

/// Smallest inter-cluster distance divided by the largest cluster diameter.
/// Returns `f64::INFINITY` when every cluster has zero diameter.
pub fn dunn_index(d: &DistanceMatrix, assignment: &ClusterAssignment) -> Result<f64> {
    if assignment.k() < 2 {
        return Err(Error::data("Dunn index needs at least two clusters"));
    }
    if assignment.len() != d.n() {
        return Err(Error::data("assignment size does not match distance matrix"));
    }
    let labels = assignment.labels();
    let mut min_between = f64::INFINITY;
    let mut max_diameter: f64 = 0.0;
    for i in 0..d.n() {
        let row = d.row(i);
        for j in i + 1..d.n() {
            if labels[i] == labels[j] {
                max_diameter = max_diameter.max(row[j]);
            } else {
                min_between = min_between.min(row[j]);
            }
        }
    }
    if max_diameter == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(min_between / max_diameter)
}

#[derive(Debug, Clone, Serialize)]
pub struct KScore {
    pub k: usize,
    /// `None` stands for an unbounded index (all diameters zero).
    pub dunn: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterSelection {
    /// Cut with the best Dunn index, before small clusters are grouped.
    pub chosen_k: usize,
    pub scores: Vec<KScore>,
    pub min_size: usize,
    /// Final assignment after grouping, labelled by descending size.
    pub assignment: ClusterAssignment,
}

/// Default grouping threshold: 5% of the corpus, rounded up.
pub fn default_min_size(n: usize) -> usize {
    (n as f64 * 0.05).ceil() as usize
}

/// Cuts the tree at each `k` in `k_range`, keeps the cut with the largest
/// Dunn index (smallest `k` on ties), then folds every cluster smaller than
/// `min_size` into one catch-all group.
pub fn select_clusters(
    dend: &Dendrogram,
    d: &DistanceMatrix,
    k_range: RangeInclusive<usize>,
    min_size: usize,
) -> Result<ClusterSelection> {
    let n = dend.leaves();
    if k_range.is_empty() {
        return Err(Error::config("empty k range"));
    }
    if *k_range.start() < 2 || *k_range.end() > n {
        return Err(Error::config(format!(
            "k range {}..={} must lie within [2, {n}]",
            k_range.start(),
            k_range.end()
        )));
    }
    let mut scores = Vec::new();
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for k in k_range {
        let labels = dend.cut(k)?;
        let value = dunn_index(d, &ClusterAssignment::new(labels.clone())?)?;
        scores.push(KScore {
            k,
            dunn: value.is_finite().then_some(value),
        });
        if best.as_ref().is_none_or(|(bv, _, _)| value > *bv) {
            best = Some((value, k, labels));
        }
    }
    let (_, chosen_k, labels) = best.expect("k range is non-empty");
    let assignment = group_small(&labels, min_size);
    Ok(ClusterSelection {
        chosen_k,
        scores,
        min_size,
        assignment,
    })
}

/// Merges clusters below `min_size` into one group and relabels clusters
/// by descending size, ties broken by smallest member index.
pub fn group_small(labels: &[usize], min_size: usize) -> ClusterAssignment {
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut sizes = vec![0usize; k];
    let mut first = vec![usize::MAX; k];
    for (i, &l) in labels.iter().enumerate() {
        sizes[l] += 1;
        first[l] = first[l].min(i);
    }
    let small: Vec<bool> = sizes.iter().map(|&s| s < min_size).collect();
    let catch_all = small.iter().position(|&s| s);
    let merged: Vec<usize> = labels
        .iter()
        .map(|&l| if small[l] { catch_all.unwrap() } else { l })
        .collect();

    let mut group_size = vec![0usize; k];
    let mut group_first = vec![usize::MAX; k];
    for (i, &l) in merged.iter().enumerate() {
        group_size[l] += 1;
        group_first[l] = group_first[l].min(i);
    }
    let mut groups: Vec<usize> = (0..k).filter(|&g| group_size[g] > 0).collect();
    groups.sort_by_key(|&g| (std::cmp::Reverse(group_size[g]), group_first[g]));
    let mut rank = vec![usize::MAX; k];
    for (r, &g) in groups.iter().enumerate() {
        rank[g] = r;
    }
    ClusterAssignment::new(merged.iter().map(|&g| rank[g]).collect()).expect("contiguous ranks")
}
