use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::DistanceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    /// Farthest-neighbour distance between clusters.
    #[default]
    Complete,
    /// Unweighted mean of cross-cluster distances (UPGMA).
    Average,
}

impl Linkage {
    /// Lance-Williams update for the distance from `k` to the union of `a` and `b`.
    #[inline]
    fn update(self, d_ka: f64, d_kb: f64, size_a: usize, size_b: usize) -> f64 {
        match self {
            Linkage::Complete => d_ka.max(d_kb),
            Linkage::Average => (size_a as f64 * d_ka + size_b as f64 * d_kb) / (size_a + size_b) as f64,
        }
    }
}

/// One agglomeration step. Leaves are numbered `0..n`; the cluster created
/// by merge `i` gets id `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    leaves: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn leaves(&self) -> usize {
        self.leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Flat clustering with `k` clusters obtained by replaying the first
    /// `n - k` merges. Labels are numbered by first appearance.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.leaves;
        if k == 0 || k > n {
            return Err(Error::config(format!("cannot cut {n} leaves into {k} clusters")));
        }
        let mut parent: Vec<usize> = (0..2 * n - 1).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (step, m) in self.merges.iter().take(n - k).enumerate() {
            let node = n + step;
            let l = find(&mut parent, m.left);
            let r = find(&mut parent, m.right);
            parent[l] = node;
            parent[r] = node;
        }
        let mut label_of_root = std::collections::HashMap::new();
        let labels = (0..n)
            .map(|i| {
                let root = find(&mut parent, i);
                let next = label_of_root.len();
                *label_of_root.entry(root).or_insert(next)
            })
            .collect();
        Ok(labels)
    }
}

/// Agglomerative clustering by repeatedly merging the closest pair of
/// active clusters. Among equally close pairs the lexicographically lowest
/// `(a, b)` slot pair wins; the merged cluster keeps slot `a`.
///
/// Each slot caches its nearest higher-indexed neighbour, so a merge only
/// rescans rows whose cached neighbour was one of the merged clusters. Both
/// supported linkages are reducible, which keeps the caches valid otherwise.
pub fn hierarchical_cluster(d: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = d.n();
    if n < 2 {
        return Err(Error::data("hierarchical clustering needs at least two points"));
    }
    let mut dist = d.clone().into_entries();
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut node = (0..n).collect::<Vec<_>>();
    let mut nn = vec![usize::MAX; n];
    let mut nn_dist = vec![f64::INFINITY; n];

    let rescan = |i: usize, dist: &[f64], active: &[bool], nn: &mut [usize], nn_dist: &mut [f64]| {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in i + 1..n {
            if active[j] && dist[i * n + j] < best.0 {
                best = (dist[i * n + j], j);
            }
        }
        nn_dist[i] = best.0;
        nn[i] = best.1;
    };

    for i in 0..n {
        rescan(i, &dist, &active, &mut nn, &mut nn_dist);
    }

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut a = usize::MAX;
        for i in 0..n {
            if active[i] && nn[i] != usize::MAX && (a == usize::MAX || nn_dist[i] < nn_dist[a]) {
                a = i;
            }
        }
        let b = nn[a];
        let height = nn_dist[a];
        merges.push(Merge {
            left: node[a].min(node[b]),
            right: node[a].max(node[b]),
            height,
            size: size[a] + size[b],
        });

        for k in 0..n {
            if !active[k] || k == a || k == b {
                continue;
            }
            let v = linkage.update(dist[k * n + a], dist[k * n + b], size[a], size[b]);
            dist[k * n + a] = v;
            dist[a * n + k] = v;
        }
        active[b] = false;
        size[a] += size[b];
        node[a] = n + step;

        rescan(a, &dist, &active, &mut nn, &mut nn_dist);
        for k in 0..b {
            if !active[k] || k == a {
                continue;
            }
            if nn[k] == a || nn[k] == b {
                rescan(k, &dist, &active, &mut nn, &mut nn_dist);
            } else if k < a {
                let v = dist[k * n + a];
                if v < nn_dist[k] || (v == nn_dist[k] && a < nn[k]) {
                    nn[k] = a;
                    nn_dist[k] = v;
                }
            }
        }
    }
    Ok(Dendrogram { leaves: n, merges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(points: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_fn(points.len(), |i, j| (points[i] - points[j]).abs()).unwrap()
    }

    /// Cubic reference: scan every active pair at every step.
    fn naive(d: &DistanceMatrix, linkage: Linkage) -> Vec<Merge> {
        let n = d.n();
        let mut m: Vec<Vec<f64>> = (0..n).map(|i| d.row(i).to_vec()).collect();
        let mut active = vec![true; n];
        let mut size = vec![1; n];
        let mut node: Vec<usize> = (0..n).collect();
        let mut out = vec![];
        for step in 0..n - 1 {
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..n {
                for j in i + 1..n {
                    if active[i] && active[j] && best.is_none_or(|(bd, _, _)| m[i][j] < bd) {
                        best = Some((m[i][j], i, j));
                    }
                }
            }
            let (h, a, b) = best.unwrap();
            out.push(Merge {
                left: node[a].min(node[b]),
                right: node[a].max(node[b]),
                height: h,
                size: size[a] + size[b],
            });
            for k in 0..n {
                if active[k] && k != a && k != b {
                    let v = linkage.update(m[k][a], m[k][b], size[a], size[b]);
                    m[k][a] = v;
                    m[a][k] = v;
                }
            }
            active[b] = false;
            size[a] += size[b];
            node[a] = n + step;
        }
        out
    }

    #[test]
    fn two_blobs_on_a_line() {
        let dend = hierarchical_cluster(&line(&[0.0, 1.0, 10.0, 11.0]), Linkage::Complete).unwrap();
        let m = dend.merges();
        assert_eq!((m[0].left, m[0].right, m[0].height), (0, 1, 1.0));
        assert_eq!((m[1].left, m[1].right, m[1].height), (2, 3, 1.0));
        assert_eq!((m[2].left, m[2].right, m[2].height), (4, 5, 11.0));
        assert_eq!(dend.cut(2).unwrap(), vec![0, 0, 1, 1]);
    }

    #[test]
    fn two_points() {
        let dend = hierarchical_cluster(&line(&[2.0, 5.0]), Linkage::Average).unwrap();
        assert_eq!(dend.merges().len(), 1);
        assert_eq!(dend.merges()[0].height, 3.0);
        assert!(hierarchical_cluster(&line(&[1.0]), Linkage::Complete).is_err());
    }

    #[test]
    fn cut_at_n_gives_singletons() {
        let dend = hierarchical_cluster(&line(&[0.0, 4.0, 9.0, 1.0, 3.0]), Linkage::Complete).unwrap();
        assert_eq!(dend.cut(5).unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(dend.cut(1).unwrap(), vec![0; 5]);
        assert!(dend.cut(6).is_err());
    }

    #[test]
    fn average_linkage_heights() {
        // {0,1} merge at 1; then 10 joins at mean(10, 9) = 9.5.
        let dend = hierarchical_cluster(&line(&[0.0, 1.0, 10.0]), Linkage::Average).unwrap();
        assert_eq!(dend.merges()[1].height, 9.5);
    }

    proptest! {
        #[test]
        fn matches_naive_and_is_monotone(
            pts in prop::collection::vec(0u8..12, 2..30),
            average in any::<bool>(),
        ) {
            // Small integer coordinates produce many ties, exercising the tie-break.
            let pts: Vec<f64> = pts.into_iter().map(f64::from).collect();
            let linkage = if average { Linkage::Average } else { Linkage::Complete };
            let d = line(&pts);
            let dend = hierarchical_cluster(&d, linkage).unwrap();
            prop_assert_eq!(dend.merges(), &naive(&d, linkage)[..]);
            prop_assert!(dend.merges().windows(2).all(|w| w[0].height <= w[1].height));
        }
    }
}
