//! Pre-clustering of a corpus before synthesis.
//!
//! The data-driven path builds a Hamming distance matrix, an agglomerative
//! dendrogram, and picks the cut with the best Dunn index; small clusters
//! are then pooled. Users can instead supply their own labels, in which case
//! only [`sample_cluster`] is used.

mod distance;
mod hierarchy;
mod validity;
mod weights;

pub use distance::{pairwise_distance, DistanceMatrix, Metric};
pub use hierarchy::{hierarchical_cluster, Dendrogram, Linkage, Merge};
pub use validity::{
    default_min_size, dunn_index, group_small, select_clusters, ClusterAssignment, ClusterSelection, KScore,
};
pub use weights::{sample_cluster, ClusterWeights};
