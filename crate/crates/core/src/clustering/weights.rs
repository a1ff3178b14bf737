use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ClusterAssignment;

/// Relative draw weights per cluster. Defaults to cluster sizes, which makes
/// the output composition match the source; other weights shift it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClusterWeights {
    weights: Vec<f64>,
}

impl ClusterWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::config("cluster weights must be finite and non-negative"));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::config("at least one cluster weight must be positive"));
        }
        Ok(ClusterWeights { weights })
    }

    pub fn from_sizes(assignment: &ClusterAssignment) -> Self {
        ClusterWeights {
            weights: assignment.sizes().iter().map(|&s| s as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / total).collect()
    }
}

impl TryFrom<Vec<f64>> for ClusterWeights {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ClusterWeights::new(v)
    }
}

impl From<ClusterWeights> for Vec<f64> {
    fn from(w: ClusterWeights) -> Self {
        w.weights
    }
}

/// Draws a cluster index with probability proportional to its weight.
pub fn sample_cluster<R: Rng + ?Sized>(weights: &ClusterWeights, rng: &mut R) -> usize {
    if weights.len() == 1 {
        return 0;
    }
    WeightedIndex::new(&weights.weights)
        .expect("weights validated at construction")
        .sample(rng)
}
