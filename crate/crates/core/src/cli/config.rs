use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::{Linkage, Metric};
use crate::error::{Error, Result};
use crate::eval::ReportOptions;
use crate::synth::{BufferStrategy, DurationScope, Engine, SamplerConfig, SynthesisConfig};

pub const DEFAULT_OUT_DIR: &str = "pairedmc-out";
pub const OUT_DIR_ENV: &str = "PAIREDMC_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    #[default]
    Interval,
    Episode,
    /// Non-negative readings per interval, discretized at ingestion.
    Continuous,
}

/// Settings for every stage. Paths and the worker count are not part of
/// the configuration hash; input files enter it by content digest instead.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub preprocess: PreprocessConfig,
    pub clustering: ClusteringConfig,
    pub synthesis: SynthSection,
    pub evaluation: ReportOptions,
    pub sweep: SweepConfig,
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    #[serde(skip_serializing)]
    pub path: Option<PathBuf>,
    pub format: InputFormat,
    /// Alphabet manifest or JSON array of labels fixing the state order.
    #[serde(skip_serializing)]
    pub alphabet: Option<PathBuf>,
    pub extend_alphabet: bool,
    pub interval_minutes: u32,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            path: None,
            format: InputFormat::Interval,
            alphabet: None,
            extend_alphabet: false,
            interval_minutes: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub smooth: Option<usize>,
    pub thresholds: Vec<f64>,
    pub drop_missing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub enabled: bool,
    pub metric: Metric,
    pub linkage: Linkage,
    pub k_range: (usize, usize),
    /// Clusters smaller than this are grouped; 5% of the corpus when absent.
    pub min_size: Option<usize>,
    /// Precomputed `id,cluster` assignment used instead of clustering.
    #[serde(skip_serializing)]
    pub labels: Option<PathBuf>,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            enabled: true,
            metric: Metric::Hamming,
            linkage: Linkage::Complete,
            k_range: (2, 10),
            min_size: None,
            labels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub engine: Engine,
    pub delta: u32,
    pub order: usize,
    pub target_length: Option<usize>,
    pub sampler: SamplerConfig,
    pub buffer: BufferStrategy,
    pub duration_scope: DurationScope,
    pub tvmc_fallback: bool,
    pub seed: Option<u64>,
    /// Number of outputs; the source corpus size when absent.
    pub count: Option<usize>,
    pub weights: Option<Vec<f64>>,
    #[serde(skip_serializing)]
    pub workers: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        let base = SynthesisConfig::default();
        SynthSection {
            engine: Engine::PairedMc,
            delta: base.delta,
            order: base.order,
            target_length: base.target_length,
            sampler: base.sampler,
            buffer: base.buffer,
            duration_scope: base.duration_scope,
            tvmc_fallback: base.tvmc_fallback,
            seed: None,
            count: None,
            weights: None,
            workers: 0,
        }
    }
}

impl SynthSection {
    /// Engine settings; the seed must already be resolved.
    pub fn synthesis_config(&self) -> SynthesisConfig {
        SynthesisConfig {
            delta: self.delta,
            order: self.order,
            target_length: self.target_length,
            sampler: self.sampler,
            buffer: self.buffer,
            duration_scope: self.duration_scope,
            tvmc_fallback: self.tvmc_fallback,
            seed: self.seed.expect("seed resolved before synthesis"),
        }
    }

    /// Fills in a missing seed from system entropy and reports it.
    pub fn resolve_seed(&mut self) -> u64 {
        *self.seed.get_or_insert_with(|| {
            let seed = rand::random::<u64>();
            eprintln!("pairedmc: seed {seed}");
            seed
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub deltas: Vec<u32>,
    pub orders: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            deltas: vec![30, 60, 120],
            orders: vec![1, 2],
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Output directory: the flag, then the config file, then the
    /// environment, then a fixed default.
    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Serialize)]
struct HashInput<'a, T: Serialize> {
    command: &'a str,
    settings: &'a T,
    inputs: Vec<String>,
}

/// SHA-256 over the command name, its effective settings and the content
/// of every input file.
pub fn config_hash<T: Serialize>(command: &str, settings: &T, inputs: &[&Path]) -> Result<String> {
    let inputs = inputs.iter().map(|p| file_digest(p)).collect::<Result<Vec<_>>>()?;
    let bytes = serde_json::to_vec(&HashInput {
        command,
        settings,
        inputs,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_reject_unknown_keys() {
        let c: PipelineConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert_eq!(c.synthesis.delta, 60);
        assert_eq!(c.sweep.deltas, vec![30, 60, 120]);
        let c: PipelineConfig = serde_json::from_str(
            r#"{"synthesis": {"delta": 30, "order": 2, "sampler": {"type": "kde", "bandwidth_rule": "silverman"}, "count": 5, "weights": [1, 2]},
                "clustering": {"k_range": [2, 4]}, "evaluation": {"states": {"top": 3}}}"#,
        )
        .unwrap();
        assert_eq!(
            (c.synthesis.delta, c.synthesis.order, c.synthesis.count),
            (30, 2, Some(5))
        );
        assert_eq!(c.clustering.k_range, (2, 4));
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"synthesis": {"detla": 3}}"#).is_err());
    }

    #[test]
    fn hash_ignores_paths_and_workers() {
        let mut a = SynthSection {
            seed: Some(1),
            ..Default::default()
        };
        let h1 = config_hash("synth", &a, &[]).unwrap();
        a.workers = 8;
        assert_eq!(config_hash("synth", &a, &[]).unwrap(), h1);
        a.delta = 30;
        assert_ne!(config_hash("synth", &a, &[]).unwrap(), h1);
        assert_eq!(h1.len(), 64);
    }
}
