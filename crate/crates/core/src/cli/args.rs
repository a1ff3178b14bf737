use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::clustering::{Linkage, Metric};
use crate::error::{Error, Result};
use crate::eval::{StateSelection, ZeroExclusion};
use crate::seqcore::CorpusFormat;
use crate::synth::{BandwidthRule, BufferStrategy, DurationScope, Engine, RuleName, SamplerConfig};

use super::config::{InputFormat, PipelineConfig};

#[derive(Debug, Parser)]
#[command(
    name = "pairedmc",
    version,
    about = "Synthesize categorical time-use sequences with paired semi-Markov chains"
)]
pub struct Cli {
    /// JSON configuration; flags take precedence over its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize an input corpus into an interval CSV plus alphabet manifest.
    Ingest(IngestArgs),
    /// Cluster a corpus (or import labels) and write the assignment.
    Cluster(ClusterArgs),
    /// Generate synthetic sequences from a corpus.
    Synth(SynthArgs),
    /// Compare one or more synthesized corpora with the original.
    Eval(EvalArgs),
    /// Run synthesis and evaluation over a grid of windows and orders.
    Sweep(SweepArgs),
    /// Ingest, cluster, synthesize, evaluate and sweep in one go.
    Pipeline(PipelineArgs),
    /// Write a synthetic fixture corpus from a scripted ground-truth process.
    Fixture(FixtureArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory [default: $PAIREDMC_OUT_DIR, else ./pairedmc-out].
    #[arg(short, long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input corpus file.
    #[arg(short, long, visible_alias = "corpus", value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Alphabet manifest (or JSON array of labels) fixing the state order.
    #[arg(long, value_name = "FILE")]
    pub alphabet: Option<PathBuf>,
    /// Accept labels missing from the supplied alphabet.
    #[arg(long)]
    pub extend_alphabet: bool,
    #[arg(long)]
    pub interval_minutes: Option<u32>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Rolling-mean window applied to continuous input.
    #[arg(long, value_name = "W")]
    pub smooth: Option<usize>,
    /// Comma-separated cut points for continuous input.
    #[arg(long, value_delimiter = ',', value_name = "T1,T2,...")]
    pub thresholds: Option<Vec<f64>>,
    /// Skip continuous rows with missing cells instead of failing.
    #[arg(long)]
    pub drop_missing: bool,
}

#[derive(Debug, Args)]
pub struct ClusterFlags {
    /// Range of cluster counts to score, as `MIN:MAX`.
    #[arg(long, value_parser = parse_range, value_name = "MIN:MAX")]
    pub k_range: Option<(usize, usize)>,
    #[arg(long, value_parser = parse_enum::<Linkage>)]
    pub linkage: Option<Linkage>,
    #[arg(long, value_parser = parse_enum::<Metric>)]
    pub metric: Option<Metric>,
    /// Clusters smaller than this are grouped together.
    #[arg(long)]
    pub min_size: Option<usize>,
    /// Use an existing `id,cluster` CSV instead of clustering.
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthFlags {
    #[arg(long, value_parser = parse_enum::<Engine>)]
    pub engine: Option<Engine>,
    /// Context order (number of preceding states matched).
    #[arg(long)]
    pub order: Option<usize>,
    /// Candidate window half-width, in intervals.
    #[arg(long)]
    pub delta: Option<u32>,
    #[arg(long, value_parser = ["direct", "kde"])]
    pub sampler: Option<String>,
    /// KDE bandwidth in intervals, or `silverman`.
    #[arg(long, value_parser = parse_bandwidth)]
    pub bandwidth: Option<BandwidthRule>,
    #[arg(long, value_parser = parse_enum::<BufferStrategy>)]
    pub buffer: Option<BufferStrategy>,
    #[arg(long, value_parser = parse_enum::<DurationScope>)]
    pub duration_scope: Option<DurationScope>,
    /// Fail with a stall error instead of taking a chain step when no candidate exists.
    #[arg(long)]
    pub no_tvmc_fallback: bool,
    #[arg(long)]
    pub target_length: Option<usize>,
    /// Master seed; drawn from system entropy and printed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of sequences [default: size of the source corpus].
    #[arg(long)]
    pub count: Option<usize>,
    /// Comma-separated cluster draw weights [default: cluster sizes].
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Worker threads; 0 uses every core. Never changes the output.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalFlags {
    /// `topN`, `all`, or comma-separated labels.
    #[arg(long, value_parser = parse_selection)]
    pub states: Option<StateSelection>,
    /// States whose combined durations skip zero totals: `all`, `none`, or labels.
    #[arg(long, value_parser = parse_exclusion)]
    pub exclude_zero: Option<ZeroExclusion>,
    /// Inclusive duration range for a state, as `LABEL=MIN:MAX` (repeatable).
    #[arg(long = "range", value_parser = parse_state_range, value_name = "LABEL=MIN:MAX")]
    pub ranges: Vec<(String, (u32, u32))>,
}

#[derive(Debug, Args)]
pub struct SweepFlags {
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub cluster: ClusterFlags,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Cluster assignment CSV to synthesize per cluster.
    #[arg(long, value_name = "FILE")]
    pub assignment: Option<PathBuf>,
    #[command(flatten)]
    pub synth: SynthFlags,
    /// Layout of the written corpus.
    #[arg(long, value_parser = parse_enum::<CorpusFormat>, default_value = "interval")]
    pub output_format: CorpusFormat,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Original corpus (interval CSV).
    #[arg(long, value_name = "FILE")]
    pub original: PathBuf,
    /// Method corpus as `NAME=FILE`, or just `FILE` to name it by file stem.
    #[arg(long = "method", required = true, value_name = "NAME=FILE")]
    pub methods: Vec<String>,
    #[arg(long, value_name = "FILE")]
    pub alphabet: Option<PathBuf>,
    #[command(flatten)]
    pub eval: EvalFlags,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_name = "FILE")]
    pub assignment: Option<PathBuf>,
    #[command(flatten)]
    pub synth: SynthFlags,
    #[command(flatten)]
    pub eval: EvalFlags,
    #[command(flatten)]
    pub sweep: SweepFlags,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
    /// Skip clustering and synthesize from the whole corpus.
    #[arg(long)]
    pub no_cluster: bool,
    #[command(flatten)]
    pub cluster: ClusterFlags,
    #[command(flatten)]
    pub synth: SynthFlags,
    #[command(flatten)]
    pub eval: EvalFlags,
    #[command(flatten)]
    pub sweep: SweepFlags,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FixtureKind {
    /// Four-state activity days with time-of-day transitions.
    Activity,
    /// Trip chains whose next state depends on the state before the trip.
    Trip,
    /// Minute-level activity counts for the continuous ingestion path.
    Continuous,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long, value_enum, default_value = "activity")]
    pub kind: FixtureKind,
    #[arg(long, default_value_t = 300)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Layout for categorical fixtures.
    #[arg(long, value_parser = parse_enum::<CorpusFormat>, default_value = "episode")]
    pub format: CorpusFormat,
    /// Output file.
    #[arg(short, long, value_name = "FILE")]
    pub out: PathBuf,
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unsupported value {s:?}"))
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected MIN:MAX")?;
    let lo = a.trim().parse().map_err(|_| format!("bad bound {a:?}"))?;
    let hi = b.trim().parse().map_err(|_| format!("bad bound {b:?}"))?;
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok((lo, hi))
}

fn parse_state_range(s: &str) -> std::result::Result<(String, (u32, u32)), String> {
    let (label, range) = s.rsplit_once('=').ok_or("expected LABEL=MIN:MAX")?;
    let (lo, hi) = parse_range(range)?;
    let cast = |v: usize| u32::try_from(v).map_err(|_| format!("bound {v} too large"));
    Ok((label.to_string(), (cast(lo)?, cast(hi)?)))
}

fn parse_bandwidth(s: &str) -> std::result::Result<BandwidthRule, String> {
    if s == "silverman" {
        return Ok(BandwidthRule::Rule(RuleName::Silverman));
    }
    s.parse::<f64>()
        .map(BandwidthRule::Fixed)
        .map_err(|_| format!("expected a number or `silverman`, got {s:?}"))
}

fn parse_selection(s: &str) -> std::result::Result<StateSelection, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_exclusion(s: &str) -> std::result::Result<ZeroExclusion, String> {
    Ok(match s {
        "all" => ZeroExclusion::All,
        "none" => ZeroExclusion::None,
        labels => ZeroExclusion::Labels(labels.split(',').map(|l| l.trim().to_string()).collect()),
    })
}

impl InputArgs {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        let c = &mut cfg.input;
        set(&mut c.path, self.input.clone());
        set(&mut c.alphabet, self.alphabet.clone());
        if let Some(f) = self.format {
            c.format = f;
        }
        if let Some(m) = self.interval_minutes {
            c.interval_minutes = m;
        }
        c.extend_alphabet |= self.extend_alphabet;
    }
}

impl PreprocessArgs {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        let c = &mut cfg.preprocess;
        set(&mut c.smooth, self.smooth);
        if let Some(t) = &self.thresholds {
            c.thresholds = t.clone();
        }
        c.drop_missing |= self.drop_missing;
    }
}

impl ClusterFlags {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        let c = &mut cfg.clustering;
        if let Some(r) = self.k_range {
            c.k_range = r;
        }
        if let Some(l) = self.linkage {
            c.linkage = l;
        }
        if let Some(m) = self.metric {
            c.metric = m;
        }
        set(&mut c.min_size, self.min_size);
        set(&mut c.labels, self.labels.clone());
    }
}

impl SynthFlags {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        let c = &mut cfg.synthesis;
        if let Some(e) = self.engine {
            c.engine = e;
        }
        if let Some(o) = self.order {
            c.order = o;
        }
        if let Some(d) = self.delta {
            c.delta = d;
        }
        match self.sampler.as_deref() {
            Some("direct") => c.sampler = SamplerConfig::Direct,
            Some(_) => {
                c.sampler = SamplerConfig::Kde {
                    bandwidth_rule: self.bandwidth.unwrap_or_default(),
                }
            }
            None => {}
        }
        if let (Some(bw), SamplerConfig::Kde { bandwidth_rule }) = (self.bandwidth, &mut c.sampler) {
            *bandwidth_rule = bw;
        }
        if let Some(b) = self.buffer {
            c.buffer = b;
        }
        if let Some(s) = self.duration_scope {
            c.duration_scope = s;
        }
        if self.no_tvmc_fallback {
            c.tvmc_fallback = false;
        }
        set(&mut c.target_length, self.target_length);
        set(&mut c.seed, self.seed);
        set(&mut c.count, self.count);
        set(&mut c.weights, self.weights.clone());
        if let Some(w) = self.workers {
            c.workers = w;
        }
    }
}

impl EvalFlags {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        let c = &mut cfg.evaluation;
        if let Some(s) = &self.states {
            c.states = s.clone();
        }
        if let Some(z) = &self.exclude_zero {
            c.exclude_zero = z.clone();
        }
        for (label, range) in &self.ranges {
            c.duration_ranges.insert(label.clone(), *range);
        }
    }
}

impl SweepFlags {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(d) = &self.deltas {
            cfg.sweep.deltas = d.clone();
        }
        if let Some(o) = &self.orders {
            cfg.sweep.orders = o.clone();
        }
    }
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

pub(crate) fn check_nonempty<T>(v: &[T], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{what} must not be empty")));
    }
    Ok(())
}
