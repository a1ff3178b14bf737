use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clustering::{
    default_min_size, hierarchical_cluster, pairwise_distance, select_clusters, ClusterAssignment, ClusterWeights,
    KScore,
};
use crate::error::{Error, Result};
use crate::eval::{build_report, write_report, EvaluationReport, Metric as EvalMetric, ReportOptions, ReportRow};
use crate::seqcore::{
    discretize, discretized_alphabet, load_assignment_csv, load_continuous, load_corpus, save_assignment_csv,
    save_corpus, smooth_rolling, Corpus, CorpusFormat, LoadOptions, StateAlphabet,
};
use crate::synth::{try_synthesize_batch, BatchRequest, Engine, FallbackCounts, SequenceProvenance, SynthesisConfig};

use super::args::check_nonempty;
use super::config::{config_hash, InputFormat, PipelineConfig};

pub const CORPUS_FILE: &str = "corpus.csv";
pub const ALPHABET_FILE: &str = "alphabet.json";
pub const ASSIGNMENT_FILE: &str = "assignment.csv";
pub const CLUSTER_SUMMARY_FILE: &str = "cluster_summary.json";
pub const SYNTHETIC_FILE: &str = "synthetic.csv";
pub const PROVENANCE_FILE: &str = "provenance.json";
pub const PARTIAL_FILE: &str = "synthetic.partial.csv";
pub const PARTIAL_MARKER: &str = "synthetic.partial.json";
pub const SWEEP_TABLE: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "sweep.json";
pub const SWEEP_TEXT: &str = "sweep.txt";
pub const PIPELINE_SUMMARY: &str = "pipeline.json";

const VERSION: u32 = 1;

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphabetManifest {
    pub schema: String,
    pub version: u32,
    pub config_hash: String,
    pub labels: Vec<String>,
    pub interval_minutes: u32,
    pub sequence_length: usize,
    pub sequences: usize,
}

/// Reads an alphabet manifest, or a bare JSON array of labels.
pub fn load_alphabet(path: &Path) -> Result<StateAlphabet> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let labels = match value {
        serde_json::Value::Object(mut m) => m
            .remove("labels")
            .ok_or_else(|| Error::Config(format!("{}: no \"labels\" field", path.display())))?,
        other => other,
    };
    let labels: Vec<String> = serde_json::from_value(labels)?;
    StateAlphabet::new(labels)
}

fn input_path(cfg: &PipelineConfig) -> Result<&Path> {
    cfg.input
        .path
        .as_deref()
        .ok_or_else(|| Error::Config("no input corpus given (use --input or input.path)".into()))
}

fn load_options(cfg: &PipelineConfig) -> Result<LoadOptions> {
    Ok(LoadOptions {
        alphabet: cfg.input.alphabet.as_deref().map(load_alphabet).transpose()?,
        extend_alphabet: cfg.input.extend_alphabet,
        interval_minutes: cfg.input.interval_minutes,
    })
}

/// Loads the categorical input corpus named by the configuration, plus the
/// files it was read from.
pub fn load_input(cfg: &PipelineConfig) -> Result<(Corpus, Vec<PathBuf>)> {
    let path = input_path(cfg)?;
    let format = match cfg.input.format {
        InputFormat::Interval => CorpusFormat::Interval,
        InputFormat::Episode => CorpusFormat::Episode,
        InputFormat::Continuous => {
            return Err(Error::Config("continuous input must be ingested first".into()));
        }
    };
    let corpus = load_corpus(path, format, &load_options(cfg)?)?;
    let mut inputs = vec![path.to_path_buf()];
    inputs.extend(cfg.input.alphabet.clone());
    Ok((corpus, inputs))
}

fn as_refs(paths: &[PathBuf]) -> Vec<&Path> {
    paths.iter().map(PathBuf::as_path).collect()
}

#[derive(Debug, Clone)]
pub struct IngestOutput {
    pub corpus: Corpus,
    pub corpus_path: PathBuf,
    pub alphabet_path: PathBuf,
    pub config_hash: String,
}

pub fn run_ingest(cfg: &PipelineConfig, out: &Path) -> Result<IngestOutput> {
    let path = input_path(cfg)?;
    let pre = &cfg.preprocess;
    let mut inputs = vec![path.to_path_buf()];
    let corpus = match cfg.input.format {
        InputFormat::Continuous => {
            check_nonempty(&pre.thresholds, "thresholds for continuous input")?;
            if cfg.input.alphabet.is_some() {
                return Err(Error::Config("continuous input defines its own alphabet".into()));
            }
            let alphabet = discretized_alphabet(&pre.thresholds)?;
            let sequences = load_continuous(path, pre.drop_missing)?
                .iter()
                .map(|series| {
                    let smoothed = match pre.smooth {
                        Some(w) => smooth_rolling(series, w)?,
                        None => series.clone(),
                    };
                    let mut seq = discretize(&smoothed, &pre.thresholds)?;
                    seq.interval_minutes = cfg.input.interval_minutes;
                    Ok(seq)
                })
                .collect::<Result<Vec<_>>>()?;
            if sequences.is_empty() {
                return Err(Error::Data(format!("{}: no complete rows", path.display())));
            }
            Corpus::new(alphabet, sequences)?
        }
        _ => {
            if pre.smooth.is_some() || !pre.thresholds.is_empty() {
                return Err(Error::Config(
                    "smoothing and thresholds apply to continuous input only".into(),
                ));
            }
            let (corpus, files) = load_input(cfg)?;
            inputs = files;
            corpus
        }
    };
    let hash = config_hash("ingest", &(&cfg.input, &cfg.preprocess), &as_refs(&inputs))?;
    fs::create_dir_all(out)?;
    let corpus_path = out.join(CORPUS_FILE);
    save_corpus(&corpus, &corpus_path, CorpusFormat::Interval)?;
    let alphabet_path = out.join(ALPHABET_FILE);
    write_json(
        &alphabet_path,
        &AlphabetManifest {
            schema: "pairedmc.alphabet".into(),
            version: VERSION,
            config_hash: hash.clone(),
            labels: corpus.alphabet().labels().to_vec(),
            interval_minutes: corpus.interval_minutes(),
            sequence_length: corpus.sequence_length(),
            sequences: corpus.len(),
        },
    )?;
    log::info!(
        "ingested {} sequences of length {}",
        corpus.len(),
        corpus.sequence_length()
    );
    Ok(IngestOutput {
        corpus,
        corpus_path,
        alphabet_path,
        config_hash: hash,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterSize {
    pub cluster: usize,
    pub size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterSummary {
    pub schema: &'static str,
    pub version: u32,
    pub config_hash: String,
    /// `hierarchical` or `labels`.
    pub source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_size: Option<usize>,
    /// Dunn index per scored k; `null` stands for an unbounded index.
    pub dunn: Vec<KScore>,
    /// Final clusters, largest first.
    pub clusters: Vec<ClusterSize>,
}

fn lookup_labels(corpus: &Corpus, labels: &BTreeMap<String, usize>, path: &Path) -> Result<Vec<usize>> {
    corpus
        .sequences()
        .iter()
        .map(|s| {
            labels
                .get(&s.id)
                .copied()
                .ok_or_else(|| Error::Data(format!("{}: no cluster for sequence {:?}", path.display(), s.id)))
        })
        .collect()
}

/// Assignment for `corpus` from an `id,cluster` file with clusters numbered
/// `0..k`.
pub fn load_assignment(corpus: &Corpus, path: &Path) -> Result<ClusterAssignment> {
    ClusterAssignment::new(lookup_labels(corpus, &load_assignment_csv(path)?, path)?)
}

pub fn run_cluster(cfg: &PipelineConfig, out: &Path) -> Result<ClusterSummary> {
    let (corpus, mut inputs) = load_input(cfg)?;
    let c = &cfg.clustering;
    let (assignment, summary_fields) = match &c.labels {
        Some(path) => {
            inputs.push(path.clone());
            let labels = lookup_labels(&corpus, &load_assignment_csv(path)?, path)?;
            (ClusterAssignment::from_raw(&labels), ("labels", None, None, Vec::new()))
        }
        None => {
            let d = pairwise_distance(&corpus, c.metric)?;
            let dend = hierarchical_cluster(&d, c.linkage)?;
            let (lo, hi) = c.k_range;
            let min_size = c.min_size.unwrap_or_else(|| default_min_size(corpus.len()));
            let sel = select_clusters(&dend, &d, lo..=hi, min_size)?;
            log::info!(
                "chose k={} (after grouping: {} clusters)",
                sel.chosen_k,
                sel.assignment.k()
            );
            (
                sel.assignment,
                ("hierarchical", Some(sel.chosen_k), Some(min_size), sel.scores),
            )
        }
    };
    let hash = config_hash("cluster", &cfg.clustering, &as_refs(&inputs))?;
    fs::create_dir_all(out)?;
    let ids: Vec<&str> = corpus.sequences().iter().map(|s| s.id.as_str()).collect();
    save_assignment_csv(out.join(ASSIGNMENT_FILE), &ids, assignment.labels())?;
    let mut clusters: Vec<ClusterSize> = assignment
        .sizes()
        .iter()
        .enumerate()
        .map(|(cluster, &size)| ClusterSize { cluster, size })
        .collect();
    clusters.sort_by(|a, b| b.size.cmp(&a.size).then(a.cluster.cmp(&b.cluster)));
    let (source, chosen_k, min_size, dunn) = summary_fields;
    let summary = ClusterSummary {
        schema: "pairedmc.cluster-summary",
        version: VERSION,
        config_hash: hash,
        source,
        chosen_k,
        min_size,
        dunn,
        clusters,
    };
    write_json(&out.join(CLUSTER_SUMMARY_FILE), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub schema: &'static str,
    pub version: u32,
    pub config_hash: String,
    pub engine: Engine,
    pub seed: u64,
    pub requested: usize,
    pub produced: usize,
    pub config: SynthesisConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster_probabilities: Option<Vec<f64>>,
    pub fallbacks: FallbackCounts,
    pub sequences: Vec<SequenceProvenance>,
}

#[derive(Debug, Clone, Serialize)]
struct PartialMarker<'a> {
    schema: &'static str,
    version: u32,
    config_hash: &'a str,
    requested: usize,
    produced: usize,
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    stall_time: Option<usize>,
}

/// Synthesizes into `out`. On failure the successful prefix goes to
/// [`PARTIAL_FILE`] next to a [`PARTIAL_MARKER`] describing the shortfall,
/// and no [`SYNTHETIC_FILE`] is left behind.
pub fn run_synth(
    cfg: &PipelineConfig,
    assignment_path: Option<&Path>,
    output_format: CorpusFormat,
    out: &Path,
) -> Result<Provenance> {
    let (corpus, mut inputs) = load_input(cfg)?;
    let s = &cfg.synthesis;
    let config = s.synthesis_config();
    let assignment = match assignment_path {
        Some(path) => {
            inputs.push(path.to_path_buf());
            Some(load_assignment(&corpus, path)?)
        }
        None => None,
    };
    let weights = s.weights.clone().map(ClusterWeights::new).transpose()?;
    if weights.is_some() && assignment.is_none() {
        return Err(Error::Config("cluster weights need a cluster assignment".into()));
    }
    let count = s.count.unwrap_or(corpus.len());
    let hash = config_hash("synth", &(s, output_format), &as_refs(&inputs))?;
    let req = BatchRequest {
        engine: s.engine,
        count,
        assignment: assignment.as_ref(),
        weights: weights.as_ref(),
        workers: s.workers,
    };
    let outcome = try_synthesize_batch(&corpus, &config, &req)?;
    fs::create_dir_all(out)?;
    for stale in [SYNTHETIC_FILE, PROVENANCE_FILE, PARTIAL_FILE, PARTIAL_MARKER] {
        let p = out.join(stale);
        if p.exists() {
            fs::remove_file(p)?;
        }
    }
    let produced = outcome.output.corpus.len();
    let provenance = Provenance {
        schema: "pairedmc.provenance",
        version: VERSION,
        config_hash: hash.clone(),
        engine: s.engine,
        seed: config.seed,
        requested: count,
        produced,
        config,
        cluster_probabilities: assignment.as_ref().map(|a| {
            weights
                .clone()
                .unwrap_or_else(|| ClusterWeights::from_sizes(a))
                .probabilities()
        }),
        fallbacks: outcome.output.total_fallbacks(),
        sequences: outcome.output.provenance,
    };
    if let Some(err) = outcome.failure {
        save_corpus(&outcome.output.corpus, out.join(PARTIAL_FILE), output_format)?;
        write_json(
            &out.join(PARTIAL_MARKER),
            &PartialMarker {
                schema: "pairedmc.partial",
                version: VERSION,
                config_hash: &hash,
                requested: count,
                produced,
                error: err.to_string(),
                stall_time: err.stall_time(),
            },
        )?;
        return Err(err);
    }
    save_corpus(&outcome.output.corpus, out.join(SYNTHETIC_FILE), output_format)?;
    write_json(&out.join(PROVENANCE_FILE), &provenance)?;
    if provenance.fallbacks.total() > 0 {
        log::info!("fallbacks: {:?}", provenance.fallbacks);
    }
    Ok(provenance)
}

/// Parses `NAME=FILE`, or `FILE` named after its stem.
pub fn parse_method(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(spec);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.to_string());
            (name, path)
        }
    }
}

pub fn run_eval(
    options: &ReportOptions,
    original: &Path,
    alphabet: Option<&Path>,
    methods: &[(String, PathBuf)],
    out: &Path,
) -> Result<EvaluationReport> {
    let mut opts = LoadOptions {
        alphabet: alphabet.map(load_alphabet).transpose()?,
        ..Default::default()
    };
    let orig = load_corpus(original, CorpusFormat::Interval, &opts)?;
    opts.alphabet = Some(orig.alphabet().clone());
    opts.interval_minutes = orig.interval_minutes();
    let loaded = methods
        .iter()
        .map(|(name, path)| Ok((name.clone(), load_corpus(path, CorpusFormat::Interval, &opts)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut inputs: Vec<&Path> = vec![original];
    inputs.extend(alphabet);
    inputs.extend(methods.iter().map(|(_, p)| p.as_path()));
    let names: Vec<&str> = methods.iter().map(|(n, _)| n.as_str()).collect();
    let mut options = options.clone();
    options.config_hash = None;
    let hash = config_hash("eval", &(&options, names), &inputs)?;
    options.config_hash = Some(hash);
    let refs: Vec<(String, &Corpus)> = loaded.iter().map(|(n, c)| (n.clone(), c)).collect();
    let report = build_report(&orig, &refs, &options)?;
    write_report(&report, out)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub delta: u32,
    pub order: usize,
    pub fallbacks: FallbackCounts,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub schema: &'static str,
    pub version: u32,
    pub config_hash: String,
    pub deltas: Vec<u32>,
    pub orders: Vec<usize>,
    pub cells: Vec<SweepCell>,
}

/// Synthesizes with paired-MC and evaluates against the source for every
/// `(delta, order)` pair. Each cell lives in `cells/delta<D>-order<K>/`.
pub fn run_sweep(cfg: &PipelineConfig, assignment: Option<&Path>, out: &Path) -> Result<SweepReport> {
    check_nonempty(&cfg.sweep.deltas, "sweep deltas")?;
    check_nonempty(&cfg.sweep.orders, "sweep orders")?;
    let source = input_path(cfg)?.to_path_buf();
    let mut inputs = vec![source.clone()];
    inputs.extend(cfg.input.alphabet.clone());
    inputs.extend(assignment.map(Path::to_path_buf));
    let hash = config_hash(
        "sweep",
        &(&cfg.synthesis, &cfg.evaluation, &cfg.sweep),
        &as_refs(&inputs),
    )?;
    let mut cells = Vec::new();
    for &delta in &cfg.sweep.deltas {
        for &order in &cfg.sweep.orders {
            let mut cell_cfg = cfg.clone();
            cell_cfg.synthesis.engine = Engine::PairedMc;
            cell_cfg.synthesis.delta = delta;
            cell_cfg.synthesis.order = order;
            let dir = out.join("cells").join(format!("delta{delta}-order{order}"));
            let prov = run_synth(&cell_cfg, assignment, CorpusFormat::Interval, &dir)?;
            let report = run_eval(
                &cfg.evaluation,
                &source,
                cfg.input.alphabet.as_deref(),
                &[("paired-mc".to_string(), dir.join(SYNTHETIC_FILE))],
                &dir.join("eval"),
            )?;
            log::info!("sweep cell delta={delta} order={order} done");
            cells.push(SweepCell {
                delta,
                order,
                fallbacks: prov.fallbacks,
                rows: report.rows,
            });
        }
    }
    let report = SweepReport {
        schema: "pairedmc.sweep",
        version: VERSION,
        config_hash: hash,
        deltas: cfg.sweep.deltas.clone(),
        orders: cfg.sweep.orders.clone(),
        cells,
    };
    fs::create_dir_all(out)?;
    write_json(&out.join(SWEEP_JSON), &report)?;
    fs::write(out.join(SWEEP_TABLE), render_sweep_csv(&report))?;
    fs::write(out.join(SWEEP_TEXT), render_sweep_text(&report))?;
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One line per `(delta, order, metric, state)`.
pub fn render_sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from("delta,order,metric,state,n,mean,sd,ks_d,ks_p\n");
    for cell in &report.cells {
        for row in &cell.rows {
            let m = &row.methods[0];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                cell.delta,
                cell.order,
                row.metric.name(),
                row.state,
                m.n,
                opt(m.mean),
                opt(m.sd),
                opt(m.ks.map(|k| k.d)),
                opt(m.ks.map(|k| k.p)),
            );
        }
    }
    out
}

fn render_sweep_text(report: &SweepReport) -> String {
    let mut out = String::new();
    for metric in [EvalMetric::IndividualDuration, EvalMetric::CombinedDuration] {
        let _ = writeln!(out, "KS D / p by state, {}", metric.name().replace('_', " "));
        let _ = write!(out, "{:<24}", "State");
        for c in &report.cells {
            let _ = write!(out, "{:>22}", format!("delta={} order={}", c.delta, c.order));
        }
        out.push('\n');
        let Some(first) = report.cells.first() else { break };
        for row in first.rows.iter().filter(|r| r.metric == metric) {
            let _ = write!(out, "{:<24}", row.state);
            for c in &report.cells {
                let ks = c
                    .rows
                    .iter()
                    .find(|r| r.metric == metric && r.state == row.state)
                    .and_then(|r| r.methods[0].ks);
                let text = ks
                    .map(|k| format!("{:.3} / {:.3}", k.d, k.p))
                    .unwrap_or_else(|| "-".into());
                let _ = write!(out, "{text:>22}");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineSummary {
    pub schema: &'static str,
    pub version: u32,
    pub ingest_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clusters: Option<Vec<ClusterSize>>,
    pub methods: Vec<String>,
    pub report_hash: Option<String>,
    pub sweep_hash: String,
}

/// Ingest, optional clustering, synthesis with the time-varying chain and
/// paired-MC at every sweep order, evaluation of all of them against the
/// source, then the window/order sweep. Each stage writes under its own
/// subdirectory of `out`.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path) -> Result<PipelineSummary> {
    check_nonempty(&cfg.sweep.orders, "sweep orders")?;
    let ingest = run_ingest(cfg, &out.join("ingest"))?;
    let mut staged = cfg.clone();
    staged.input.path = Some(ingest.corpus_path.clone());
    staged.input.format = InputFormat::Interval;
    staged.input.alphabet = Some(ingest.alphabet_path.clone());
    staged.input.extend_alphabet = false;
    staged.preprocess = Default::default();
    staged.input.interval_minutes = ingest.corpus.interval_minutes();

    let cluster_dir = out.join("cluster");
    let clusters = if cfg.clustering.enabled {
        Some(run_cluster(&staged, &cluster_dir)?.clusters)
    } else {
        None
    };
    let assignment = clusters.as_ref().map(|_| cluster_dir.join(ASSIGNMENT_FILE));
    staged.synthesis.resolve_seed();

    let mut runs: Vec<(String, PipelineConfig)> = Vec::new();
    let mut tvmc = staged.clone();
    tvmc.synthesis.engine = Engine::Tvmc;
    runs.push(("tvmc".into(), tvmc));
    for &order in &cfg.sweep.orders {
        let mut c = staged.clone();
        c.synthesis.engine = Engine::PairedMc;
        c.synthesis.order = order;
        runs.push((format!("paired-mc-o{order}"), c));
    }
    let mut methods = Vec::new();
    for (name, run_cfg) in &runs {
        let dir = out.join("synth").join(name);
        run_synth(run_cfg, assignment.as_deref(), CorpusFormat::Interval, &dir)?;
        methods.push((name.clone(), dir.join(SYNTHETIC_FILE)));
    }
    let report = run_eval(
        &cfg.evaluation,
        &ingest.corpus_path,
        Some(&ingest.alphabet_path),
        &methods,
        &out.join("eval"),
    )?;
    let sweep = run_sweep(&staged, assignment.as_deref(), &out.join("sweep"))?;
    let summary = PipelineSummary {
        schema: "pairedmc.pipeline",
        version: VERSION,
        ingest_hash: ingest.config_hash,
        clusters,
        methods: methods.into_iter().map(|(n, _)| n).collect(),
        report_hash: report.config_hash,
        sweep_hash: sweep.config_hash,
    };
    write_json(&out.join(PIPELINE_SUMMARY), &summary)?;
    Ok(summary)
}
