//! Command-line front end. Exit codes: 0 success, 2 configuration or usage
//! error, 3 data error, 4 generation stall. Failures also print a one-line
//! JSON object on stderr.

mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::groundtruth;
use crate::seqcore::save_corpus;

pub use args::{Cli, Command, FixtureKind};
pub use commands::*;
pub use config::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_STALL: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Stall { .. } | Error::Generation { .. } | Error::NoCandidates => EXIT_STALL,
        _ => EXIT_DATA,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Config(_) => "config",
        Error::Parse { .. } => "parse",
        Error::Data(_) => "data",
        Error::UnknownState(_) => "unknown_state",
        Error::WindowExceedsSeries { .. } => "window_exceeds_series",
        Error::EmptySample => "empty_sample",
        Error::NoCandidates => "no_candidates",
        Error::Stall { .. } => "stall",
        Error::Generation { .. } => "generation",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
        Error::Json(_) => "json",
    }
}

/// Machine-readable description of a failure.
pub fn error_json(err: &Error) -> serde_json::Value {
    let mut body = json!({
        "kind": error_kind(err),
        "message": err.to_string(),
        "exit_code": exit_code(err),
    });
    if let Error::Generation { ordinal, .. } = err {
        body["ordinal"] = json!(ordinal);
    }
    if let Some(t) = err.stall_time() {
        body["stall_time"] = json!(t);
    }
    if let Error::Parse { path, line, column, .. } = err {
        body["path"] = json!(path);
        body["line"] = json!(line);
        body["column"] = json!(column);
    }
    json!({ "error": body })
}

/// Runs the command line and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            if code != EXIT_OK {
                eprintln!(
                    "{}",
                    json!({"error": {"kind": "usage", "message": e.kind().to_string(), "exit_code": code}})
                );
            }
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    main_with_args(std::env::args_os())
}

fn base_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = base_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(a) => {
            a.input.apply(&mut cfg);
            a.preprocess.apply(&mut cfg);
            let out = cfg.out_dir(a.out.out.as_deref());
            let r = run_ingest(&cfg, &out)?;
            println!(
                "ingested {} sequences x {} intervals ({} states) -> {}",
                r.corpus.len(),
                r.corpus.sequence_length(),
                r.corpus.alphabet().len(),
                r.corpus_path.display()
            );
        }
        Command::Cluster(a) => {
            a.input.apply(&mut cfg);
            a.cluster.apply(&mut cfg);
            let out = cfg.out_dir(a.out.out.as_deref());
            let s = run_cluster(&cfg, &out)?;
            let sizes: Vec<String> = s.clusters.iter().map(|c| c.size.to_string()).collect();
            match s.chosen_k {
                Some(k) => println!("best k={k}; cluster sizes {}", sizes.join(", ")),
                None => println!("imported labels; cluster sizes {}", sizes.join(", ")),
            }
        }
        Command::Synth(a) => {
            a.input.apply(&mut cfg);
            a.synth.apply(&mut cfg);
            cfg.synthesis.resolve_seed();
            let out = cfg.out_dir(a.out.out.as_deref());
            let p = run_synth(&cfg, a.assignment.as_deref(), a.output_format, &out)?;
            println!(
                "synthesized {} sequences with {} (seed {}) -> {}",
                p.produced,
                p.engine.name(),
                p.seed,
                out.join(SYNTHETIC_FILE).display()
            );
        }
        Command::Eval(a) => {
            a.eval.apply(&mut cfg);
            let out = cfg.out_dir(a.out.out.as_deref());
            let methods: Vec<_> = a.methods.iter().map(|m| parse_method(m)).collect();
            run_eval(&cfg.evaluation, &a.original, a.alphabet.as_deref(), &methods, &out)?;
            println!("report -> {}", out.join("report.txt").display());
        }
        Command::Sweep(a) => {
            a.input.apply(&mut cfg);
            a.synth.apply(&mut cfg);
            a.eval.apply(&mut cfg);
            a.sweep.apply(&mut cfg);
            cfg.synthesis.resolve_seed();
            let out = cfg.out_dir(a.out.out.as_deref());
            let r = run_sweep(&cfg, a.assignment.as_deref(), &out)?;
            println!("swept {} cells -> {}", r.cells.len(), out.join(SWEEP_TABLE).display());
        }
        Command::Pipeline(a) => {
            a.input.apply(&mut cfg);
            a.preprocess.apply(&mut cfg);
            a.cluster.apply(&mut cfg);
            a.synth.apply(&mut cfg);
            a.eval.apply(&mut cfg);
            a.sweep.apply(&mut cfg);
            if a.no_cluster {
                cfg.clustering.enabled = false;
            }
            cfg.synthesis.resolve_seed();
            let out = cfg.out_dir(a.out.out.as_deref());
            let s = run_pipeline(&cfg, &out)?;
            println!(
                "pipeline finished: methods {} -> {}",
                s.methods.join(", "),
                out.join("eval").join("report.txt").display()
            );
        }
        Command::Fixture(a) => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            match a.kind {
                FixtureKind::Activity => {
                    save_corpus(&groundtruth::activity_corpus(a.count, &mut rng), &a.out, a.format)?
                }
                FixtureKind::Trip => save_corpus(&groundtruth::trip_chain_corpus(a.count, &mut rng), &a.out, a.format)?,
                FixtureKind::Continuous => write_continuous(&a.out, a.count, &mut rng)?,
            }
            println!("wrote {} {:?} sequences -> {}", a.count, a.kind, a.out.display());
        }
    }
    Ok(())
}

fn write_continuous(path: &Path, count: usize, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    let mut header = vec!["id".to_string()];
    header.extend((1..=groundtruth::DAY_MINUTES).map(|i| format!("v{i}")));
    w.write_record(&header)?;
    for i in 0..count {
        let mut row = vec![format!("acc{:05}", i + 1)];
        row.extend(groundtruth::activity_counts_day(rng).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
