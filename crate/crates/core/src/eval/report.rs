use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqcore::{Corpus, StateId};

use super::ecdf::{ecdf_curves, CurveSet};
use super::ks::{ks_two_sample, KsResult};
use super::stats::{all_episode_durations, episode_durations, sequence_entropy, DurationMode, MeanSd};

pub const REPORT_SCHEMA: &str = "pairedmc.eval-report";
pub const REPORT_VERSION: u32 = 1;
pub const OVERALL: &str = "Overall";
pub const ENTROPY_DEFINITION: &str = "shannon entropy of within-sequence state time shares, natural log";

/// Which states get their own rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSelection {
    /// The `n` states with the most total time in the original corpus.
    Top(usize),
    Labels(Vec<String>),
    All,
}

impl Default for StateSelection {
    fn default() -> Self {
        StateSelection::Top(5)
    }
}

impl std::str::FromStr for StateSelection {
    type Err = Error;

    /// `all`, `topN`, or a comma-separated label list.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(StateSelection::All);
        }
        if let Some(n) = s.strip_prefix("top") {
            if let Ok(n) = n.parse::<usize>() {
                return Ok(StateSelection::Top(n));
            }
        }
        let labels: Vec<String> = s
            .split(',')
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        if labels.is_empty() {
            return Err(Error::config("empty state selection"));
        }
        Ok(StateSelection::Labels(labels))
    }
}

/// States whose combined-duration sample drops sequences that never visit them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroExclusion {
    #[default]
    All,
    None,
    Labels(Vec<String>),
}

impl ZeroExclusion {
    fn applies(&self, label: &str) -> bool {
        match self {
            ZeroExclusion::All => true,
            ZeroExclusion::None => false,
            ZeroExclusion::Labels(l) => l.iter().any(|x| x == label),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    pub states: StateSelection,
    pub exclude_zero: ZeroExclusion,
    /// Inclusive duration bounds per state label, applied to every corpus
    /// before comparison.
    pub duration_ranges: BTreeMap<String, (u32, u32)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    IndividualDuration,
    CombinedDuration,
    EpisodeCount,
    Entropy,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::IndividualDuration => "individual_duration",
            Metric::CombinedDuration => "combined_duration",
            Metric::EpisodeCount => "episode_count",
            Metric::Entropy => "entropy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodCell {
    pub method: String,
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub ks: Option<KsResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub metric: Metric,
    pub state: String,
    pub original: MethodCell,
    pub methods: Vec<MethodCell>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub schema: &'static str,
    pub version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub entropy_definition: &'static str,
    pub sequence_length: usize,
    pub interval_minutes: u32,
    pub original_size: usize,
    pub methods: Vec<String>,
    pub states: Vec<String>,
    pub options: ReportOptions,
    pub rows: Vec<ReportRow>,
    /// ECDF curves keyed by `(metric, state)`; written as separate files.
    #[serde(skip)]
    pub curves: Vec<(Metric, String, CurveSet)>,
}

impl EvaluationReport {
    pub fn row(&self, metric: Metric, state: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.metric == metric && r.state == state)
    }
}

/// States ordered by total time in `corpus`, most prevalent first; ties go
/// to the lower state id.
pub fn states_by_prevalence(corpus: &Corpus) -> Vec<StateId> {
    let mut totals = vec![0u64; corpus.alphabet().len()];
    for seq in corpus.sequences() {
        for &s in &seq.states {
            totals[s as usize] += 1;
        }
    }
    let mut ids: Vec<StateId> = (0..totals.len() as StateId).collect();
    ids.sort_by(|&a, &b| totals[b as usize].cmp(&totals[a as usize]).then(a.cmp(&b)));
    ids
}

fn select_states(corpus: &Corpus, sel: &StateSelection) -> Result<Vec<StateId>> {
    match sel {
        StateSelection::All => Ok((0..corpus.alphabet().len() as StateId).collect()),
        StateSelection::Top(n) => Ok(states_by_prevalence(corpus).into_iter().take(*n).collect()),
        StateSelection::Labels(labels) => labels
            .iter()
            .map(|l| {
                corpus
                    .alphabet()
                    .index_of(l)
                    .ok_or_else(|| Error::UnknownState(l.clone()))
            })
            .collect(),
    }
}

fn cell(method: &str, values: &[f64], original: Option<&[f64]>) -> Result<MethodCell> {
    let stats = MeanSd::of(values.iter().copied());
    let ks = match original {
        Some(o) if !o.is_empty() && !values.is_empty() => Some(ks_two_sample(o, values)?),
        _ => None,
    };
    Ok(MethodCell {
        method: method.to_string(),
        n: values.len(),
        mean: stats.map(|s| s.mean),
        sd: stats.map(|s| s.sd),
        ks,
    })
}

/// Compares `original` against each named method corpus. All corpora must
/// share the alphabet and the sequence length.
pub fn build_report(
    original: &Corpus,
    methods: &[(String, &Corpus)],
    options: &ReportOptions,
) -> Result<EvaluationReport> {
    if original.is_empty() {
        return Err(Error::data("original corpus is empty"));
    }
    if methods.is_empty() {
        return Err(Error::config("at least one method corpus is required"));
    }
    for (name, c) in methods {
        if c.alphabet() != original.alphabet() {
            return Err(Error::data(format!("alphabet of '{name}' does not match the original")));
        }
        if c.is_empty() {
            return Err(Error::data(format!("method corpus '{name}' is empty")));
        }
        if c.sequence_length() != original.sequence_length() {
            return Err(Error::data(format!(
                "sequence length of '{name}' is {} but the original has {}",
                c.sequence_length(),
                original.sequence_length()
            )));
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for (name, _) in methods {
        if name == "original" || !seen.insert(name) {
            return Err(Error::config(format!("duplicate method name '{name}'")));
        }
    }
    for label in options.duration_ranges.keys() {
        if original.alphabet().index_of(label).is_none() {
            return Err(Error::UnknownState(label.clone()));
        }
    }

    let states = select_states(original, &options.states)?;
    let alphabet = original.alphabet();
    let corpora: Vec<(&str, &Corpus)> = std::iter::once(("original", original))
        .chain(methods.iter().map(|(n, c)| (n.as_str(), *c)))
        .collect();

    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut push = |metric: Metric, state: String, samples: Vec<Vec<f64>>, curve: bool| -> Result<()> {
        let orig = &samples[0];
        let method_cells = corpora[1..]
            .iter()
            .zip(&samples[1..])
            .map(|((name, _), v)| cell(name, v, Some(orig)))
            .collect::<Result<Vec<_>>>()?;
        if curve {
            let named: Vec<(String, Vec<f64>)> = corpora[1..]
                .iter()
                .zip(&samples[1..])
                .map(|((n, _), v)| (n.to_string(), v.clone()))
                .collect();
            curves.push((metric, state.clone(), ecdf_curves(orig, &named)));
        }
        rows.push(ReportRow {
            metric,
            state,
            original: cell("original", orig, None)?,
            methods: method_cells,
        });
        Ok(())
    };

    let in_range = |label: &str, v: u32| match options.duration_ranges.get(label) {
        Some(&(lo, hi)) => v >= lo && v <= hi,
        None => true,
    };
    let to_f64 = |label: &str, values: Vec<u32>| -> Vec<f64> {
        values
            .into_iter()
            .filter(|&v| in_range(label, v))
            .map(f64::from)
            .collect()
    };

    for &s in &states {
        let label = alphabet.label(s);
        let samples = corpora
            .iter()
            .map(|(_, c)| episode_durations(c, s, DurationMode::Individual, false).map(|d| to_f64(label, d.values)))
            .collect::<Result<Vec<_>>>()?;
        push(Metric::IndividualDuration, label.to_string(), samples, true)?;
    }
    let overall = corpora
        .iter()
        .map(|(_, c)| all_episode_durations(c).into_iter().map(f64::from).collect())
        .collect();
    push(Metric::IndividualDuration, OVERALL.to_string(), overall, true)?;

    for &s in &states {
        let label = alphabet.label(s);
        let exclude = options.exclude_zero.applies(label);
        let samples = corpora
            .iter()
            .map(|(_, c)| episode_durations(c, s, DurationMode::Combined, exclude).map(|d| to_f64(label, d.values)))
            .collect::<Result<Vec<_>>>()?;
        push(Metric::CombinedDuration, label.to_string(), samples, true)?;
    }

    let counts: Vec<Vec<Vec<f64>>> = corpora.iter().map(|(_, c)| per_sequence_counts(c)).collect();
    let overall = counts.iter().map(|c| c[0].clone()).collect();
    push(Metric::EpisodeCount, OVERALL.to_string(), overall, false)?;
    for &s in &states {
        let samples = counts.iter().map(|c| c[s as usize + 1].clone()).collect();
        push(Metric::EpisodeCount, alphabet.label(s).to_string(), samples, false)?;
    }

    let entropies = corpora
        .iter()
        .map(|(_, c)| c.sequences().iter().map(sequence_entropy).collect())
        .collect();
    push(Metric::Entropy, OVERALL.to_string(), entropies, true)?;

    Ok(EvaluationReport {
        schema: REPORT_SCHEMA,
        version: REPORT_VERSION,
        config_hash: options.config_hash.clone(),
        entropy_definition: ENTROPY_DEFINITION,
        sequence_length: original.sequence_length(),
        interval_minutes: original.interval_minutes(),
        original_size: original.len(),
        methods: methods.iter().map(|(n, _)| n.clone()).collect(),
        states: states.iter().map(|&s| alphabet.label(s).to_string()).collect(),
        options: options.clone(),
        rows,
        curves,
    })
}

/// Per-sequence episode counts: index 0 overall, then one vector per state.
fn per_sequence_counts(corpus: &Corpus) -> Vec<Vec<f64>> {
    let k = corpus.alphabet().len();
    let mut out = vec![Vec::with_capacity(corpus.len()); k + 1];
    for ep in corpus.episodes() {
        out[0].push(ep.len() as f64);
        let mut per = vec![0usize; k];
        for e in &ep.episodes {
            per[e.state as usize] += 1;
        }
        for (s, c) in per.into_iter().enumerate() {
            out[s + 1].push(c as f64);
        }
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Long-format table: one line per `(metric, state, method)`.
pub fn render_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("metric,state,method,n,mean,sd,ks_d,ks_p\n");
    for row in &report.rows {
        for c in std::iter::once(&row.original).chain(&row.methods) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                row.metric.name(),
                csv_field(&row.state),
                csv_field(&c.method),
                c.n,
                fmt_opt(c.mean),
                fmt_opt(c.sd),
                fmt_opt(c.ks.map(|k| k.d)),
                fmt_opt(c.ks.map(|k| k.p)),
            );
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fmt_p(p: f64) -> String {
    if p == 0.0 {
        "0".into()
    } else if p < 1e-3 {
        format!("{p:.1e}")
    } else {
        format!("{p:.3}")
    }
}

/// Human-readable tables: mean (SD) per method, then D and p against the
/// original.
pub fn render_text(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let metrics = [
        (Metric::IndividualDuration, "Individual state durations (intervals)"),
        (Metric::CombinedDuration, "Combined state durations (intervals)"),
        (Metric::EpisodeCount, "Number of episodes per sequence"),
        (Metric::Entropy, "Sequence entropy"),
    ];
    let mut header = format!("{:<24}{:>22}", "State", "original");
    for m in &report.methods {
        let _ = write!(header, "{:>22}{:>18}", m, "D / p");
    }
    for (metric, title) in metrics {
        let _ = writeln!(out, "{title}");
        let _ = writeln!(out, "{header}");
        for row in report.rows.iter().filter(|r| r.metric == metric) {
            let _ = write!(out, "{:<24}{:>22}", row.state, mean_sd(&row.original));
            for c in &row.methods {
                let ks =
                    c.ks.map(|k| format!("{:.3} / {}", k.d, fmt_p(k.p)))
                        .unwrap_or_else(|| "-".into());
                let _ = write!(out, "{:>22}{:>18}", mean_sd(c), ks);
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

fn mean_sd(c: &MethodCell) -> String {
    match (c.mean, c.sd) {
        (Some(m), Some(s)) => format!("{m:.2} ({s:.2})"),
        _ => "-".into(),
    }
}

fn file_stem(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn curve_csv(grid: &[f64], values: &[f64]) -> String {
    let mut out = String::from("grid,value\n");
    for (g, v) in grid.iter().zip(values) {
        let _ = writeln!(out, "{g},{v}");
    }
    out
}

/// Writes `report.json`, `table.csv`, `report.txt` and `curves/*.csv`
/// under `dir`. Curve files are named `<metric>__<state>__<series>.csv`
/// where series is `original`, a method name, or `<method>-diff`.
pub fn write_report(report: &EvaluationReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("curves"))?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(dir.join("report.json"), json)?;
    fs::write(dir.join("table.csv"), render_csv(report))?;
    fs::write(dir.join("report.txt"), render_text(report))?;
    for (metric, state, set) in &report.curves {
        let prefix = format!("{}__{}", metric.name(), file_stem(state));
        fs::write(
            dir.join("curves").join(format!("{prefix}__original.csv")),
            curve_csv(&set.grid, &set.original),
        )?;
        for m in &set.methods {
            let stem = file_stem(&m.method);
            fs::write(
                dir.join("curves").join(format!("{prefix}__{stem}.csv")),
                curve_csv(&set.grid, &m.ecdf),
            )?;
            fs::write(
                dir.join("curves").join(format!("{prefix}__{stem}-diff.csv")),
                curve_csv(&set.grid, &m.difference),
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqcore::{IntervalSequence, StateAlphabet};

    fn corpus(rows: &[Vec<u16>]) -> Corpus {
        let ab = StateAlphabet::new(["home", "work", "car", "shop", "gym", "other"]).unwrap();
        Corpus::new(
            ab,
            rows.iter()
                .enumerate()
                .map(|(i, r)| IntervalSequence::new(format!("q{i}"), r.clone()))
                .collect(),
        )
        .unwrap()
    }

    fn rows() -> Vec<Vec<u16>> {
        vec![
            vec![0, 0, 0, 2, 1, 1, 1, 1, 2, 0, 0, 0],
            vec![0, 0, 2, 1, 1, 1, 3, 2, 0, 0, 0, 0],
            vec![0, 0, 0, 0, 4, 4, 0, 0, 0, 5, 0, 0],
        ]
    }

    #[test]
    fn self_comparison_is_trivial() {
        let c = corpus(&rows());
        let r = build_report(&c, &[("copy".into(), &c)], &ReportOptions::default()).unwrap();
        assert_eq!(r.states, vec!["home", "work", "car", "gym", "shop"]);
        for row in &r.rows {
            let ks = row.methods[0].ks.unwrap();
            assert_eq!((ks.d, ks.p), (0.0, 1.0), "{:?} {}", row.metric, row.state);
            assert_eq!(row.methods[0].mean, row.original.mean);
        }
        let labels: Vec<&str> = r
            .rows
            .iter()
            .filter(|x| x.metric == Metric::IndividualDuration)
            .map(|x| x.state.as_str())
            .collect();
        assert_eq!(labels, vec!["home", "work", "car", "gym", "shop", OVERALL]);
        assert!(r.row(Metric::EpisodeCount, OVERALL).is_some());
        assert!(r.row(Metric::Entropy, OVERALL).is_some());
    }

    #[test]
    fn mismatches_are_rejected() {
        let c = corpus(&rows());
        let short = corpus(&[vec![0; 5]]);
        assert!(build_report(&c, &[("s".into(), &short)], &ReportOptions::default()).is_err());
        let other = Corpus::new(
            StateAlphabet::new(["x"]).unwrap(),
            vec![IntervalSequence::new("a", vec![0; 12])],
        )
        .unwrap();
        assert!(build_report(&c, &[("o".into(), &other)], &ReportOptions::default()).is_err());
        assert!(build_report(&c, &[], &ReportOptions::default()).is_err());
        let opts = ReportOptions {
            states: StateSelection::Labels(vec!["nowhere".into()]),
            ..Default::default()
        };
        assert!(build_report(&c, &[("c".into(), &c)], &opts).is_err());
    }

    #[test]
    fn zero_exclusion_and_ranges() {
        let c = corpus(&rows());
        let opts = ReportOptions {
            states: StateSelection::Labels(vec!["gym".into()]),
            exclude_zero: ZeroExclusion::None,
            ..Default::default()
        };
        let r = build_report(&c, &[("c".into(), &c)], &opts).unwrap();
        assert_eq!(r.row(Metric::CombinedDuration, "gym").unwrap().original.n, 3);
        let opts = ReportOptions {
            exclude_zero: ZeroExclusion::Labels(vec!["gym".into()]),
            duration_ranges: [("home".to_string(), (3, 4))].into_iter().collect(),
            states: StateSelection::Labels(vec!["gym".into(), "home".into()]),
            ..Default::default()
        };
        let r = build_report(&c, &[("c".into(), &c)], &opts).unwrap();
        assert_eq!(r.row(Metric::CombinedDuration, "gym").unwrap().original.n, 1);
        // home episodes: 3,3 | 2,4 | 4,3,2 -> in [3,4]: 3,3,4,4,3.
        assert_eq!(r.row(Metric::IndividualDuration, "home").unwrap().original.n, 5);
    }

    #[test]
    fn outputs_are_written() {
        let c = corpus(&rows());
        let d = corpus(&[rows()[0].clone(), rows()[0].clone()]);
        let r = build_report(&c, &[("a".into(), &d), ("b".into(), &c)], &ReportOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_report(&r, dir.path()).unwrap();
        let table = fs::read_to_string(dir.path().join("table.csv")).unwrap();
        assert!(table.starts_with("metric,state,method,n,mean,sd,ks_d,ks_p\n"));
        assert!(table.contains("\nindividual_duration,Overall,b,"));
        let json: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(json["schema"], REPORT_SCHEMA);
        assert_eq!(json["version"], REPORT_VERSION);
        let curve = fs::read_to_string(dir.path().join("curves/individual_duration__home__a-diff.csv")).unwrap();
        assert!(curve.starts_with("grid,value\n"));
        let text = fs::read_to_string(dir.path().join("report.txt")).unwrap();
        assert!(text.contains("Overall"));
    }

    #[test]
    fn selection_parsing() {
        assert_eq!("top5".parse::<StateSelection>().unwrap(), StateSelection::Top(5));
        assert_eq!("all".parse::<StateSelection>().unwrap(), StateSelection::All);
        assert_eq!(
            "home, work".parse::<StateSelection>().unwrap(),
            StateSelection::Labels(vec!["home".into(), "work".into()])
        );
    }
}
