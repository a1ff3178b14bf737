//! CSV readers and writers for corpora, continuous series, and cluster
//! assignments. Writers emit UTF-8 with LF line endings and a fixed column
//! order so that saving a canonical file reproduces it byte for byte.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{rle_decode, rle_encode, ContinuousSeries, Corpus, EpisodeSequence, IntervalSequence, StateAlphabet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// `id,s1,...,sN`, one row per sequence.
    Interval,
    /// `id,state,duration`, rows grouped by id.
    Episode,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(CorpusFormat::Interval),
            "episode" => Ok(CorpusFormat::Episode),
            other => Err(Error::config(format!("unknown corpus format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Fixed alphabet. When absent the alphabet is the set of labels observed,
    /// in order of first appearance.
    pub alphabet: Option<StateAlphabet>,
    /// Allow labels outside a supplied alphabet (they are appended).
    pub extend_alphabet: bool,
    pub interval_minutes: u32,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            alphabet: None,
            extend_alphabet: false,
            interval_minutes: 1,
        }
    }
}

struct Source<'a> {
    path: &'a Path,
}

impl Source<'_> {
    fn err(&self, line: u64, column: Option<usize>, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            column,
            message: message.into(),
        }
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input)
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

struct LabelResolver {
    alphabet: StateAlphabet,
    fixed: bool,
}

impl LabelResolver {
    fn new(opts: &LoadOptions) -> Self {
        match &opts.alphabet {
            Some(ab) => LabelResolver {
                alphabet: ab.clone(),
                fixed: !opts.extend_alphabet,
            },
            None => LabelResolver {
                alphabet: StateAlphabet::empty(),
                fixed: false,
            },
        }
    }

    fn resolve(&mut self, label: &str) -> Result<u16> {
        if let Some(id) = self.alphabet.index_of(label) {
            return Ok(id);
        }
        if self.fixed {
            return Err(Error::UnknownState(label.to_string()));
        }
        self.alphabet.intern(label)
    }
}

pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat, opts: &LoadOptions) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        column: None,
        message: e.to_string(),
    })?;
    read_corpus(file, format, opts, path)
}

pub(crate) fn read_corpus<R: Read>(input: R, format: CorpusFormat, opts: &LoadOptions, path: &Path) -> Result<Corpus> {
    let src = Source { path };
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| src.err(1, None, e.to_string()))?.clone();
    let mut resolver = LabelResolver::new(opts);
    let mut sequences = match format {
        CorpusFormat::Interval => read_interval_rows(&mut rdr, &header, &mut resolver, &src)?,
        CorpusFormat::Episode => read_episode_rows(&mut rdr, &header, &mut resolver, &src)?,
    };
    for seq in &mut sequences {
        seq.interval_minutes = opts.interval_minutes;
    }
    if resolver.alphabet.is_empty() {
        return Err(src.err(1, None, "corpus contains no sequences"));
    }
    Corpus::new(resolver.alphabet, sequences)
}

fn read_interval_rows<R: Read>(
    rdr: &mut csv::Reader<R>,
    header: &csv::StringRecord,
    resolver: &mut LabelResolver,
    src: &Source<'_>,
) -> Result<Vec<IntervalSequence>> {
    if header.get(0) != Some("id") || header.len() < 2 {
        return Err(src.err(1, Some(1), "expected header id,s1,...,sN"));
    }
    let mut seen = HashSet::new();
    let mut sequences = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| src.err(0, None, e.to_string()))?;
        let line = line_of(&record);
        if record.len() != header.len() {
            return Err(src.err(
                line,
                None,
                format!("ragged row: {} cells, expected {}", record.len(), header.len()),
            ));
        }
        let id = record[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(src.err(line, Some(1), format!("duplicate id {id:?}")));
        }
        let states = record
            .iter()
            .enumerate()
            .skip(1)
            .map(|(col, cell)| {
                resolver
                    .resolve(cell)
                    .map_err(|e| src.err(line, Some(col + 1), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        sequences.push(IntervalSequence::new(id, states));
    }
    Ok(sequences)
}

fn read_episode_rows<R: Read>(
    rdr: &mut csv::Reader<R>,
    header: &csv::StringRecord,
    resolver: &mut LabelResolver,
    src: &Source<'_>,
) -> Result<Vec<IntervalSequence>> {
    if header.iter().collect::<Vec<_>>() != ["id", "state", "duration"] {
        return Err(src.err(1, Some(1), "expected header id,state,duration"));
    }
    let mut finished = HashSet::new();
    let mut groups: Vec<(String, Vec<(u16, u32)>)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| src.err(0, None, e.to_string()))?;
        let line = line_of(&record);
        if record.len() != 3 {
            return Err(src.err(line, None, format!("ragged row: {} cells, expected 3", record.len())));
        }
        let id = &record[0];
        let state = resolver
            .resolve(&record[1])
            .map_err(|e| src.err(line, Some(2), e.to_string()))?;
        let duration: u32 = record[2]
            .trim()
            .parse()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| src.err(line, Some(3), format!("invalid duration {:?}", &record[2])))?;
        match groups.last_mut() {
            Some((current, runs)) if current == id => runs.push((state, duration)),
            _ => {
                if let Some((prev, _)) = groups.last() {
                    finished.insert(prev.clone());
                }
                if finished.contains(id) {
                    return Err(src.err(line, Some(1), format!("duplicate id {id:?} (rows not grouped)")));
                }
                groups.push((id.to_string(), vec![(state, duration)]));
            }
        }
    }
    let mut sequences = Vec::with_capacity(groups.len());
    let mut expected: Option<u32> = None;
    for (id, runs) in groups {
        let eseq = EpisodeSequence::from_runs(runs)?;
        match expected {
            None => expected = Some(eseq.total_length),
            Some(n) if n != eseq.total_length => {
                return Err(Error::data(format!(
                    "sequence {id:?} has total duration {}, expected {n}",
                    eseq.total_length
                )))
            }
            _ => {}
        }
        sequences.push(rle_decode(&eseq, id));
    }
    Ok(sequences)
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>, format: CorpusFormat) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_corpus(corpus, &mut out, format)?;
    out.flush()?;
    Ok(())
}

pub fn write_corpus<W: Write>(corpus: &Corpus, out: W, format: CorpusFormat) -> Result<()> {
    let mut w = writer(out);
    let ab = corpus.alphabet();
    match format {
        CorpusFormat::Interval => {
            let n = corpus.sequence_length();
            let mut header = Vec::with_capacity(n + 1);
            header.push("id".to_string());
            header.extend((1..=n).map(|i| format!("s{i}")));
            w.write_record(&header)?;
            for seq in corpus.sequences() {
                w.write_field(&seq.id)?;
                for &s in &seq.states {
                    w.write_field(ab.label(s))?;
                }
                w.write_record(None::<&[u8]>)?;
            }
        }
        CorpusFormat::Episode => {
            w.write_record(["id", "state", "duration"])?;
            for seq in corpus.sequences() {
                for ep in rle_encode(seq).episodes {
                    w.write_record([seq.id.as_str(), ab.label(ep.state), &ep.duration.to_string()])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan")
}

/// Reads a continuous CSV (`id,v1,...,vN`). Rows with missing cells are an
/// error unless `drop_missing` is set, in which case they are skipped.
pub fn load_continuous(path: impl AsRef<Path>, drop_missing: bool) -> Result<Vec<ContinuousSeries>> {
    let path = path.as_ref();
    let src = Source { path };
    let file = File::open(path).map_err(|e| src.err(0, None, e.to_string()))?;
    let mut rdr = reader(file);
    let header = rdr.headers().map_err(|e| src.err(1, None, e.to_string()))?.clone();
    if header.get(0) != Some("id") || header.len() < 2 {
        return Err(src.err(1, Some(1), "expected header id,v1,...,vN"));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    'rows: for record in rdr.records() {
        let record = record.map_err(|e| src.err(0, None, e.to_string()))?;
        let line = line_of(&record);
        if record.len() != header.len() {
            return Err(src.err(
                line,
                None,
                format!("ragged row: {} cells, expected {}", record.len(), header.len()),
            ));
        }
        let id = record[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(src.err(line, Some(1), format!("duplicate id {id:?}")));
        }
        let mut values = Vec::with_capacity(record.len() - 1);
        for (col, cell) in record.iter().enumerate().skip(1) {
            if is_missing(cell) {
                if drop_missing {
                    log::warn!("dropping series {id:?}: missing value at column {}", col + 1);
                    continue 'rows;
                }
                return Err(src.err(line, Some(col + 1), "missing value"));
            }
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| src.err(line, Some(col + 1), format!("not a number: {cell:?}")))?;
            if !v.is_finite() || v < 0.0 {
                return Err(src.err(line, Some(col + 1), format!("value must be non-negative: {v}")));
            }
            values.push(v);
        }
        out.push(ContinuousSeries { id, values });
    }
    Ok(out)
}

/// Reads an `id,cluster` assignment file.
pub fn load_assignment_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, usize>> {
    let path = path.as_ref();
    let src = Source { path };
    let file = File::open(path).map_err(|e| src.err(0, None, e.to_string()))?;
    let mut rdr = reader(file);
    let header = rdr.headers().map_err(|e| src.err(1, None, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "cluster"] {
        return Err(src.err(1, Some(1), "expected header id,cluster"));
    }
    let mut labels = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| src.err(0, None, e.to_string()))?;
        let line = line_of(&record);
        if record.len() != 2 {
            return Err(src.err(line, None, "ragged row"));
        }
        let cluster: usize = record[1]
            .trim()
            .parse()
            .map_err(|_| src.err(line, Some(2), format!("invalid cluster {:?}", &record[1])))?;
        if labels.insert(record[0].to_string(), cluster).is_some() {
            return Err(src.err(line, Some(1), format!("duplicate id {:?}", &record[0])));
        }
    }
    Ok(labels)
}

pub fn save_assignment_csv(path: impl AsRef<Path>, ids: &[&str], labels: &[usize]) -> Result<()> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let mut w = writer(BufWriter::new(File::create(&path)?));
    w.write_record(["id", "cluster"])?;
    for (id, label) in ids.iter().zip(labels) {
        w.write_record([*id, &label.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, format: CorpusFormat, opts: &LoadOptions) -> Result<Corpus> {
        read_corpus(text.as_bytes(), format, opts, Path::new("test.csv"))
    }

    fn render(corpus: &Corpus, format: CorpusFormat) -> String {
        let mut buf = Vec::new();
        write_corpus(corpus, &mut buf, format).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn interval_csv_two_rows() {
        let text = "id,s1,s2,s3\na,home,home,work\nb,work,work,home\n";
        let c = parse(text, CorpusFormat::Interval, &LoadOptions::default()).unwrap();
        assert_eq!(c.alphabet().labels(), ["home", "work"]);
        assert_eq!(c.len(), 2);
        assert_eq!(render(&c, CorpusFormat::Interval), text);
    }

    #[test]
    fn episode_csv_expands_to_day() {
        let text = "id,state,duration\nd1,home,420\nd1,car,30\nd1,work,510\nd1,home,480\n";
        let c = parse(text, CorpusFormat::Episode, &LoadOptions::default()).unwrap();
        assert_eq!(c.sequence_length(), 1440);
        assert_eq!(c.alphabet().len(), 3);
        assert_eq!(render(&c, CorpusFormat::Episode), text);
    }

    #[test]
    fn ragged_rows_report_location() {
        let text = "id,s1,s2\na,x,y\nb,x\n";
        let err = parse(text, CorpusFormat::Interval, &LoadOptions::default()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_label_with_fixed_alphabet() {
        let text = "id,s1\na,x\nb,z\n";
        let mut opts = LoadOptions {
            alphabet: Some(StateAlphabet::new(["x", "y"]).unwrap()),
            ..Default::default()
        };
        let err = parse(text, CorpusFormat::Interval, &opts).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Parse {
                    line: 3,
                    column: Some(2),
                    ..
                }
            ),
            "{err}"
        );
        opts.extend_alphabet = true;
        let c = parse(text, CorpusFormat::Interval, &opts).unwrap();
        assert_eq!(c.alphabet().labels(), ["x", "y", "z"]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = "id,s1\na,x\na,y\n";
        assert!(parse(text, CorpusFormat::Interval, &LoadOptions::default()).is_err());
        let text = "id,state,duration\na,x,1\nb,x,1\na,y,1\n";
        assert!(parse(text, CorpusFormat::Episode, &LoadOptions::default()).is_err());
    }

    #[test]
    fn episode_lengths_must_agree() {
        let text = "id,state,duration\na,x,2\nb,x,3\n";
        assert!(parse(text, CorpusFormat::Episode, &LoadOptions::default()).is_err());
        let text = "id,state,duration\na,x,0\n";
        assert!(parse(text, CorpusFormat::Episode, &LoadOptions::default()).is_err());
    }

    #[test]
    fn labels_are_case_sensitive() {
        let text = "id,s1,s2\na,Home,home\n";
        let c = parse(text, CorpusFormat::Interval, &LoadOptions::default()).unwrap();
        assert_eq!(c.alphabet().len(), 2);
    }

    #[test]
    fn continuous_missing_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        std::fs::write(&p, "id,v1,v2\na,0,12.5\nb,NA,3\n").unwrap();
        let err = load_continuous(&p, false).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Parse {
                    line: 3,
                    column: Some(2),
                    ..
                }
            ),
            "{err}"
        );
        let rows = load_continuous(&p, true).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].values, vec![0.0, 12.5]);
        std::fs::write(&p, "id,v1\na,-2\n").unwrap();
        assert!(load_continuous(&p, false).is_err());
    }

    #[test]
    fn assignment_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        save_assignment_csv(&p, &["x", "y"], &[1, 0]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "id,cluster\nx,1\ny,0\n");
        let m = load_assignment_csv(&p).unwrap();
        assert_eq!(m["x"], 1);
        assert_eq!(m["y"], 0);
    }
}
