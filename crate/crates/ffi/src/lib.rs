//! C interface to `pairedmc`.
//!
//! Every fallible function returns a [`PmcStatus`]. On failure the message
//! is available from [`pmc_last_error`] on the same thread until the next
//! call that fails. Corpora are opaque [`PmcCorpus`] handles owned by the
//! caller and released with [`pmc_corpus_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pairedmc::clustering::{
    default_min_size, hierarchical_cluster, pairwise_distance, select_clusters, ClusterAssignment, Linkage, Metric,
};
use pairedmc::error::Error;
use pairedmc::eval::{ks_two_sample, sequence_entropy};
use pairedmc::seqcore::{load_corpus, save_corpus, Corpus, CorpusFormat, LoadOptions};
use pairedmc::synth::{synthesize_batch, BatchRequest, BufferStrategy, Engine, SynthesisConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmcStatus {
    Ok = 0,
    /// A required pointer was null.
    NullArgument = 1,
    /// An argument was out of range, not UTF-8, or a buffer was too small.
    InvalidArgument = 2,
    Config = 3,
    Parse = 4,
    Io = 5,
    Data = 6,
    /// Generation stalled or ran out of candidates.
    Generation = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmcFormat {
    /// `id,s1,...,sN`
    Interval = 0,
    /// `id,state,duration`
    Episode = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmcEngine {
    PairedMc = 0,
    Tvmc = 1,
}

/// Synthesis settings. Start from [`pmc_synth_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PmcSynthOptions {
    pub engine: PmcEngine,
    /// Candidate window half-width, in intervals.
    pub delta: u32,
    /// Context order, 1 to 3.
    pub order: u32,
    pub seed: u64,
    /// Sequences to generate; 0 means one per source sequence.
    pub count: usize,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    /// Extend the source with a chain-generated buffer before synthesis.
    pub buffer: bool,
    /// Take a chain step instead of failing when no candidate exists.
    pub tvmc_fallback: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PmcKsResult {
    pub d: f64,
    pub p: f64,
}

/// Opaque corpus handle.
pub struct PmcCorpus {
    corpus: Corpus,
    labels: Vec<CString>,
    ids: Vec<CString>,
}

impl PmcCorpus {
    fn new(corpus: Corpus) -> Box<Self> {
        let cstr = |s: &str| CString::new(s).unwrap_or_else(|_| CString::new(s.replace('\0', "")).unwrap());
        let labels = corpus.alphabet().labels().iter().map(|l| cstr(l)).collect();
        let ids = corpus.sequences().iter().map(|s| cstr(&s.id)).collect();
        Box::new(PmcCorpus { corpus, labels, ids })
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> PmcStatus {
    match err {
        Error::Config(_) => PmcStatus::Config,
        Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => PmcStatus::Parse,
        Error::Io(_) => PmcStatus::Io,
        Error::Stall { .. } | Error::NoCandidates | Error::Generation { .. } => PmcStatus::Generation,
        _ => PmcStatus::Data,
    }
}

struct Failure(PmcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PmcStatus::NullArgument, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(PmcStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PmcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PmcStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn corpus_arg<'a>(p: *const PmcCorpus) -> Result<&'a PmcCorpus, Failure> {
    p.as_ref().ok_or_else(|| null("corpus"))
}

fn format_of(f: PmcFormat) -> CorpusFormat {
    match f {
        PmcFormat::Interval => CorpusFormat::Interval,
        PmcFormat::Episode => CorpusFormat::Episode,
    }
}

/// Message for the most recent failure on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pmc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads a corpus file. The alphabet is the labels in order of first
/// appearance.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pmc_corpus_load(
    path: *const c_char,
    format: PmcFormat,
    out: *mut *mut PmcCorpus,
) -> PmcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let corpus = load_corpus(path, format_of(format), &LoadOptions::default())?;
        *out = Box::into_raw(PmcCorpus::new(corpus));
        Ok(())
    })
}

/// # Safety
/// `corpus` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pmc_corpus_save(
    corpus: *const PmcCorpus,
    path: *const c_char,
    format: PmcFormat,
) -> PmcStatus {
    guard(|| {
        let c = corpus_arg(corpus)?;
        let path = str_arg(path, "path")?;
        save_corpus(&c.corpus, path, format_of(format))?;
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `corpus` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pmc_corpus_free(corpus: *mut PmcCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Number of sequences; 0 for null.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pmc_corpus_len(corpus: *const PmcCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.corpus.len())
}

/// Intervals per sequence; 0 for null.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pmc_corpus_sequence_length(corpus: *const PmcCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.corpus.sequence_length())
}

/// Alphabet size; 0 for null.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pmc_corpus_state_count(corpus: *const PmcCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.labels.len())
}

/// Label of state `state`, or null when out of range. Owned by the handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pmc_corpus_state_label(corpus: *const PmcCorpus, state: usize) -> *const c_char {
    corpus
        .as_ref()
        .and_then(|c| c.labels.get(state))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Id of sequence `index`, or null when out of range. Owned by the handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pmc_corpus_sequence_id(corpus: *const PmcCorpus, index: usize) -> *const c_char {
    corpus
        .as_ref()
        .and_then(|c| c.ids.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Copies the state ids of sequence `index` into `buf`, which must hold at
/// least `pmc_corpus_sequence_length` entries.
///
/// # Safety
/// `corpus` must be a live handle and `buf` valid for `buf_len` writes.
#[no_mangle]
pub unsafe extern "C" fn pmc_corpus_states(
    corpus: *const PmcCorpus,
    index: usize,
    buf: *mut u16,
    buf_len: usize,
) -> PmcStatus {
    guard(|| {
        let c = corpus_arg(corpus)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let seq = c
            .corpus
            .sequences()
            .get(index)
            .ok_or_else(|| invalid(format!("sequence index {index} out of range")))?;
        if buf_len < seq.states.len() {
            return Err(invalid(format!(
                "buffer holds {buf_len} states, need {}",
                seq.states.len()
            )));
        }
        ptr::copy_nonoverlapping(seq.states.as_ptr(), buf, seq.states.len());
        Ok(())
    })
}

/// Hierarchical clustering (Hamming distance, complete linkage) with the
/// cut chosen by Dunn index over `k_min..=k_max`. Clusters smaller than
/// `min_size` are grouped together; 0 uses 5% of the corpus. Writes one
/// label per sequence to `labels` and the final cluster count to `k_out`.
///
/// # Safety
/// `corpus` must be a live handle, `labels` valid for `labels_len` writes
/// and `k_out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn pmc_cluster(
    corpus: *const PmcCorpus,
    k_min: usize,
    k_max: usize,
    min_size: usize,
    labels: *mut usize,
    labels_len: usize,
    k_out: *mut usize,
) -> PmcStatus {
    guard(|| {
        let c = &corpus_arg(corpus)?.corpus;
        if labels.is_null() {
            return Err(null("labels"));
        }
        if labels_len < c.len() {
            return Err(invalid(format!("label buffer holds {labels_len}, need {}", c.len())));
        }
        let d = pairwise_distance(c, Metric::Hamming)?;
        let dend = hierarchical_cluster(&d, Linkage::Complete)?;
        let min_size = if min_size == 0 {
            default_min_size(c.len())
        } else {
            min_size
        };
        let sel = select_clusters(&dend, &d, k_min..=k_max, min_size)?;
        ptr::copy_nonoverlapping(sel.assignment.labels().as_ptr(), labels, c.len());
        if !k_out.is_null() {
            *k_out = sel.assignment.k();
        }
        Ok(())
    })
}

/// Defaults: paired-MC, delta 60, order 1, seed 0, buffered, with fallback.
#[no_mangle]
pub extern "C" fn pmc_synth_options_default() -> PmcSynthOptions {
    let d = SynthesisConfig::default();
    PmcSynthOptions {
        engine: PmcEngine::PairedMc,
        delta: d.delta,
        order: d.order as u32,
        seed: d.seed,
        count: 0,
        workers: 0,
        buffer: d.buffer == BufferStrategy::Tvmc,
        tvmc_fallback: d.tvmc_fallback,
    }
}

/// Generates a synthetic corpus. With `cluster_labels` non-null (one label
/// per sequence, `labels_len` entries) each output draws a cluster in
/// proportion to its size and synthesizes from that cluster only.
///
/// # Safety
/// `corpus` must be a live handle, `options` and `out` valid pointers and
/// `cluster_labels` null or valid for `labels_len` reads.
#[no_mangle]
pub unsafe extern "C" fn pmc_synthesize(
    corpus: *const PmcCorpus,
    options: *const PmcSynthOptions,
    cluster_labels: *const usize,
    labels_len: usize,
    out: *mut *mut PmcCorpus,
) -> PmcStatus {
    guard(|| {
        let c = &corpus_arg(corpus)?.corpus;
        let o = *options.as_ref().ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let assignment = if cluster_labels.is_null() {
            None
        } else {
            if labels_len != c.len() {
                return Err(invalid(format!(
                    "{labels_len} cluster labels for {} sequences",
                    c.len()
                )));
            }
            let raw = std::slice::from_raw_parts(cluster_labels, labels_len);
            Some(ClusterAssignment::from_raw(raw))
        };
        let config = SynthesisConfig {
            delta: o.delta,
            order: o.order as usize,
            seed: o.seed,
            buffer: if o.buffer {
                BufferStrategy::Tvmc
            } else {
                BufferStrategy::None
            },
            tvmc_fallback: o.tvmc_fallback,
            ..SynthesisConfig::default()
        };
        let req = BatchRequest {
            engine: match o.engine {
                PmcEngine::PairedMc => Engine::PairedMc,
                PmcEngine::Tvmc => Engine::Tvmc,
            },
            count: if o.count == 0 { c.len() } else { o.count },
            assignment: assignment.as_ref(),
            weights: None,
            workers: o.workers,
        };
        let result = synthesize_batch(c, &config, &req)?;
        *out = Box::into_raw(PmcCorpus::new(result.corpus));
        Ok(())
    })
}

/// Two-sample Kolmogorov-Smirnov test.
///
/// # Safety
/// `x` and `y` must be valid for `nx` and `ny` reads; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pmc_ks_two_sample(
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    out: *mut PmcKsResult,
) -> PmcStatus {
    guard(|| {
        if x.is_null() || y.is_null() || out.is_null() {
            return Err(null("x, y or out"));
        }
        let r = ks_two_sample(std::slice::from_raw_parts(x, nx), std::slice::from_raw_parts(y, ny))?;
        *out = PmcKsResult { d: r.d, p: r.p };
        Ok(())
    })
}

/// Shannon entropy (natural log) of the state distribution of sequence `index`.
///
/// # Safety
/// `corpus` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pmc_sequence_entropy(corpus: *const PmcCorpus, index: usize, out: *mut f64) -> PmcStatus {
    guard(|| {
        let c = corpus_arg(corpus)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let seq = c
            .corpus
            .sequences()
            .get(index)
            .ok_or_else(|| invalid(format!("sequence index {index} out of range")))?;
        *out = sequence_entropy(seq);
        Ok(())
    })
}
