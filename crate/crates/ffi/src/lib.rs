//! C ABI for `scd-core`.
//!
//! Conventions:
//! - every fallible function returns an [`ScdStatus`]; on failure a message
//!   is available from [`scd_last_error`] on the same thread;
//! - strings are NUL-terminated UTF-8;
//! - opaque handles are created by `*_parse`/`scd_train_toy` and must be
//!   released with the matching `*_free`;
//! - undefined rates are reported as NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use scd_core::io::{parse_nbest, parse_rttm};
use scd_core::{
    align, batch_loss, enumerate_candidates, expected_risk, purity_coverage, risk_gradient,
    score_changes, train, Alignment, AlignmentCosts, Annotation, ChangeHypothesis, ErrorCounts,
    LossBreakdown, NBest, NBestSize, RiskConfig, RiskKind, ScdError, TokenSequence, TrainConfig,
    TrainTrace,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    DataError = 5,
    IndexOutOfRange = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScdRiskKind {
    /// `(alpha * W + beta * FA + gamma * FR) / Q`
    ScdWeighted = 0,
    /// `W + FA + FR`
    WordErrorOnly = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScdRiskConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Speaker-turn insertion/deletion cost in thousandths (k = 1.1 is 1100).
    pub st_cost_milli: u64,
    pub normalize_scores: bool,
    pub risk_kind: ScdRiskKind,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScdErrorCounts {
    pub word_errors: u32,
    pub st_insertions: u32,
    pub st_deletions: u32,
    pub st_correct: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScdLossSummary {
    pub expected_risk: f64,
    pub nll_term: f64,
    pub total: f64,
    pub expected_fa: f64,
    pub expected_fr: f64,
    pub expected_w: f64,
    pub n_hypotheses: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScdPrecisionRecall {
    pub precision: f64,
    pub recall_count: f64,
    pub recall_duration: f64,
    pub f1: f64,
    pub n_predictions_kept: usize,
    pub n_predictions_dropped: usize,
    pub n_correct: usize,
    pub n_fa: usize,
    pub n_intervals: usize,
    pub n_hit: usize,
    pub n_fr: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScdSegmentation {
    pub purity: f64,
    pub coverage: f64,
    pub f1: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScdTrainStep {
    pub step: usize,
    pub loss_total: f64,
    pub expected_risk: f64,
    pub expected_fa: f64,
    pub expected_fr: f64,
    pub expected_w: f64,
    pub argmax_candidate_index: usize,
}

/// Parsed N-best lists.
pub struct ScdNBestBatch {
    items: Vec<NBest>,
}

/// Parsed reference annotations, one per recording.
pub struct ScdAnnotations {
    items: Vec<Annotation>,
}

/// Result of a toy training run.
pub struct ScdTrainTrace {
    trace: TrainTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(ScdStatus, String);

impl From<ScdError> for Failure {
    fn from(e: ScdError) -> Self {
        let status = match e {
            ScdError::Parse { .. } => ScdStatus::ParseError,
            ScdError::InvalidArgument(_) => ScdStatus::InvalidArgument,
            _ => ScdStatus::DataError,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: ScdStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ScdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            ScdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            ScdStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(ScdStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(ScdStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(ScdStatus::NullPointer, format!("{what} is null")))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(ScdStatus::NullPointer, format!("{what} is null")))
}

impl ScdRiskConfig {
    fn to_core(self) -> Result<RiskConfig, Failure> {
        let cfg = RiskConfig {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            costs: AlignmentCosts::new(self.st_cost_milli)?,
            normalize_scores: self.normalize_scores,
            risk_kind: match self.risk_kind {
                ScdRiskKind::ScdWeighted => RiskKind::ScdWeighted,
                ScdRiskKind::WordErrorOnly => RiskKind::WordErrorOnly,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<ErrorCounts> for ScdErrorCounts {
    fn from(c: ErrorCounts) -> Self {
        ScdErrorCounts {
            word_errors: c.word_errors,
            st_insertions: c.st_insertions,
            st_deletions: c.st_deletions,
            st_correct: c.st_correct,
        }
    }
}

impl From<&LossBreakdown> for ScdLossSummary {
    fn from(b: &LossBreakdown) -> Self {
        ScdLossSummary {
            expected_risk: b.expected_risk,
            nll_term: b.nll_term,
            total: b.total,
            expected_fa: b.expected_fa,
            expected_fr: b.expected_fr,
            expected_w: b.expected_w,
            n_hypotheses: b.per_hyp_risk.len(),
        }
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn scd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default risk settings: alpha 1, beta 10, gamma 10, k 1.1, softmax
/// normalization, weighted turn risk.
#[no_mangle]
pub extern "C" fn scd_risk_config_default() -> ScdRiskConfig {
    let d = RiskConfig::default();
    ScdRiskConfig {
        alpha: d.alpha,
        beta: d.beta,
        gamma: d.gamma,
        st_cost_milli: d.costs.st_cost_milli(),
        normalize_scores: d.normalize_scores,
        risk_kind: ScdRiskKind::ScdWeighted,
    }
}

/// Harmonic mean of two rates (0 when both are 0).
#[no_mangle]
pub extern "C" fn scd_f1(a: f64, b: f64) -> f64 {
    scd_core::f1(a, b)
}

/// Aligns two transcripts and reports the error counts and cost.
///
/// # Safety
/// String arguments must be NUL-terminated; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn scd_align(
    reference: *const c_char,
    hypothesis: *const c_char,
    st_cost_milli: u64,
    out_counts: *mut ScdErrorCounts,
    out_cost_milli: *mut u64,
) -> ScdStatus {
    guard(|| {
        let r = TokenSequence::parse(text(reference, "reference")?)?;
        let h = TokenSequence::parse(text(hypothesis, "hypothesis")?)?;
        let costs = AlignmentCosts::new(st_cost_milli)?;
        let counts = out_ref(out_counts, "out_counts")?;
        let cost = out_ref(out_cost_milli, "out_cost_milli")?;
        let Alignment {
            cost_milli,
            counts: c,
            ..
        } = align(&r, &h, costs);
        *counts = c.into();
        *cost = cost_milli;
        Ok(())
    })
}

/// Risk of one hypothesis transcript against a non-empty reference.
///
/// # Safety
/// String arguments must be NUL-terminated; pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn scd_per_hyp_risk(
    reference: *const c_char,
    hypothesis: *const c_char,
    config: *const ScdRiskConfig,
    out_risk: *mut f64,
) -> ScdStatus {
    guard(|| {
        let r = TokenSequence::parse(text(reference, "reference")?)?;
        let h = TokenSequence::parse(text(hypothesis, "hypothesis")?)?;
        let cfg = in_ref(config, "config")?.to_core()?;
        *out_ref(out_risk, "out_risk")? = scd_core::per_hyp_risk(&r, &h, &cfg)?;
        Ok(())
    })
}

/// Parses N-best JSON lines into a new batch handle.
///
/// # Safety
/// `jsonl` must be NUL-terminated; `out_batch` must be valid.
#[no_mangle]
pub unsafe extern "C" fn scd_nbest_batch_parse(
    jsonl: *const c_char,
    out_batch: *mut *mut ScdNBestBatch,
) -> ScdStatus {
    guard(|| {
        let out = out_ref(out_batch, "out_batch")?;
        *out = ptr::null_mut();
        let items = parse_nbest(text(jsonl, "jsonl")?)?;
        *out = Box::into_raw(Box::new(ScdNBestBatch { items }));
        Ok(())
    })
}

/// Number of utterances in the batch (0 for a null handle).
///
/// # Safety
/// `batch` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scd_nbest_batch_len(batch: *const ScdNBestBatch) -> usize {
    batch.as_ref().map_or(0, |b| b.items.len())
}

/// # Safety
/// `batch` must be null or a handle from [`scd_nbest_batch_parse`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn scd_nbest_batch_free(batch: *mut ScdNBestBatch) {
    if !batch.is_null() {
        drop(Box::from_raw(batch));
    }
}

unsafe fn utterance<'a>(batch: *const ScdNBestBatch, index: usize) -> Result<&'a NBest, Failure> {
    let b = in_ref(batch, "batch")?;
    b.items.get(index).ok_or_else(|| {
        fail(
            ScdStatus::IndexOutOfRange,
            format!("utterance {index} out of range ({} in batch)", b.items.len()),
        )
    })
}

/// Expected risk of utterance `index`.
///
/// # Safety
/// `batch` must be a live handle; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn scd_nbest_expected_risk(
    batch: *const ScdNBestBatch,
    index: usize,
    config: *const ScdRiskConfig,
    out: *mut ScdLossSummary,
) -> ScdStatus {
    guard(|| {
        let n = utterance(batch, index)?;
        let cfg = in_ref(config, "config")?.to_core()?;
        *out_ref(out, "out")? = (&expected_risk(n, &cfg)?).into();
        Ok(())
    })
}

/// Gradient of utterance `index`'s expected risk w.r.t. its hypothesis log
/// scores. Writes `*out_len` entries; fails with `BufferTooSmall` (and still
/// sets `*out_len`) when `capacity` is insufficient.
///
/// # Safety
/// `out_gradient` must point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn scd_nbest_risk_gradient(
    batch: *const ScdNBestBatch,
    index: usize,
    config: *const ScdRiskConfig,
    out_gradient: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> ScdStatus {
    guard(|| {
        let n = utterance(batch, index)?;
        let cfg = in_ref(config, "config")?.to_core()?;
        let len = out_ref(out_len, "out_len")?;
        let g = risk_gradient(n, &cfg)?;
        *len = g.len();
        if capacity < g.len() {
            return Err(fail(
                ScdStatus::BufferTooSmall,
                format!("gradient needs {} entries, capacity is {capacity}", g.len()),
            ));
        }
        if out_gradient.is_null() {
            return Err(fail(ScdStatus::NullPointer, "out_gradient is null"));
        }
        std::slice::from_raw_parts_mut(out_gradient, g.len()).copy_from_slice(&g);
        Ok(())
    })
}

/// Batch loss: summed expected risks plus `lambda * nll`.
///
/// # Safety
/// `batch` must be a live handle; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn scd_nbest_batch_loss(
    batch: *const ScdNBestBatch,
    config: *const ScdRiskConfig,
    lambda: f64,
    nll: f64,
    out: *mut ScdLossSummary,
) -> ScdStatus {
    guard(|| {
        let b = in_ref(batch, "batch")?;
        let cfg = in_ref(config, "config")?.to_core()?;
        *out_ref(out, "out")? = (&batch_loss(&b.items, lambda, nll, &cfg)?).into();
        Ok(())
    })
}

/// Parses RTTM text into a new annotation handle.
///
/// # Safety
/// `rttm` must be NUL-terminated; `out_annotations` must be valid.
#[no_mangle]
pub unsafe extern "C" fn scd_annotations_parse_rttm(
    rttm: *const c_char,
    out_annotations: *mut *mut ScdAnnotations,
) -> ScdStatus {
    guard(|| {
        let out = out_ref(out_annotations, "out_annotations")?;
        *out = ptr::null_mut();
        let parsed = parse_rttm(text(rttm, "rttm")?)?;
        *out = Box::into_raw(Box::new(ScdAnnotations {
            items: parsed.annotations,
        }));
        Ok(())
    })
}

/// Number of recordings (0 for a null handle).
///
/// # Safety
/// `annotations` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scd_annotations_len(annotations: *const ScdAnnotations) -> usize {
    annotations.as_ref().map_or(0, |a| a.items.len())
}

/// # Safety
/// `annotations` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn scd_annotations_free(annotations: *mut ScdAnnotations) {
    if !annotations.is_null() {
        drop(Box::from_raw(annotations));
    }
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Scores predicted change times (seconds) for one recording. Either output
/// pointer may be null to skip that report.
///
/// # Safety
/// `timestamps` must point to `n_timestamps` doubles (or be null when
/// `n_timestamps` is 0).
#[no_mangle]
pub unsafe extern "C" fn scd_annotations_score(
    annotations: *const ScdAnnotations,
    recording_id: *const c_char,
    timestamps: *const f64,
    n_timestamps: usize,
    collar: f64,
    out_changes: *mut ScdPrecisionRecall,
    out_segmentation: *mut ScdSegmentation,
) -> ScdStatus {
    guard(|| {
        let anns = in_ref(annotations, "annotations")?;
        let id = text(recording_id, "recording_id")?;
        let ann = anns
            .items
            .iter()
            .find(|a| a.recording_id == id)
            .ok_or_else(|| fail(ScdStatus::DataError, format!("unknown recording `{id}`")))?;
        let times = if n_timestamps == 0 {
            Vec::new()
        } else if timestamps.is_null() {
            return Err(fail(ScdStatus::NullPointer, "timestamps is null"));
        } else {
            std::slice::from_raw_parts(timestamps, n_timestamps).to_vec()
        };
        let hyp = ChangeHypothesis::new(id, times)?;
        if let Some(out) = out_changes.as_mut() {
            let r = score_changes(ann, &hyp, collar)?;
            *out = ScdPrecisionRecall {
                precision: opt(r.precision),
                recall_count: opt(r.recall_count),
                recall_duration: opt(r.recall_duration),
                f1: opt(r.f1),
                n_predictions_kept: r.n_predictions_kept,
                n_predictions_dropped: r.n_predictions_dropped,
                n_correct: r.n_correct,
                n_fa: r.n_fa,
                n_intervals: r.n_intervals,
                n_hit: r.n_hit,
                n_fr: r.n_fr,
            };
        }
        if let Some(out) = out_segmentation.as_mut() {
            let s = purity_coverage(ann, &hyp)?;
            *out = ScdSegmentation {
                purity: s.purity,
                coverage: s.coverage,
                f1: s.f1,
            };
        }
        Ok(())
    })
}

/// Trains the toy model on the candidates within `edit_budget` edits of
/// `reference` over the comma-separated `vocab`. `nbest` 0 means all
/// candidates.
///
/// # Safety
/// String arguments must be NUL-terminated; pointers must be valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn scd_train_toy(
    reference: *const c_char,
    vocab: *const c_char,
    edit_budget: usize,
    steps: usize,
    learning_rate: f64,
    nbest: usize,
    lambda: f64,
    config: *const ScdRiskConfig,
    seed: u64,
    out_trace: *mut *mut ScdTrainTrace,
) -> ScdStatus {
    guard(|| {
        let out = out_ref(out_trace, "out_trace")?;
        *out = ptr::null_mut();
        let reference = TokenSequence::parse(text(reference, "reference")?)?;
        let vocab: Vec<String> = text(vocab, "vocab")?
            .split(',')
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .map(String::from)
            .collect();
        let risk = in_ref(config, "config")?.to_core()?;
        let space = enumerate_candidates("toy", &reference, edit_budget, &vocab, seed)?;
        let cfg = TrainConfig {
            learning_rate,
            steps,
            nbest: if nbest == 0 {
                NBestSize::All
            } else {
                NBestSize::Top(nbest)
            },
            lambda,
            risk,
            seed,
        };
        let trace = train(&space, &cfg)?;
        *out = Box::into_raw(Box::new(ScdTrainTrace { trace }));
        Ok(())
    })
}

/// Number of records (steps + 1) in a trace.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scd_train_trace_len(trace: *const ScdTrainTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.records.len())
}

/// # Safety
/// `trace` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn scd_train_trace_step(
    trace: *const ScdTrainTrace,
    index: usize,
    out: *mut ScdTrainStep,
) -> ScdStatus {
    guard(|| {
        let t = in_ref(trace, "trace")?;
        let r = t.trace.records.get(index).ok_or_else(|| {
            fail(
                ScdStatus::IndexOutOfRange,
                format!("step {index} out of range"),
            )
        })?;
        *out_ref(out, "out")? = ScdTrainStep {
            step: r.step,
            loss_total: r.loss_total,
            expected_risk: r.expected_risk,
            expected_fa: r.expected_fa,
            expected_fr: r.expected_fr,
            expected_w: r.expected_w,
            argmax_candidate_index: r.argmax_candidate_index,
        };
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn scd_train_trace_free(trace: *mut ScdTrainTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
