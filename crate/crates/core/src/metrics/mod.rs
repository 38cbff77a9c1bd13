//! Interval-based speaker-change precision/recall and purity/coverage.
//!
//! Speaker changes are scored against *change intervals*: the part of
//! `[T_min, T_max]` not covered by exactly one speaker. That includes overlap,
//! silence between speakers and zero-length switch points where one speaker
//! ends exactly when the next begins.

mod interval;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdError};

pub use interval::{Interval, IntervalSet};

/// Default matching tolerance around each predicted change, in seconds.
pub const DEFAULT_COLLAR: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerSegment {
    pub speaker: String,
    pub start: f64,
    pub end: f64,
}

impl SpeakerSegment {
    pub fn new(speaker: impl Into<String>, start: f64, end: f64) -> Self {
        SpeakerSegment {
            speaker: speaker.into(),
            start,
            end,
        }
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.start, self.end)
    }
}

/// Reference speaker segments of one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub recording_id: String,
    pub segments: Vec<SpeakerSegment>,
}

impl Annotation {
    pub fn new(recording_id: impl Into<String>, segments: Vec<SpeakerSegment>) -> Result<Self> {
        let ann = Annotation {
            recording_id: recording_id.into(),
            segments,
        };
        ann.validate()?;
        Ok(ann)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(ScdError::Data(format!(
                "recording `{}` has no segments",
                self.recording_id
            )));
        }
        for s in &self.segments {
            if !(s.start.is_finite() && s.end.is_finite() && s.start >= 0.0) {
                return Err(ScdError::Data(format!(
                    "recording `{}`: invalid segment [{}, {}]",
                    self.recording_id, s.start, s.end
                )));
            }
            if s.end <= s.start {
                return Err(ScdError::Data(format!(
                    "recording `{}`: degenerate segment [{}, {}] for speaker `{}`",
                    self.recording_id, s.start, s.end, s.speaker
                )));
            }
        }
        Ok(())
    }

    pub fn t_min(&self) -> f64 {
        self.segments.iter().map(|s| s.start).fold(f64::INFINITY, f64::min)
    }

    pub fn t_max(&self) -> f64 {
        self.segments.iter().map(|s| s.end).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn span(&self) -> Interval {
        Interval::new(self.t_min(), self.t_max())
    }

    /// Time covered by each speaker, with that speaker's own segments unioned.
    pub fn speaker_coverage(&self) -> BTreeMap<&str, IntervalSet> {
        let mut by_speaker: BTreeMap<&str, Vec<Interval>> = BTreeMap::new();
        for s in &self.segments {
            by_speaker.entry(&s.speaker).or_default().push(s.interval());
        }
        by_speaker
            .into_iter()
            .map(|(spk, ivs)| (spk, IntervalSet::from_intervals(ivs)))
            .collect()
    }

    /// Joins consecutive segments of the same speaker separated by at most
    /// `max_gap` seconds.
    pub fn merge_same_speaker_gaps(&self, max_gap: f64) -> Annotation {
        let mut by_speaker: BTreeMap<&str, Vec<&SpeakerSegment>> = BTreeMap::new();
        for s in &self.segments {
            by_speaker.entry(&s.speaker).or_default().push(s);
        }
        let mut segments = Vec::new();
        for (spk, mut segs) in by_speaker {
            segs.sort_by(|a, b| a.start.total_cmp(&b.start));
            let mut cur: Option<SpeakerSegment> = None;
            for s in segs {
                match cur.as_mut() {
                    Some(c) if s.start - c.end <= max_gap => c.end = c.end.max(s.end),
                    _ => {
                        segments.extend(cur.take());
                        cur = Some(SpeakerSegment::new(spk, s.start, s.end));
                    }
                }
            }
            segments.extend(cur);
        }
        segments.sort_by(|a, b| {
            a.start
                .total_cmp(&b.start)
                .then(a.end.total_cmp(&b.end))
                .then(a.speaker.cmp(&b.speaker))
        });
        Annotation {
            recording_id: self.recording_id.clone(),
            segments,
        }
    }
}

/// Predicted speaker-change times for one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeHypothesis {
    pub recording_id: String,
    timestamps: Vec<f64>,
}

impl ChangeHypothesis {
    /// Sorts and de-duplicates the timestamps.
    pub fn new(recording_id: impl Into<String>, mut timestamps: Vec<f64>) -> Result<Self> {
        if let Some(t) = timestamps.iter().find(|t| !t.is_finite()) {
            return Err(ScdError::Data(format!("non-finite timestamp {t}")));
        }
        timestamps.sort_by(f64::total_cmp);
        timestamps.dedup();
        Ok(ChangeHypothesis {
            recording_id: recording_id.into(),
            timestamps,
        })
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }
}

// Coverage at every breakpoint and on every open gap between breakpoints.
struct Sweep {
    points: Vec<(f64, usize)>,
    gaps: Vec<(Interval, usize)>,
}

fn sweep(annotation: &Annotation) -> Sweep {
    let coverage = annotation.speaker_coverage();
    let mut breaks: Vec<f64> = coverage
        .values()
        .flat_map(|set| set.intervals().iter().flat_map(|iv| [iv.start, iv.end]))
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let count_at = |t: f64| coverage.values().filter(|set| set.contains(t)).count();
    let points = breaks.iter().map(|&t| (t, count_at(t))).collect();
    let gaps = breaks
        .windows(2)
        .map(|w| (Interval::new(w[0], w[1]), count_at(0.5 * (w[0] + w[1]))))
        .collect();
    Sweep { points, gaps }
}

/// Mono-speaker time ranges `U`: the closure of the time covered by exactly
/// one speaker.
pub fn mono_speaker_ranges(annotation: &Annotation) -> IntervalSet {
    let s = sweep(annotation);
    IntervalSet::from_intervals(
        s.gaps
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|(iv, _)| iv)
            .collect(),
    )
}

/// Change intervals: `[T_min, T_max]` minus the mono-speaker ranges, keeping
/// zero-length switch points.
pub fn change_intervals(annotation: &Annotation) -> IntervalSet {
    let s = sweep(annotation);
    let gaps = s.gaps.into_iter().filter(|&(_, c)| c != 1).map(|(iv, _)| iv);
    let points = s
        .points
        .into_iter()
        .filter(|&(_, c)| c != 1)
        .map(|(t, _)| Interval::new(t, t));
    IntervalSet::from_intervals(gaps.chain(points).collect())
}

/// Harmonic mean; zero when both inputs are zero.
pub fn f1(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecallReport {
    pub precision: Option<f64>,
    pub recall_count: Option<f64>,
    pub recall_duration: Option<f64>,
    pub f1: Option<f64>,
    pub n_predictions_kept: usize,
    pub n_predictions_dropped: usize,
    pub n_correct: usize,
    pub n_fa: usize,
    pub n_intervals: usize,
    pub n_hit: usize,
    pub n_fr: usize,
    pub hit_duration: f64,
    pub total_duration: f64,
    pub collar: f64,
}

impl PrecisionRecallReport {
    #[allow(clippy::too_many_arguments)]
    fn from_counts(
        n_predictions_kept: usize,
        n_predictions_dropped: usize,
        n_correct: usize,
        n_intervals: usize,
        n_hit: usize,
        hit_duration: f64,
        total_duration: f64,
        collar: f64,
    ) -> Self {
        let precision = ratio(n_correct as f64, n_predictions_kept as f64);
        let recall_count = ratio(n_hit as f64, n_intervals as f64);
        let f1 = match (precision, recall_count) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(f1(p, r)),
            _ => None,
        };
        PrecisionRecallReport {
            precision,
            recall_count,
            recall_duration: ratio(hit_duration, total_duration),
            f1,
            n_predictions_kept,
            n_predictions_dropped,
            n_correct,
            n_fa: n_predictions_kept - n_correct,
            n_intervals,
            n_hit,
            n_fr: n_intervals - n_hit,
            hit_duration,
            total_duration,
            collar,
        }
    }

    /// Pools raw counts and durations across recordings, then recomputes
    /// the rates.
    pub fn pool<'a>(reports: impl IntoIterator<Item = &'a PrecisionRecallReport>) -> Self {
        let mut kept = 0;
        let mut dropped = 0;
        let mut correct = 0;
        let mut intervals = 0;
        let mut hit = 0;
        let mut hit_dur = 0.0;
        let mut total_dur = 0.0;
        let mut collar = DEFAULT_COLLAR;
        for r in reports {
            kept += r.n_predictions_kept;
            dropped += r.n_predictions_dropped;
            correct += r.n_correct;
            intervals += r.n_intervals;
            hit += r.n_hit;
            hit_dur += r.hit_duration;
            total_dur += r.total_duration;
            collar = r.collar;
        }
        Self::from_counts(kept, dropped, correct, intervals, hit, hit_dur, total_dur, collar)
    }

    /// F1 of precision and duration-weighted recall.
    pub fn f1_duration(&self) -> Option<f64> {
        match (self.precision, self.recall_duration) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(f1(p, r)),
            _ => None,
        }
    }
}

fn check_ids(annotation: &Annotation, hypothesis: &ChangeHypothesis) -> Result<()> {
    if annotation.recording_id != hypothesis.recording_id {
        return Err(ScdError::RecordingMismatch {
            annotation: annotation.recording_id.clone(),
            hypothesis: hypothesis.recording_id.clone(),
        });
    }
    Ok(())
}

/// Predictions inside the closed annotation span, and how many were dropped.
fn kept_predictions(annotation: &Annotation, hypothesis: &ChangeHypothesis) -> (Vec<f64>, usize) {
    let span = annotation.span();
    let kept: Vec<f64> = hypothesis
        .timestamps()
        .iter()
        .copied()
        .filter(|&t| span.contains(t))
        .collect();
    let dropped = hypothesis.timestamps().len() - kept.len();
    (kept, dropped)
}

/// Scores predicted change times against the annotation's change intervals.
/// A prediction `t` is correct when `[t - collar, t + collar]` touches a
/// change interval; an interval is hit when any kept prediction matches it.
pub fn score_changes(
    annotation: &Annotation,
    hypothesis: &ChangeHypothesis,
    collar: f64,
) -> Result<PrecisionRecallReport> {
    check_ids(annotation, hypothesis)?;
    annotation.validate()?;
    if !(collar.is_finite() && collar >= 0.0) {
        return Err(ScdError::invalid(format!("collar must be >= 0, got {collar}")));
    }
    let changes = change_intervals(annotation);
    let ivs = changes.intervals();
    let (kept, dropped) = kept_predictions(annotation, hypothesis);

    let mut hit = vec![false; ivs.len()];
    let mut correct = 0;
    for &t in &kept {
        let window = Interval::new(t - collar, t + collar);
        // Intervals are sorted and disjoint: scan those ending at or after
        // the window start until one starts past its end.
        let first = ivs.partition_point(|iv| iv.end < window.start);
        let mut matched = false;
        for (k, iv) in ivs.iter().enumerate().skip(first) {
            if iv.start > window.end {
                break;
            }
            hit[k] = true;
            matched = true;
        }
        correct += matched as usize;
    }
    let hit_duration = ivs
        .iter()
        .zip(&hit)
        .filter(|(_, &h)| h)
        .map(|(iv, _)| iv.duration())
        .sum();
    Ok(PrecisionRecallReport::from_counts(
        kept.len(),
        dropped,
        correct,
        ivs.len(),
        hit.iter().filter(|&&h| h).count(),
        hit_duration,
        changes.measure(),
        collar,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationReport {
    pub purity: f64,
    pub coverage: f64,
    pub f1: f64,
    pub purity_overlap: f64,
    pub purity_total: f64,
    pub coverage_overlap: f64,
    pub coverage_total: f64,
}

impl SegmentationReport {
    fn from_sums(
        purity_overlap: f64,
        purity_total: f64,
        coverage_overlap: f64,
        coverage_total: f64,
    ) -> Self {
        let purity = ratio(purity_overlap, purity_total).unwrap_or(0.0);
        let coverage = ratio(coverage_overlap, coverage_total).unwrap_or(0.0);
        SegmentationReport {
            purity,
            coverage,
            f1: f1(purity, coverage),
            purity_overlap,
            purity_total,
            coverage_overlap,
            coverage_total,
        }
    }

    pub fn pool<'a>(reports: impl IntoIterator<Item = &'a SegmentationReport>) -> Self {
        let (mut po, mut pt, mut co, mut ct) = (0.0, 0.0, 0.0, 0.0);
        for r in reports {
            po += r.purity_overlap;
            pt += r.purity_total;
            co += r.coverage_overlap;
            ct += r.coverage_total;
        }
        Self::from_sums(po, pt, co, ct)
    }
}

/// Reference segments used for purity/coverage: every maximal interval of
/// each speaker's unioned coverage.
pub fn reference_segments(annotation: &Annotation) -> Vec<Interval> {
    annotation
        .speaker_coverage()
        .values()
        .flat_map(|set| set.intervals().iter().copied())
        .collect()
}

/// `[T_min, T_max]` cut at every kept prediction strictly inside it.
pub fn hypothesis_segments(annotation: &Annotation, hypothesis: &ChangeHypothesis) -> Vec<Interval> {
    let span = annotation.span();
    let mut bounds = vec![span.start];
    bounds.extend(
        hypothesis
            .timestamps()
            .iter()
            .copied()
            .filter(|&t| span.start < t && t < span.end),
    );
    bounds.push(span.end);
    bounds.windows(2).map(|w| Interval::new(w[0], w[1])).collect()
}

/// Sum over `items` of the largest overlap each has with any of `against`,
/// together with the total duration of `items`.
pub fn max_overlap_sums(items: &[Interval], against: &[Interval]) -> (f64, f64) {
    let mut sorted = against.to_vec();
    sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
    let mut reach = Vec::with_capacity(sorted.len());
    let mut running = f64::NEG_INFINITY;
    for iv in &sorted {
        running = running.max(iv.end);
        reach.push(running);
    }
    let mut overlap = 0.0;
    let mut total = 0.0;
    for item in items {
        total += item.duration();
        let upper = sorted.partition_point(|iv| iv.start < item.end);
        let mut best: f64 = 0.0;
        for idx in (0..upper).rev() {
            if reach[idx] <= item.start {
                break;
            }
            best = best.max(item.overlap(&sorted[idx]));
        }
        overlap += best;
    }
    (overlap, total)
}

/// Purity and coverage of the segmentation induced by the predictions.
pub fn purity_coverage(
    annotation: &Annotation,
    hypothesis: &ChangeHypothesis,
) -> Result<SegmentationReport> {
    check_ids(annotation, hypothesis)?;
    annotation.validate()?;
    let reference = reference_segments(annotation);
    let hyp = hypothesis_segments(annotation, hypothesis);
    let (co, ct) = max_overlap_sums(&reference, &hyp);
    let (po, pt) = max_overlap_sums(&hyp, &reference);
    Ok(SegmentationReport::from_sums(po, pt, co, ct))
}
