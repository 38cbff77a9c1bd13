//! Token-level speaker change detection: a constrained edit-distance
//! alignment that scores speaker-turn insertions and deletions separately
//! from word errors, the expected-risk training loss built on it, a toy
//! optimizer that exercises that loss, and interval-based evaluation
//! metrics for predicted speaker changes.

pub mod align;
pub mod cli;
pub mod error;
pub mod io;
pub mod metrics;
pub mod risk;
pub mod token;
pub mod toy;

pub use align::{align, brute_force_align, Alignment, AlignmentCosts, EditKind, EditOp, ErrorCounts};
pub use error::{Result, ScdError};
pub use metrics::{
    change_intervals, f1, mono_speaker_ranges, purity_coverage, score_changes, Annotation,
    ChangeHypothesis, IntervalSet, PrecisionRecallReport, SegmentationReport, SpeakerSegment,
};
pub use risk::{
    batch_loss, expected_risk, per_hyp_risk, risk_gradient, LossBreakdown, NBest, RiskConfig,
    RiskKind, ScoredHypothesis,
};
pub use token::{Token, TokenSequence};
pub use toy::{enumerate_candidates, train, HypothesisSpace, NBestSize, TrainConfig, TrainTrace};
