//! Constrained minimum-edit-distance alignment between a reference and a
//! hypothesis token sequence.
//!
//! Substitutions are only legal between two different words; a speaker-turn
//! token can only be matched, deleted or inserted. Deleting or inserting a
//! speaker turn costs `k`, every other edit costs 1. All costs are integers in
//! thousandths so the dynamic program has no floating-point ties.
//!
//! Among alignments of equal cost the one with the fewest speaker-turn errors
//! (FA + FR) wins; remaining ties are broken by the fixed step order
//! Match > Delete > Insert > WordSub while tracing back from the end.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdError};
use crate::token::Token;

/// Cost of a word insertion, deletion or substitution, in milli-units.
pub const WORD_COST_MILLI: u64 = 1000;

/// Longest sequence accepted by [`brute_force_align`].
pub const BRUTE_FORCE_MAX_LEN: usize = 8;

/// Edit costs. Only the speaker-turn insertion/deletion cost is tunable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlignmentCosts {
    st_cost_milli: u64,
}

impl AlignmentCosts {
    pub fn new(st_cost_milli: u64) -> Result<Self> {
        if st_cost_milli < 1000 {
            return Err(ScdError::invalid(format!(
                "speaker-turn cost must be >= 1000 milli (k >= 1), got {st_cost_milli}"
            )));
        }
        Ok(AlignmentCosts { st_cost_milli })
    }

    /// Converts a decimal `k` with at most three fractional digits.
    pub fn from_k(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(ScdError::invalid(format!("k must be finite, got {k}")));
        }
        let scaled = k * 1000.0;
        let milli = scaled.round();
        if (scaled - milli).abs() > 1e-6 * milli.abs().max(1.0) {
            return Err(ScdError::invalid(format!(
                "k = {k} has more than three decimal places"
            )));
        }
        if milli < 1000.0 {
            return Err(ScdError::invalid(format!("k must be >= 1, got {k}")));
        }
        Self::new(milli as u64)
    }

    pub fn st_cost_milli(&self) -> u64 {
        self.st_cost_milli
    }

    pub fn word_ins_del_cost_milli(&self) -> u64 {
        WORD_COST_MILLI
    }

    pub fn word_sub_cost_milli(&self) -> u64 {
        WORD_COST_MILLI
    }

    pub fn k(&self) -> f64 {
        self.st_cost_milli as f64 / 1000.0
    }

    fn ins_del(&self, token: &Token) -> u64 {
        if token.is_speaker_turn() {
            self.st_cost_milli
        } else {
            WORD_COST_MILLI
        }
    }

    /// `None` for a forbidden substitution.
    fn sub(&self, r: &Token, h: &Token) -> Option<u64> {
        match (r, h) {
            _ if r == h => Some(0),
            (Token::Word(_), Token::Word(_)) => Some(WORD_COST_MILLI),
            _ => None,
        }
    }
}

impl Default for AlignmentCosts {
    fn default() -> Self {
        AlignmentCosts { st_cost_milli: 1100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Match,
    WordSub,
    Insert,
    Delete,
}

/// One step of an alignment trace. Indices point into the reference and
/// hypothesis sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditOp {
    pub kind: EditKind,
    pub ref_index: Option<usize>,
    pub hyp_index: Option<usize>,
}

impl EditOp {
    fn pair(kind: EditKind, r: usize, h: usize) -> Self {
        EditOp {
            kind,
            ref_index: Some(r),
            hyp_index: Some(h),
        }
    }

    fn delete(r: usize) -> Self {
        EditOp {
            kind: EditKind::Delete,
            ref_index: Some(r),
            hyp_index: None,
        }
    }

    fn insert(h: usize) -> Self {
        EditOp {
            kind: EditKind::Insert,
            ref_index: None,
            hyp_index: Some(h),
        }
    }
}

/// Token-level error counts of one alignment.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct ErrorCounts {
    /// Word substitutions + insertions + deletions.
    pub word_errors: u32,
    /// Inserted speaker turns (false accepts).
    pub st_insertions: u32,
    /// Deleted speaker turns (false rejects).
    pub st_deletions: u32,
    pub st_correct: u32,
}

impl ErrorCounts {
    pub fn st_errors(&self) -> u32 {
        self.st_insertions + self.st_deletions
    }

    pub fn total_errors(&self) -> u32 {
        self.word_errors + self.st_insertions + self.st_deletions
    }

    /// Recounts errors from an op trace.
    pub fn from_ops(ops: &[EditOp], reference: &[Token], hypothesis: &[Token]) -> Self {
        let mut c = ErrorCounts::default();
        for op in ops {
            match op.kind {
                EditKind::Match => {
                    if reference[op.ref_index.unwrap()].is_speaker_turn() {
                        c.st_correct += 1;
                    }
                }
                EditKind::WordSub => c.word_errors += 1,
                EditKind::Delete => {
                    if reference[op.ref_index.unwrap()].is_speaker_turn() {
                        c.st_deletions += 1;
                    } else {
                        c.word_errors += 1;
                    }
                }
                EditKind::Insert => {
                    if hypothesis[op.hyp_index.unwrap()].is_speaker_turn() {
                        c.st_insertions += 1;
                    } else {
                        c.word_errors += 1;
                    }
                }
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub ops: Vec<EditOp>,
    pub cost_milli: u64,
    pub counts: ErrorCounts,
}

impl Alignment {
    /// Sums per-op costs. Returns `None` if the trace contains an illegal
    /// substitution.
    pub fn trace_cost(
        ops: &[EditOp],
        reference: &[Token],
        hypothesis: &[Token],
        costs: AlignmentCosts,
    ) -> Option<u64> {
        ops.iter().try_fold(0u64, |acc, op| {
            let step = match op.kind {
                EditKind::Match | EditKind::WordSub => {
                    costs.sub(&reference[op.ref_index?], &hypothesis[op.hyp_index?])?
                }
                EditKind::Delete => costs.ins_del(&reference[op.ref_index?]),
                EditKind::Insert => costs.ins_del(&hypothesis[op.hyp_index?]),
            };
            Some(acc + step)
        })
    }
}

// Backpointer for a DP cell.
#[derive(Clone, Copy)]
enum Step {
    Origin,
    Match,
    Delete,
    Insert,
    WordSub,
}

/// Aligns `reference` against `hypothesis` under `costs`.
pub fn align(reference: &[Token], hypothesis: &[Token], costs: AlignmentCosts) -> Alignment {
    let rows = reference.len() + 1;
    let cols = hypothesis.len() + 1;
    // (cost_milli, st_errors), minimized lexicographically.
    let mut score = vec![(0u64, 0u32); rows * cols];
    let mut back = vec![Step::Origin; rows * cols];
    let at = |i: usize, j: usize| i * cols + j;

    for i in 0..rows {
        for j in 0..cols {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best: Option<((u64, u32), Step)> = None;
            let mut offer = |key: (u64, u32), step: Step| {
                if best.is_none_or(|(b, _)| key < b) {
                    best = Some((key, step));
                }
            };
            // Offered in tie-break order; only a strictly better key replaces.
            if i > 0 && j > 0 && reference[i - 1] == hypothesis[j - 1] {
                offer(score[at(i - 1, j - 1)], Step::Match);
            }
            if i > 0 {
                let (c, s) = score[at(i - 1, j)];
                let r = &reference[i - 1];
                offer(
                    (c + costs.ins_del(r), s + r.is_speaker_turn() as u32),
                    Step::Delete,
                );
            }
            if j > 0 {
                let (c, s) = score[at(i, j - 1)];
                let h = &hypothesis[j - 1];
                offer(
                    (c + costs.ins_del(h), s + h.is_speaker_turn() as u32),
                    Step::Insert,
                );
            }
            if i > 0 && j > 0 && reference[i - 1] != hypothesis[j - 1] {
                if let Some(sub) = costs.sub(&reference[i - 1], &hypothesis[j - 1]) {
                    let (c, s) = score[at(i - 1, j - 1)];
                    offer((c + sub, s), Step::WordSub);
                }
            }
            let (key, step) = best.expect("delete or insert is always available");
            score[at(i, j)] = key;
            back[at(i, j)] = step;
        }
    }

    let mut ops = Vec::with_capacity(rows.max(cols));
    let (mut i, mut j) = (reference.len(), hypothesis.len());
    loop {
        match back[at(i, j)] {
            Step::Origin => break,
            Step::Match => {
                i -= 1;
                j -= 1;
                ops.push(EditOp::pair(EditKind::Match, i, j));
            }
            Step::WordSub => {
                i -= 1;
                j -= 1;
                ops.push(EditOp::pair(EditKind::WordSub, i, j));
            }
            Step::Delete => {
                i -= 1;
                ops.push(EditOp::delete(i));
            }
            Step::Insert => {
                j -= 1;
                ops.push(EditOp::insert(j));
            }
        }
    }
    ops.reverse();

    let counts = ErrorCounts::from_ops(&ops, reference, hypothesis);
    Alignment {
        cost_milli: score[at(reference.len(), hypothesis.len())].0,
        ops,
        counts,
    }
}

/// Result of exhaustive alignment enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteForceResult {
    pub cost_milli: u64,
    /// Every distinct error-count tuple reached by some minimum-cost alignment.
    pub optimal_counts: BTreeSet<ErrorCounts>,
}

/// Enumerates every legal monotone alignment and returns the exact optimum.
/// Exponential; both sequences must have at most [`BRUTE_FORCE_MAX_LEN`]
/// tokens.
pub fn brute_force_align(
    reference: &[Token],
    hypothesis: &[Token],
    costs: AlignmentCosts,
) -> Result<BruteForceResult> {
    if reference.len() > BRUTE_FORCE_MAX_LEN || hypothesis.len() > BRUTE_FORCE_MAX_LEN {
        return Err(ScdError::invalid(format!(
            "brute-force alignment is limited to {BRUTE_FORCE_MAX_LEN} tokens per side"
        )));
    }
    let mut search = Enumeration {
        reference,
        hypothesis,
        costs,
        best: u64::MAX,
        optimal: BTreeSet::new(),
    };
    search.walk(0, 0, 0, ErrorCounts::default());
    Ok(BruteForceResult {
        cost_milli: search.best,
        optimal_counts: search.optimal,
    })
}

struct Enumeration<'a> {
    reference: &'a [Token],
    hypothesis: &'a [Token],
    costs: AlignmentCosts,
    best: u64,
    optimal: BTreeSet<ErrorCounts>,
}

impl Enumeration<'_> {
    fn walk(&mut self, i: usize, j: usize, cost: u64, counts: ErrorCounts) {
        if i == self.reference.len() && j == self.hypothesis.len() {
            if cost < self.best {
                self.best = cost;
                self.optimal.clear();
            }
            if cost == self.best {
                self.optimal.insert(counts);
            }
            return;
        }
        if i < self.reference.len() && j < self.hypothesis.len() {
            let (r, h) = (&self.reference[i], &self.hypothesis[j]);
            if r == h {
                let mut c = counts;
                c.st_correct += r.is_speaker_turn() as u32;
                self.walk(i + 1, j + 1, cost, c);
            } else if r.is_word() && h.is_word() {
                let mut c = counts;
                c.word_errors += 1;
                self.walk(i + 1, j + 1, cost + WORD_COST_MILLI, c);
            }
        }
        if i < self.reference.len() {
            let r = &self.reference[i];
            let mut c = counts;
            if r.is_speaker_turn() {
                c.st_deletions += 1;
            } else {
                c.word_errors += 1;
            }
            self.walk(i + 1, j, cost + self.costs.ins_del(r), c);
        }
        if j < self.hypothesis.len() {
            let h = &self.hypothesis[j];
            let mut c = counts;
            if h.is_speaker_turn() {
                c.st_insertions += 1;
            } else {
                c.word_errors += 1;
            }
            self.walk(i, j + 1, cost + self.costs.ins_del(h), c);
        }
    }
}
