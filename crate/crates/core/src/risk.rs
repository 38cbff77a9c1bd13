//! Expected token-level risk over N-best hypotheses and its gradient.
//!
//! Each hypothesis gets a risk from its constrained alignment against the
//! reference, either the weighted turn-error risk
//! `(alpha * W + beta * FA + gamma * FR) / Q` or the plain edit-error count
//! `W + FA + FR`. The batch loss sums the probability-weighted risks over all
//! utterances and hypotheses and adds `lambda * nll`.

use serde::{Deserialize, Serialize};

use crate::align::{align, AlignmentCosts, ErrorCounts};
use crate::error::{Result, ScdError};
use crate::token::TokenSequence;

/// Slack allowed when checking that raw scores are probabilities.
const PROB_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredHypothesis {
    pub tokens: TokenSequence,
    /// Natural-log model score.
    pub log_score: f64,
}

/// A reference transcript with its scored N-best hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBest {
    pub utterance_id: String,
    pub reference: TokenSequence,
    pub hypotheses: Vec<ScoredHypothesis>,
}

impl NBest {
    pub fn new(
        utterance_id: impl Into<String>,
        reference: TokenSequence,
        hypotheses: Vec<ScoredHypothesis>,
    ) -> Result<Self> {
        let nbest = NBest {
            utterance_id: utterance_id.into(),
            reference,
            hypotheses,
        };
        nbest.validate()?;
        Ok(nbest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reference.is_empty() {
            return Err(ScdError::invalid(format!(
                "utterance `{}`: empty reference",
                self.utterance_id
            )));
        }
        if self.hypotheses.is_empty() {
            return Err(ScdError::invalid(format!(
                "utterance `{}`: no hypotheses",
                self.utterance_id
            )));
        }
        if let Some(h) = self.hypotheses.iter().find(|h| !h.log_score.is_finite()) {
            return Err(ScdError::invalid(format!(
                "utterance `{}`: non-finite log score {}",
                self.utterance_id, h.log_score
            )));
        }
        Ok(())
    }

    pub fn log_scores(&self) -> Vec<f64> {
        self.hypotheses.iter().map(|h| h.log_score).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskKind {
    /// `(alpha * W + beta * FA + gamma * FR) / Q`.
    ScdWeighted,
    /// `W + FA + FR`, the expected-word-error baseline.
    WordErrorOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub costs: AlignmentCosts,
    /// Softmax the log scores over the N-best instead of exponentiating them.
    pub normalize_scores: bool,
    pub risk_kind: RiskKind,
}

impl Default for RiskConfig {
    fn default() -> Self {
        RiskConfig {
            alpha: 1.0,
            beta: 10.0,
            gamma: 10.0,
            costs: AlignmentCosts::default(),
            normalize_scores: true,
            risk_kind: RiskKind::ScdWeighted,
        }
    }
}

impl RiskConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ScdError::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Risk of a hypothesis with the given error counts against a reference
    /// of `reference_len` tokens.
    pub fn risk_from_counts(&self, counts: &ErrorCounts, reference_len: usize) -> f64 {
        match self.risk_kind {
            RiskKind::ScdWeighted => {
                (self.alpha * counts.word_errors as f64
                    + self.beta * counts.st_insertions as f64
                    + self.gamma * counts.st_deletions as f64)
                    / reference_len as f64
            }
            RiskKind::WordErrorOnly => counts.total_errors() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub per_hyp_risk: Vec<f64>,
    pub per_hyp_prob: Vec<f64>,
    pub per_hyp_counts: Vec<ErrorCounts>,
    /// Sum of `p_j * r_j`.
    pub expected_risk: f64,
    /// The supplied `-log P(Y|X)`; zero for a single utterance.
    pub nll_term: f64,
    pub total: f64,
    pub expected_fa: f64,
    pub expected_fr: f64,
    pub expected_w: f64,
}

/// Risk of one hypothesis against its reference.
pub fn per_hyp_risk(
    reference: &TokenSequence,
    hypothesis: &TokenSequence,
    config: &RiskConfig,
) -> Result<f64> {
    if reference.is_empty() {
        return Err(ScdError::invalid("risk needs a non-empty reference"));
    }
    let counts = align(reference, hypothesis, config.costs).counts;
    Ok(config.risk_from_counts(&counts, reference.len()))
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Hypothesis weights: softmax of the scores, or the exponentiated scores
/// when they are already log-probabilities.
pub fn hypothesis_probs(log_scores: &[f64], normalize: bool) -> Result<Vec<f64>> {
    if normalize {
        return Ok(softmax(log_scores));
    }
    log_scores
        .iter()
        .map(|&s| {
            let p = s.exp();
            if p > 1.0 + PROB_SLACK {
                Err(ScdError::invalid(format!(
                    "log score {s} is not a log-probability (exp > 1)"
                )))
            } else {
                Ok(p)
            }
        })
        .collect()
}

/// `sum_j p_j * r_j` with a fixed left-to-right summation order.
pub fn expected_value(log_scores: &[f64], risks: &[f64], normalize: bool) -> Result<f64> {
    let probs = hypothesis_probs(log_scores, normalize)?;
    Ok(dot(&probs, risks))
}

/// Gradient of the softmax-weighted expected risk w.r.t. the log scores:
/// `p_j * (r_j - E[r])`.
pub fn expected_value_gradient(log_scores: &[f64], risks: &[f64]) -> Vec<f64> {
    let probs = softmax(log_scores);
    let mean = dot(&probs, risks);
    probs
        .iter()
        .zip(risks)
        .map(|(p, r)| p * (r - mean))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

/// Expected risk of one utterance's N-best list.
pub fn expected_risk(nbest: &NBest, config: &RiskConfig) -> Result<LossBreakdown> {
    nbest.validate()?;
    config.validate()?;
    let q = nbest.reference.len();
    let per_hyp_counts: Vec<ErrorCounts> = nbest
        .hypotheses
        .iter()
        .map(|h| align(&nbest.reference, &h.tokens, config.costs).counts)
        .collect();
    let per_hyp_risk: Vec<f64> = per_hyp_counts
        .iter()
        .map(|c| config.risk_from_counts(c, q))
        .collect();
    let per_hyp_prob = hypothesis_probs(&nbest.log_scores(), config.normalize_scores)?;

    let expect = |f: fn(&ErrorCounts) -> u32| {
        per_hyp_prob
            .iter()
            .zip(&per_hyp_counts)
            .fold(0.0, |acc, (p, c)| acc + p * f(c) as f64)
    };
    let expected_risk = dot(&per_hyp_prob, &per_hyp_risk);
    Ok(LossBreakdown {
        expected_fa: expect(|c| c.st_insertions),
        expected_fr: expect(|c| c.st_deletions),
        expected_w: expect(|c| c.word_errors),
        per_hyp_risk,
        per_hyp_prob,
        per_hyp_counts,
        expected_risk,
        nll_term: 0.0,
        total: expected_risk,
    })
}

/// Batch loss: summed expected risks plus `lambda * nll`, where `nll` is the
/// caller-supplied negative log probability of the ground truth.
pub fn batch_loss(
    batch: &[NBest],
    lambda: f64,
    nll: f64,
    config: &RiskConfig,
) -> Result<LossBreakdown> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(ScdError::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    if !(nll.is_finite() && nll >= 0.0) {
        return Err(ScdError::invalid(format!("nll must be >= 0, got {nll}")));
    }
    let mut out = LossBreakdown {
        per_hyp_risk: Vec::new(),
        per_hyp_prob: Vec::new(),
        per_hyp_counts: Vec::new(),
        expected_risk: 0.0,
        nll_term: nll,
        total: 0.0,
        expected_fa: 0.0,
        expected_fr: 0.0,
        expected_w: 0.0,
    };
    for nbest in batch {
        let b = expected_risk(nbest, config)?;
        out.expected_risk += b.expected_risk;
        out.expected_fa += b.expected_fa;
        out.expected_fr += b.expected_fr;
        out.expected_w += b.expected_w;
        out.per_hyp_risk.extend(b.per_hyp_risk);
        out.per_hyp_prob.extend(b.per_hyp_prob);
        out.per_hyp_counts.extend(b.per_hyp_counts);
    }
    out.total = out.expected_risk + lambda * nll;
    Ok(out)
}

/// Gradient of [`expected_risk`] w.r.t. each hypothesis log score. Only
/// defined for softmax-normalized scores.
pub fn risk_gradient(nbest: &NBest, config: &RiskConfig) -> Result<Vec<f64>> {
    if !config.normalize_scores {
        return Err(ScdError::invalid(
            "risk gradient requires normalize_scores = true",
        ));
    }
    let breakdown = expected_risk(nbest, config)?;
    Ok(expected_value_gradient(
        &nbest.log_scores(),
        &breakdown.per_hyp_risk,
    ))
}
