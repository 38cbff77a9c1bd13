//! A miniature "model" for exercising the loss: one logit per candidate
//! transcript in an enumerated hypothesis space, trained by plain gradient
//! descent on the expected risk plus the reference negative log-likelihood.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::{align, ErrorCounts};
use crate::error::{Result, ScdError};
use crate::risk::{softmax, RiskConfig};
use crate::token::{Token, TokenSequence};

/// Most candidates a hypothesis space may hold.
pub const MAX_CANDIDATES: usize = 256;

// Per-level frontier bound while expanding multi-edit neighbourhoods.
const MAX_FRONTIER: usize = 4096;

/// Candidate transcripts for one utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSpace {
    pub utterance_id: String,
    pub reference: TokenSequence,
    pub candidates: Vec<TokenSequence>,
}

impl HypothesisSpace {
    pub fn new(
        utterance_id: impl Into<String>,
        reference: TokenSequence,
        candidates: Vec<TokenSequence>,
    ) -> Result<Self> {
        let space = HypothesisSpace {
            utterance_id: utterance_id.into(),
            reference,
            candidates,
        };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reference.is_empty() {
            return Err(ScdError::invalid("hypothesis space needs a non-empty reference"));
        }
        if self.candidates.len() < 2 {
            return Err(ScdError::invalid("hypothesis space needs at least two candidates"));
        }
        if !self.candidates.contains(&self.reference) {
            return Err(ScdError::invalid("reference is not among the candidates"));
        }
        let distinct: BTreeSet<_> = self.candidates.iter().collect();
        if distinct.len() != self.candidates.len() {
            return Err(ScdError::invalid("candidates are not distinct"));
        }
        Ok(())
    }

    pub fn reference_index(&self) -> usize {
        self.candidates
            .iter()
            .position(|c| *c == self.reference)
            .expect("validated")
    }
}

/// All sequences one token edit away from `seq`: speaker-turn insertion or
/// deletion anywhere, and word insertion, deletion or substitution from
/// `vocab`.
fn single_edits(seq: &[Token], vocab: &[Token]) -> Vec<TokenSequence> {
    let mut out = Vec::new();
    for pos in 0..=seq.len() {
        let mut v = seq.to_vec();
        v.insert(pos, Token::SpeakerTurn);
        out.push(v.into());
        for w in vocab {
            let mut v = seq.to_vec();
            v.insert(pos, w.clone());
            out.push(v.into());
        }
    }
    for (pos, tok) in seq.iter().enumerate() {
        let mut v = seq.to_vec();
        v.remove(pos);
        out.push(v.into());
        if tok.is_word() {
            for w in vocab.iter().filter(|w| *w != tok) {
                let mut v = seq.to_vec();
                v[pos] = w.clone();
                out.push(v.into());
            }
        }
    }
    out
}

fn downsample<T: Clone>(items: &[T], n: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    let mut picked = index::sample(rng, items.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i].clone()).collect()
}

/// Builds a seeded hypothesis space of every sequence within `edit_budget`
/// single-token edits of `reference`, capped at [`MAX_CANDIDATES`] by uniform
/// downsampling that always keeps the reference. Candidates are returned in
/// sorted order.
pub fn enumerate_candidates(
    utterance_id: impl Into<String>,
    reference: &TokenSequence,
    edit_budget: usize,
    vocab: &[String],
    seed: u64,
) -> Result<HypothesisSpace> {
    if !(1..=3).contains(&edit_budget) {
        return Err(ScdError::invalid(format!(
            "edit budget must be in [1, 3], got {edit_budget}"
        )));
    }
    if vocab.is_empty() {
        return Err(ScdError::invalid("vocabulary is empty"));
    }
    if reference.is_empty() {
        return Err(ScdError::invalid("reference is empty"));
    }
    let vocab: Vec<Token> = vocab
        .iter()
        .map(|w| Token::word(w.to_lowercase()))
        .collect::<Result<BTreeSet<_>>>()?
        .into_iter()
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: BTreeSet<TokenSequence> = BTreeSet::from([reference.clone()]);
    let mut frontier = vec![reference.clone()];
    for _ in 0..edit_budget {
        let mut next = BTreeSet::new();
        for seq in &frontier {
            for cand in single_edits(seq, &vocab) {
                if !seen.contains(&cand) {
                    next.insert(cand);
                }
            }
        }
        seen.extend(next.iter().cloned());
        let next: Vec<_> = next.into_iter().collect();
        frontier = if next.len() > MAX_FRONTIER {
            downsample(&next, MAX_FRONTIER, &mut rng)
        } else {
            next
        };
    }

    seen.remove(reference);
    let others: Vec<_> = seen.into_iter().collect();
    let others = if others.len() > MAX_CANDIDATES - 1 {
        downsample(&others, MAX_CANDIDATES - 1, &mut rng)
    } else {
        others
    };
    let mut candidates = others;
    let at = candidates.binary_search(reference).unwrap_err();
    candidates.insert(at, reference.clone());
    HypothesisSpace::new(utterance_id, reference.clone(), candidates)
}

/// Per-utterance logits, one per candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    pub logits: Vec<f64>,
}

impl ToyModel {
    pub fn zeros(n: usize) -> Self {
        ToyModel {
            logits: vec![0.0; n],
        }
    }

    pub fn log_softmax(&self) -> Vec<f64> {
        let max = self.logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max
            + self
                .logits
                .iter()
                .map(|z| (z - max).exp())
                .sum::<f64>()
                .ln();
        self.logits.iter().map(|z| z - lse).collect()
    }

    /// Candidate indices ordered by descending logit; ties keep index order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.logits.len()).collect();
        order.sort_by(|&a, &b| self.logits[b].total_cmp(&self.logits[a]));
        order
    }
}

/// How many top-ranked candidates contribute risk terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NBestSize {
    All,
    Top(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub nbest: NBestSize,
    pub lambda: f64,
    pub risk: RiskConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            steps: 500,
            nbest: NBestSize::All,
            lambda: 0.03,
            risk: RiskConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ScdError::invalid("learning rate must be > 0"));
        }
        if self.steps < 1 {
            return Err(ScdError::invalid("steps must be >= 1"));
        }
        if self.nbest == NBestSize::Top(0) {
            return Err(ScdError::invalid("nbest must be >= 1"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(ScdError::invalid("lambda must be >= 0"));
        }
        self.risk.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainStep {
    pub step: usize,
    pub loss_total: f64,
    pub expected_risk: f64,
    pub expected_fa: f64,
    pub expected_fr: f64,
    pub expected_w: f64,
    pub argmax_candidate_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// `steps + 1` records; the first is the untrained state.
    pub records: Vec<TrainStep>,
    pub final_model: ToyModel,
    pub candidate_counts: Vec<ErrorCounts>,
    pub candidate_risks: Vec<f64>,
}

impl TrainTrace {
    pub fn initial(&self) -> &TrainStep {
        &self.records[0]
    }

    pub fn last(&self) -> &TrainStep {
        self.records.last().expect("trace is never empty")
    }
}

struct Evaluation {
    record: TrainStep,
    gradient: Vec<f64>,
}

fn evaluate(
    step: usize,
    model: &ToyModel,
    reference_index: usize,
    counts: &[ErrorCounts],
    risks: &[f64],
    config: &TrainConfig,
) -> Evaluation {
    let n = model.logits.len();
    let ranking = model.ranking();
    let selected = match config.nbest {
        NBestSize::All => &ranking[..],
        NBestSize::Top(k) => &ranking[..k.min(n)],
    };
    let log_probs = model.log_softmax();
    let probs: Vec<f64> = log_probs.iter().map(|lp| lp.exp()).collect();

    // Hypothesis weights over the N-best, either renormalized or the raw
    // full-space probabilities.
    let weights: Vec<f64> = if config.risk.normalize_scores {
        let sub: Vec<f64> = selected.iter().map(|&i| log_probs[i]).collect();
        softmax(&sub)
    } else {
        selected.iter().map(|&i| probs[i]).collect()
    };

    let mut rec = TrainStep {
        step,
        loss_total: 0.0,
        expected_risk: 0.0,
        expected_fa: 0.0,
        expected_fr: 0.0,
        expected_w: 0.0,
        argmax_candidate_index: ranking[0],
    };
    for (&i, &w) in selected.iter().zip(&weights) {
        rec.expected_risk += w * risks[i];
        rec.expected_fa += w * counts[i].st_insertions as f64;
        rec.expected_fr += w * counts[i].st_deletions as f64;
        rec.expected_w += w * counts[i].word_errors as f64;
    }
    let nll = -log_probs[reference_index];
    rec.loss_total = rec.expected_risk + config.lambda * nll;

    let mut gradient = vec![0.0; n];
    if config.risk.normalize_scores {
        for (&i, &w) in selected.iter().zip(&weights) {
            gradient[i] += w * (risks[i] - rec.expected_risk);
        }
    } else {
        let mut in_nbest = vec![false; n];
        for &i in selected {
            in_nbest[i] = true;
        }
        for i in 0..n {
            let own = if in_nbest[i] { risks[i] } else { 0.0 };
            gradient[i] += probs[i] * (own - rec.expected_risk);
        }
    }
    for (i, g) in gradient.iter_mut().enumerate() {
        let target = if i == reference_index { 1.0 } else { 0.0 };
        *g += config.lambda * (probs[i] - target);
    }
    Evaluation {
        record: rec,
        gradient,
    }
}

/// Trains zero-initialized logits on `space` and records every step.
pub fn train(space: &HypothesisSpace, config: &TrainConfig) -> Result<TrainTrace> {
    space.validate()?;
    config.validate()?;
    let reference_index = space.reference_index();
    let q = space.reference.len();
    let candidate_counts: Vec<ErrorCounts> = space
        .candidates
        .iter()
        .map(|c| align(&space.reference, c, config.risk.costs).counts)
        .collect();
    let candidate_risks: Vec<f64> = candidate_counts
        .iter()
        .map(|c| config.risk.risk_from_counts(c, q))
        .collect();

    let mut model = ToyModel::zeros(space.candidates.len());
    let mut records = Vec::with_capacity(config.steps + 1);
    for step in 0..=config.steps {
        let eval = evaluate(
            step,
            &model,
            reference_index,
            &candidate_counts,
            &candidate_risks,
            config,
        );
        if !eval.record.loss_total.is_finite() {
            return Err(ScdError::Diverged { step });
        }
        records.push(eval.record);
        if step < config.steps {
            for (z, g) in model.logits.iter_mut().zip(&eval.gradient) {
                *z -= config.learning_rate * g;
            }
        }
    }
    Ok(TrainTrace {
        records,
        final_model: model,
        candidate_counts,
        candidate_risks,
    })
}

/// Reference and vocabulary of the bundled "st-vs-word" scenario.
pub const ST_VS_WORD_REFERENCE: &str = "a b <st> c";
pub const ST_VS_WORD_VOCAB: [&str; 4] = ["a", "b", "c", "x"];
pub const ST_VS_WORD_SEED: u64 = 7;

/// The bundled scenario: all single-edit neighbours of `a b <st> c` over the
/// vocabulary {a, b, c, x}. It contains the word-substitution competitor
/// `a x <st> c` and the turn-deletion competitor `a b c`.
pub fn st_vs_word_space() -> HypothesisSpace {
    let reference = TokenSequence::parse(ST_VS_WORD_REFERENCE).expect("static transcript");
    let vocab: Vec<String> = ST_VS_WORD_VOCAB.iter().map(|s| s.to_string()).collect();
    enumerate_candidates("st-vs-word", &reference, 1, &vocab, ST_VS_WORD_SEED)
        .expect("static scenario")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(text: &str) -> TokenSequence {
        TokenSequence::parse(text).unwrap()
    }

    fn vocab(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_edit_closure() {
        let space = enumerate_candidates("u", &seq("a <st> b"), 1, &vocab(&["a", "b"]), 1).unwrap();
        assert!(space.candidates.contains(&seq("a <st> b")));
        assert!(space.candidates.windows(2).all(|w| w[0] < w[1]));
        assert!(space.candidates.contains(&seq("a b")));
        assert!(space.candidates.contains(&seq("a <st> <st> b")));
        assert!(space.candidates.contains(&seq("<st> a <st> b")));
        assert!(space.candidates.contains(&seq("a <st> a")));
        assert!(space.candidates.contains(&seq("<st> b")));
        assert!(space.candidates.contains(&seq("a b <st> b")));
        space.validate().unwrap();
    }

    #[test]
    fn candidate_cap_and_determinism() {
        let r = seq("the quick brown <st> fox jumps over");
        let v = vocab(&["the", "a", "dog", "fox", "cat"]);
        let s1 = enumerate_candidates("u", &r, 3, &v, 42).unwrap();
        let s2 = enumerate_candidates("u", &r, 3, &v, 42).unwrap();
        let s3 = enumerate_candidates("u", &r, 3, &v, 43).unwrap();
        assert_eq!(s1.candidates.len(), MAX_CANDIDATES);
        assert_eq!(s1, s2);
        assert_ne!(s1, s3);
        assert!(s1.candidates.contains(&r));
        assert!(s3.candidates.contains(&r));
    }

    #[test]
    fn enumerate_rejects_bad_input() {
        let r = seq("a b");
        assert!(enumerate_candidates("u", &r, 0, &vocab(&["a"]), 0).is_err());
        assert!(enumerate_candidates("u", &r, 4, &vocab(&["a"]), 0).is_err());
        assert!(enumerate_candidates("u", &r, 1, &[], 0).is_err());
        assert!(enumerate_candidates("u", &r, 1, &vocab(&["<st>"]), 0).is_err());
    }

    #[test]
    fn space_validation() {
        assert!(HypothesisSpace::new("u", seq("a"), vec![seq("a")]).is_err());
        assert!(HypothesisSpace::new("u", seq("a"), vec![seq("b"), seq("c")]).is_err());
        assert!(HypothesisSpace::new("u", seq("a"), vec![seq("a"), seq("a")]).is_err());
        assert!(HypothesisSpace::new("u", seq("a"), vec![seq("a"), seq("b")]).is_ok());
    }

    #[test]
    fn zero_weights_move_only_through_nll() {
        let space = st_vs_word_space();
        let config = TrainConfig {
            steps: 50,
            risk: RiskConfig {
                alpha: 0.0,
                beta: 0.0,
                gamma: 0.0,
                ..RiskConfig::default()
            },
            ..TrainConfig::default()
        };
        let trace = train(&space, &config).unwrap();
        assert!(trace.records.iter().all(|r| r.expected_risk == 0.0));
        let logits = &trace.final_model.logits;
        let r = space.reference_index();
        // Every non-reference logit receives the same nll gradient.
        assert!(logits[r] > 0.0);
        let others: Vec<f64> = (0..logits.len()).filter(|&i| i != r).map(|i| logits[i]).collect();
        assert!(others.iter().all(|&z| (z - others[0]).abs() < 1e-12 && z < 0.0));
    }

    #[test]
    fn trace_length_and_determinism() {
        let space = st_vs_word_space();
        let config = TrainConfig {
            steps: 20,
            ..TrainConfig::default()
        };
        let a = train(&space, &config).unwrap();
        let b = train(&space, &config).unwrap();
        assert_eq!(a.records.len(), 21);
        assert_eq!(a, b);
    }

    #[test]
    fn top_n_and_raw_probability_modes_descend() {
        let space = st_vs_word_space();
        for (nbest, normalize) in [(NBestSize::Top(4), true), (NBestSize::All, false), (NBestSize::Top(4), false)] {
            let config = TrainConfig {
                nbest,
                risk: RiskConfig {
                    normalize_scores: normalize,
                    ..RiskConfig::default()
                },
                ..TrainConfig::default()
            };
            let trace = train(&space, &config).unwrap();
            let first = trace.initial();
            let last = trace.last();
            assert!(last.loss_total < first.loss_total, "{nbest:?} {normalize}");
            assert_eq!(trace.candidate_counts[last.argmax_candidate_index].st_errors(), 0);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let space = st_vs_word_space();
        let config = TrainConfig {
            learning_rate: f64::MAX,
            steps: 5,
            risk: RiskConfig {
                beta: 1e300,
                gamma: 1e300,
                ..RiskConfig::default()
            },
            ..TrainConfig::default()
        };
        assert!(matches!(train(&space, &config), Err(ScdError::Diverged { .. })));
    }
}
