//! N-best files: one JSON object per line,
//! `{"utterance_id": .., "reference": "a b <st> c", "hypotheses": [{"text": .., "log_score": ..}]}`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdError};
use crate::risk::{NBest, ScoredHypothesis};
use crate::token::TokenSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisRecord {
    pub text: String,
    pub log_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NBestRecord {
    pub utterance_id: String,
    pub reference: String,
    pub hypotheses: Vec<HypothesisRecord>,
}

impl NBestRecord {
    pub fn into_nbest(self) -> Result<NBest> {
        let reference = TokenSequence::parse(&self.reference)?;
        let hypotheses = self
            .hypotheses
            .into_iter()
            .map(|h| {
                Ok(ScoredHypothesis {
                    tokens: TokenSequence::parse(&h.text)?,
                    log_score: h.log_score,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        NBest::new(self.utterance_id, reference, hypotheses)
    }
}

impl From<&NBest> for NBestRecord {
    fn from(n: &NBest) -> Self {
        NBestRecord {
            utterance_id: n.utterance_id.clone(),
            reference: n.reference.to_string(),
            hypotheses: n
                .hypotheses
                .iter()
                .map(|h| HypothesisRecord {
                    text: h.tokens.to_string(),
                    log_score: h.log_score,
                })
                .collect(),
        }
    }
}

pub fn parse_nbest(text: &str) -> Result<Vec<NBest>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: NBestRecord =
            serde_json::from_str(line).map_err(|e| ScdError::parse(line_no, e.to_string()))?;
        out.push(
            record
                .into_nbest()
                .map_err(|e| ScdError::parse(line_no, e.to_string()))?,
        );
    }
    if out.is_empty() {
        return Err(ScdError::Data("no N-best records found".into()));
    }
    Ok(out)
}

pub fn write_nbest(batch: &[NBest]) -> String {
    let mut out = String::new();
    for n in batch {
        out.push_str(
            &serde_json::to_string(&NBestRecord::from(n)).expect("records always serialize"),
        );
        out.push('\n');
    }
    out
}
