//! Change-stamp files: `<recording_id>\t<t1>,<t2>,...` per line.

use std::fmt::Write;

use crate::error::{Result, ScdError};
use crate::io::time::{format_seconds, parse_seconds};
use crate::metrics::ChangeHypothesis;

pub fn parse_change_stamps(text: &str) -> Result<Vec<ChangeHypothesis>> {
    let mut out: Vec<ChangeHypothesis> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| ScdError::parse(line_no, "expected `<recording_id>\\t<times>`"))?;
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(ScdError::parse(line_no, format!("invalid recording id {id:?}")));
        }
        if out.iter().any(|h| h.recording_id == id) {
            return Err(ScdError::parse(line_no, format!("duplicate recording id `{id}`")));
        }
        let rest = rest.trim();
        let times = if rest.is_empty() {
            Vec::new()
        } else {
            rest.split(',')
                .map(|t| parse_seconds(t.trim()).map_err(|e| ScdError::parse(line_no, e.to_string())))
                .collect::<Result<Vec<_>>>()?
        };
        out.push(ChangeHypothesis::new(id, times).map_err(|e| ScdError::parse(line_no, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_change_stamps(hypotheses: &[ChangeHypothesis]) -> String {
    let mut out = String::new();
    for h in hypotheses {
        let times: Vec<String> = h.timestamps().iter().map(|&t| format_seconds(t)).collect();
        writeln!(out, "{}\t{}", h.recording_id, times.join(","))
            .expect("writing to a String cannot fail");
    }
    out
}
