use std::collections::HashMap;
use std::fmt::Write;

use crate::error::{Result, ScdError};
use crate::io::time::{format_millis, parse_millis, to_millis};
use crate::metrics::{Annotation, SpeakerSegment};

/// One `SPEAKER` line.
#[derive(Debug, Clone, PartialEq)]
pub struct RttmRecord {
    pub file: String,
    pub channel: u32,
    pub onset: f64,
    pub duration: f64,
    pub speaker: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RttmParse {
    /// One annotation per file id, in order of first appearance.
    pub annotations: Vec<Annotation>,
    /// Non-empty lines of a type other than `SPEAKER`.
    pub ignored_lines: usize,
}

fn parse_record(line_no: usize, fields: &[&str]) -> Result<RttmRecord> {
    if fields.len() != 10 {
        return Err(ScdError::parse(
            line_no,
            format!("expected 10 fields, found {}", fields.len()),
        ));
    }
    let channel = fields[2]
        .parse()
        .map_err(|_| ScdError::parse(line_no, format!("invalid channel {:?}", fields[2])))?;
    let onset_ms = parse_millis(fields[3]).map_err(|e| ScdError::parse(line_no, e.to_string()))?;
    let dur_ms = parse_millis(fields[4]).map_err(|e| ScdError::parse(line_no, e.to_string()))?;
    if dur_ms == 0 {
        return Err(ScdError::parse(line_no, "zero-duration segment"));
    }
    Ok(RttmRecord {
        file: fields[1].to_string(),
        channel,
        onset: onset_ms as f64 / 1000.0,
        duration: dur_ms as f64 / 1000.0,
        speaker: fields[7].to_string(),
    })
}

/// Parses RTTM text. Segment ends are computed in milliseconds so that
/// `onset + duration` is exact.
pub fn parse_rttm(text: &str) -> Result<RttmParse> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<SpeakerSegment>> = HashMap::new();
    let mut ignored_lines = 0;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first() {
            None => continue,
            Some(&"SPEAKER") => {}
            Some(_) => {
                ignored_lines += 1;
                continue;
            }
        }
        let rec = parse_record(line_no, &fields)?;
        let start_ms = to_millis(rec.onset);
        let end = (start_ms + to_millis(rec.duration)) as f64 / 1000.0;
        let seg = SpeakerSegment::new(rec.speaker, rec.onset, end);
        groups
            .entry(rec.file.clone())
            .or_insert_with(|| {
                order.push(rec.file.clone());
                Vec::new()
            })
            .push(seg);
    }
    if order.is_empty() {
        return Err(ScdError::Data("no SPEAKER records found".into()));
    }
    let annotations = order
        .into_iter()
        .map(|file| {
            let segments = groups.remove(&file).unwrap_or_default();
            Annotation::new(file, segments)
        })
        .collect::<Result<_>>()?;
    Ok(RttmParse {
        annotations,
        ignored_lines,
    })
}

pub fn write_rttm(annotations: &[Annotation]) -> String {
    let mut out = String::new();
    for ann in annotations {
        for seg in &ann.segments {
            let start = to_millis(seg.start);
            let dur = to_millis(seg.end) - start;
            writeln!(
                out,
                "SPEAKER {} 1 {} {} <NA> <NA> {} <NA> <NA>",
                ann.recording_id,
                format_millis(start),
                format_millis(dur),
                seg.speaker
            )
            .expect("writing to a String cannot fail");
        }
    }
    out
}
