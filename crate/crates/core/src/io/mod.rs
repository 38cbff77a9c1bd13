//! File formats: RTTM annotations, change-stamp files, N-best JSON lines,
//! plus long-form windowing and report rendering.

mod nbest;
mod report;
mod rttm;
mod segment;
mod stamps;
mod time;

pub use nbest::{parse_nbest, write_nbest, HypothesisRecord, NBestRecord};
pub use report::{percent, Format, Render, Table};
pub use rttm::{parse_rttm, write_rttm, RttmParse};
pub use segment::{segment_longform, Window};
pub use stamps::{parse_change_stamps, write_change_stamps};
pub use time::{format_seconds, parse_seconds};
