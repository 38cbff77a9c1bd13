//! Cuts a long recording into windows of roughly `target` seconds without
//! splitting any reference segment.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdError};
use crate::metrics::{Annotation, SpeakerSegment};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
    pub segments: usize,
    /// A lone segment that is already longer than the target.
    pub oversized: bool,
}

impl Window {
    fn open(seg: &SpeakerSegment) -> Self {
        Window {
            start: seg.start,
            end: seg.end,
            segments: 1,
            oversized: false,
        }
    }

    fn span(&self) -> f64 {
        self.end - self.start
    }
}

/// Greedily packs whole segments (in start order) into windows. A window is
/// closed at the first clean boundary, one not crossed by any segment, at
/// which it spans at least `target` seconds. A segment longer than the
/// target always gets a window of its own.
pub fn segment_longform(annotation: &Annotation, target: f64) -> Result<Vec<Window>> {
    if !(target.is_finite() && target > 0.0) {
        return Err(ScdError::invalid(format!("target must be > 0, got {target}")));
    }
    let mut segs: Vec<&SpeakerSegment> = annotation.segments.iter().collect();
    segs.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));

    let mut windows = Vec::new();
    let mut iter = segs.into_iter();
    let Some(first) = iter.next() else {
        return Ok(windows);
    };
    let mut cur = Window::open(first);
    for seg in iter {
        let clean = seg.start >= cur.end;
        let long = seg.end - seg.start > target;
        if clean && (cur.span() >= target || long) {
            windows.push(cur);
            cur = Window::open(seg);
        } else {
            cur.end = cur.end.max(seg.end);
            cur.segments += 1;
        }
    }
    windows.push(cur);
    for w in &mut windows {
        w.oversized = w.segments == 1 && w.span() > target;
    }
    Ok(windows)
}
