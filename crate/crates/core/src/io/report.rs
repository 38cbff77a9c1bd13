//! Human tables and machine-readable (JSON) rendering of reports.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Result, ScdError};
use crate::metrics::{PrecisionRecallReport, SegmentationReport};
use crate::risk::LossBreakdown;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Machine,
}

/// A rate as a percentage with one decimal, or `n/a` when undefined.
pub fn percent(rate: Option<f64>) -> String {
    match rate {
        Some(r) => format!("{:.1}", 100.0 * r),
        None => "n/a".to_string(),
    }
}

/// Left-aligned text table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            rows: vec![header.into_iter().map(Into::into).collect()],
        }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) -> &mut Self {
        self.rows.push(cells.into_iter().map(Into::into).collect());
        self
    }

    pub fn render(&self) -> String {
        let cols = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let widths: Vec<usize> = (0..cols)
            .map(|c| {
                self.rows
                    .iter()
                    .filter_map(|r| r.get(c))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for row in &self.rows {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, cell)| format!("{cell:<w$}", w = widths[c]))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Report rendering. The machine format is single-line JSON with fields in
/// declaration order; undefined rates are `null`.
pub trait Render: Serialize + DeserializeOwned {
    fn table(&self) -> String;

    fn machine(&self) -> String {
        serde_json::to_string(self).expect("reports always serialize")
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.table(),
            Format::Machine => {
                let mut s = self.machine();
                s.push('\n');
                s
            }
        }
    }

    fn from_machine(text: &str) -> Result<Self> {
        serde_json::from_str(text.trim()).map_err(|e| ScdError::Data(e.to_string()))
    }
}

impl Render for PrecisionRecallReport {
    fn table(&self) -> String {
        let mut t = Table::new(["metric", "value"]);
        t.row(["precision (%)".to_string(), percent(self.precision)])
            .row(["recall (%)".to_string(), percent(self.recall_count)])
            .row(["recall-duration (%)".to_string(), percent(self.recall_duration)])
            .row(["f1 (%)".to_string(), percent(self.f1)])
            .row(["correct".to_string(), self.n_correct.to_string()])
            .row(["fa".to_string(), self.n_fa.to_string()])
            .row(["hit".to_string(), self.n_hit.to_string()])
            .row(["fr".to_string(), self.n_fr.to_string()])
            .row(["kept".to_string(), self.n_predictions_kept.to_string()])
            .row(["dropped".to_string(), self.n_predictions_dropped.to_string()]);
        t.render()
    }
}

impl Render for SegmentationReport {
    fn table(&self) -> String {
        let mut t = Table::new(["metric", "value"]);
        t.row(["purity (%)".to_string(), percent(Some(self.purity))])
            .row(["coverage (%)".to_string(), percent(Some(self.coverage))])
            .row(["f1 (%)".to_string(), percent(Some(self.f1))]);
        t.render()
    }
}

impl Render for LossBreakdown {
    fn table(&self) -> String {
        let mut t = Table::new(["hyp", "prob", "risk", "W", "FA", "FR"]);
        for (j, ((p, r), c)) in self
            .per_hyp_prob
            .iter()
            .zip(&self.per_hyp_risk)
            .zip(&self.per_hyp_counts)
            .enumerate()
        {
            t.row([
                j.to_string(),
                format!("{p:.6}"),
                format!("{r:.6}"),
                c.word_errors.to_string(),
                c.st_insertions.to_string(),
                c.st_deletions.to_string(),
            ]);
        }
        let mut out = t.render();
        out.push_str(&format!(
            "expected_risk {:.6}\nexpected_w {:.6}\nexpected_fa {:.6}\nexpected_fr {:.6}\nnll {:.6}\ntotal {:.6}\n",
            self.expected_risk,
            self.expected_w,
            self.expected_fa,
            self.expected_fr,
            self.nll_term,
            self.total
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{score_changes, Annotation, ChangeHypothesis, SpeakerSegment};

    #[test]
    fn percent_formatting() {
        assert_eq!(percent(Some(0.781)), "78.1");
        assert_eq!(percent(Some(2.0 / 3.0)), "66.7");
        assert_eq!(percent(Some(1.0)), "100.0");
        assert_eq!(percent(None), "n/a");
    }

    fn report(ts: &[f64]) -> PrecisionRecallReport {
        let a = Annotation::new(
            "r",
            vec![
                SpeakerSegment::new("A", 0.0, 10.0),
                SpeakerSegment::new("B", 10.5, 20.0),
            ],
        )
        .unwrap();
        score_changes(&a, &ChangeHypothesis::new("r", ts.to_vec()).unwrap(), 0.25).unwrap()
    }

    #[test]
    fn undefined_precision_renders_na() {
        let r = report(&[]);
        assert!(r.table().contains("n/a"));
        assert!(r.machine().contains("\"precision\":null"));
    }

    #[test]
    fn machine_format_round_trips() {
        let r = report(&[10.2, 3.3333]);
        assert_eq!(PrecisionRecallReport::from_machine(&r.machine()).unwrap(), r);
        let r = report(&[]);
        assert_eq!(PrecisionRecallReport::from_machine(&r.render(Format::Machine)).unwrap(), r);
    }

    #[test]
    fn table_alignment() {
        let mut t = Table::new(["a", "bbb"]);
        t.row(["long", "x"]);
        assert_eq!(t.render(), "a     bbb\nlong  x\n");
    }
}
