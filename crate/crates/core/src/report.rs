//! Rendering of experiment reports.
//!
//! Text tables round metrics to three decimals. JSON and CSV carry the
//! unrounded values, so every text table has a lossless twin.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{OutageError, Result};
use crate::eval::MeanMetrics;
use crate::experiment::{count_with_percent, BenchmarkReport, ConfusionReport, SweepReport};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = OutageError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => Err(OutageError::InvalidParameter(format!(
                "unknown format `{s}` (expected text | json | csv)"
            ))),
        }
    }
}

/// Reports that can be rendered in every [`OutputFormat`].
pub trait Render: Serialize {
    fn text(&self) -> String;
    fn csv_records(&self) -> (Vec<String>, Vec<Vec<String>>);

    fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Text => Ok(self.text()),
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(self)?;
                s.push('\n');
                Ok(s)
            }
            OutputFormat::Csv => {
                let (header, rows) = self.csv_records();
                write_csv(&header, &rows)
            }
        }
    }
}

fn write_csv(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| OutageError::Data(format!("CSV output: {e}"));
    w.write_record(header).map_err(map)?;
    for r in rows {
        w.write_record(r).map_err(map)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| OutageError::Data(format!("CSV output: {e}")))?;
    String::from_utf8(bytes).map_err(|e| OutageError::Data(e.to_string()))
}

/// Left-aligned first column, right-aligned rest, two-space gutters.
pub fn format_table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let mut s = String::new();
        for (i, cell) in cells.iter().enumerate().take(cols) {
            let pad = width[i] - cell.chars().count();
            if i == 0 {
                s.push_str(cell);
                s.extend(std::iter::repeat_n(' ', pad));
            } else {
                s.push_str("  ");
                s.extend(std::iter::repeat_n(' ', pad));
                s.push_str(cell);
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(header);
    for r in rows {
        line(r);
    }
    out
}

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

fn penalty_label(c: f64) -> String {
    format!("c={c}")
}

impl Render for SweepReport {
    fn text(&self) -> String {
        let mut header = vec!["Kernel".to_string()];
        header.extend(self.penalties.iter().map(|&c| penalty_label(c)));
        let mut failures = Vec::new();
        let rows: Vec<Vec<String>> = self
            .kernels
            .iter()
            .enumerate()
            .map(|(r, k)| {
                let mut row = vec![k.display_name()];
                for (c, cell) in self.cells[r].iter().enumerate() {
                    let best = self.best.is_some_and(|b| b.row == r && b.col == c);
                    row.push(match (cell.f1(), &cell.error) {
                        (Some(f1), _) => format!("{}{}", f3(f1), if best { "*" } else { " " }),
                        (None, err) => {
                            failures.push(format!(
                                "{} at c={}: {}",
                                k,
                                self.penalties[c],
                                err.as_deref().unwrap_or("no result")
                            ));
                            "failed ".into()
                        }
                    });
                }
                row
            })
            .collect();

        let mut out = format!(
            "Mean F1 by kernel and penalty ({}-fold CV, fold seed {})\n\n",
            self.folds, self.seed
        );
        out.push_str(&format_table(&header, &rows));
        out.push('\n');
        if let Some(b) = self.best {
            let _ = writeln!(
                out,
                "* best: {} kernel, c={}",
                self.kernels[b.row].display_name(),
                self.penalties[b.col]
            );
        }
        for f in &failures {
            let _ = writeln!(out, "failed: {f}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }

    fn csv_records(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let header = [
            "kernel",
            "c",
            "accuracy",
            "precision",
            "recall",
            "f1",
            "best",
            "error",
        ]
        .map(String::from)
        .to_vec();
        let mut rows = Vec::new();
        for (r, k) in self.kernels.iter().enumerate() {
            for (c, cell) in self.cells[r].iter().enumerate() {
                let best = self.best.is_some_and(|b| b.row == r && b.col == c);
                let mut row = vec![k.to_string(), self.penalties[c].to_string()];
                row.extend(metric_fields(cell.mean.as_ref()));
                row.push(best.to_string());
                row.push(cell.error.clone().unwrap_or_default());
                rows.push(row);
            }
        }
        (header, rows)
    }
}

fn metric_fields(m: Option<&MeanMetrics>) -> Vec<String> {
    match m {
        Some(m) => [m.accuracy, m.precision, m.recall, m.f1]
            .iter()
            .map(|v| v.to_string())
            .collect(),
        None => vec![String::new(); 4],
    }
}

impl Render for BenchmarkReport {
    fn text(&self) -> String {
        let header = ["Model", "Accuracy", "Precision", "Recall", "F1"]
            .map(String::from)
            .to_vec();
        let mut failures = Vec::new();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| {
                let mut cells = vec![row.name.clone()];
                match &row.result.mean {
                    Some(m) => cells.extend([m.accuracy, m.precision, m.recall, m.f1].map(f3)),
                    None => {
                        failures.push(format!(
                            "{}: {}",
                            row.name,
                            row.result.error.as_deref().unwrap_or("no result")
                        ));
                        cells.extend(std::iter::repeat_n("failed".to_string(), 4));
                    }
                }
                cells
            })
            .collect();
        let mut out = format!(
            "Model comparison at c={} ({}-fold CV, fold seed {})\n\n",
            self.c, self.folds, self.seed
        );
        out.push_str(&format_table(&header, &rows));
        for f in &failures {
            let _ = writeln!(out, "failed: {f}");
        }
        out
    }

    fn csv_records(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let header = ["model", "accuracy", "precision", "recall", "f1", "error"]
            .map(String::from)
            .to_vec();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut r = vec![row.model.to_string()];
                r.extend(metric_fields(row.result.mean.as_ref()));
                r.push(row.result.error.clone().unwrap_or_default());
                r
            })
            .collect();
        (header, rows)
    }
}

impl Render for ConfusionReport {
    fn text(&self) -> String {
        let cm = &self.pooled.confusion;
        let p = &self.percentages;
        let header = ["", "Predicted operational", "Predicted outage"]
            .map(String::from)
            .to_vec();
        let rows = vec![
            vec![
                "Actual operational".to_string(),
                count_with_percent(cm.tn, p.operational[0]),
                count_with_percent(cm.fp, p.operational[1]),
            ],
            vec![
                "Actual outage".to_string(),
                count_with_percent(cm.fn_, p.outage[0]),
                count_with_percent(cm.tp, p.outage[1]),
            ],
        ];
        let mut out = format!(
            "Pooled confusion matrix, {} ({}-fold CV, fold seed {}, {} samples)\n\n",
            self.name,
            self.folds,
            self.seed,
            cm.total()
        );
        out.push_str(&format_table(&header, &rows));
        let _ = writeln!(
            out,
            "\npooled:      accuracy {}  precision {}  recall {}  F1 {}",
            f3(self.pooled.accuracy),
            f3(self.pooled.precision),
            f3(self.pooled.recall),
            f3(self.pooled.f1)
        );
        let _ = writeln!(
            out,
            "fold means:  accuracy {}  precision {}  recall {}  F1 {}",
            f3(self.mean.accuracy),
            f3(self.mean.precision),
            f3(self.mean.recall),
            f3(self.mean.f1)
        );
        out
    }

    fn csv_records(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let cm = &self.pooled.confusion;
        let p = &self.percentages;
        let header = ["actual", "predicted", "count", "row_percent"]
            .map(String::from)
            .to_vec();
        let rows = [
            ("operational", "operational", cm.tn, p.operational[0]),
            ("operational", "outage", cm.fp, p.operational[1]),
            ("outage", "operational", cm.fn_, p.outage[0]),
            ("outage", "outage", cm.tp, p.outage[1]),
        ]
        .iter()
        .map(|&(a, b, n, pct)| vec![a.into(), b.into(), n.to_string(), pct.to_string()])
        .collect();
        (header, rows)
    }
}
