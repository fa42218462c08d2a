use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classifier::Label;
use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<Label>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<Label>) -> Self {
        let k = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_counts(classes: Vec<Label>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = classes.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::invalid(format!("confusion counts must be {k}x{k}")));
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    /// Tallies one prediction; both labels must be in `classes`.
    pub fn record(&mut self, truth: Label, predicted: Label) -> Result<()> {
        let index = |l: Label| {
            self.classes
                .iter()
                .position(|&c| c == l)
                .ok_or_else(|| Error::invalid(format!("label {l} not in confusion classes")))
        };
        let (t, p) = (index(truth)?, index(predicted)?);
        self.counts[t][p] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|k| self.counts[k][k]).sum()
    }

    /// CSV with a header row and a leading column of class labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\pred");
        for c in &self.classes {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.counts) {
            let _ = write!(out, "{c}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Per-class scores in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

/// Precision, recall and F1 per class plus overall accuracy, all in percent.
pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> Result<(Vec<ClassMetrics>, f64)> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::invalid("confusion matrix is empty"));
    }
    let k = cm.classes.len();
    let metrics = (0..k)
        .map(|c| {
            let tp = cm.counts[c][c] as f64;
            let predicted: u64 = (0..k).map(|r| cm.counts[r][c]).sum();
            let actual: u64 = cm.counts[c].iter().sum();
            let mut degenerate = false;
            let mut ratio = |den: u64| {
                if den == 0 {
                    degenerate = true;
                    0.0
                } else {
                    100.0 * tp / den as f64
                }
            };
            let precision = ratio(predicted);
            let recall = ratio(actual);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                degenerate = true;
                0.0
            };
            ClassMetrics {
                label: cm.classes[c],
                precision,
                recall,
                f1,
                degenerate,
            }
        })
        .collect();
    Ok((metrics, 100.0 * cm.trace() as f64 / total as f64))
}
