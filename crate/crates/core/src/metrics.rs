//! Confusion matrices, accuracy/precision/recall/F1, and report rendering.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("y_true has {true_len} labels but y_pred has {pred_len}")]
    Length { true_len: usize, pred_len: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    Label { label: usize, n_classes: usize },
    #[error("{0}")]
    Names(String),
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    pub class_names: Vec<String>,
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::Length { true_len: y_true.len(), pred_len: y_pred.len() });
    }
    let mut counts = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for label in [t, p] {
            if label >= n_classes {
                return Err(MetricsError::Label { label, n_classes });
            }
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        counts,
        class_names: (0..n_classes).map(|k| k.to_string()).collect(),
    })
}

impl ConfusionMatrix {
    pub fn with_names(mut self, names: &[String]) -> Result<Self, MetricsError> {
        if names.len() != self.counts.len() {
            return Err(MetricsError::Names(format!(
                "{} names for {} classes",
                names.len(),
                self.counts.len()
            )));
        }
        self.class_names = names.to_vec();
        Ok(self)
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    pub fn col_sum(&self, k: usize) -> u64 {
        self.counts.iter().map(|r| r[k]).sum()
    }

    /// Grid with a `true\predicted` corner cell and class names on both axes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for n in &self.class_names {
            write!(out, ",{n}").unwrap();
        }
        out.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            out.push_str(name);
            for c in row {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<u64>,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    pub precision_weighted: f64,
    pub recall_weighted: f64,
    pub f1_weighted: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Any 0/0 counts as 0. An empty matrix scores 0 everywhere.
pub fn classification_scores(cm: &ConfusionMatrix) -> ScoreReport {
    let k = cm.n_classes();
    let total = cm.total() as f64;
    let diag: Vec<f64> = (0..k).map(|i| cm.counts[i][i] as f64).collect();
    let support: Vec<u64> = (0..k).map(|i| cm.row_sum(i)).collect();
    let precision: Vec<f64> = (0..k).map(|i| ratio(diag[i], cm.col_sum(i) as f64)).collect();
    let recall: Vec<f64> = (0..k).map(|i| ratio(diag[i], support[i] as f64)).collect();
    let f1: Vec<f64> = (0..k)
        .map(|i| ratio(2.0 * precision[i] * recall[i], precision[i] + recall[i]))
        .collect();
    let macro_avg = |v: &[f64]| if k == 0 { 0.0 } else { v.iter().sum::<f64>() / k as f64 };
    let weighted = |v: &[f64]| ratio(v.iter().zip(&support).map(|(s, &n)| s * n as f64).sum(), total);
    ScoreReport {
        accuracy: ratio(diag.iter().sum(), total),
        precision_macro: macro_avg(&precision),
        recall_macro: macro_avg(&recall),
        f1_macro: macro_avg(&f1),
        precision_weighted: weighted(&precision),
        recall_weighted: weighted(&recall),
        f1_weighted: weighted(&f1),
        precision,
        recall,
        f1,
        support,
    }
}

pub const CSV_HEADER: &str =
    "algorithm,target,accuracy,precision_macro,recall_macro,f1_macro,precision_weighted,recall_weighted,f1_weighted";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub algorithm: String,
    pub target: String,
    pub scores: ScoreReport,
}

/// Accuracy as a percentage with two decimals, e.g. `92.51%`.
pub fn format_accuracy(a: f64) -> String {
    format!("{:.2}%", a * 100.0)
}

/// Whole-number percentage, e.g. `92%`.
pub fn format_percent(v: f64) -> String {
    format!("{:.0}%", v * 100.0)
}

/// Returns the aligned text table and the full-precision CSV.
pub fn render_report(rows: &[ReportRow]) -> (String, String) {
    let header = ["Algorithm", "Accuracy", "Precision", "Recall", "F1-score"];
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.algorithm.clone(),
                format_accuracy(r.scores.accuracy),
                format_percent(r.scores.precision_macro),
                format_percent(r.scores.recall_macro),
                format_percent(r.scores.f1_macro),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut table = String::new();
    let line = |out: &mut String, items: &[&str]| {
        let parts: Vec<String> = items
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut table, &header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    table.push_str(&rule.join("  "));
    table.push('\n');
    for row in &cells {
        let refs: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&mut table, &refs);
    }

    let mut csv = format!("{CSV_HEADER}\n");
    for r in rows {
        let s = &r.scores;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.target,
            s.accuracy,
            s.precision_macro,
            s.recall_macro,
            s.f1_macro,
            s.precision_weighted,
            s.recall_weighted,
            s.f1_weighted
        )
        .unwrap();
    }
    (table, csv)
}

/// Accuracy of always predicting the most frequent class of `y_train`,
/// scored on `y_test`.
pub fn majority_baseline(y_train: &[usize], y_test: &[usize], n_classes: usize) -> f64 {
    let mut counts = vec![0usize; n_classes];
    y_train.iter().for_each(|&l| counts[l] += 1);
    let majority = (0..n_classes).max_by_key(|&k| (counts[k], std::cmp::Reverse(k))).unwrap_or(0);
    ratio(y_test.iter().filter(|&&l| l == majority).count() as f64, y_test.len() as f64)
}
