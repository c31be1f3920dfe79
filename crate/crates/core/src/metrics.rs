//! Proper scoring rules, binned calibration errors and confusion matrices.

use serde::{Deserialize, Serialize};

use crate::binning::{bin_stats, BinSpec, BinnedDiagram};
use crate::dataset::{argmax, project_class_view, ClassView, ModelRecord, ViewMode};
use crate::error::{Error, Result};

/// Lower clamp on the true-class probability inside the log loss.
pub const LOG_LOSS_EPS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    /// Argmax accuracy over the model's rows.
    pub accuracy: f64,
    pub brier: f64,
    pub log_loss: f64,
    pub ece: f64,
    pub mce: f64,
    pub bin_spec: BinSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: usize,
    /// `counts[true][predicted]`.
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
}

impl ConfusionMatrix {
    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|i| self.counts[i][i]).sum()
    }
}

/// Multiclass Brier score: squared distance to the one-hot label, summed over
/// classes and averaged over rows.
pub fn brier_score(probs: &[f64], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let k = probs.len() / labels.len();
    let total: f64 = probs
        .chunks_exact(k)
        .zip(labels)
        .map(|(row, &y)| {
            row.iter()
                .enumerate()
                .map(|(i, &p)| {
                    let d = p - if i == y { 1.0 } else { 0.0 };
                    d * d
                })
                .sum::<f64>()
        })
        .sum();
    total / labels.len() as f64
}

pub fn log_loss(probs: &[f64], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let k = probs.len() / labels.len();
    let total: f64 = probs
        .chunks_exact(k)
        .zip(labels)
        .map(|(row, &y)| -row[y].clamp(LOG_LOSS_EPS, 1.0).ln())
        .sum();
    total / labels.len() as f64
}

/// Count-weighted mean of per-bin `|acc - conf|` over occupied bins.
pub fn ece(diagram: &BinnedDiagram) -> f64 {
    let n = diagram.n_total as f64;
    diagram
        .bins
        .iter()
        .map(|b| b.count as f64 / n * b.gap())
        .sum()
}

/// Largest per-bin `|acc - conf|` over occupied bins.
pub fn mce(diagram: &BinnedDiagram) -> f64 {
    diagram.bins.iter().map(|b| b.gap()).fold(0.0, f64::max)
}

/// Mean outcome of a view: argmax accuracy in confidence mode, class
/// prevalence in classwise mode.
pub fn accuracy(view: &ClassView) -> Result<f64> {
    if view.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(view.outcome_values().sum::<f64>() / view.len() as f64)
}

pub fn confusion_matrix(model: &ModelRecord, indices: &[usize]) -> Result<ConfusionMatrix> {
    if indices.is_empty() {
        return Err(Error::EmptySelection);
    }
    let k = model.classes();
    let mut counts = vec![vec![0u64; k]; k];
    for &j in indices {
        if j >= model.n() {
            return Err(Error::InvalidParameter(format!("row index {j} out of range")));
        }
        counts[model.labels()[j]][argmax(model.row(j))] += 1;
    }
    Ok(ConfusionMatrix {
        classes: k,
        counts,
        total: indices.len() as u64,
    })
}

/// Bundles the scoring rules of `model` with ECE/MCE of the diagram for
/// `mode` under `spec`.
pub fn metrics_report(model: &ModelRecord, mode: ViewMode, spec: BinSpec) -> Result<MetricsReport> {
    let view = project_class_view(model, mode)?;
    let diagram = bin_stats(&view, spec)?;
    Ok(report_from_parts(model, &diagram, spec))
}

pub(crate) fn report_from_parts(model: &ModelRecord, diagram: &BinnedDiagram, spec: BinSpec) -> MetricsReport {
    let n = model.n();
    let correct = (0..n).filter(|&j| model.predicted(j) == model.labels()[j]).count();
    MetricsReport {
        n,
        accuracy: correct as f64 / n as f64,
        brier: brier_score(model.probs(), model.labels()),
        log_loss: log_loss(model.probs(), model.labels()),
        ece: ece(diagram),
        mce: mce(diagram),
        bin_spec: spec,
    }
}
