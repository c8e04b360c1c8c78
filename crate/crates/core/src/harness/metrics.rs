//! Batch quality metrics and per-function normalization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::ObjectiveFunction;
use crate::selection::Batch;

use super::record::RunRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMetrics {
    /// Loss of the best batch member.
    pub leader_loss: f64,
    /// Member losses, ascending.
    pub batch_losses: Vec<f64>,
    /// `cum_avg[i]` is the mean of the `i + 1` smallest losses.
    pub cum_avg: Vec<f64>,
}

impl BatchMetrics {
    pub fn mean_loss(&self) -> f64 {
        self.cum_avg.last().copied().unwrap_or(f64::NAN)
    }
}

pub fn compute_metrics(batch: &Batch, fun: &ObjectiveFunction) -> Result<BatchMetrics> {
    if batch.points.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut batch_losses: Vec<f64> = batch.points.iter().map(|p| fun.loss(p.f)).collect();
    batch_losses.sort_by(f64::total_cmp);
    Ok(BatchMetrics {
        leader_loss: fun.loss(batch.points[0].f),
        cum_avg: cumulative_average(&batch_losses),
        batch_losses,
    })
}

pub fn cumulative_average(values: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            sum / (i + 1) as f64
        })
        .collect()
}

/// One record with its batch-average loss divided by the best complete
/// cascade batch average of the same function and setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedLoss {
    pub function: String,
    pub algorithm: String,
    pub seed: u64,
    pub dim: usize,
    pub budget: usize,
    pub k: usize,
    pub d_min: f64,
    pub complete: bool,
    pub mean_loss: Option<f64>,
    pub normalized: Option<f64>,
}

/// Records are grouped by function and run setting. Groups without a
/// complete cascade record are skipped with a warning. Incomplete or failed
/// records stay in the output with no normalized value.
pub fn normalize_losses(records: &[RunRecord]) -> Vec<NormalizedLoss> {
    let mut groups: BTreeMap<String, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.group_key()).or_default().push(r);
    }
    let mut out = Vec::new();
    for (key, members) in groups {
        let reference = members
            .iter()
            .filter(|r| r.algorithm == crate::cascade::ALGORITHM_ID && r.complete)
            .filter_map(|r| r.mean_loss())
            .min_by(f64::total_cmp);
        let Some(reference) = reference else {
            log::warn!("no complete cascade record for {key}; group skipped");
            continue;
        };
        for r in members {
            let mean_loss = r.mean_loss();
            let normalized = if r.complete {
                mean_loss.map(|m| m / reference)
            } else {
                None
            };
            out.push(NormalizedLoss {
                function: r.function.clone(),
                algorithm: r.algorithm.clone(),
                seed: r.seed,
                dim: r.dim,
                budget: r.budget,
                k: r.k,
                d_min: r.d_min,
                complete: r.complete,
                mean_loss,
                normalized,
            });
        }
    }
    out
}
