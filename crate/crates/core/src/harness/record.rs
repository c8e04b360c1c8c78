use serde::{Deserialize, Serialize};

use crate::cascade::CenterStrategy;
use crate::selection::Method;

/// Outcome of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub function: String,
    pub group: String,
    pub algorithm: String,
    pub seed: u64,
    /// Seed of the function instance.
    pub instance: u64,
    pub dim: usize,
    pub budget: usize,
    pub k: usize,
    pub d_min: f64,
    pub method: Method,
    pub center_strategy: Option<CenterStrategy>,
    /// The batch has `k` members.
    pub complete: bool,
    /// Incomplete batch or an error during the run.
    pub failed: bool,
    pub error: Option<String>,
    pub evaluations: usize,
    pub restarts: Option<usize>,
    pub leader_loss: Option<f64>,
    pub batch_losses: Vec<f64>,
    pub cum_avg: Vec<f64>,
    /// Thread CPU time spent generating the trajectory.
    pub cpu_seconds: f64,
    /// Thread CPU time spent on batch selection.
    pub selection_seconds: f64,
}

impl RunRecord {
    pub fn mean_loss(&self) -> Option<f64> {
        self.cum_avg.last().copied()
    }

    /// Records sharing this key are compared against each other.
    pub fn group_key(&self) -> String {
        format!(
            "{} D={} T={} k={} d_min={} method={} instance={}",
            self.function, self.dim, self.budget, self.k, self.d_min, self.method, self.instance
        )
    }

    /// File stem for the per-cell outputs.
    pub fn stem(&self) -> String {
        cell_stem(
            &self.function,
            &self.algorithm,
            self.dim,
            self.budget,
            self.k,
            self.d_min,
            self.seed,
        )
    }
}

pub fn cell_stem(
    function: &str,
    algorithm: &str,
    dim: usize,
    budget: usize,
    k: usize,
    d_min: f64,
    seed: u64,
) -> String {
    format!("{function}_{algorithm}_d{dim}_t{budget}_k{k}_m{d_min}_s{seed}")
}
