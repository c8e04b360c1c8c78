//! Grid execution: functions x algorithms x seeds.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cpu_time::ThreadTime;
use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::cascade::{self, CenterStrategy, DsConfig, RegionLog};
use crate::error::{Error, Result};
use crate::objectives::{Kind, ObjectiveFunction};
use crate::par::{self, Execution};
use crate::point::Trajectory;
use crate::selection::{self, Batch, ExactCaps, Method};

use super::io::{write_batch, write_trajectory};
use super::metrics::compute_metrics;
use super::record::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "ds")]
    Ds,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "cma")]
    Cma,
    #[serde(rename = "cma-indep")]
    CmaIndep,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Ds,
        Algorithm::Random,
        Algorithm::Cma,
        Algorithm::CmaIndep,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Ds => cascade::ALGORITHM_ID,
            Algorithm::Random => baselines::RANDOM_ID,
            Algorithm::Cma => baselines::CMA_SINGLE_ID,
            Algorithm::CmaIndep => baselines::CMA_INDEP_ID,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub functions: Vec<Kind>,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    /// Function instance seed shared by every cell.
    pub instance: u64,
    pub dim: usize,
    pub budget: usize,
    pub k: usize,
    pub d_min: f64,
    pub method: Method,
    pub center_strategy: CenterStrategy,
    pub reorder_on_convergence: bool,
    pub greedy_steps: usize,
    #[serde(skip)]
    pub exact_caps: ExactCaps,
    pub record_regions: bool,
    pub execution: Execution,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(dim: usize, budget: usize, k: usize, d_min: f64) -> Self {
        ExperimentConfig {
            functions: Kind::ALL.to_vec(),
            algorithms: Algorithm::ALL.to_vec(),
            seeds: (0..5).collect(),
            instance: 0,
            dim,
            budget,
            k,
            d_min,
            method: Method::Clearing,
            center_strategy: CenterStrategy::default(),
            reorder_on_convergence: false,
            greedy_steps: 10,
            exact_caps: ExactCaps::default(),
            record_regions: false,
            execution: Execution::default(),
            workers: None,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be positive".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.d_min.is_finite() && self.d_min >= 0.0) {
            return Err(Error::Config(format!(
                "d_min must be finite and non-negative, got {}",
                self.d_min
            )));
        }
        if self.functions.is_empty() || self.algorithms.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("the grid has no cells".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells =
            Vec::with_capacity(self.functions.len() * self.algorithms.len() * self.seeds.len());
        for &function in &self.functions {
            for &algorithm in &self.algorithms {
                for &seed in &self.seeds {
                    cells.push(Cell {
                        function,
                        algorithm,
                        seed,
                    });
                }
            }
        }
        cells
    }

    fn ds_config(&self, seed: u64) -> DsConfig {
        let mut c = DsConfig::new(self.k, self.d_min, self.budget, seed);
        c.center_strategy = self.center_strategy;
        c.reorder_on_convergence = self.reorder_on_convergence;
        c.record_regions = self.record_regions;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub function: Kind,
    pub algorithm: Algorithm,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct CellOutput {
    pub record: RunRecord,
    pub trajectory: Option<Trajectory>,
    pub batch: Option<Batch>,
    pub region_log: Option<RegionLog>,
}

pub fn select(
    method: Method,
    portfolio: &[crate::point::EvaluatedPoint],
    k: usize,
    d_min: f64,
    greedy_steps: usize,
    caps: ExactCaps,
) -> Result<Batch> {
    match method {
        Method::Clearing => selection::clearing_select(portfolio, k, d_min),
        Method::Greedy => selection::greedy_select(portfolio, k, d_min, greedy_steps),
        Method::Exact => selection::exact_select(portfolio, k, d_min, caps),
    }
}

struct Generated {
    trajectory: Trajectory,
    restarts: Option<usize>,
    region_log: Option<RegionLog>,
}

fn generate(
    config: &ExperimentConfig,
    cell: Cell,
    fun: &mut ObjectiveFunction,
) -> Result<Generated> {
    let plain = |trajectory| Generated {
        trajectory,
        restarts: None,
        region_log: None,
    };
    match cell.algorithm {
        Algorithm::Ds => {
            let run = cascade::run_ds(&config.ds_config(cell.seed), fun)?;
            Ok(Generated {
                trajectory: run.trajectory,
                restarts: Some(run.restarts),
                region_log: run.region_log,
            })
        }
        Algorithm::Random => baselines::run_random(fun, config.budget, cell.seed).map(plain),
        Algorithm::Cma => baselines::run_cma_single(fun, config.budget, cell.seed).map(plain),
        Algorithm::CmaIndep => {
            baselines::run_cma_indep(fun, config.budget, config.k, cell.seed).map(plain)
        }
    }
}

/// Runs one cell. Errors end up in the record instead of being returned.
pub fn run_cell(config: &ExperimentConfig, cell: Cell) -> CellOutput {
    let mut record = RunRecord {
        function: cell.function.id().to_string(),
        group: cell.function.group().to_string(),
        algorithm: cell.algorithm.id().to_string(),
        seed: cell.seed,
        instance: config.instance,
        dim: config.dim,
        budget: config.budget,
        k: config.k,
        d_min: config.d_min,
        method: config.method,
        center_strategy: (cell.algorithm == Algorithm::Ds).then_some(config.center_strategy),
        complete: false,
        failed: true,
        error: None,
        evaluations: 0,
        restarts: None,
        leader_loss: None,
        batch_losses: Vec::new(),
        cum_avg: Vec::new(),
        cpu_seconds: 0.0,
        selection_seconds: 0.0,
    };
    let mut output = CellOutput {
        record: record.clone(),
        trajectory: None,
        batch: None,
        region_log: None,
    };

    let mut fun = match ObjectiveFunction::new(cell.function, config.dim, config.instance) {
        Ok(f) => f,
        Err(e) => {
            record.error = Some(e.to_string());
            output.record = record;
            return output;
        }
    };

    let clock = ThreadTime::now();
    let generated = generate(config, cell, &mut fun);
    record.cpu_seconds = clock.elapsed().as_secs_f64();
    let generated = match generated {
        Ok(g) => g,
        Err(e) => {
            log::warn!(
                "{} {} seed {}: {e}",
                record.function,
                record.algorithm,
                record.seed
            );
            record.error = Some(e.to_string());
            output.record = record;
            return output;
        }
    };
    record.evaluations = generated.trajectory.len();
    record.restarts = generated.restarts;

    let clock = ThreadTime::now();
    let batch = select(
        config.method,
        &generated.trajectory.points,
        config.k,
        config.d_min,
        config.greedy_steps,
        config.exact_caps,
    );
    record.selection_seconds = clock.elapsed().as_secs_f64();
    match batch.and_then(|b| compute_metrics(&b, &fun).map(|m| (b, m))) {
        Ok((batch, metrics)) => {
            record.complete = batch.complete;
            record.failed = !batch.complete;
            record.leader_loss = Some(metrics.leader_loss);
            record.batch_losses = metrics.batch_losses;
            record.cum_avg = metrics.cum_avg;
            output.batch = Some(batch);
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    output.record = record;
    output.trajectory = Some(generated.trajectory);
    output.region_log = generated.region_log;
    output
}

/// Subdirectories of an experiment output directory.
pub const TRAJECTORY_DIR: &str = "trajectories";
pub const BATCH_DIR: &str = "batches";
pub const RECORD_DIR: &str = "records";
pub const REGION_DIR: &str = "regions";

fn persist(dir: &Path, output: &CellOutput) -> Result<()> {
    let stem = output.record.stem();
    if let Some(t) = &output.trajectory {
        write_trajectory(&dir.join(TRAJECTORY_DIR).join(format!("{stem}.csv")), t)?;
    }
    if let Some(b) = &output.batch {
        write_batch(&dir.join(BATCH_DIR).join(format!("{stem}.json")), b)?;
    }
    if let Some(log) = &output.region_log {
        fs::write(
            dir.join(REGION_DIR).join(format!("{stem}.csv")),
            log.to_csv(),
        )?;
        fs::write(
            dir.join(REGION_DIR).join(format!("{stem}.json")),
            serde_json::to_string(log)?,
        )?;
    }
    let mut json = serde_json::to_string_pretty(&output.record)?;
    json.push('\n');
    fs::write(dir.join(RECORD_DIR).join(format!("{stem}.json")), json)?;
    Ok(())
}

/// Runs every cell of the grid and returns the full outputs in grid order.
/// Cells run independently; when `out_dir` is set each cell writes its own
/// files.
pub fn run_grid(config: &ExperimentConfig) -> Result<Vec<CellOutput>> {
    config.validate()?;
    if let Some(dir) = &config.out_dir {
        for sub in [TRAJECTORY_DIR, BATCH_DIR, RECORD_DIR, REGION_DIR] {
            fs::create_dir_all(dir.join(sub))?;
        }
    }
    let cells = config.cells();
    let results = par::map(config.execution, config.workers, &cells, |&cell| {
        let output = run_cell(config, cell);
        match &config.out_dir {
            Some(dir) => persist(dir, &output).map(|_| output),
            None => Ok(output),
        }
    });
    results.into_iter().collect()
}

/// Like [`run_grid`] but keeps only the records.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    Ok(run_grid(config)?.into_iter().map(|o| o.record).collect())
}
