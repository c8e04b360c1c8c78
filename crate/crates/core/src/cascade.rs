//! Cascading CMA-ES instances with tabu regions.
//!
//! `k` CMA-ES instances evolve in synchronized rounds. Within a round the
//! instances sample in cascade order; instance `i` rejects (without
//! evaluating) every candidate lying strictly inside the tabu ball of any
//! instance that precedes it. Each ball has radius `d_min` and follows its
//! owner's best point. Converged instances freeze their ball at their
//! best-so-far point; once every instance has stopped, the whole cascade is
//! restarted from fresh diverse means until the budget is spent.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::cma::{init_cma, CmaParams, CmaState, StopReason};
use crate::error::{Error, Result};
use crate::objectives::ObjectiveFunction;
use crate::point::{distance, fitness_order, Bounds, EvaluatedPoint, Trajectory};
use crate::seeding::rng_from_seed;

pub const ALGORITHM_ID: &str = "ds";

/// Which point a running instance's tabu ball is centered on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterStrategy {
    /// Best point of the instance's latest population.
    #[default]
    PopulationBest,
    /// Best point the instance has ever evaluated.
    BestSoFar,
    /// Mean of the search distribution after the update.
    DistributionMean,
}

impl fmt::Display for CenterStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CenterStrategy::PopulationBest => "population-best",
            CenterStrategy::BestSoFar => "best-so-far",
            CenterStrategy::DistributionMean => "distribution-mean",
        })
    }
}

impl FromStr for CenterStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "population-best" | "population_best" => Ok(CenterStrategy::PopulationBest),
            "best-so-far" | "best_so_far" => Ok(CenterStrategy::BestSoFar),
            "distribution-mean" | "distribution_mean" => Ok(CenterStrategy::DistributionMean),
            other => Err(Error::Config(format!("unknown center strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsConfig {
    /// Batch size, also the number of instances.
    pub k: usize,
    pub d_min: f64,
    /// Total number of objective evaluations.
    pub budget: usize,
    pub center_strategy: CenterStrategy,
    /// Move converged instances to the front of the cascade.
    pub reorder_on_convergence: bool,
    /// Uniform draws allowed per initial mean.
    pub init_rejection_cap: usize,
    /// Rejected candidates allowed per instance and generation;
    /// `None` means `100 * lambda`.
    pub candidate_rejection_cap: Option<usize>,
    pub seed: u64,
    /// Keep a generation-stamped log of every tabu region.
    pub record_regions: bool,
}

impl DsConfig {
    pub fn new(k: usize, d_min: f64, budget: usize, seed: u64) -> Self {
        DsConfig {
            k,
            d_min,
            budget,
            center_strategy: CenterStrategy::PopulationBest,
            reorder_on_convergence: false,
            init_rejection_cap: 100_000,
            candidate_rejection_cap: None,
            seed,
            record_regions: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.d_min > 0.0 && self.d_min.is_finite()) {
            return Err(Error::Config(format!(
                "d_min must be positive, got {}",
                self.d_min
            )));
        }
        if self.init_rejection_cap == 0 || self.candidate_rejection_cap == Some(0) {
            return Err(Error::Config("rejection caps must be positive".into()));
        }
        Ok(())
    }
}

/// A closed-complement ball: candidates at distance `< radius` are tabu.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabuRegion {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Cascade position of the owning instance.
    pub owner: usize,
    pub active: bool,
}

/// Draws `k` uniform means, accepting mean `i` only if it is at least
/// `d_min` away from every previously accepted mean.
pub fn init_diverse_means<R: Rng + ?Sized>(
    k: usize,
    bounds: &Bounds,
    d_min: f64,
    cap: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let diameter = bounds.diameter();
    if d_min > diameter {
        return Err(Error::InfeasibleInitialization(format!(
            "d_min {d_min} exceeds the box diameter {diameter}"
        )));
    }
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(k);
    for i in 0..k {
        let accepted = (0..cap)
            .map(|_| bounds.sample_uniform(rng))
            .find(|x| means.iter().all(|m| distance(m, x) >= d_min));
        match accepted {
            Some(x) => means.push(x),
            None => {
                return Err(Error::InfeasibleInitialization(format!(
                    "mean {i} not placed after {cap} draws (k = {k}, d_min = {d_min})"
                )))
            }
        }
    }
    Ok(means)
}

/// Cascade check with a caller-supplied metric.
pub fn is_valid_candidate_with<D>(
    x: &[f64],
    instance_index: usize,
    regions: &[TabuRegion],
    dist: D,
) -> bool
where
    D: Fn(&[f64], &[f64]) -> f64,
{
    regions
        .iter()
        .filter(|r| r.active && r.owner < instance_index)
        .all(|r| dist(x, &r.center) >= r.radius)
}

/// `true` iff `x` is outside every active tabu region owned by an instance
/// earlier in the cascade. The first instance is never constrained.
pub fn is_valid_candidate(x: &[f64], instance_index: usize, regions: &[TabuRegion]) -> bool {
    is_valid_candidate_with(x, instance_index, regions, distance)
}

/// One cascade member: its CMA-ES state, tabu region and best point.
#[derive(Debug, Clone)]
pub struct CascadeInstance {
    pub id: usize,
    pub state: CmaState,
    pub region: TabuRegion,
    pub best: Option<EvaluatedPoint>,
}

impl CascadeInstance {
    fn observe(&mut self, points: &[EvaluatedPoint]) {
        for p in points {
            let better = match &self.best {
                Some(b) => fitness_order(p, b).is_lt(),
                None => true,
            };
            if better {
                self.best = Some(p.clone());
            }
        }
    }

    fn freeze_center(&mut self) {
        if let Some(best) = &self.best {
            self.region.center = best.x.clone();
        }
    }
}

/// New tabu region for `instance` after a generation that evaluated
/// `population`.
pub fn update_tabu_center(
    instance: &CascadeInstance,
    population: &[EvaluatedPoint],
    strategy: CenterStrategy,
) -> Result<TabuRegion> {
    let center = match strategy {
        CenterStrategy::PopulationBest => population
            .iter()
            .min_by(|a, b| fitness_order(a, b))
            .ok_or(Error::NoPopulation)?
            .x
            .clone(),
        CenterStrategy::BestSoFar => {
            let from_population = population.iter().min_by(|a, b| fitness_order(a, b));
            let best = match (&instance.best, from_population) {
                (Some(a), Some(b)) => Some(if fitness_order(b, a).is_lt() { b } else { a }),
                (a, b) => a.as_ref().or(b),
            };
            best.ok_or(Error::NoPopulation)?.x.clone()
        }
        CenterStrategy::DistributionMean => instance.state.mean().to_vec(),
    };
    Ok(TabuRegion {
        center,
        ..instance.region.clone()
    })
}

/// A region as it stood at the end of one instance's turn in a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionLogEntry {
    pub generation: usize,
    pub instance: usize,
    pub rank: usize,
    pub center: Vec<f64>,
    pub active: bool,
}

/// Evaluation-index range covered by one synchronized round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSpan {
    pub generation: usize,
    pub epoch: usize,
    pub eval_start: usize,
    pub eval_end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStart {
    pub epoch: usize,
    pub first_generation: usize,
    pub means: Vec<Vec<f64>>,
}

/// Entries are appended in processing order: within a round, an instance's
/// entry follows the entries of every instance sampled before it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegionLog {
    pub d_min: f64,
    pub entries: Vec<RegionLogEntry>,
    pub rounds: Vec<RoundSpan>,
    pub epochs: Vec<EpochStart>,
}

impl RegionLog {
    /// `generation,instance,c0,...,c{D-1},active` lines with a header.
    pub fn to_csv(&self) -> String {
        let dim = self.entries.first().map_or(0, |e| e.center.len());
        let mut out = String::from("generation,instance");
        for j in 0..dim {
            out.push_str(&format!(",c{j}"));
        }
        out.push_str(",active\n");
        for e in &self.entries {
            out.push_str(&format!("{},{}", e.generation, e.instance));
            for c in &e.center {
                out.push_str(&format!(",{c}"));
            }
            out.push_str(&format!(",{}\n", e.active));
        }
        out
    }

    /// Latest logged center of every instance among rounds ending at or
    /// before evaluation `eval_limit`.
    pub fn centers_at(&self, eval_limit: usize) -> Vec<&RegionLogEntry> {
        let Some(round) = self.rounds.iter().rev().find(|r| r.eval_end <= eval_limit) else {
            return Vec::new();
        };
        self.entries
            .iter()
            .filter(|e| e.generation == round.generation)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct DsRun {
    pub trajectory: Trajectory,
    pub region_log: Option<RegionLog>,
    pub restarts: usize,
    /// Candidates drawn but rejected by the cascade check.
    pub rejected: usize,
}

/// Runs the cascade on `fun` until exactly `config.budget` evaluations have
/// been spent. Rejected candidates cost nothing.
pub fn run_ds(config: &DsConfig, fun: &mut ObjectiveFunction) -> Result<DsRun> {
    config.validate()?;
    let dim = fun.dimension();
    let bounds = fun.bounds().clone();
    let params = CmaParams::defaults(dim);
    let (lambda, mu) = (params.lambda, params.mu);
    if config.budget < config.k * lambda {
        warn!(
            "budget {} is below k * lambda = {}; some instances will barely move",
            config.budget,
            config.k * lambda
        );
    }
    let candidate_cap = config.candidate_rejection_cap.unwrap_or(100 * lambda);
    let mut rng = rng_from_seed(config.seed);
    let mut trajectory = Trajectory::new(fun.id(), ALGORITHM_ID);
    let mut log = config.record_regions.then(|| RegionLog {
        d_min: config.d_min,
        ..Default::default()
    });
    let mut generation = 0;
    let mut epoch = 0;
    let mut rejected = 0;

    while trajectory.len() < config.budget {
        let means = init_diverse_means(
            config.k,
            &bounds,
            config.d_min,
            config.init_rejection_cap,
            &mut rng,
        )?;
        if let Some(log) = &mut log {
            log.epochs.push(EpochStart {
                epoch,
                first_generation: generation + 1,
                means: means.clone(),
            });
        }
        let mut instances = means
            .into_iter()
            .enumerate()
            .map(|(id, mean)| {
                let region = TabuRegion {
                    center: mean.clone(),
                    radius: config.d_min,
                    owner: id,
                    active: true,
                };
                let state = init_cma(dim, mean, params.clone(), &bounds, rng.next_u64())?;
                Ok(CascadeInstance {
                    id,
                    state,
                    region,
                    best: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        // order[rank] = instance id
        let mut order: Vec<usize> = (0..config.k).collect();
        let mut converged: Vec<usize> = Vec::new();

        while trajectory.len() < config.budget && !instances.iter().all(|i| i.state.is_stopped()) {
            generation += 1;
            let eval_start = trajectory.len();
            for rank in 0..config.k {
                let id = order[rank];
                if !instances[id].state.is_stopped() {
                    let regions: Vec<TabuRegion> = order[..rank]
                        .iter()
                        .map(|&j| instances[j].region.clone())
                        .collect();
                    let population = sample_generation(
                        &mut instances[id],
                        rank,
                        &regions,
                        fun,
                        &bounds,
                        config,
                        candidate_cap,
                        &mut trajectory,
                        &mut rejected,
                    )?;
                    let instance = &mut instances[id];
                    let (points, stalled) = match population {
                        Generation::Full(points) | Generation::OutOfBudget(points) => {
                            (points, false)
                        }
                        Generation::Partial(points) => (points, true),
                    };
                    instance.observe(&points);
                    if points.len() >= mu {
                        let pop: Vec<(Vec<f64>, f64)> =
                            points.iter().map(|p| (p.x.clone(), p.f)).collect();
                        instance.state.tell(&pop)?;
                        if !instance.state.is_stopped() {
                            instance.region =
                                update_tabu_center(instance, &points, config.center_strategy)?;
                        }
                    } else if stalled {
                        instance.state.force_stop(StopReason::Stalled);
                    } else if !points.is_empty() {
                        // budget ran out mid-generation: too few points to update the distribution
                        instance.region =
                            update_tabu_center(instance, &points, config.center_strategy)?;
                    }
                    if instance.state.is_stopped() {
                        instance.freeze_center();
                        if !converged.contains(&id) {
                            converged.push(id);
                        }
                    }
                }
                if let Some(log) = &mut log {
                    let region = &instances[id].region;
                    log.entries.push(RegionLogEntry {
                        generation,
                        instance: id,
                        rank,
                        center: region.center.clone(),
                        active: region.active,
                    });
                }
            }
            if let Some(log) = &mut log {
                log.rounds.push(RoundSpan {
                    generation,
                    epoch,
                    eval_start,
                    eval_end: trajectory.len(),
                });
            }
            if config.reorder_on_convergence {
                let running = order.iter().copied().filter(|id| !converged.contains(id));
                order = converged.iter().copied().chain(running).collect::<Vec<_>>();
                for (rank, &id) in order.iter().enumerate() {
                    instances[id].region.owner = rank;
                }
            }
        }
        epoch += 1;
    }
    Ok(DsRun {
        trajectory,
        region_log: log,
        restarts: epoch.saturating_sub(1),
        rejected,
    })
}

enum Generation {
    /// `lambda` valid candidates were evaluated.
    Full(Vec<EvaluatedPoint>),
    /// The rejection cap was hit first.
    Partial(Vec<EvaluatedPoint>),
    /// The evaluation budget ran out first.
    OutOfBudget(Vec<EvaluatedPoint>),
}

#[allow(clippy::too_many_arguments)]
fn sample_generation(
    instance: &mut CascadeInstance,
    rank: usize,
    regions: &[TabuRegion],
    fun: &mut ObjectiveFunction,
    bounds: &Bounds,
    config: &DsConfig,
    candidate_cap: usize,
    trajectory: &mut Trajectory,
    rejected_total: &mut usize,
) -> Result<Generation> {
    let lambda = instance.state.params().lambda;
    let mut points = Vec::with_capacity(lambda);
    let mut rejections = 0;
    while points.len() < lambda {
        if trajectory.len() >= config.budget {
            return Ok(Generation::OutOfBudget(points));
        }
        let x = instance.state.ask_one(bounds)?;
        if !is_valid_candidate(&x, rank, regions) {
            rejections += 1;
            *rejected_total += 1;
            if rejections >= candidate_cap {
                return Ok(Generation::Partial(points));
            }
            continue;
        }
        let f = fun.evaluate(&x)?;
        points.push(trajectory.push(x, f, instance.id as i64).clone());
    }
    Ok(Generation::Full(points))
}
