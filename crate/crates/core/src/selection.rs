//! Extracting a batch of `k` points, pairwise at least `d_min` apart, from an
//! evaluated portfolio. Every method keeps the portfolio's best point as the
//! batch leader and then tries to minimize the batch's total fitness.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{distance, fitness_order, EvaluatedPoint};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Clearing,
    Greedy,
    Exact,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Clearing => "clearing",
            Method::Greedy => "greedy",
            Method::Exact => "exact",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clearing" => Ok(Method::Clearing),
            "greedy" => Ok(Method::Greedy),
            "exact" => Ok(Method::Exact),
            other => Err(Error::Config(format!("unknown selection method `{other}`"))),
        }
    }
}

/// Selected points, leader first, then in fitness order.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub points: Vec<EvaluatedPoint>,
    pub k_requested: usize,
    pub d_min: f64,
    pub complete: bool,
    pub method: Method,
    /// Only ever set by the exact method.
    pub proved_optimal: bool,
}

impl Batch {
    fn from_indices(
        portfolio: &[EvaluatedPoint],
        mut picked: Vec<usize>,
        k: usize,
        d_min: f64,
        method: Method,
    ) -> Self {
        picked.sort_by(|&a, &b| fitness_order(&portfolio[a], &portfolio[b]));
        let points: Vec<EvaluatedPoint> = picked.iter().map(|&i| portfolio[i].clone()).collect();
        Batch {
            complete: points.len() == k,
            points,
            k_requested: k,
            d_min,
            method,
            proved_optimal: false,
        }
    }

    pub fn objective(&self) -> f64 {
        self.points.iter().map(|p| p.f).sum()
    }

    pub fn to_json(&self) -> BatchJson {
        BatchJson {
            method: self.method,
            k_requested: self.k_requested,
            d_min: self.d_min,
            complete: self.complete,
            proved_optimal: self.proved_optimal,
            points: self
                .points
                .iter()
                .map(|p| BatchPointJson {
                    eval_index: p.eval_index,
                    x: p.x.clone(),
                    f: p.f,
                })
                .collect(),
        }
    }
}

/// On-disk batch record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchJson {
    pub method: Method,
    pub k_requested: usize,
    pub d_min: f64,
    pub complete: bool,
    pub proved_optimal: bool,
    pub points: Vec<BatchPointJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchPointJson {
    pub eval_index: usize,
    pub x: Vec<f64>,
    pub f: f64,
}

impl BatchJson {
    /// Rebuilds the batch; instance ids are looked up in `portfolio`.
    pub fn into_batch(self, portfolio: &[EvaluatedPoint]) -> Batch {
        let points = self
            .points
            .into_iter()
            .map(|p| EvaluatedPoint {
                instance_id: portfolio.get(p.eval_index).map_or(-1, |q| q.instance_id),
                x: p.x,
                f: p.f,
                eval_index: p.eval_index,
            })
            .collect();
        Batch {
            points,
            k_requested: self.k_requested,
            d_min: self.d_min,
            complete: self.complete,
            method: self.method,
            proved_optimal: self.proved_optimal,
        }
    }
}

fn sorted_indices(portfolio: &[EvaluatedPoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..portfolio.len()).collect();
    order.sort_by(|&a, &b| fitness_order(&portfolio[a], &portfolio[b]));
    order
}

/// Repeatedly takes the best remaining point and discards everything closer
/// than `d_min` to it.
pub fn clearing_select(portfolio: &[EvaluatedPoint], k: usize, d_min: f64) -> Result<Batch> {
    if portfolio.is_empty() {
        return Err(Error::EmptyPortfolio);
    }
    Ok(Batch::from_indices(
        portfolio,
        clearing_indices(portfolio, &sorted_indices(portfolio), k, d_min),
        k,
        d_min,
        Method::Clearing,
    ))
}

fn clearing_indices(
    portfolio: &[EvaluatedPoint],
    sorted: &[usize],
    k: usize,
    d_min: f64,
) -> Vec<usize> {
    let mut picked: Vec<usize> = Vec::with_capacity(k);
    for &i in sorted {
        if picked.len() == k {
            break;
        }
        if picked
            .iter()
            .all(|&j| distance(&portfolio[i].x, &portfolio[j].x) >= d_min)
        {
            picked.push(i);
        }
    }
    picked
}

/// Starts from the `k` best points and resolves distance violations against
/// a threshold that grows in `schedule_steps` equal steps up to `d_min`.
///
/// For the closest violating pair the worse member is swapped for the best
/// unused point compatible with the rest of the batch. If there is none, the
/// better member is swapped instead (never the leader). When neither works,
/// the batch is pruned to a feasible subset and returned incomplete.
pub fn greedy_select(
    portfolio: &[EvaluatedPoint],
    k: usize,
    d_min: f64,
    schedule_steps: usize,
) -> Result<Batch> {
    if portfolio.is_empty() {
        return Err(Error::EmptyPortfolio);
    }
    let steps = schedule_steps.max(1);
    let sorted = sorted_indices(portfolio);
    let leader = sorted[0];
    let mut members: Vec<usize> = sorted.iter().copied().take(k).collect();
    let mut used = vec![false; portfolio.len()];
    members.iter().for_each(|&m| used[m] = true);
    let dist = |a: usize, b: usize| distance(&portfolio[a].x, &portfolio[b].x);

    if members.len() < k {
        let kept = prune_to_feasible(portfolio, members, leader, d_min);
        return Ok(Batch::from_indices(
            portfolio,
            kept,
            k,
            d_min,
            Method::Greedy,
        ));
    }

    for s in 1..=steps {
        let threshold = if s == steps {
            d_min
        } else {
            d_min * s as f64 / steps as f64
        };
        while let Some((a, b)) = closest_violation(&members, threshold, dist) {
            let (better, worse) =
                if fitness_order(&portfolio[members[a]], &portfolio[members[b]]).is_le() {
                    (a, b)
                } else {
                    (b, a)
                };
            let replacement = |slot: usize, used: &[bool]| {
                sorted.iter().copied().find(|&c| {
                    !used[c]
                        && members
                            .iter()
                            .enumerate()
                            .all(|(pos, &m)| pos == slot || dist(c, m) >= threshold)
                })
            };
            let swap = match replacement(worse, &used) {
                Some(c) => Some((worse, c)),
                None if members[better] != leader => {
                    replacement(better, &used).map(|c| (better, c))
                }
                None => None,
            };
            match swap {
                Some((slot, c)) => {
                    members[slot] = c;
                    used[c] = true;
                }
                None => {
                    let kept = prune_to_feasible(portfolio, members, leader, d_min);
                    return Ok(Batch::from_indices(
                        portfolio,
                        kept,
                        k,
                        d_min,
                        Method::Greedy,
                    ));
                }
            }
        }
    }
    debug_assert!(closest_violation(&members, d_min, dist).is_none());
    Ok(Batch::from_indices(
        portfolio,
        members,
        k,
        d_min,
        Method::Greedy,
    ))
}

/// Positions of the closest pair closer than `threshold`.
fn closest_violation(
    members: &[usize],
    threshold: f64,
    dist: impl Fn(usize, usize) -> f64,
) -> Option<(usize, usize)> {
    let mut worst: Option<(f64, usize, usize)> = None;
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            let d = dist(members[a], members[b]);
            if d < threshold && worst.is_none_or(|(w, _, _)| d < w) {
                worst = Some((d, a, b));
            }
        }
    }
    worst.map(|(_, a, b)| (a, b))
}

/// Drops the worse member of the closest violating pair until the set is
/// feasible at `d_min`. The leader is never dropped.
fn prune_to_feasible(
    portfolio: &[EvaluatedPoint],
    mut members: Vec<usize>,
    leader: usize,
    d_min: f64,
) -> Vec<usize> {
    let dist = |a: usize, b: usize| distance(&portfolio[a].x, &portfolio[b].x);
    while let Some((a, b)) = closest_violation(&members, d_min, dist) {
        let worse = if fitness_order(&portfolio[members[a]], &portfolio[members[b]]).is_le() {
            b
        } else {
            a
        };
        let drop = if members[worse] == leader {
            if worse == a {
                b
            } else {
                a
            }
        } else {
            worse
        };
        members.remove(drop);
    }
    members
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactCaps {
    pub node_cap: u64,
    pub time_cap: Duration,
}

impl Default for ExactCaps {
    fn default() -> Self {
        ExactCaps {
            node_cap: 20_000_000,
            time_cap: Duration::from_secs(60),
        }
    }
}

/// Depth-first branch and bound over fitness-sorted points with the leader
/// fixed. Larger batches beat smaller ones; among equal sizes the lower total
/// fitness wins. Pruning uses the cheapest possible completion from the
/// still-compatible candidates and a count of how many remain.
pub fn exact_select(
    portfolio: &[EvaluatedPoint],
    k: usize,
    d_min: f64,
    caps: ExactCaps,
) -> Result<Batch> {
    if portfolio.is_empty() {
        return Err(Error::EmptyPortfolio);
    }
    let sorted = sorted_indices(portfolio);
    let n = sorted.len();
    let fitness: Vec<f64> = sorted.iter().map(|&i| portfolio[i].f).collect();
    // compat[p]: positions q > p at least d_min from p
    let compat: Vec<FixedBitSet> = (0..n)
        .map(|p| {
            let mut set = FixedBitSet::with_capacity(n);
            for q in p + 1..n {
                if distance(&portfolio[sorted[p]].x, &portfolio[sorted[q]].x) >= d_min {
                    set.insert(q);
                }
            }
            set
        })
        .collect();

    let mut position = vec![0; n];
    for (p, &i) in sorted.iter().enumerate() {
        position[i] = p;
    }
    let seed: Vec<usize> = clearing_indices(portfolio, &sorted, k, d_min)
        .iter()
        .map(|&i| position[i])
        .collect();
    let mut search = BranchAndBound {
        k,
        fitness: &fitness,
        compat: &compat,
        best_size: seed.len(),
        best_sum: seed.iter().map(|&p| fitness[p]).sum(),
        best: seed,
        nodes: 0,
        caps,
        started: Instant::now(),
        aborted: false,
    };
    if k > 0 {
        let mut chosen = vec![0];
        search.descend(&mut chosen, fitness[0], compat[0].clone());
    }
    let proved = !search.aborted;
    let picked: Vec<usize> = search.best.iter().map(|&p| sorted[p]).collect();
    let mut batch = Batch::from_indices(portfolio, picked, k, d_min, Method::Exact);
    batch.proved_optimal = proved;
    Ok(batch)
}

struct BranchAndBound<'a> {
    k: usize,
    fitness: &'a [f64],
    compat: &'a [FixedBitSet],
    best: Vec<usize>,
    best_size: usize,
    best_sum: f64,
    nodes: u64,
    caps: ExactCaps,
    started: Instant,
    aborted: bool,
}

impl BranchAndBound<'_> {
    fn descend(&mut self, chosen: &mut Vec<usize>, sum: f64, mut candidates: FixedBitSet) {
        self.nodes += 1;
        if self.nodes > self.caps.node_cap
            || (self.nodes.is_multiple_of(4096) && self.started.elapsed() > self.caps.time_cap)
        {
            self.aborted = true;
        }
        if self.aborted {
            return;
        }
        let size = chosen.len();
        if size > self.best_size || (size == self.best_size && sum < self.best_sum) {
            self.best = chosen.clone();
            self.best_size = size;
            self.best_sum = sum;
        }
        if size == self.k {
            return;
        }
        while let Some(p) = candidates.minimum() {
            if self.bounded_out(size, sum, &candidates) {
                return;
            }
            candidates.set(p, false);
            let mut next = candidates.clone();
            next.intersect_with(&self.compat[p]);
            chosen.push(p);
            self.descend(chosen, sum + self.fitness[p], next);
            chosen.pop();
            if self.aborted {
                return;
            }
        }
    }

    /// True when no completion from `candidates` can beat the incumbent.
    fn bounded_out(&self, size: usize, sum: f64, candidates: &FixedBitSet) -> bool {
        let slots = self.k - size;
        let available = candidates.count_ones(..);
        let reachable = size + slots.min(available);
        if reachable < self.best_size {
            return true;
        }
        if reachable > self.best_size {
            return false;
        }
        let cheapest: f64 = candidates
            .ones()
            .take(reachable - size)
            .map(|p| self.fitness[p])
            .sum();
        sum + cheapest >= self.best_sum
    }
}

/// Closed pairwise-distance check plus the leader rule against `portfolio`.
pub fn verify_batch(batch: &Batch, portfolio: &[EvaluatedPoint], d_min: f64) -> bool {
    let spaced = batch.points.iter().enumerate().all(|(i, p)| {
        batch.points[i + 1..]
            .iter()
            .all(|q| distance(&p.x, &q.x) >= d_min)
    });
    let led = match (
        batch.points.first(),
        portfolio.iter().min_by(|a, b| fitness_order(a, b)),
    ) {
        (Some(leader), Some(best)) => leader.eval_index == best.eval_index && leader.f == best.f,
        (None, _) => true,
        (Some(_), None) => false,
    };
    spaced && led
}
