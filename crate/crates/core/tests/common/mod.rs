#![allow(dead_code)]

use cmaes_ds::cascade::RegionLog;
use cmaes_ds::point::{EvaluatedPoint, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Random 2-D portfolio with distinct fitness values and a d_min that makes
/// the instance non-trivial.
pub fn random_instance(seed: u64, max_len: usize) -> (Vec<EvaluatedPoint>, usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(4..=max_len);
    let dim = rng.random_range(1..=3);
    let points = (0..n)
        .map(|i| EvaluatedPoint {
            x: (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect(),
            f: rng.random_range(-10.0..10.0),
            eval_index: i,
            instance_id: 0,
        })
        .collect();
    let k = rng.random_range(1..=4);
    let d_min = rng.random_range(0.5..5.0);
    (points, k, d_min)
}

/// Exhaustive search for the forced-leader problem. Returns the chosen
/// indices of the largest feasible subset of size at most `k` containing the
/// best point, minimal in fitness sum among those.
pub fn brute_force(points: &[EvaluatedPoint], k: usize, d_min: f64) -> (Vec<usize>, f64) {
    let leader = (0..points.len())
        .min_by(|&a, &b| {
            points[a]
                .f
                .total_cmp(&points[b].f)
                .then(points[a].eval_index.cmp(&points[b].eval_index))
        })
        .unwrap();
    let others: Vec<usize> = (0..points.len()).filter(|&i| i != leader).collect();
    let mut best: (Vec<usize>, f64) = (vec![leader], points[leader].f);
    let mut chosen = vec![leader];
    fn recurse(
        points: &[EvaluatedPoint],
        others: &[usize],
        start: usize,
        k: usize,
        d_min: f64,
        chosen: &mut Vec<usize>,
        best: &mut (Vec<usize>, f64),
    ) {
        let sum: f64 = chosen.iter().map(|&i| points[i].f).sum();
        if chosen.len() > best.0.len() || (chosen.len() == best.0.len() && sum < best.1) {
            *best = (chosen.clone(), sum);
        }
        if chosen.len() == k {
            return;
        }
        for (pos, &i) in others.iter().enumerate().skip(start) {
            if chosen
                .iter()
                .all(|&j| dist(&points[i].x, &points[j].x) >= d_min)
            {
                chosen.push(i);
                recurse(points, others, pos + 1, k, d_min, chosen, best);
                chosen.pop();
            }
        }
    }
    recurse(points, &others, 0, k, d_min, &mut chosen, &mut best);
    best
}

/// Checks every evaluated point of the run against the regions logged for
/// its generation and returns a description of each violation.
pub fn replay_violations(trajectory: &Trajectory, log: &RegionLog) -> Vec<String> {
    let mut violations = Vec::new();
    let mut covered = 0;
    for round in &log.rounds {
        let entries: Vec<_> = log
            .entries
            .iter()
            .filter(|e| e.generation == round.generation)
            .collect();
        for p in &trajectory.points[round.eval_start..round.eval_end] {
            covered += 1;
            let Some(own) = entries.iter().find(|e| e.instance as i64 == p.instance_id) else {
                violations.push(format!(
                    "eval {}: instance {} not logged",
                    p.eval_index, p.instance_id
                ));
                continue;
            };
            for e in entries.iter().filter(|e| e.rank < own.rank && e.active) {
                let d = dist(&p.x, &e.center);
                if d < log.d_min {
                    violations.push(format!(
                        "eval {} (instance {}, rank {}) is {d} from rank {} center",
                        p.eval_index, p.instance_id, own.rank, e.rank
                    ));
                }
            }
        }
    }
    if covered != trajectory.len() {
        violations.push(format!(
            "rounds cover {covered} of {} evaluations",
            trajectory.len()
        ));
    }
    for epoch in &log.epochs {
        for i in 0..epoch.means.len() {
            for j in 0..i {
                if dist(&epoch.means[i], &epoch.means[j]) < log.d_min {
                    violations.push(format!(
                        "epoch {}: means {j} and {i} too close",
                        epoch.epoch
                    ));
                }
            }
        }
    }
    violations
}
