//! Evaluated points, trajectories and the box-shaped search space.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    /// The hypercube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Bounds {
            lower: vec![lo; dim],
            upper: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((v, lo), hi)| *lo <= *v && *v <= *hi)
    }

    pub fn clip(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Length of the box's main diagonal.
    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| rng.random_range(*lo..=*hi))
            .collect()
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A search-space vector together with its objective value and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedPoint {
    pub x: Vec<f64>,
    pub f: f64,
    pub eval_index: usize,
    /// Producing optimizer instance, `-1` when the producer has no instances.
    pub instance_id: i64,
}

/// Fitness order with ties broken by the lower evaluation index.
pub fn fitness_order(a: &EvaluatedPoint, b: &EvaluatedPoint) -> std::cmp::Ordering {
    a.f.total_cmp(&b.f).then(a.eval_index.cmp(&b.eval_index))
}

/// The ordered portfolio of every point evaluated by one run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub function_id: String,
    pub algorithm: String,
    pub points: Vec<EvaluatedPoint>,
}

impl Trajectory {
    pub fn new(function_id: impl Into<String>, algorithm: impl Into<String>) -> Self {
        Trajectory {
            function_id: function_id.into(),
            algorithm: algorithm.into(),
            points: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(|p| p.x.len())
    }

    /// Appends a point, stamping it with the next evaluation index.
    pub fn push(&mut self, x: Vec<f64>, f: f64, instance_id: i64) -> &EvaluatedPoint {
        let eval_index = self.points.len();
        self.points.push(EvaluatedPoint {
            x,
            f,
            eval_index,
            instance_id,
        });
        self.points.last().unwrap()
    }

    /// Lowest-fitness point, ties by lowest eval index.
    pub fn best(&self) -> Option<&EvaluatedPoint> {
        self.points.iter().min_by(|a, b| fitness_order(a, b))
    }
}
