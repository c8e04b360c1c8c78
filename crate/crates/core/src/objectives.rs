//! Seeded suite of BBOB-style benchmark functions on `[-5, 5]^D`.
//!
//! Every function is `f(x) = f_opt + g(z)` with `z = x - x_opt` and a core
//! `g` whose global minimum is `0` at `z = 0` (Rosenbrock is shifted so its
//! minimizer also maps onto `x_opt`). Optimum location and value are drawn
//! from a seeded stream, standing in for rotated/oscillated COCO instances.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Bounds;
use crate::seeding::{derive_seed, rng_from_seed};

pub const LOWER: f64 = -5.0;
pub const UPPER: f64 = 5.0;

const PEAK_COUNT: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Group {
    Separable,
    LowModerateConditioning,
    HighConditioningUnimodal,
    MultimodalStrongStructure,
    MultimodalWeakStructure,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Separable => "separable",
            Group::LowModerateConditioning => "low-moderate-conditioning",
            Group::HighConditioningUnimodal => "high-conditioning-unimodal",
            Group::MultimodalStrongStructure => "multimodal-strong-structure",
            Group::MultimodalWeakStructure => "multimodal-weak-structure",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Sphere,
    Ellipsoid,
    RastriginSep,
    Rosenbrock,
    BentCigar,
    Discus,
    DifferentPowers,
    SchaffersF7,
    Griewank,
    GaussPeaks,
}

impl Kind {
    pub const ALL: [Kind; 10] = [
        Kind::Sphere,
        Kind::Ellipsoid,
        Kind::RastriginSep,
        Kind::Rosenbrock,
        Kind::BentCigar,
        Kind::Discus,
        Kind::DifferentPowers,
        Kind::SchaffersF7,
        Kind::Griewank,
        Kind::GaussPeaks,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Kind::Sphere => "sphere",
            Kind::Ellipsoid => "ellipsoid",
            Kind::RastriginSep => "rastrigin_sep",
            Kind::Rosenbrock => "rosenbrock",
            Kind::BentCigar => "bent_cigar",
            Kind::Discus => "discus",
            Kind::DifferentPowers => "different_powers",
            Kind::SchaffersF7 => "schaffers_f7",
            Kind::Griewank => "griewank",
            Kind::GaussPeaks => "gauss_peaks",
        }
    }

    pub fn from_id(id: &str) -> Result<Kind> {
        Kind::ALL
            .into_iter()
            .find(|k| k.id() == id)
            .ok_or_else(|| Error::UnknownFunction(id.to_string()))
    }

    pub fn group(self) -> Group {
        match self {
            Kind::Sphere | Kind::Ellipsoid | Kind::RastriginSep => Group::Separable,
            Kind::Rosenbrock => Group::LowModerateConditioning,
            Kind::BentCigar | Kind::Discus | Kind::DifferentPowers => {
                Group::HighConditioningUnimodal
            }
            Kind::SchaffersF7 | Kind::Griewank => Group::MultimodalStrongStructure,
            Kind::GaussPeaks => Group::MultimodalWeakStructure,
        }
    }

    pub fn formula_name(self) -> &'static str {
        match self {
            Kind::Sphere => "sum z_i^2",
            Kind::Ellipsoid => "sum 10^(6(i-1)/(D-1)) z_i^2",
            Kind::RastriginSep => "10(D - sum cos(2 pi z_i)) + sum z_i^2",
            Kind::Rosenbrock => "sum 100(z_i^2 - z_(i+1))^2 + (z_i - 1)^2",
            Kind::BentCigar => "z_1^2 + 10^6 sum_(i>=2) z_i^2",
            Kind::Discus => "10^6 z_1^2 + sum_(i>=2) z_i^2",
            Kind::DifferentPowers => "sum |z_i|^(2 + 4(i-1)/(D-1))",
            Kind::SchaffersF7 => "[mean(sqrt s_i + sqrt s_i sin^2(50 s_i^0.2))]^2",
            Kind::Griewank => "sum z_i^2/4000 - prod cos(z_i/sqrt(i)) + 1",
            Kind::GaussPeaks => "H - max_j h_j exp(-|x - c_j|^2 / (2 sigma_j^2))",
        }
    }
}

/// The seeded peak field of the Gaussian-peaks landscape. Peak 0 is the
/// highest and sits at `x_opt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Peaks {
    heights: Vec<f64>,
    centers: Vec<Vec<f64>>,
    widths: Vec<f64>,
}

/// A benchmark function instance with a known global optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveFunction {
    kind: Kind,
    dimension: usize,
    bounds: Bounds,
    x_opt: Vec<f64>,
    f_opt: f64,
    peaks: Option<Peaks>,
    eval_count: u64,
}

/// Instantiates a registered function at `dimension` with a seeded optimum.
pub fn make_function(spec_id: &str, dimension: usize, seed: u64) -> Result<ObjectiveFunction> {
    let kind = Kind::from_id(spec_id)?;
    ObjectiveFunction::new(kind, dimension, seed)
}

impl ObjectiveFunction {
    pub fn new(kind: Kind, dimension: usize, seed: u64) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidDimension(dimension));
        }
        let mut rng = rng_from_seed(derive_seed(seed, kind as u64));
        let x_opt: Vec<f64> = (0..dimension)
            .map(|_| rng.random_range(-4.0..=4.0))
            .collect();
        let f_opt = rng.random_range(-100.0..=100.0);
        let peaks = (kind == Kind::GaussPeaks).then(|| {
            let mut heights: Vec<f64> = (0..PEAK_COUNT)
                .map(|_| rng.random_range(1.0..=10.0))
                .collect();
            let top = (0..PEAK_COUNT)
                .max_by(|&a, &b| heights[a].total_cmp(&heights[b]))
                .unwrap();
            heights.swap(0, top);
            let centers = (0..PEAK_COUNT)
                .map(|j| {
                    if j == 0 {
                        x_opt.clone()
                    } else {
                        (0..dimension)
                            .map(|_| rng.random_range(-4.0..=4.0))
                            .collect()
                    }
                })
                .collect();
            let widths = (0..PEAK_COUNT)
                .map(|_| rng.random_range(0.5..=2.0))
                .collect();
            Peaks {
                heights,
                centers,
                widths,
            }
        });
        Ok(ObjectiveFunction {
            kind,
            dimension,
            bounds: Bounds::cube(dimension, LOWER, UPPER),
            x_opt,
            f_opt,
            peaks,
            eval_count: 0,
        })
    }

    pub fn id(&self) -> &'static str {
        self.kind.id()
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn group(&self) -> Group {
        self.kind.group()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn x_opt(&self) -> &[f64] {
        &self.x_opt
    }

    pub fn f_opt(&self) -> f64 {
        self.f_opt
    }

    pub fn eval_count(&self) -> u64 {
        self.eval_count
    }

    /// Moves the optimum; used by invariance checks.
    pub fn with_optimum(mut self, x_opt: Vec<f64>, f_opt: f64) -> Result<Self> {
        if x_opt.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: x_opt.len(),
            });
        }
        if let Some(peaks) = &mut self.peaks {
            let shift: Vec<f64> = x_opt.iter().zip(&self.x_opt).map(|(a, b)| a - b).collect();
            for c in &mut peaks.centers {
                c.iter_mut().zip(&shift).for_each(|(v, s)| *v += s);
            }
        }
        self.x_opt = x_opt;
        self.f_opt = f_opt;
        Ok(self)
    }

    /// Evaluates `f(x)` and counts the evaluation. Points outside the box are
    /// evaluated as-is.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        self.eval_count += 1;
        Ok(self.f_opt + self.core(x))
    }

    /// `|value - f_opt|`.
    pub fn loss(&self, value: f64) -> f64 {
        (value - self.f_opt).abs()
    }

    fn core(&self, x: &[f64]) -> f64 {
        let d = self.dimension;
        let z = x.iter().zip(&self.x_opt).map(|(a, b)| a - b);
        // exponent ramp (i-1)/(D-1) for i = 1..D
        let ramp = |i: usize| i as f64 / (d - 1) as f64;
        match self.kind {
            Kind::Sphere => z.map(|v| v * v).sum(),
            Kind::Ellipsoid => z
                .enumerate()
                .map(|(i, v)| 10f64.powf(6.0 * ramp(i)) * v * v)
                .sum(),
            Kind::RastriginSep => {
                let (cos_sum, sq_sum) = z.fold((0.0, 0.0), |(c, s), v| {
                    (c + (2.0 * PI * v).cos(), s + v * v)
                });
                10.0 * (d as f64 - cos_sum) + sq_sum
            }
            Kind::Rosenbrock => {
                let z: Vec<f64> = z.map(|v| v + 1.0).collect();
                z.windows(2)
                    .map(|w| 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2))
                    .sum()
            }
            Kind::BentCigar => z
                .enumerate()
                .map(|(i, v)| if i == 0 { v * v } else { 1e6 * v * v })
                .sum(),
            Kind::Discus => z
                .enumerate()
                .map(|(i, v)| if i == 0 { 1e6 * v * v } else { v * v })
                .sum(),
            Kind::DifferentPowers => z
                .enumerate()
                .map(|(i, v)| v.abs().powf(2.0 + 4.0 * ramp(i)))
                .sum(),
            Kind::SchaffersF7 => {
                let z: Vec<f64> = z.collect();
                let mean = z
                    .windows(2)
                    .map(|w| {
                        let s = (w[0] * w[0] + w[1] * w[1]).sqrt();
                        let root = s.sqrt();
                        root + root * (50.0 * s.powf(0.2)).sin().powi(2)
                    })
                    .sum::<f64>()
                    / (d - 1) as f64;
                mean * mean
            }
            Kind::Griewank => {
                let (sum, prod) = z.enumerate().fold((0.0, 1.0), |(s, p), (i, v)| {
                    (s + v * v / 4000.0, p * (v / ((i + 1) as f64).sqrt()).cos())
                });
                sum - prod + 1.0
            }
            Kind::GaussPeaks => {
                let peaks = self
                    .peaks
                    .as_ref()
                    .expect("peak field present for gauss_peaks");
                let top = peaks
                    .heights
                    .iter()
                    .zip(&peaks.centers)
                    .zip(&peaks.widths)
                    .map(|((h, c), w)| {
                        let sq: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                        h * (-sq / (2.0 * w * w)).exp()
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                peaks.heights[0] - top
            }
        }
    }
}

/// One `id,group,formula` line per registered function.
pub fn registry_listing() -> Vec<String> {
    Kind::ALL
        .iter()
        .map(|k| format!("{},{},{}", k.id(), k.group(), k.formula_name()))
        .collect()
}
