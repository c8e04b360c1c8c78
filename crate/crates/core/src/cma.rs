//! (μ/μ_w, λ) CMA-ES with an ask-one/tell interface.
//!
//! Sampling draws one candidate at a time so that a controller can reject
//! individual points before they are evaluated; `tell` accepts any
//! population between `mu` and `lambda` points.

use std::collections::VecDeque;
use std::fmt;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, SquareMatrix};
use crate::point::Bounds;
use crate::seeding::{rng_from_seed, StreamRng};

const MAX_RESAMPLES: usize = 100;
const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopReason {
    TolX,
    TolFun,
    TolFunHist,
    TolFunRel,
    TolStagnation,
    MaxIter,
    NumericalDegeneracy,
    /// Set externally when a controller cannot supply a population.
    Stalled,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopTolerances {
    pub tol_x: f64,
    pub tol_fun: f64,
    pub tol_fun_hist: f64,
    pub tol_fun_rel: f64,
    /// Window length, in iterations.
    pub tol_stagnation: usize,
    pub max_iter: u64,
}

impl StopTolerances {
    pub fn defaults(dim: usize) -> Self {
        StopTolerances {
            tol_x: 1e-11,
            tol_fun: 1e-11,
            tol_fun_hist: 1e-12,
            tol_fun_rel: 0.0,
            tol_stagnation: 146,
            max_iter: 1000 * (dim as u64).pow(2),
        }
    }
}

/// Strategy parameters. Build with [`CmaParams::defaults`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaParams {
    pub lambda: usize,
    pub mu: usize,
    pub sigma0: f64,
    /// Recombination weights of the `mu` best, positive, decreasing, sum 1.
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub tolerances: StopTolerances,
}

impl CmaParams {
    /// Default population `4 + ⌊3 ln D⌋` and step size 1.
    pub fn defaults(dim: usize) -> Self {
        let lambda = 4 + (3.0 * (dim as f64).ln()).floor() as usize;
        Self::with_lambda(dim, lambda)
    }

    pub fn with_lambda(dim: usize, lambda: usize) -> Self {
        let n = dim as f64;
        let mu = lambda / 2;
        let weights = default_weights(lambda, mu);
        let mu_eff = effective_mass(&weights);
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu =
            (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
        CmaParams {
            lambda,
            mu,
            sigma0: 1.0,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            tolerances: StopTolerances::defaults(dim),
        }
    }

    /// Length of the best-fitness history used by TolFun/TolFunHist.
    pub fn history_len(&self, dim: usize) -> usize {
        10 + (30.0 * dim as f64 / self.lambda as f64).ceil() as usize
    }
}

fn default_weights(lambda: usize, mu: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=mu)
        .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn effective_mass(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

#[derive(Debug, Clone)]
pub struct CmaState {
    dim: usize,
    params: CmaParams,
    pub(crate) mean: Vec<f64>,
    pub(crate) sigma: f64,
    cov: SquareMatrix,
    basis: SquareMatrix,
    eigenvalues: Vec<f64>,
    p_sigma: Vec<f64>,
    p_c: Vec<f64>,
    pub(crate) iteration: u64,
    best_history: VecDeque<f64>,
    stagnation_best: VecDeque<f64>,
    stagnation_median: VecDeque<f64>,
    last_range: f64,
    initial_median: Option<f64>,
    min_median: f64,
    chi_n: f64,
    rng: StreamRng,
    stop: Option<StopReason>,
}

/// Fresh state at `mean` with identity covariance, zero paths and `sigma0`.
pub fn init_cma(
    dim: usize,
    mean: Vec<f64>,
    params: CmaParams,
    bounds: &Bounds,
    seed: u64,
) -> Result<CmaState> {
    if mean.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: mean.len(),
        });
    }
    if !bounds.contains(&mean) {
        return Err(Error::InvalidMean);
    }
    let n = dim as f64;
    Ok(CmaState {
        dim,
        sigma: params.sigma0,
        params,
        mean,
        cov: SquareMatrix::identity(dim),
        basis: SquareMatrix::identity(dim),
        eigenvalues: vec![1.0; dim],
        p_sigma: vec![0.0; dim],
        p_c: vec![0.0; dim],
        iteration: 0,
        best_history: VecDeque::new(),
        stagnation_best: VecDeque::new(),
        stagnation_median: VecDeque::new(),
        last_range: f64::INFINITY,
        initial_median: None,
        min_median: f64::INFINITY,
        chi_n: n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n)),
        rng: rng_from_seed(seed),
        stop: None,
    })
}

impl CmaState {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &CmaParams {
        &self.params
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn covariance(&self) -> &SquareMatrix {
        &self.cov
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    pub fn is_stopped(&self) -> bool {
        self.stop.is_some()
    }

    /// Marks the state stopped; the first recorded reason is kept.
    pub fn force_stop(&mut self, reason: StopReason) {
        self.stop.get_or_insert(reason);
    }

    /// Draws one candidate `m + σ B diag(√d) z`. Out-of-box draws are
    /// resampled up to 100 times, then clipped. The distribution itself is
    /// left untouched.
    pub fn ask_one(&mut self, bounds: &Bounds) -> Result<Vec<f64>> {
        if let Some(reason) = self.stop {
            return Err(Error::AlreadyStopped(reason));
        }
        let mut x = self.draw();
        for _ in 0..MAX_RESAMPLES {
            if bounds.contains(&x) {
                return Ok(x);
            }
            x = self.draw();
        }
        bounds.clip(&mut x);
        Ok(x)
    }

    fn draw(&mut self) -> Vec<f64> {
        let scaled: Vec<f64> = self
            .eigenvalues
            .iter()
            .map(|d| {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                d.sqrt() * z
            })
            .collect();
        let y = self.basis.mul_vec(&scaled);
        self.mean
            .iter()
            .zip(y)
            .map(|(m, v)| m + self.sigma * v)
            .collect()
    }

    /// `C^{-1/2} v`
    fn inv_sqrt_cov(&self, v: &[f64]) -> Vec<f64> {
        let mut rotated = self.basis.tmul_vec(v);
        rotated
            .iter_mut()
            .zip(&self.eigenvalues)
            .for_each(|(r, d)| *r /= d.sqrt());
        self.basis.mul_vec(&rotated)
    }

    /// Updates mean, paths, covariance and step size from an evaluated
    /// population, then refreshes the stop flag.
    ///
    /// With fewer than `lambda` points, only the leading `min(mu, ⌊n/2⌋)`
    /// default weights are used, renormalized to sum to one.
    pub fn tell(&mut self, population: &[(Vec<f64>, f64)]) -> Result<()> {
        if let Some(reason) = self.stop {
            return Err(Error::AlreadyStopped(reason));
        }
        let p = &self.params;
        if population.len() < p.mu {
            return Err(Error::InsufficientPopulation {
                got: population.len(),
                mu: p.mu,
            });
        }
        if let Some((x, _)) = population.iter().find(|(x, _)| x.len() != self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        let weights: Vec<f64> = if population.len() >= p.lambda {
            p.weights.clone()
        } else {
            let used = (population.len() / 2).clamp(1, p.mu);
            let total: f64 = p.weights[..used].iter().sum();
            p.weights[..used].iter().map(|w| w / total).collect()
        };
        let mu_eff = effective_mass(&weights);

        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| population[a].1.total_cmp(&population[b].1).then(a.cmp(&b)));

        let n = self.dim as f64;
        let steps: Vec<Vec<f64>> = order[..weights.len()]
            .iter()
            .map(|&i| {
                population[i]
                    .0
                    .iter()
                    .zip(&self.mean)
                    .map(|(x, m)| (x - m) / self.sigma)
                    .collect()
            })
            .collect();
        let mut y_w = vec![0.0; self.dim];
        for (w, y) in weights.iter().zip(&steps) {
            y_w.iter_mut().zip(y).for_each(|(acc, v)| *acc += w * v);
        }
        for (m, v) in self.mean.iter_mut().zip(&y_w) {
            *m += self.sigma * v;
        }

        let (c_sigma, d_sigma, c_c, c_1, c_mu) = (p.c_sigma, p.d_sigma, p.c_c, p.c_1, p.c_mu);
        let whitened = self.inv_sqrt_cov(&y_w);
        let cs_norm = (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt();
        for (ps, v) in self.p_sigma.iter_mut().zip(&whitened) {
            *ps = (1.0 - c_sigma) * *ps + cs_norm * v;
        }
        let ps_norm = self.p_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
        let generations = (self.iteration + 1) as i32;
        let h_sigma = ps_norm / (1.0 - (1.0 - c_sigma).powi(2 * generations)).sqrt()
            < (1.4 + 2.0 / (n + 1.0)) * self.chi_n;
        let cc_norm = (c_c * (2.0 - c_c) * mu_eff).sqrt();
        for (pc, v) in self.p_c.iter_mut().zip(&y_w) {
            *pc = (1.0 - c_c) * *pc + if h_sigma { cc_norm * v } else { 0.0 };
        }
        let delta_h = if h_sigma { 0.0 } else { c_c * (2.0 - c_c) };

        let decay = 1.0 + c_1 * delta_h - c_1 - c_mu;
        for i in 0..self.dim {
            for j in i..self.dim {
                let rank_mu: f64 = weights
                    .iter()
                    .zip(&steps)
                    .map(|(w, y)| w * y[i] * y[j])
                    .sum();
                let v = decay * self.cov[(i, j)] + c_1 * self.p_c[i] * self.p_c[j] + c_mu * rank_mu;
                self.cov[(i, j)] = v;
            }
        }
        self.cov.symmetrize();
        self.sigma *= ((c_sigma / d_sigma) * (ps_norm / self.chi_n - 1.0)).exp();
        self.iteration += 1;

        let eigen_ok = match symmetric_eigen(&self.cov) {
            Some(e) => {
                self.eigenvalues = e.values;
                self.basis = e.vectors;
                true
            }
            None => false,
        };

        let sorted: Vec<f64> = order.iter().map(|&i| population[i].1).collect();
        let best = sorted[0];
        let median = median_of_sorted(&sorted);
        self.last_range = sorted[sorted.len() - 1] - best;
        let hist_len = self.params.history_len(self.dim);
        push_bounded(&mut self.best_history, best, hist_len);
        let window = self.params.tolerances.tol_stagnation;
        push_bounded(&mut self.stagnation_best, best, 2 * window);
        push_bounded(&mut self.stagnation_median, median, 2 * window);
        self.initial_median.get_or_insert(median);
        self.min_median = self.min_median.min(median);

        if !eigen_ok {
            self.stop = Some(StopReason::NumericalDegeneracy);
        } else {
            self.stop = should_stop(self);
        }
        Ok(())
    }
}

fn median_of_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn push_bounded(buf: &mut VecDeque<f64>, v: f64, cap: usize) {
    if buf.len() == cap {
        buf.pop_front();
    }
    buf.push_back(v);
}

fn span(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo
}

/// First triggered termination criterion, in the order TolX, TolFun,
/// TolFunHist, TolFunRel, TolStagnation, MaxIter, NumericalDegeneracy.
pub fn should_stop(state: &CmaState) -> Option<StopReason> {
    if let Some(reason @ StopReason::Stalled) = state.stop {
        return Some(reason);
    }
    let tol = &state.params.tolerances;
    let told = state.iteration > 0;

    let sigma = state.sigma;
    if told
        && state.p_c.iter().all(|pc| (sigma * pc).abs() < tol.tol_x)
        && state
            .cov
            .diagonal()
            .iter()
            .all(|c| sigma * c.sqrt() < tol.tol_x)
    {
        return Some(StopReason::TolX);
    }
    if told
        && state.last_range < tol.tol_fun
        && span(state.best_history.iter().copied()) < tol.tol_fun
    {
        return Some(StopReason::TolFun);
    }
    if state.best_history.len() == state.params.history_len(state.dim)
        && span(state.best_history.iter().copied()) < tol.tol_fun_hist
    {
        return Some(StopReason::TolFunHist);
    }
    if let Some(m0) = state.initial_median {
        if state.last_range < tol.tol_fun_rel * (m0 - state.min_median) {
            return Some(StopReason::TolFunRel);
        }
    }
    let window = tol.tol_stagnation;
    if state.stagnation_best.len() == 2 * window {
        let min_of = |buf: &VecDeque<f64>, range: std::ops::Range<usize>| {
            buf.range(range).copied().fold(f64::INFINITY, f64::min)
        };
        let recent_best = min_of(&state.stagnation_best, window..2 * window);
        let previous_best = min_of(&state.stagnation_best, 0..window);
        let recent_median = min_of(&state.stagnation_median, window..2 * window);
        let previous_median = min_of(&state.stagnation_median, 0..window);
        if recent_best >= previous_best && recent_median >= previous_median {
            return Some(StopReason::TolStagnation);
        }
    }
    if state.iteration >= tol.max_iter {
        return Some(StopReason::MaxIter);
    }
    let degenerate = !(sigma.is_finite() && sigma > 0.0)
        || !state.mean.iter().all(|m| m.is_finite())
        || !state.cov.is_finite()
        || {
            let lo = state
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let hi = state.eigenvalues.iter().copied().fold(0.0, f64::max);
            lo.is_nan() || lo <= 0.0 || hi / lo > MAX_CONDITION
        };
    if degenerate {
        return Some(StopReason::NumericalDegeneracy);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::make_function;

    fn big_box(dim: usize) -> Bounds {
        Bounds::cube(dim, -1e6, 1e6)
    }

    fn state(dim: usize, mean: Vec<f64>, seed: u64) -> CmaState {
        init_cma(
            dim,
            mean,
            CmaParams::defaults(dim),
            &Bounds::cube(dim, -5.0, 5.0),
            seed,
        )
        .unwrap()
    }

    /// Plain ask/tell loop minimizing `f`; returns the best loss seen.
    fn minimize(id: &str, dim: usize, budget: usize, seed: u64) -> f64 {
        let mut f = make_function(id, dim, seed).unwrap();
        let bounds = f.bounds().clone();
        let mut s = state(dim, vec![0.0; dim], seed);
        let lambda = s.params().lambda;
        let mut best = f64::INFINITY;
        let mut used = 0;
        while used + lambda <= budget && !s.is_stopped() {
            let pop: Vec<(Vec<f64>, f64)> = (0..lambda)
                .map(|_| {
                    let x = s.ask_one(&bounds).unwrap();
                    let v = f.evaluate(&x).unwrap();
                    (x, v)
                })
                .collect();
            used += lambda;
            best = pop.iter().map(|p| f.loss(p.1)).fold(best, f64::min);
            s.tell(&pop).unwrap();
        }
        best
    }

    #[test]
    fn default_population_sizes() {
        let p = CmaParams::defaults(10);
        assert_eq!((p.lambda, p.mu), (10, 5));
        let p = CmaParams::defaults(2);
        assert_eq!((p.lambda, p.mu), (6, 3));
        let p = CmaParams::defaults(5);
        assert_eq!((p.lambda, p.mu), (8, 4));
        assert_eq!(p.sigma0, 1.0);
    }

    #[test]
    fn weights_are_positive_decreasing_normalized() {
        for dim in 2..=20 {
            let p = CmaParams::defaults(dim);
            assert_eq!(p.weights.len(), p.mu);
            assert!(p.weights.iter().all(|w| *w > 0.0));
            assert!(p.weights.windows(2).all(|w| w[0] > w[1]));
            assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stopping_constants() {
        let t = StopTolerances::defaults(10);
        assert_eq!(t.tol_x, 1e-11);
        assert_eq!(t.tol_fun, 1e-11);
        assert_eq!(t.tol_fun_hist, 1e-12);
        assert_eq!(t.tol_fun_rel, 0.0);
        assert_eq!(t.tol_stagnation, 146);
        assert_eq!(t.max_iter, 100_000);
    }

    #[test]
    fn init_checks_mean() {
        let b = Bounds::cube(2, -5.0, 5.0);
        let err = init_cma(2, vec![6.0, 0.0], CmaParams::defaults(2), &b, 0).unwrap_err();
        assert!(matches!(err, Error::InvalidMean));
        let s = state(2, vec![1.0, 2.0], 0);
        assert_eq!(s.sigma(), 1.0);
        assert_eq!(s.covariance(), &SquareMatrix::identity(2));
        assert_eq!(s.iteration(), 0);
        assert!(should_stop(&s).is_none());
    }

    #[test]
    fn degenerate_sigma_samples_the_mean() {
        let mut params = CmaParams::defaults(3);
        params.sigma0 = 1e-300;
        let mean = vec![1.0, -2.0, 0.5];
        let mut s = init_cma(3, mean.clone(), params, &Bounds::cube(3, -5.0, 5.0), 3).unwrap();
        for _ in 0..100 {
            let x = s.ask_one(&Bounds::cube(3, -5.0, 5.0)).unwrap();
            assert!(x.iter().zip(&mean).all(|(a, b)| (a - b).abs() <= 1e-200));
        }
    }

    #[test]
    fn initial_samples_have_standard_normal_moments() {
        let mut s = init_cma(2, vec![0.0, 0.0], CmaParams::defaults(2), &big_box(2), 17).unwrap();
        let n = 10_000;
        let samples: Vec<Vec<f64>> = (0..n).map(|_| s.ask_one(&big_box(2)).unwrap()).collect();
        for c in 0..2 {
            let mean = samples.iter().map(|x| x[c]).sum::<f64>() / n as f64;
            let var = samples.iter().map(|x| (x[c] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
            assert!((var - 1.0).abs() < 0.1, "var {var}");
        }
        assert_eq!(s.iteration(), 0);
        assert_eq!(s.mean(), &[0.0, 0.0]);
    }

    #[test]
    fn corner_mean_samples_stay_in_box() {
        let b = Bounds::cube(4, -5.0, 5.0);
        let mut s = init_cma(4, vec![5.0; 4], CmaParams::defaults(4), &b, 1).unwrap();
        for _ in 0..500 {
            assert!(b.contains(&s.ask_one(&b).unwrap()));
        }
    }

    #[test]
    fn identical_population_keeps_mean() {
        let mut s = state(3, vec![1.0, 2.0, 3.0], 0);
        let pop = vec![(vec![1.0, 2.0, 3.0], 4.0); s.params().lambda];
        s.tell(&pop).unwrap();
        assert_eq!(s.mean(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.iteration(), 1);
    }

    #[test]
    fn tell_rejects_small_populations_and_stopped_states() {
        let mut s = state(4, vec![0.0; 4], 0);
        let mu = s.params().mu;
        let pop = vec![(vec![0.0; 4], 0.0); mu - 1];
        assert!(matches!(
            s.tell(&pop),
            Err(Error::InsufficientPopulation { .. })
        ));
        s.force_stop(StopReason::Stalled);
        assert!(matches!(
            s.ask_one(&Bounds::cube(4, -5.0, 5.0)),
            Err(Error::AlreadyStopped(_))
        ));
    }

    #[test]
    fn partial_population_is_accepted() {
        let b = Bounds::cube(5, -5.0, 5.0);
        let mut s = state(5, vec![0.0; 5], 4);
        let mu = s.params().mu;
        let pop: Vec<_> = (0..mu)
            .map(|_| {
                let x = s.ask_one(&b).unwrap();
                let f = x.iter().map(|v| v * v).sum::<f64>();
                (x, f)
            })
            .collect();
        s.tell(&pop).unwrap();
        assert_eq!(s.iteration(), 1);
    }

    #[test]
    fn linear_drift_moves_mean() {
        let dim = 10;
        let b = big_box(dim);
        let mut s = init_cma(dim, vec![0.0; dim], CmaParams::defaults(dim), &b, 2).unwrap();
        let mut prev = s.mean()[0];
        for _ in 0..20 {
            let pop: Vec<_> = (0..s.params().lambda)
                .map(|_| {
                    let x = s.ask_one(&b).unwrap();
                    let f = -x[0];
                    (x, f)
                })
                .collect();
            s.tell(&pop).unwrap();
            assert!(s.mean()[0] > prev);
            prev = s.mean()[0];
        }
    }

    #[test]
    fn covariance_stays_symmetric_positive_definite() {
        let mut f = make_function("ellipsoid", 6, 1).unwrap();
        let b = f.bounds().clone();
        let mut s = state(6, vec![0.0; 6], 8);
        while !s.is_stopped() && s.iteration() < 400 {
            let pop: Vec<_> = (0..s.params().lambda)
                .map(|_| {
                    let x = s.ask_one(&b).unwrap();
                    let v = f.evaluate(&x).unwrap();
                    (x, v)
                })
                .collect();
            s.tell(&pop).unwrap();
            assert!(s.covariance().max_asymmetry() <= 1e-12);
            if s.stop_reason() != Some(StopReason::NumericalDegeneracy) {
                assert!(s.eigenvalues().iter().all(|d| *d > 0.0));
                assert!(s.sigma() > 0.0);
            }
        }
    }

    #[test]
    fn sphere_converges() {
        let hits = (0..5)
            .filter(|&seed| minimize("sphere", 5, 2000, seed) < 1e-8)
            .count();
        assert!(hits >= 4, "only {hits}/5 runs reached 1e-8");
    }

    #[test]
    fn deterministic_given_seed() {
        let run = |seed| {
            let mut f = make_function("rosenbrock", 4, 0).unwrap();
            let b = f.bounds().clone();
            let mut s = state(4, vec![0.5; 4], seed);
            for _ in 0..30 {
                let pop: Vec<_> = (0..s.params().lambda)
                    .map(|_| {
                        let x = s.ask_one(&b).unwrap();
                        let v = f.evaluate(&x).unwrap();
                        (x, v)
                    })
                    .collect();
                s.tell(&pop).unwrap();
            }
            (s.mean().to_vec(), s.sigma().to_bits())
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn translated_sphere_gives_same_losses() {
        let losses = |shift: f64| {
            let dim = 3;
            let f = make_function("sphere", dim, 0).unwrap();
            let mut f = f.with_optimum(vec![shift; dim], 1.0).unwrap();
            let b = big_box(dim);
            let mut s =
                init_cma(dim, vec![shift + 2.0; dim], CmaParams::defaults(dim), &b, 9).unwrap();
            let mut out = Vec::new();
            for _ in 0..15 {
                let pop: Vec<_> = (0..s.params().lambda)
                    .map(|_| {
                        let x = s.ask_one(&b).unwrap();
                        let v = f.evaluate(&x).unwrap();
                        (x, v)
                    })
                    .collect();
                out.extend(pop.iter().map(|p| f.loss(p.1)));
                s.tell(&pop).unwrap();
            }
            out
        };
        let a = losses(0.0);
        let b = losses(0.25);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9 * x.max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn stop_criteria_triggers() {
        let mut s = state(2, vec![0.0, 0.0], 0);
        s.iteration = s.params.tolerances.max_iter;
        assert_eq!(should_stop(&s), Some(StopReason::MaxIter));

        let mut s = state(2, vec![0.0, 0.0], 0);
        s.iteration = 50;
        s.last_range = 1.0;
        let len = s.params.history_len(2);
        s.best_history = std::iter::repeat_n(3.0, len).collect();
        assert_eq!(should_stop(&s), Some(StopReason::TolFunHist));

        let mut s = state(2, vec![0.0, 0.0], 0);
        s.iteration = 1;
        s.sigma = 1e-13;
        assert_eq!(should_stop(&s), Some(StopReason::TolX));

        let mut s = state(2, vec![0.0, 0.0], 0);
        s.iteration = 300;
        s.last_range = 1.0;
        s.best_history = (0..5).map(|i| i as f64).collect();
        s.stagnation_best = (0..292).map(|i| if i < 146 { 1.0 } else { 2.0 }).collect();
        s.stagnation_median = std::iter::repeat_n(5.0, 292).collect();
        assert_eq!(should_stop(&s), Some(StopReason::TolStagnation));
        s.stagnation_median[200] = 4.0;
        assert_eq!(should_stop(&s), None);
    }
}
