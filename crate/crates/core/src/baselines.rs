//! Portfolio generators used for comparison: uniform random sampling, one
//! restarting CMA-ES run, and `k` independent CMA-ES runs.

use rand::RngCore;

use crate::cma::{init_cma, CmaParams};
use crate::error::Result;
use crate::objectives::ObjectiveFunction;
use crate::point::Trajectory;
use crate::seeding::{derive_seed, rng_from_seed, StreamRng};

pub const RANDOM_ID: &str = "random";
pub const CMA_SINGLE_ID: &str = "cma";
pub const CMA_INDEP_ID: &str = "cma-indep";

/// `budget` i.i.d. uniform points from the function's box.
pub fn run_random(fun: &mut ObjectiveFunction, budget: usize, seed: u64) -> Result<Trajectory> {
    let mut rng = rng_from_seed(seed);
    let bounds = fun.bounds().clone();
    let mut trajectory = Trajectory::new(fun.id(), RANDOM_ID);
    for _ in 0..budget {
        let x = bounds.sample_uniform(&mut rng);
        let f = fun.evaluate(&x)?;
        trajectory.push(x, f, -1);
    }
    Ok(trajectory)
}

/// One CMA-ES run over the whole budget, restarted from a fresh uniform
/// mean whenever it stops early.
pub fn run_cma_single(fun: &mut ObjectiveFunction, budget: usize, seed: u64) -> Result<Trajectory> {
    let mut trajectory = Trajectory::new(fun.id(), CMA_SINGLE_ID);
    let mut rng = rng_from_seed(seed);
    restarting_cma(fun, budget, &mut rng, 0, &mut trajectory)?;
    Ok(trajectory)
}

/// `k` non-interacting CMA-ES runs with `⌊budget/k⌋` evaluations each; the
/// remainder goes to instance 0. Instance 0 uses `seed` itself, so `k = 1`
/// reproduces [`run_cma_single`].
pub fn run_cma_indep(
    fun: &mut ObjectiveFunction,
    budget: usize,
    k: usize,
    seed: u64,
) -> Result<Trajectory> {
    let k = k.max(1);
    let mut trajectory = Trajectory::new(fun.id(), CMA_INDEP_ID);
    let share = budget / k;
    for instance in 0..k {
        let own = if instance == 0 {
            share + budget % k
        } else {
            share
        };
        let instance_seed = if instance == 0 {
            seed
        } else {
            derive_seed(seed, instance as u64)
        };
        let mut rng = rng_from_seed(instance_seed);
        restarting_cma(fun, own, &mut rng, instance as i64, &mut trajectory)?;
    }
    Ok(trajectory)
}

fn restarting_cma(
    fun: &mut ObjectiveFunction,
    budget: usize,
    rng: &mut StreamRng,
    instance_id: i64,
    trajectory: &mut Trajectory,
) -> Result<()> {
    let dim = fun.dimension();
    let bounds = fun.bounds().clone();
    let params = CmaParams::defaults(dim);
    let lambda = params.lambda;
    let mut spent = 0;
    while spent < budget {
        let mean = bounds.sample_uniform(rng);
        let mut state = init_cma(dim, mean, params.clone(), &bounds, rng.next_u64())?;
        while spent < budget && !state.is_stopped() {
            let mut population = Vec::with_capacity(lambda);
            while population.len() < lambda && spent < budget {
                let x = state.ask_one(&bounds)?;
                let f = fun.evaluate(&x)?;
                trajectory.push(x.clone(), f, instance_id);
                population.push((x, f));
                spent += 1;
            }
            // a generation cut short by the budget is never told
            if population.len() == lambda {
                state.tell(&population)?;
            }
        }
    }
    Ok(())
}
