use std::ops::RangeInclusive;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::TriGrid;
use super::pattern::{connectivity_of_selection, Pattern};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Linear multiplicative cooling: `T_k = t0 / (1 + beta * k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub t0: f64,
    pub beta: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            t0: 1.0,
            beta: 0.01,
            max_iters: 5000,
            seed: 0,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0) || !(self.beta > 0.0) || self.max_iters == 0 {
            return Err(Error::invalid(
                "anneal schedule needs t0 > 0, beta > 0 and max_iters >= 1",
            ));
        }
        Ok(())
    }

    pub fn temperature(&self, k: usize) -> f64 {
        self.t0 / (1.0 + self.beta * k as f64)
    }
}

#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    /// Lowest-energy pattern seen.
    pub pattern: Pattern,
    /// `|connectivity - target|` of `pattern`.
    pub energy: usize,
    pub iterations: usize,
    pub reached_target: bool,
    /// Best energy after each iteration, starting with the initial state.
    pub best_trace: Vec<usize>,
}

/// Anneals an `n`-triangle selection towards `target` connectivity, seeding
/// the RNG from the schedule.
pub fn anneal_pattern<T: Scalar>(
    grid: &TriGrid<T>,
    n: usize,
    target: usize,
    schedule: &AnnealSchedule,
) -> Result<AnnealOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    anneal_pattern_with_rng(grid, n, target, schedule, &mut rng)
}

pub fn anneal_pattern_with_rng<T: Scalar, R: Rng + ?Sized>(
    grid: &TriGrid<T>,
    n: usize,
    target: usize,
    schedule: &AnnealSchedule,
    rng: &mut R,
) -> Result<AnnealOutcome> {
    schedule.validate()?;
    let total = grid.triangle_count();
    if n == 0 || n > total {
        return Err(Error::invalid(format!(
            "cannot place {n} triangles on a grid of {total}"
        )));
    }
    if target > n {
        return Err(Error::invalid(format!(
            "target connectivity {target} exceeds pattern size {n}"
        )));
    }

    let mut selected = vec![false; total];
    let mut chosen: Vec<usize> = sample(rng, total, n).into_vec();
    let mut free: Vec<usize> = Vec::with_capacity(total - n);
    for &i in &chosen {
        selected[i] = true;
    }
    free.extend((0..total).filter(|&i| !selected[i]));

    let energy_of = |sel: &[bool]| connectivity_of_selection(sel, &grid.adjacency).abs_diff(target);
    let mut energy = energy_of(&selected);
    let mut best = chosen.clone();
    let mut best_energy = energy;
    let mut best_trace = vec![best_energy];
    let mut iterations = 0;

    while best_energy > 0 && iterations < schedule.max_iters && !free.is_empty() {
        let temp = schedule.temperature(iterations);
        iterations += 1;

        let out_slot = rng.random_range(0..chosen.len());
        let in_slot = rng.random_range(0..free.len());
        let (out_t, in_t) = (chosen[out_slot], free[in_slot]);
        selected[out_t] = false;
        selected[in_t] = true;
        let proposed = energy_of(&selected);

        let accept = proposed <= energy || {
            let delta = (proposed - energy) as f64;
            rng.random::<f64>() < (-delta / temp).exp()
        };
        if accept {
            chosen[out_slot] = in_t;
            free[in_slot] = out_t;
            energy = proposed;
            if energy < best_energy {
                best_energy = energy;
                best.clone_from(&chosen);
            }
        } else {
            selected[out_t] = true;
            selected[in_t] = false;
        }
        best_trace.push(best_energy);
    }

    Ok(AnnealOutcome {
        pattern: Pattern::new(best, grid)?,
        energy: best_energy,
        iterations,
        reached_target: best_energy == 0,
        best_trace,
    })
}

/// Draws a pattern size uniformly from `n_range` and a target connectivity
/// uniformly from `[n - 2, n]` (clamped at zero).
pub fn sample_generation_params<R: Rng + ?Sized>(
    rng: &mut R,
    n_range: RangeInclusive<usize>,
) -> (usize, usize) {
    let n = rng.random_range(n_range);
    let target = rng.random_range(n.saturating_sub(2)..=n);
    (n, target)
}
