use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::insertion::{insertion_success, InsertionSpec};
use super::sensor::{
    render_imprint, sample_perturbation, Perturbation, PerturbationRanges, RenderedImprint,
    SensorSpec,
};
use crate::error::{Error, Result};
use crate::registration::{refine_pose, RefineOptions};
use crate::scalar::Scalar;
use crate::shapemetrics::{classify, PatternLibrary};

/// Independent RNG stream for one trial of an experiment.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTrial<T> {
    pub entry: usize,
    pub expected: String,
    pub predicted: String,
    pub correct: bool,
    pub loss: T,
    pub margin: Option<T>,
    pub perturbation: Perturbation<T>,
    pub partial_capture: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport<T> {
    pub trials: Vec<ClassificationTrial<T>>,
    pub correct: usize,
    pub total: usize,
    /// (expected, predicted) for every misclassification.
    pub confusions: Vec<(String, String)>,
    /// Wall time per classification, excluded from reproducibility checks.
    pub mean_ms: f64,
}

impl<T> ClassificationReport<T> {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total.max(1) as f64
    }
}

/// Called with the trial index and every rendered imprint.
pub type ImprintObserver<'a, T> = &'a (dyn Fn(usize, &RenderedImprint<T>) + Sync);

fn ignore<T>(_: usize, _: &RenderedImprint<T>) {}

/// Classifies simulated imprints of `k` randomly chosen entries.
pub fn eval_classification<T: Scalar>(
    library: &PatternLibrary<T>,
    k: usize,
    trials_per_pattern: usize,
    sensor: &SensorSpec<T>,
    ranges: &PerturbationRanges<T>,
    seed: u64,
) -> Result<ClassificationReport<T>> {
    eval_classification_observed(
        library,
        k,
        trials_per_pattern,
        sensor,
        ranges,
        seed,
        &ignore,
    )
}

pub fn eval_classification_observed<T: Scalar>(
    library: &PatternLibrary<T>,
    k: usize,
    trials_per_pattern: usize,
    sensor: &SensorSpec<T>,
    ranges: &PerturbationRanges<T>,
    seed: u64,
    observe: ImprintObserver<'_, T>,
) -> Result<ClassificationReport<T>> {
    if k > library.len() {
        return Err(Error::invalid(format!(
            "cannot pick {k} patterns from a library of {}",
            library.len()
        )));
    }
    let mut pick_rng = trial_rng(seed, 0);
    let picked = sample(&mut pick_rng, library.len(), k).into_vec();

    let mut trials = Vec::with_capacity(k * trials_per_pattern);
    let mut elapsed = 0.0;
    for (pi, &entry) in picked.iter().enumerate() {
        for t in 0..trials_per_pattern {
            let mut rng = trial_rng(seed, 1 + (pi * trials_per_pattern + t) as u64);
            let pert = sample_perturbation(&mut rng, ranges);
            let shot = render_imprint(library, entry, &pert, sensor, &mut rng)?;
            observe(trials.len(), &shot);
            let start = Instant::now();
            let result = classify(&shot.mask, library)?;
            elapsed += start.elapsed().as_secs_f64() * 1e3;
            trials.push(ClassificationTrial {
                entry,
                expected: library.entries[entry].label.clone(),
                correct: result.index == entry,
                predicted: result.label,
                loss: result.loss,
                margin: result.runner_up_margin,
                perturbation: pert,
                partial_capture: shot.partial,
            });
        }
    }
    let correct = trials.iter().filter(|t| t.correct).count();
    let confusions = trials
        .iter()
        .filter(|t| !t.correct)
        .map(|t| (t.expected.clone(), t.predicted.clone()))
        .collect();
    Ok(ClassificationReport {
        total: trials.len(),
        mean_ms: elapsed / trials.len().max(1) as f64,
        trials,
        correct,
        confusions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow<T> {
    pub offset: T,
    pub y_ref: T,
    pub theta_z: T,
    pub error_mm: T,
    pub error_pct: T,
    pub rmse: T,
    pub converged: bool,
}

/// Applies pure Y offsets to one entry and tabulates the recovered `y_ref`.
pub fn eval_refinement<T: Scalar>(
    library: &PatternLibrary<T>,
    index: usize,
    offsets: &[T],
    sensor: &SensorSpec<T>,
    options: &RefineOptions<T>,
    seed: u64,
) -> Result<Vec<RefinementRow<T>>> {
    eval_refinement_observed(library, index, offsets, sensor, options, seed, &ignore)
}

pub fn eval_refinement_observed<T: Scalar>(
    library: &PatternLibrary<T>,
    index: usize,
    offsets: &[T],
    sensor: &SensorSpec<T>,
    options: &RefineOptions<T>,
    seed: u64,
    observe: ImprintObserver<'_, T>,
) -> Result<Vec<RefinementRow<T>>> {
    if offsets.iter().any(|o| *o == T::zero()) {
        return Err(Error::invalid(
            "offset 0 has no defined percentage error; remove it from the list",
        ));
    }
    let entry = library
        .entries
        .get(index)
        .ok_or_else(|| Error::invalid(format!("no library entry {index}")))?;
    offsets
        .par_iter()
        .enumerate()
        .map(|(i, &offset)| {
            let mut rng = trial_rng(seed, i as u64);
            let pert = Perturbation::new(T::zero(), offset, T::zero());
            let shot = render_imprint(library, index, &pert, sensor, &mut rng)?;
            observe(i, &shot);
            let r = refine_pose(&shot.cloud, &shot.mask, entry, options)?;
            let error_mm = (r.y_ref - offset).abs();
            Ok(RefinementRow {
                offset,
                y_ref: r.y_ref,
                theta_z: r.theta_z,
                error_mm,
                error_pct: error_mm / offset.abs() * T::lit(100.0),
                rmse: r.residual_rmse,
                converged: r.converged,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionTrial<T> {
    pub perturbation: Perturbation<T>,
    pub y_ref: Option<T>,
    pub residual: Perturbation<T>,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionReport<T> {
    pub trials: Vec<InsertionTrial<T>>,
    pub successes: usize,
    pub with_refinement: bool,
}

impl<T> InsertionReport<T> {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials.len().max(1) as f64
    }
}

/// Monte Carlo peg-in-hole trials.
///
/// The grasp centres the part in X and the gripper angle is known, so the
/// residual keeps only the Y error, minus `y_ref` when refinement is on.
/// Trial `i` draws its perturbation first from stream `i`, so runs with and
/// without refinement see identical perturbations.
#[allow(clippy::too_many_arguments)]
pub fn eval_insertion<T: Scalar>(
    library: &PatternLibrary<T>,
    index: usize,
    spec: &InsertionSpec<T>,
    n_trials: usize,
    with_refinement: bool,
    sensor: &SensorSpec<T>,
    ranges: &PerturbationRanges<T>,
    options: &RefineOptions<T>,
    seed: u64,
) -> Result<InsertionReport<T>> {
    eval_insertion_observed(
        library,
        index,
        spec,
        n_trials,
        with_refinement,
        sensor,
        ranges,
        options,
        seed,
        &ignore,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn eval_insertion_observed<T: Scalar>(
    library: &PatternLibrary<T>,
    index: usize,
    spec: &InsertionSpec<T>,
    n_trials: usize,
    with_refinement: bool,
    sensor: &SensorSpec<T>,
    ranges: &PerturbationRanges<T>,
    options: &RefineOptions<T>,
    seed: u64,
    observe: ImprintObserver<'_, T>,
) -> Result<InsertionReport<T>> {
    if n_trials == 0 {
        return Err(Error::invalid("at least one insertion trial is required"));
    }
    let entry = library
        .entries
        .get(index)
        .ok_or_else(|| Error::invalid(format!("no library entry {index}")))?;
    let trials: Vec<InsertionTrial<T>> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let pert = sample_perturbation(&mut rng, ranges);
            let y_ref = if with_refinement {
                let shot = render_imprint(library, index, &pert, sensor, &mut rng)?;
                observe(i, &shot);
                Some(refine_pose(&shot.cloud, &shot.mask, entry, options)?.y_ref)
            } else {
                None
            };
            let residual =
                Perturbation::new(T::zero(), pert.y - y_ref.unwrap_or(T::zero()), T::zero());
            Ok(InsertionTrial {
                perturbation: pert,
                y_ref,
                residual,
                success: insertion_success(&residual, spec),
            })
        })
        .collect::<Result<_>>()?;
    Ok(InsertionReport {
        successes: trials.iter().filter(|t| t.success).count(),
        trials,
        with_refinement,
    })
}
