//! Simulated tactile imprints and the experiment harness built on them.

mod eval;
mod insertion;
mod sensor;

pub use eval::{
    eval_classification, eval_classification_observed, eval_insertion, eval_insertion_observed,
    eval_refinement, eval_refinement_observed, trial_rng, ClassificationReport,
    ClassificationTrial, ImprintObserver, InsertionReport, InsertionTrial, RefinementRow,
};
pub use insertion::{insertion_success, InsertionSpec};
pub use sensor::{
    render_imprint, sample_perturbation, Perturbation, PerturbationRanges, RenderedImprint,
    SensorSpec,
};
