//! Dataset-level certification and calibration runs.

use certsmooth_core::calibration::{calibrate_threshold, CalibrationConfig, CalibrationOutcome};
use certsmooth_core::certifier::certify;
use certsmooth_core::classifier::UncertaintyKind;
use certsmooth_core::noise::{sample_seed, Sequential};
use certsmooth_core::report::Record;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::pool::parallel_map;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Ordered by sample index, then by mode.
    pub records: Vec<Record>,
    pub warnings: Vec<String>,
}

/// Certify every `stride`-th sample of the dataset in every requested mode.
///
/// All modes of one sample share its noise seed, so they see the same
/// selection-stage perturbations. The output does not depend on `workers`.
pub fn run_certify_dataset(cfg: &RunConfig, workers: usize) -> Result<RunOutput> {
    let mut warnings = Vec::new();
    if cfg.modes.is_empty() {
        warnings.push("no certification modes requested; nothing to do".to_string());
        return Ok(RunOutput { records: Vec::new(), warnings });
    }
    let indices: Vec<usize> = (0..cfg.dataset.len()).step_by(cfg.stride).collect();
    let per_sample = parallel_map(&indices, workers, |&index| {
        let (x, true_label) = cfg.dataset.get(index);
        let sampling = cfg.sampling.with_seed(sample_seed(cfg.sampling.seed, index as u64));
        cfg.modes
            .iter()
            .map(|&mode| {
                certify(&cfg.classifier, x, &sampling, mode, &Sequential)
                    .map(|result| Record { index, true_label, result })
                    .map_err(|source| Error::Sample { index, source })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(RunOutput { records: per_sample.into_iter().flatten().collect(), warnings })
}

/// Sweep rejection thresholds of the configured scored model on the
/// configured dataset.
pub fn run_calibration(
    cfg: &RunConfig,
    kind: UncertaintyKind,
    budget: f64,
    steps: usize,
) -> Result<CalibrationOutcome> {
    let model =
        cfg.classifier.scored().ok_or_else(|| Error::Config("calibration needs an mlp or linear classifier".into()))?;
    let mut cal = CalibrationConfig::new(kind, cfg.sampling.sigma, cfg.sampling.seed);
    cal.budget = budget;
    cal.steps = steps;
    cal.n0 = cfg.sampling.n0;
    Ok(calibrate_threshold(model, &cal, &cfg.dataset)?)
}
