//! Choosing the rejection threshold on a validation set.
//!
//! The sweep starts from the least restrictive threshold of the score's
//! natural range and moves in equidistant steps toward the most restrictive
//! one. Accuracy is measured by majority vote over `n0` noisy copies of each
//! input, without a significance test. The last threshold whose accuracy stays
//! within `(1 - budget)` of the rejection-free baseline is returned. The same
//! noisy draws are reused for every threshold, so rejections only grow along
//! the sweep.

use alloc::vec;
use alloc::vec::Vec;

use crate::classifier::{
    BaseClassifier, EquippedClassifier, ExtendedLabel, LabelView, UncertaintyConfig, UncertaintyKind,
};
use crate::noise::{sample_seed, CountVector, NoiseRequest, NoiseStream, Sampler, Stage};
use crate::{Error, Result};

/// Inputs with their true class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConfig("dataset is empty".into()));
        }
        if points.len() != labels.len() {
            return Err(Error::InvalidConfig("points and labels differ in length".into()));
        }
        let d = points[0].len();
        if let Some(bad) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
        }
        Ok(LabeledDataset { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], usize)> {
        self.points.iter().map(Vec::as_slice).zip(self.labels.iter().copied())
    }

    pub fn get(&self, i: usize) -> (&[f64], usize) {
        (&self.points[i], self.labels[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub kind: UncertaintyKind,
    /// Tolerated relative accuracy loss.
    pub budget: f64,
    pub steps: usize,
    pub n0: u64,
    pub sigma: f64,
    pub seed: u64,
}

impl CalibrationConfig {
    pub fn new(kind: UncertaintyKind, sigma: f64, seed: u64) -> Self {
        CalibrationConfig { kind, budget: 0.01, steps: 1000, n0: 1000, sigma, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.budget > 0.0 && self.budget < 1.0) {
            return Err(Error::InvalidConfig(alloc::format!("budget {} outside (0, 1)", self.budget)));
        }
        if self.steps < 2 {
            return Err(Error::InvalidConfig("need at least two sweep steps".into()));
        }
        if self.n0 == 0 {
            return Err(Error::InvalidConfig("n0 must be positive".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Least and most restrictive thresholds of the sweep.
pub fn sweep_endpoints(kind: UncertaintyKind, num_classes: usize) -> (f64, f64) {
    match kind {
        UncertaintyKind::Confidence => (0.1, 1.0),
        UncertaintyKind::Margin => (0.0, 1.0),
        UncertaintyKind::Entropy => (libm::log(num_classes as f64), 0.0),
    }
}

/// The `steps` equidistant thresholds, least restrictive first.
pub fn sweep_grid(kind: UncertaintyKind, num_classes: usize, steps: usize) -> Vec<f64> {
    let (start, end) = sweep_endpoints(kind, num_classes);
    let last = (steps - 1) as f64;
    (0..steps).map(|i| start + (end - start) * (i as f64 / last)).collect()
}

/// Fraction of inputs whose most frequent label over `n0` noisy copies is the
/// true class. An uncertain majority is never correct.
pub fn majority_vote_accuracy<C, S>(
    clf: &C,
    data: &LabeledDataset,
    sigma: f64,
    n0: u64,
    seed: u64,
    sampler: &S,
) -> Result<f64>
where
    C: EquippedClassifier + Sync + ?Sized,
    S: Sampler,
{
    let mut correct = 0usize;
    for (i, (x, label)) in data.iter().enumerate() {
        let req = NoiseRequest {
            x,
            sigma,
            count: n0,
            seed: sample_seed(seed, i as u64),
            stage: Stage::Calibration,
            view: LabelView::Extended,
        };
        if sampler.sample(clf, &req)?.majority() == ExtendedLabel::Class(label) {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Base predictions and scores of every noisy draw, computed once.
struct CachedDraws {
    num_classes: usize,
    /// Per input: (predicted class, score) for each draw.
    draws: Vec<Vec<(usize, f64)>>,
    labels: Vec<usize>,
}

impl CachedDraws {
    fn collect<B: BaseClassifier + ?Sized>(f: &B, cfg: &CalibrationConfig, data: &LabeledDataset) -> Result<Self> {
        let mut draws = Vec::with_capacity(data.len());
        let mut buf = vec![0.0; data.dim()];
        for (i, (x, _)) in data.iter().enumerate() {
            if x.len() != f.input_dim() {
                return Err(Error::DimensionMismatch { expected: f.input_dim(), got: x.len() });
            }
            let stream = NoiseStream::new(sample_seed(cfg.seed, i as u64), Stage::Calibration);
            let mut row = Vec::with_capacity(cfg.n0 as usize);
            for j in 0..cfg.n0 {
                stream.perturb(x, cfg.sigma, j, &mut buf);
                let dist = f.classify(&buf)?;
                row.push((dist.argmax(), crate::classifier::uncertainty_score(&dist, cfg.kind)));
            }
            draws.push(row);
        }
        Ok(CachedDraws { num_classes: f.num_classes(), draws, labels: data.iter().map(|(_, l)| l).collect() })
    }

    fn accuracy(&self, rule: &UncertaintyConfig) -> f64 {
        let mut correct = 0usize;
        for (row, &label) in self.draws.iter().zip(&self.labels) {
            let mut counts = CountVector::new(self.num_classes);
            for &(class, score) in row {
                counts.add(if rule.rejects_score(score) {
                    ExtendedLabel::Uncertain
                } else {
                    ExtendedLabel::Class(class)
                });
            }
            if counts.majority() == ExtendedLabel::Class(label) {
                correct += 1;
            }
        }
        correct as f64 / self.labels.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    pub theta: f64,
    pub baseline_accuracy: f64,
    /// Accuracy at the returned threshold.
    pub accuracy: f64,
    /// Set when even the least restrictive threshold broke the budget.
    pub budget_violated_at_start: bool,
    /// `(theta, accuracy)` for every evaluated threshold, in sweep order.
    pub trace: Vec<(f64, f64)>,
}

/// Sweep thresholds and return the most restrictive one within budget.
pub fn calibrate_threshold<B>(f: &B, cfg: &CalibrationConfig, data: &LabeledDataset) -> Result<CalibrationOutcome>
where
    B: BaseClassifier + ?Sized,
{
    cfg.validate()?;
    let cache = CachedDraws::collect(f, cfg, data)?;
    let baseline = cache.accuracy(&UncertaintyConfig::disabled(cfg.kind));
    let floor = (1.0 - cfg.budget) * baseline;

    let grid = sweep_grid(cfg.kind, f.num_classes(), cfg.steps);
    let mut trace = Vec::new();
    let mut accepted: Option<(f64, f64)> = None;
    for &theta in &grid {
        let rule = UncertaintyConfig { kind: cfg.kind, theta: Some(theta) };
        let acc = cache.accuracy(&rule);
        trace.push((theta, acc));
        if acc < floor {
            break;
        }
        accepted = Some((theta, acc));
    }
    Ok(match accepted {
        Some((theta, accuracy)) => {
            CalibrationOutcome { theta, baseline_accuracy: baseline, accuracy, budget_violated_at_start: false, trace }
        }
        None => CalibrationOutcome {
            theta: grid[0],
            baseline_accuracy: baseline,
            accuracy: trace[0].1,
            budget_violated_at_start: true,
            trace,
        },
    })
}
