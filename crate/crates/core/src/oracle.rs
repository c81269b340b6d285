//! Closed-form smoothed probabilities for classifiers built from halfspaces
//! or axis-aligned regions.

use alloc::vec;
use alloc::vec::Vec;

use crate::classifier::{LabelView, LinearModel, Region1d, Region2d};
use crate::stats::std_normal_cdf;
use crate::{Error, Result};

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && !sigma.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain { op: "noise level", value: sigma })
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: x.len() });
    }
    Ok(())
}

/// `P(w·(x+ε) + b > 0)` for `ε ~ N(0, σ²I)`, i.e. `Φ((w·x + b) / (σ‖w‖))`.
pub fn linear_smoothed_prob(m: &LinearModel, x: &[f64], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_dim(m.weights().len(), x)?;
    Ok(std_normal_cdf(m.score(x) / (sigma * m.weight_norm())))
}

/// Smoothed class probabilities `(p_0, p_1)` of a linear model.
pub fn linear_smoothed_probs(m: &LinearModel, x: &[f64], sigma: f64) -> Result<[f64; 2]> {
    check_sigma(sigma)?;
    check_dim(m.weights().len(), x)?;
    let t = m.score(x) / (sigma * m.weight_norm());
    Ok([std_normal_cdf(-t), std_normal_cdf(t)])
}

/// Euclidean distance from `x` to the decision hyperplane.
pub fn true_boundary_distance(m: &LinearModel, x: &[f64]) -> Result<f64> {
    check_dim(m.weights().len(), x)?;
    Ok(m.score(x).abs() / m.weight_norm())
}

/// `P(lo ≤ Z < hi)` for standard normal `Z`, computed on the side of the
/// origin that avoids cancellation.
pub fn std_normal_interval(lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        0.0
    } else if lo > 0.0 {
        std_normal_cdf(-lo) - std_normal_cdf(-hi)
    } else {
        std_normal_cdf(hi) - std_normal_cdf(lo)
    }
}

fn slot(label: crate::classifier::RegionLabel, view: LabelView, num_classes: usize) -> usize {
    label.resolve(view).index(num_classes)
}

/// Exact label probabilities of a smoothed 1D region classifier, with the
/// uncertainty class in the last slot.
pub fn piecewise1d_smoothed_probs(rc: &Region1d, x: f64, sigma: f64, view: LabelView) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let k = crate::classifier::EquippedClassifier::num_classes(rc);
    let mut probs = vec![0.0; k + 1];
    let bps = rc.breakpoints();
    for (i, &label) in rc.labels().iter().enumerate() {
        let lo = if i == 0 { f64::NEG_INFINITY } else { (bps[i - 1] - x) / sigma };
        let hi = if i == bps.len() { f64::INFINITY } else { (bps[i] - x) / sigma };
        probs[slot(label, view, k)] += std_normal_interval(lo, hi);
    }
    Ok(probs)
}

/// Exact label probabilities of a smoothed 2D box classifier. Box masses are
/// products of per-axis interval masses; the default label takes the rest.
pub fn grid2d_smoothed_probs(rc: &Region2d, x: &[f64], sigma: f64, view: LabelView) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    check_dim(2, x)?;
    let k = crate::classifier::EquippedClassifier::num_classes(rc);
    let mut probs = vec![0.0; k + 1];
    let mut covered = 0.0;
    for b in rc.boxes() {
        let mass =
            (0..2).map(|i| std_normal_interval((b.lo[i] - x[i]) / sigma, (b.hi[i] - x[i]) / sigma)).product::<f64>();
        probs[slot(b.label, view, k)] += mass;
        covered += mass;
    }
    probs[slot(rc.default_label(), view, k)] += (1.0 - covered).max(0.0);
    Ok(probs)
}
