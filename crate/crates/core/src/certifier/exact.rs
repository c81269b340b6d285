//! Radii from exact smoothed probabilities.

use crate::stats::inv_std_normal_cdf;
use crate::{Error, Result};

use super::CLAMP;

const SUM_TOLERANCE: f64 = 1e-9;

fn check_vector(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() || p.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidProbabilities(alloc::format!("{what}: entries must lie in [0, 1]")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidProbabilities(alloc::format!("{what}: entries sum to {sum}")));
    }
    Ok(())
}

fn quantile(p: f64, clamped: &mut bool) -> f64 {
    let c = p.clamp(CLAMP, 1.0 - CLAMP);
    if c != p {
        *clamped = true;
    }
    inv_std_normal_cdf(c).expect("clamped probability lies in (0, 1)")
}

// First index of the maximum.
fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

fn max_excluding(p: &[f64], skip: impl Fn(usize) -> bool) -> f64 {
    p.iter().enumerate().filter(|(i, _)| !skip(*i)).map(|(_, &v)| v).fold(0.0, f64::max)
}

/// The three radii computed from exact probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactRadii {
    /// `R` of the base classifier.
    pub standard: f64,
    /// `R_CC`; zero when the uncertainty class is the most likely label.
    pub cc: f64,
    /// `R_NCL`; zero when the uncertainty class is the most likely label.
    pub ncl: f64,
    pub base_winner: usize,
    /// Index into the extended vector; `len - 1` is the uncertainty class.
    pub extended_winner: usize,
    /// Some radius was negative and floored, or the extended winner is the
    /// uncertainty class.
    pub uncertifiable: bool,
    pub clamped: bool,
}

/// Exact `R`, `R_CC` and `R_NCL`.
///
/// `p_base` holds the base classifier's smoothed class probabilities, and
/// `p_extended` those of the equipped classifier with the uncertainty class
/// last.
pub fn exact_radii_from_probs(p_base: &[f64], p_extended: &[f64], sigma: f64) -> Result<ExactRadii> {
    check_vector(p_base, "base probabilities")?;
    check_vector(p_extended, "extended probabilities")?;
    if p_extended.len() != p_base.len() + 1 {
        return Err(Error::InvalidProbabilities("extended vector must have one more entry than the base".into()));
    }
    let mut clamped = false;
    let mut uncertifiable = false;

    let a = argmax(p_base);
    let pb = max_excluding(p_base, |i| i == a);
    let standard = 0.5 * sigma * (quantile(p_base[a], &mut clamped) - quantile(pb, &mut clamped));

    let v = p_extended.len() - 1;
    let w = argmax(p_extended);
    let (cc, ncl) = if w == v {
        uncertifiable = true;
        (0.0, 0.0)
    } else {
        let qa = quantile(p_extended[w], &mut clamped);
        let competitor = max_excluding(p_extended, |i| i == w);
        let cc = 0.5 * sigma * (qa - quantile(competitor, &mut clamped));
        let confident_competitor = max_excluding(p_extended, |i| i == w || i == v);
        let merged = quantile(p_extended[w] + p_extended[v], &mut clamped);
        let ncl = 0.5 * sigma * (merged - quantile(confident_competitor, &mut clamped));
        (cc, ncl)
    };
    if standard < 0.0 || cc < 0.0 || ncl < 0.0 {
        uncertifiable = true;
    }
    let (standard, cc, ncl) = (standard.max(0.0), cc.max(0.0), ncl.max(0.0));
    Ok(ExactRadii { standard, cc, ncl, base_winner: a, extended_winner: w, uncertifiable, clamped })
}

/// The two sides of the inequality deciding whether adding the uncertainty
/// class enlarges the consistent-and-confident radius beyond `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementCheck {
    /// `Φ⁻¹(max_{c≠A} p_sup(c)) − Φ⁻¹(max_{c≠A} p_θ(c))`: how much the
    /// strongest competitor shrank.
    pub lhs: f64,
    /// `Φ⁻¹(p_sup(A)) − Φ⁻¹(p_θ(A))`: how much the winner shrank.
    pub rhs: f64,
    pub predicts_improvement: bool,
    pub clamped: bool,
}

/// Evaluate both sides for a base vector `p_sup` and an extended vector
/// `p_theta` (uncertainty class last) that share their winning class.
pub fn improvement_check(p_sup: &[f64], p_theta: &[f64]) -> Result<ImprovementCheck> {
    check_vector(p_sup, "base probabilities")?;
    check_vector(p_theta, "extended probabilities")?;
    if p_theta.len() != p_sup.len() + 1 {
        return Err(Error::InvalidProbabilities("extended vector must have one more entry than the base".into()));
    }
    let a = argmax(p_sup);
    if argmax(p_theta) != a {
        return Err(Error::InvalidProbabilities("base and extended vectors have different winners".into()));
    }
    let mut clamped = false;
    let comp_sup = quantile(max_excluding(p_sup, |i| i == a), &mut clamped);
    let comp_theta = quantile(max_excluding(p_theta, |i| i == a), &mut clamped);
    let lhs = comp_sup - comp_theta;
    let rhs = quantile(p_sup[a], &mut clamped) - quantile(p_theta[a], &mut clamped);
    Ok(ImprovementCheck { lhs, rhs, predicts_improvement: lhs > rhs, clamped })
}
