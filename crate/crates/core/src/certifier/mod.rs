//! Monte Carlo certification of the smoothed classifier.
//!
//! [`certify`] runs two sampling stages around an input. The selection stage
//! identifies the top label and, when it is statistically separated from the
//! rest, a runner-up. The estimation stage bounds both probabilities with
//! Clopper–Pearson intervals and turns them into a certified radius:
//!
//! ```text
//! R = σ/2 · (Φ⁻¹(p̲_A) − Φ⁻¹(p̄_B))
//! ```
//!
//! With a runner-up the two bounds share the significance level (`α/2` each).
//! Without one, or when the paired bounds sum past one, the bound falls back to
//! one-vs-all: `p̄_B = 1 − p̲_A` at level `α`, giving `R = σ·Φ⁻¹(p̲_A)`.

mod exact;

pub use exact::{exact_radii_from_probs, improvement_check, ExactRadii, ImprovementCheck};

use crate::classifier::{EquippedClassifier, ExtendedLabel, LabelView};
use crate::noise::{CountVector, NoiseRequest, Sampler, Stage};
use crate::stats::{
    binom_p_value, clopper_pearson_lower, clopper_pearson_upper, inv_std_normal_cdf, SignificanceLevel,
};
use crate::{Error, Result};

/// Probabilities are clamped into `[CLAMP, 1 - CLAMP]` before `Φ⁻¹`.
pub const CLAMP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    /// Standard deviation of the isotropic Gaussian noise, in input units.
    pub sigma: f64,
    /// Draws used to select the top labels.
    pub n0: u64,
    /// Draws used to bound their probabilities.
    pub n: u64,
    pub alpha: SignificanceLevel,
    pub seed: u64,
}

impl SamplingConfig {
    pub fn new(sigma: f64, n0: u64, n: u64, alpha: f64, seed: u64) -> Result<Self> {
        let cfg = SamplingConfig { sigma, n0, n, alpha: SignificanceLevel::new(alpha)?, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.n0 < 2 {
            return Err(Error::InvalidConfig("n0 must be at least 2".into()));
        }
        if self.n < self.n0 {
            return Err(Error::InvalidConfig(alloc::format!("n = {} is smaller than n0 = {}", self.n, self.n0)));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SamplingConfig { seed, ..self }
    }
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { sigma: 0.25, n0: 1000, n: 100_000, alpha: SignificanceLevel::DEFAULT, seed: 0 }
    }
}

/// Which guarantee is certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CertificationMode {
    /// The plain smoothed classifier; rejection disabled. Radius `R`.
    Standard,
    /// Consistent and confident: the uncertainty class competes like any
    /// other label. Radius `R_CC`.
    Cc,
    /// No confident label change: the uncertainty class counts toward the
    /// predicted label. Radius `R_NCL`.
    Ncl,
}

impl CertificationMode {
    pub const ALL: [CertificationMode; 3] =
        [CertificationMode::Standard, CertificationMode::Cc, CertificationMode::Ncl];

    pub fn as_str(self) -> &'static str {
        match self {
            CertificationMode::Standard => "standard",
            CertificationMode::Cc => "cc",
            CertificationMode::Ncl => "ncl",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "standard" => Some(CertificationMode::Standard),
            "cc" => Some(CertificationMode::Cc),
            "ncl" => Some(CertificationMode::Ncl),
            _ => None,
        }
    }

    pub fn view(self) -> LabelView {
        match self {
            CertificationMode::Standard => LabelView::Base,
            CertificationMode::Cc | CertificationMode::Ncl => LabelView::Extended,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AbstainReason {
    /// The top label was not significantly more frequent than the second.
    NoSignificantWinner,
    /// The top label is the uncertainty class.
    UncertainPrediction,
    /// The estimated bounds gave a radius of zero or less.
    NonpositiveRadius,
}

impl AbstainReason {
    pub fn as_str(self) -> &'static str {
        match self {
            AbstainReason::NoSignificantWinner => "no-significant-winner",
            AbstainReason::UncertainPrediction => "uncertain-prediction",
            AbstainReason::NonpositiveRadius => "nonpositive-radius",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "no-significant-winner" => Some(AbstainReason::NoSignificantWinner),
            "uncertain-prediction" => Some(AbstainReason::UncertainPrediction),
            "nonpositive-radius" => Some(AbstainReason::NonpositiveRadius),
            _ => None,
        }
    }
}

/// Outcome of the selection stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub winner: Option<ExtendedLabel>,
    pub runner_up: Option<ExtendedLabel>,
    pub abstain: Option<AbstainReason>,
}

/// Pick the winner and runner-up from selection-stage counts.
///
/// The winner needs `BinomPValue(n_A, n_A + n_B) ≤ α`; the runner-up needs
/// `BinomPValue(n_B, n_B + n_C) ≤ α` among the remaining labels. In NCL mode
/// the uncertainty class is excluded from the runner-up candidates since it is
/// merged into the winner afterwards.
pub fn select_top_two(counts: &CountVector, alpha: SignificanceLevel, mode: CertificationMode) -> Result<Selection> {
    let ranked = counts.ranked();
    let (label_a, n_a) = ranked[0];
    let n_b = ranked.get(1).map_or(0, |r| r.1);
    if binom_p_value(n_a, n_a + n_b)? > alpha.get() {
        return Ok(Selection { winner: None, runner_up: None, abstain: Some(AbstainReason::NoSignificantWinner) });
    }
    if label_a == ExtendedLabel::Uncertain && mode != CertificationMode::Standard {
        return Ok(Selection {
            winner: Some(label_a),
            runner_up: None,
            abstain: Some(AbstainReason::UncertainPrediction),
        });
    }
    let mut rest = ranked[1..].iter().filter(|(l, _)| mode != CertificationMode::Ncl || *l != ExtendedLabel::Uncertain);
    let (label_b, n_b) = rest.next().copied().unwrap_or((ExtendedLabel::Uncertain, 0));
    let n_c = rest.next().map_or(0, |r| r.1);
    let runner_up = if n_b + n_c == 0 {
        None
    } else if binom_p_value(n_b, n_b + n_c)? <= alpha.get() {
        Some(label_b)
    } else {
        None
    };
    Ok(Selection { winner: Some(label_a), runner_up, abstain: None })
}

/// `σ/2 · (Φ⁻¹(p̲_A) − Φ⁻¹(p̄_B))`; may be zero or negative.
pub fn certified_radius(pa_lower: f64, pb_upper: f64, sigma: f64) -> Result<f64> {
    Ok(0.5 * sigma * (inv_std_normal_cdf(pa_lower)? - inv_std_normal_cdf(pb_upper)?))
}

fn clamp_probability(p: f64, clamped: &mut bool) -> f64 {
    let c = p.clamp(CLAMP, 1.0 - CLAMP);
    if c != p {
        *clamped = true;
    }
    c
}

/// Probability bounds derived from estimation-stage counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub pa_lower: f64,
    pub pb_upper: f64,
    pub one_vs_all: bool,
}

/// Bounds for `n_a` winner draws and optional `n_b` runner-up draws out of
/// `n`, including the one-vs-all fallback.
pub fn estimate_bounds(n_a: u64, n_b: Option<u64>, n: u64, alpha: SignificanceLevel) -> Result<Bounds> {
    if let Some(n_b) = n_b {
        let pa = clopper_pearson_lower(n_a, n, alpha.halved())?;
        let pb = clopper_pearson_upper(n_b, n, alpha.halved())?;
        // Exact Clopper-Pearson bounds satisfy pa + pb <= 1 whenever
        // n_a + n_b <= n, with equality when only two labels occur. At
        // equality the runner-up bound is just the complement, so the
        // single-sided bound at the full level is used instead.
        if pa + pb < 1.0 {
            return Ok(Bounds { pa_lower: pa, pb_upper: pb, one_vs_all: false });
        }
    }
    let pa = clopper_pearson_lower(n_a, n, alpha)?;
    Ok(Bounds { pa_lower: pa, pb_upper: 1.0 - pa, one_vs_all: true })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationResult {
    pub mode: CertificationMode,
    /// Selected label; `None` when no label won the selection test.
    pub predicted: Option<ExtendedLabel>,
    pub runner_up: Option<ExtendedLabel>,
    pub abstain: Option<AbstainReason>,
    /// Present exactly when the input is certified.
    pub radius: Option<f64>,
    pub pa_lower: Option<f64>,
    pub pb_upper: Option<f64>,
    /// Fraction of uncertain labels among the estimation draws, or among the
    /// selection draws when no estimation stage ran.
    pub p_uncertain_hat: f64,
    pub used_one_vs_all: bool,
    /// Distinct labels seen in the selection stage.
    pub distinct_labels: usize,
    /// A bound was clamped away from 0 or 1 before `Φ⁻¹`.
    pub clamped: bool,
}

impl CertificationResult {
    pub fn is_certified(&self) -> bool {
        self.radius.is_some()
    }
}

fn fraction(part: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        part as f64 / total as f64
    }
}

/// Certify `clf` at `x` in the given mode.
pub fn certify<C, S>(
    clf: &C,
    x: &[f64],
    cfg: &SamplingConfig,
    mode: CertificationMode,
    sampler: &S,
) -> Result<CertificationResult>
where
    C: EquippedClassifier + Sync + ?Sized,
    S: Sampler,
{
    cfg.validate()?;
    if x.len() != clf.input_dim() {
        return Err(Error::DimensionMismatch { expected: clf.input_dim(), got: x.len() });
    }
    let view = mode.view();
    let request = |count, stage| NoiseRequest { x, sigma: cfg.sigma, count, seed: cfg.seed, stage, view };

    let selection_counts = sampler.sample(clf, &request(cfg.n0, Stage::Selection))?;
    let selection = select_top_two(&selection_counts, cfg.alpha, mode)?;
    let mut result = CertificationResult {
        mode,
        predicted: selection.winner,
        runner_up: selection.runner_up,
        abstain: selection.abstain,
        radius: None,
        pa_lower: None,
        pb_upper: None,
        p_uncertain_hat: fraction(selection_counts.uncertain(), selection_counts.total()),
        used_one_vs_all: false,
        distinct_labels: selection_counts.distinct_labels(),
        clamped: false,
    };
    let winner = match (selection.winner, selection.abstain) {
        (Some(w), None) => w,
        _ => return Ok(result),
    };

    let counts = sampler.sample(clf, &request(cfg.n, Stage::Estimation))?;
    let mut n_a = counts.get(winner);
    if mode == CertificationMode::Ncl {
        n_a += counts.uncertain();
    }
    let n_b = selection.runner_up.map(|b| counts.get(b));
    let bounds = estimate_bounds(n_a, n_b, cfg.n, cfg.alpha)?;

    let mut clamped = false;
    let pa = clamp_probability(bounds.pa_lower, &mut clamped);
    let pb = clamp_probability(bounds.pb_upper, &mut clamped);
    let radius = certified_radius(pa, pb, cfg.sigma)?;

    result.pa_lower = Some(bounds.pa_lower);
    result.pb_upper = Some(bounds.pb_upper);
    result.used_one_vs_all = bounds.one_vs_all;
    result.p_uncertain_hat = fraction(counts.uncertain(), counts.total());
    result.clamped = clamped;
    if radius > 0.0 {
        result.radius = Some(radius);
    } else {
        result.abstain = Some(AbstainReason::NonpositiveRadius);
    }
    Ok(result)
}

/// Selection stage on its own: winner and runner-up from `n0` fresh draws.
pub fn predict_top_two<C, S>(
    clf: &C,
    x: &[f64],
    cfg: &SamplingConfig,
    mode: CertificationMode,
    sampler: &S,
) -> Result<Selection>
where
    C: EquippedClassifier + Sync + ?Sized,
    S: Sampler,
{
    cfg.validate()?;
    let counts = sampler.sample(
        clf,
        &NoiseRequest {
            x,
            sigma: cfg.sigma,
            count: cfg.n0,
            seed: cfg.seed,
            stage: Stage::Selection,
            view: mode.view(),
        },
    )?;
    select_top_two(&counts, cfg.alpha, mode)
}

#[cfg(test)]
mod tests;
