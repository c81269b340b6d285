//! Base classifiers and the wrapper that adds an uncertainty class.
//!
//! A base classifier maps an input to a [`ClassDistribution`]. Wrapping it in
//! [`Equipped`] with an [`UncertaintyConfig`] yields a classifier over the
//! extended label space `{0, …, K-1} ∪ {Uncertain}`. Region classifiers skip
//! the distribution entirely and carry their uncertainty geometrically.

mod linear;
mod mlp;
mod region;

use alloc::vec::Vec;

pub use linear::LinearModel;
pub use mlp::{Activation, Layer, MlpModel};
pub use region::{Box2d, Region1d, Region2d, RegionLabel};

use crate::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;
/// Scores this close to the threshold count as ties, and ties are uncertain.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// A label of the uncertainty-equipped classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtendedLabel {
    /// A confident prediction of a base class.
    Class(usize),
    /// The uncertainty class.
    Uncertain,
}

impl ExtendedLabel {
    /// Position in a count vector of length `num_classes + 1`.
    pub fn index(self, num_classes: usize) -> usize {
        match self {
            ExtendedLabel::Class(c) => c,
            ExtendedLabel::Uncertain => num_classes,
        }
    }

    pub fn from_index(index: usize, num_classes: usize) -> Self {
        if index >= num_classes {
            ExtendedLabel::Uncertain
        } else {
            ExtendedLabel::Class(index)
        }
    }

    pub fn class(self) -> Option<usize> {
        match self {
            ExtendedLabel::Class(c) => Some(c),
            ExtendedLabel::Uncertain => None,
        }
    }
}

/// Which labelling the certifier queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelView {
    /// The plain base prediction; the uncertainty threshold is disabled.
    Base,
    /// The uncertainty-equipped prediction.
    Extended,
}

/// Categorical distribution over the base classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    probs: Vec<f64>,
}

impl ClassDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbabilities("empty distribution".into()));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidProbabilities("entry outside [0, 1]".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidProbabilities(alloc::format!("entries sum to {sum}")));
        }
        Ok(ClassDistribution { probs })
    }

    /// Softmax of raw logits, shifted by the largest logit.
    pub fn softmax(logits: &[f64]) -> Result<Self> {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::InvalidProbabilities("non-finite logits".into()));
        }
        let exps: Vec<f64> = logits.iter().map(|&l| libm::exp(l - max)).collect();
        let total: f64 = exps.iter().sum();
        Ok(ClassDistribution { probs: exps.into_iter().map(|e| e / total).collect() })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    /// Most probable class; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    fn top_two(&self) -> (f64, f64) {
        let mut first = f64::NEG_INFINITY;
        let mut second = 0.0;
        for &p in &self.probs {
            if p > first {
                second = first.max(0.0);
                first = p;
            } else if p > second {
                second = p;
            }
        }
        (first, second)
    }
}

/// A deterministic classifier producing class probabilities.
pub trait BaseClassifier {
    fn num_classes(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn classify(&self, x: &[f64]) -> Result<ClassDistribution>;
}

/// A deterministic classifier over the extended label space.
pub trait EquippedClassifier {
    fn num_classes(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn label(&self, x: &[f64], view: LabelView) -> Result<ExtendedLabel>;
}

impl<T: EquippedClassifier + ?Sized> EquippedClassifier for &T {
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn label(&self, x: &[f64], view: LabelView) -> Result<ExtendedLabel> {
        (**self).label(x, view)
    }
}

impl<T: BaseClassifier + ?Sized> BaseClassifier for &T {
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn classify(&self, x: &[f64]) -> Result<ClassDistribution> {
        (**self).classify(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UncertaintyKind {
    /// Largest class probability; high means confident.
    Confidence,
    /// Gap between the two largest class probabilities; high means confident.
    Margin,
    /// Shannon entropy in nats; high means uncertain.
    Entropy,
}

impl UncertaintyKind {
    /// Natural range of the score for `num_classes` classes.
    pub fn range(self, num_classes: usize) -> (f64, f64) {
        match self {
            UncertaintyKind::Confidence | UncertaintyKind::Margin => (0.0, 1.0),
            UncertaintyKind::Entropy => (0.0, libm::log(num_classes as f64)),
        }
    }
}

/// Rejection rule of the equipped classifier. A `theta` of `None` disables
/// rejection, which recovers the base classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyConfig {
    pub kind: UncertaintyKind,
    pub theta: Option<f64>,
}

impl UncertaintyConfig {
    pub fn new(kind: UncertaintyKind, theta: f64, num_classes: usize) -> Result<Self> {
        let (lo, hi) = kind.range(num_classes);
        if !(theta >= lo && theta <= hi) {
            return Err(Error::InvalidConfig(alloc::format!("threshold {theta} outside [{lo}, {hi}] for {kind:?}")));
        }
        Ok(UncertaintyConfig { kind, theta: Some(theta) })
    }

    pub fn disabled(kind: UncertaintyKind) -> Self {
        UncertaintyConfig { kind, theta: None }
    }

    /// Whether a distribution falls on the uncertain side of the threshold.
    /// Equality (up to [`TIE_TOLERANCE`]) counts as uncertain.
    pub fn rejects(&self, dist: &ClassDistribution) -> bool {
        self.rejects_score(uncertainty_score(dist, self.kind))
    }

    pub fn rejects_score(&self, score: f64) -> bool {
        match self.theta {
            None => false,
            Some(theta) => match self.kind {
                UncertaintyKind::Confidence | UncertaintyKind::Margin => score <= theta + TIE_TOLERANCE,
                UncertaintyKind::Entropy => score >= theta - TIE_TOLERANCE,
            },
        }
    }
}

/// Score of a distribution under `kind`.
pub fn uncertainty_score(dist: &ClassDistribution, kind: UncertaintyKind) -> f64 {
    match kind {
        UncertaintyKind::Confidence => dist.top_two().0,
        UncertaintyKind::Margin => {
            let (first, second) = dist.top_two();
            first - second
        }
        UncertaintyKind::Entropy => -dist.probs.iter().filter(|&&p| p > 0.0).map(|&p| p * libm::log(p)).sum::<f64>(),
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: x.len() });
    }
    Ok(())
}

/// Apply the rejection rule to the base prediction at `x`.
pub fn equipped_classify<B: BaseClassifier + ?Sized>(
    base: &B,
    cfg: &UncertaintyConfig,
    x: &[f64],
) -> Result<ExtendedLabel> {
    check_dim(base.input_dim(), x)?;
    let dist = base.classify(x)?;
    if cfg.rejects(&dist) {
        Ok(ExtendedLabel::Uncertain)
    } else {
        Ok(ExtendedLabel::Class(dist.argmax()))
    }
}

/// A base classifier paired with a rejection rule.
#[derive(Debug, Clone)]
pub struct Equipped<B> {
    pub base: B,
    pub uncertainty: UncertaintyConfig,
}

impl<B: BaseClassifier> Equipped<B> {
    pub fn new(base: B, uncertainty: UncertaintyConfig) -> Self {
        Equipped { base, uncertainty }
    }

    /// Wrapper that never rejects.
    pub fn plain(base: B) -> Self {
        Equipped { base, uncertainty: UncertaintyConfig::disabled(UncertaintyKind::Confidence) }
    }
}

impl<B: BaseClassifier> EquippedClassifier for Equipped<B> {
    fn num_classes(&self) -> usize {
        self.base.num_classes()
    }

    fn input_dim(&self) -> usize {
        self.base.input_dim()
    }

    fn label(&self, x: &[f64], view: LabelView) -> Result<ExtendedLabel> {
        match view {
            LabelView::Base => {
                check_dim(self.base.input_dim(), x)?;
                Ok(ExtendedLabel::Class(self.base.classify(x)?.argmax()))
            }
            LabelView::Extended => equipped_classify(&self.base, &self.uncertainty, x),
        }
    }
}
