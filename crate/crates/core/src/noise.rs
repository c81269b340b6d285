//! Gaussian perturbation sampling with per-sample counter-based streams.
//!
//! The noise added to draw `i` is a pure function of `(seed, stage, i)`: a
//! ChaCha8 key is derived from the seed and stage, and draw `i` reads stream
//! `i` of that key. Any partition of the index range over workers therefore
//! produces the same counts, and merging partial counts is a plain sum.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::classifier::{EquippedClassifier, ExtendedLabel, LabelView};
use crate::Result;

/// Which phase of a procedure a batch of draws belongs to. Each phase reads an
/// independent noise stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Selection,
    Estimation,
    Calibration,
}

impl Stage {
    fn tag(self) -> u64 {
        match self {
            Stage::Selection => 0x5e1e_c710,
            Stage::Estimation => 0xe571_3a7e,
            Stage::Calibration => 0xca11_b8a7,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `index`-th input of a dataset run.
pub fn sample_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x243f_6a88_85a3_08d3)))
}

/// Source of the Gaussian perturbations for one `(seed, stage)` pair.
#[derive(Clone)]
pub struct NoiseStream {
    base: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, stage: Stage) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed ^ stage.tag().rotate_left(32);
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        NoiseStream { base: ChaCha8Rng::from_seed(key) }
    }

    /// Writes `x + sigma * ε_index` into `out`.
    pub fn perturb(&self, x: &[f64], sigma: f64, index: u64, out: &mut [f64]) {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        for (o, &v) in out.iter_mut().zip(x) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *o = v + sigma * z;
        }
    }
}

/// Label counts over the extended label space; slot `num_classes` holds the
/// uncertainty class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountVector {
    counts: Vec<u64>,
    total: u64,
}

impl CountVector {
    pub fn new(num_classes: usize) -> Self {
        CountVector { counts: vec![0; num_classes + 1], total: 0 }
    }

    /// Build from raw counts, the last entry being the uncertainty class.
    pub fn from_counts(counts: Vec<u64>) -> Self {
        assert!(!counts.is_empty(), "count vector needs at least the uncertainty slot");
        let total = counts.iter().sum();
        CountVector { counts, total }
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn add(&mut self, label: ExtendedLabel) {
        let k = self.num_classes();
        self.counts[label.index(k)] += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &CountVector) {
        debug_assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn get(&self, label: ExtendedLabel) -> u64 {
        self.counts[label.index(self.num_classes())]
    }

    pub fn uncertain(&self) -> u64 {
        self.counts[self.num_classes()]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.counts
    }

    /// Number of labels observed at least once.
    pub fn distinct_labels(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Labels by descending count; equal counts keep the lower index first.
    pub fn ranked(&self) -> Vec<(ExtendedLabel, u64)> {
        let k = self.num_classes();
        let mut order: Vec<(ExtendedLabel, u64)> =
            self.counts.iter().enumerate().map(|(i, &c)| (ExtendedLabel::from_index(i, k), c)).collect();
        order.sort_by_key(|&(_, c)| core::cmp::Reverse(c));
        order
    }

    /// Most frequent label, lowest index on ties.
    pub fn majority(&self) -> ExtendedLabel {
        self.ranked()[0].0
    }
}

/// A batch of noisy evaluations around one input.
#[derive(Debug, Clone, Copy)]
pub struct NoiseRequest<'a> {
    pub x: &'a [f64],
    pub sigma: f64,
    pub count: u64,
    pub seed: u64,
    pub stage: Stage,
    pub view: LabelView,
}

/// Counts for the draws with indices in `range`.
pub fn count_range<C>(clf: &C, req: &NoiseRequest<'_>, range: Range<u64>) -> Result<CountVector>
where
    C: EquippedClassifier + ?Sized,
{
    let stream = NoiseStream::new(req.seed, req.stage);
    let mut counts = CountVector::new(clf.num_classes());
    let mut buf = vec![0.0; req.x.len()];
    for i in range {
        stream.perturb(req.x, req.sigma, i, &mut buf);
        counts.add(clf.label(&buf, req.view)?);
    }
    Ok(counts)
}

/// Strategy for evaluating a [`NoiseRequest`]. Implementations may split the
/// index range however they like; the result must equal [`Sequential`]'s.
pub trait Sampler {
    fn sample<C>(&self, clf: &C, req: &NoiseRequest<'_>) -> Result<CountVector>
    where
        C: EquippedClassifier + Sync + ?Sized;
}

/// Single-threaded sampler.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Sampler for Sequential {
    fn sample<C>(&self, clf: &C, req: &NoiseRequest<'_>) -> Result<CountVector>
    where
        C: EquippedClassifier + Sync + ?Sized,
    {
        count_range(clf, req, 0..req.count)
    }
}

/// Labels `count` Gaussian perturbations of `x` and tallies them.
pub fn sample_under_noise<C>(
    clf: &C,
    x: &[f64],
    sigma: f64,
    count: u64,
    seed: u64,
    stage: Stage,
    view: LabelView,
) -> Result<CountVector>
where
    C: EquippedClassifier + Sync + ?Sized,
{
    Sequential.sample(clf, &NoiseRequest { x, sigma, count, seed, stage, view })
}
