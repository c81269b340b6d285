//! Aggregate statistics over per-sample certification records.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::certifier::{CertificationMode, CertificationResult};
use crate::classifier::ExtendedLabel;

/// One input certified in one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub index: usize,
    pub true_label: usize,
    pub result: CertificationResult,
}

impl Record {
    pub fn mode(&self) -> CertificationMode {
        self.result.mode
    }

    /// Certified with the correct, confident label.
    pub fn certified_correct(&self) -> bool {
        self.result.radius.is_some() && self.result.predicted == Some(ExtendedLabel::Class(self.true_label))
    }
}

pub const DEFAULT_RADIUS_GRID: [f64; 5] = [0.0, 0.2, 0.4, 0.6, 0.8];

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub mode: CertificationMode,
    pub samples: usize,
    /// Certified accuracy at each grid radius.
    pub accuracy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedAccuracyTable {
    pub grid: Vec<f64>,
    pub rows: Vec<AccuracyRow>,
}

fn modes_present(records: &[Record]) -> Vec<CertificationMode> {
    CertificationMode::ALL.into_iter().filter(|m| records.iter().any(|r| r.mode() == *m)).collect()
}

/// Fraction of samples per mode certified with the true label and a radius
/// strictly larger than each grid value.
pub fn build_certified_accuracy_table(records: &[Record], grid: &[f64]) -> CertifiedAccuracyTable {
    let rows = modes_present(records)
        .into_iter()
        .map(|mode| {
            let rows: Vec<&Record> = records.iter().filter(|r| r.mode() == mode).collect();
            let accuracy = grid
                .iter()
                .map(|&r| {
                    let hits = rows
                        .iter()
                        .filter(|rec| rec.certified_correct() && rec.result.radius.is_some_and(|rad| rad > r))
                        .count();
                    hits as f64 / rows.len() as f64
                })
                .collect();
            AccuracyRow { mode, samples: rows.len(), accuracy }
        })
        .collect();
    CertifiedAccuracyTable { grid: grid.to_vec(), rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SignCounts {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl SignCounts {
    fn add(&mut self, diff: f64) {
        if diff > 0.0 {
            self.positive += 1;
        } else if diff < 0.0 {
            self.negative += 1;
        } else {
            self.zero += 1;
        }
    }
}

/// Per-sample change of `R_CC` and `R_NCL` relative to `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiiComparison {
    /// Samples certified correctly in all three modes with the same label.
    pub eligible: usize,
    pub mean_relative_cc: f64,
    pub mean_relative_ncl: f64,
    pub cc_signs: SignCounts,
    pub ncl_signs: SignCounts,
}

impl RadiiComparison {
    pub fn fraction(&self, count: usize) -> f64 {
        if self.eligible == 0 {
            0.0
        } else {
            count as f64 / self.eligible as f64
        }
    }
}

pub fn compare_radii(records: &[Record]) -> RadiiComparison {
    let mut by_index: BTreeMap<usize, [Option<&Record>; 3]> = BTreeMap::new();
    for r in records {
        let slot = match r.mode() {
            CertificationMode::Standard => 0,
            CertificationMode::Cc => 1,
            CertificationMode::Ncl => 2,
        };
        by_index.entry(r.index).or_default()[slot] = Some(r);
    }
    let mut out = RadiiComparison {
        eligible: 0,
        mean_relative_cc: 0.0,
        mean_relative_ncl: 0.0,
        cc_signs: SignCounts::default(),
        ncl_signs: SignCounts::default(),
    };
    let (mut sum_cc, mut sum_ncl) = (0.0, 0.0);
    for modes in by_index.values() {
        let [Some(std), Some(cc), Some(ncl)] = modes else { continue };
        if !(std.certified_correct() && cc.certified_correct() && ncl.certified_correct()) {
            continue;
        }
        let (r, r_cc, r_ncl) = match (std.result.radius, cc.result.radius, ncl.result.radius) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => continue,
        };
        out.eligible += 1;
        sum_cc += (r_cc - r) / r;
        sum_ncl += (r_ncl - r) / r;
        out.cc_signs.add(r_cc - r);
        out.ncl_signs.add(r_ncl - r);
    }
    if out.eligible > 0 {
        out.mean_relative_cc = sum_cc / out.eligible as f64;
        out.mean_relative_ncl = sum_ncl / out.eligible as f64;
    }
    out
}

/// How often the smoothed classifier leans on the uncertainty class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OodFractions {
    pub samples: usize,
    /// The selected label is the uncertainty class.
    pub uncertain_predicted: f64,
    /// The identified runner-up is the uncertainty class.
    pub runner_up_uncertain: f64,
    /// A confident label was selected but no runner-up was identified.
    pub no_runner_up: f64,
    /// No draw was labelled uncertain.
    pub no_uncertain_mass: f64,
    /// No label won the selection test.
    pub abstained: f64,
}

/// Fractions over the CC-mode records in `records`.
pub fn ood_statistics(records: &[Record]) -> OodFractions {
    let cc: Vec<&CertificationResult> =
        records.iter().filter(|r| r.mode() == CertificationMode::Cc).map(|r| &r.result).collect();
    let n = cc.len();
    let frac = |pred: &dyn Fn(&CertificationResult) -> bool| {
        if n == 0 {
            0.0
        } else {
            cc.iter().filter(|r| pred(r)).count() as f64 / n as f64
        }
    };
    OodFractions {
        samples: n,
        uncertain_predicted: frac(&|r| r.predicted == Some(ExtendedLabel::Uncertain)),
        runner_up_uncertain: frac(&|r| r.runner_up == Some(ExtendedLabel::Uncertain)),
        no_runner_up: frac(&|r| matches!(r.predicted, Some(ExtendedLabel::Class(_))) && r.runner_up.is_none()),
        no_uncertain_mass: frac(&|r| r.p_uncertain_hat == 0.0),
        abstained: frac(&|r| r.predicted.is_none()),
    }
}

/// Histogram of the number of distinct labels seen in the selection stage.
pub fn neighboring_class_histogram(records: &[Record]) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for r in records {
        *hist.entry(r.result.distinct_labels).or_insert(0) += 1;
    }
    hist
}
