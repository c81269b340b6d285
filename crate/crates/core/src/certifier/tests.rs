use super::*;
use crate::classifier::{Equipped, LinearModel, Region1d, RegionLabel};
use crate::noise::{CountVector, Sequential};
use crate::stats::std_normal_cdf;
use alloc::vec;
use alloc::vec::Vec;
use proptest::prelude::*;

fn alpha() -> SignificanceLevel {
    SignificanceLevel::DEFAULT
}

fn counts(c: &[u64]) -> CountVector {
    CountVector::from_counts(c.to_vec())
}

fn region(breaks: &[f64], labels: &[RegionLabel]) -> Region1d {
    Region1d::new(breaks.to_vec(), labels.to_vec(), None).unwrap()
}

#[test]
fn unanimous_counts_select_winner_only() {
    let s = select_top_two(&counts(&[0, 1000, 0, 0]), alpha(), CertificationMode::Standard).unwrap();
    assert_eq!(s.winner, Some(ExtendedLabel::Class(1)));
    assert_eq!(s.runner_up, None);
    assert_eq!(s.abstain, None);
}

#[test]
fn close_race_abstains() {
    let s = select_top_two(&counts(&[520, 480, 0]), alpha(), CertificationMode::Standard).unwrap();
    assert_eq!(s.winner, None);
    assert_eq!(s.abstain, Some(AbstainReason::NoSignificantWinner));
}

#[test]
fn clear_ranking_selects_both() {
    let s = select_top_two(&counts(&[700, 250, 50, 0]), alpha(), CertificationMode::Standard).unwrap();
    assert_eq!(s.winner, Some(ExtendedLabel::Class(0)));
    assert_eq!(s.runner_up, Some(ExtendedLabel::Class(1)));
}

#[test]
fn uncertain_winner_abstains_in_extended_modes() {
    let c = counts(&[100, 50, 850]);
    for mode in [CertificationMode::Cc, CertificationMode::Ncl] {
        let s = select_top_two(&c, alpha(), mode).unwrap();
        assert_eq!(s.winner, Some(ExtendedLabel::Uncertain));
        assert_eq!(s.abstain, Some(AbstainReason::UncertainPrediction));
    }
}

#[test]
fn ncl_runner_up_skips_the_uncertainty_class() {
    // Class 0 wins; uncertainty is second, class 2 third, class 1 last.
    let c = counts(&[700, 10, 60, 230]);
    let cc = select_top_two(&c, alpha(), CertificationMode::Cc).unwrap();
    assert_eq!(cc.runner_up, Some(ExtendedLabel::Uncertain));
    let ncl = select_top_two(&c, alpha(), CertificationMode::Ncl).unwrap();
    assert_eq!(ncl.winner, Some(ExtendedLabel::Class(0)));
    assert_eq!(ncl.runner_up, Some(ExtendedLabel::Class(2)));
}

#[test]
fn radius_examples() {
    assert_eq!(certified_radius(0.4, 0.4, 1.0).unwrap(), 0.0);
    let r = certified_radius(0.977_250, 0.022_750, 0.25).unwrap();
    assert!((r - 0.5).abs() < 1e-6);
    let r = certified_radius(0.75, 0.25, 1.0).unwrap();
    assert!((r - 0.674_489_750_196_081_7).abs() < 1e-12);
    assert!(certified_radius(1.0, 0.2, 1.0).is_err());
    assert!(certified_radius(0.8, 0.0, 1.0).is_err());
}

#[test]
fn one_vs_all_fallback_bounds() {
    let b = estimate_bounds(9_900, None, 10_000, alpha()).unwrap();
    assert!(b.one_vs_all);
    assert_eq!(b.pb_upper, 1.0 - b.pa_lower);
    assert_eq!(b.pa_lower, clopper_pearson_lower(9_900, 10_000, alpha()).unwrap());

    // Two labels only: the paired bounds meet at exactly one.
    let b = estimate_bounds(9_900, Some(100), 10_000, alpha()).unwrap();
    assert!(b.one_vs_all);
    assert_eq!(b.pa_lower, clopper_pearson_lower(9_900, 10_000, alpha()).unwrap());

    let b = estimate_bounds(6_000, Some(1_000), 10_000, alpha()).unwrap();
    assert!(!b.one_vs_all);
    assert_eq!(b.pa_lower, clopper_pearson_lower(6_000, 10_000, alpha().halved()).unwrap());
    assert_eq!(b.pb_upper, clopper_pearson_upper(1_000, 10_000, alpha().halved()).unwrap());
}

fn quick(sigma: f64, seed: u64) -> SamplingConfig {
    SamplingConfig::new(sigma, 1000, 10_000, 0.001, seed).unwrap()
}

#[test]
fn config_validation() {
    assert!(SamplingConfig::new(0.0, 1000, 10_000, 0.001, 0).is_err());
    assert!(SamplingConfig::new(0.5, 1, 10_000, 0.001, 0).is_err());
    assert!(SamplingConfig::new(0.5, 1000, 999, 0.001, 0).is_err());
    assert!(SamplingConfig::new(0.5, 1000, 1000, 1.5, 0).is_err());
    let d = SamplingConfig::default();
    assert_eq!((d.n0, d.n, d.alpha.get()), (1000, 100_000, 0.001));
}

#[test]
fn split_classifier_radius_approaches_boundary_distance() {
    let rc = region(&[0.5], &[RegionLabel::confident(0), RegionLabel::confident(1)]);
    let mut previous = 0.0;
    for n in [2_000u64, 20_000, 200_000] {
        let cfg = SamplingConfig::new(0.25, 1000, n, 0.001, 42).unwrap();
        let res = certify(&rc, &[0.0], &cfg, CertificationMode::Standard, &Sequential).unwrap();
        let r = res.radius.unwrap();
        assert!(r <= 0.5, "radius {r} exceeds the boundary distance");
        assert!(r > previous);
        previous = r;
        assert_eq!(res.predicted, Some(ExtendedLabel::Class(0)));
    }
    assert!(previous > 0.48);
}

#[test]
fn uncertain_band_extends_the_ncl_radius() {
    let banded =
        region(&[0.3, 0.7], &[RegionLabel::confident(0), RegionLabel::uncertain(1), RegionLabel::confident(1)]);
    let band_free = region(&[0.3], &[RegionLabel::confident(0), RegionLabel::confident(1)]);
    let cfg = quick(0.25, 7);
    let ncl = certify(&banded, &[0.0], &cfg, CertificationMode::Ncl, &Sequential).unwrap();
    let std = certify(&band_free, &[0.0], &cfg, CertificationMode::Standard, &Sequential).unwrap();
    assert!(ncl.radius.unwrap() > std.radius.unwrap());

    // The exact radii order the same way.
    let exact_ncl = 0.25 * crate::stats::inv_std_normal_cdf(std_normal_cdf(2.8)).unwrap();
    let exact_std = 0.25 * crate::stats::inv_std_normal_cdf(std_normal_cdf(1.2)).unwrap();
    assert!(exact_ncl > exact_std);
    assert!(ncl.radius.unwrap() <= exact_ncl);
}

fn strip_mode(mut r: CertificationResult) -> CertificationResult {
    r.mode = CertificationMode::Standard;
    r
}

#[test]
fn disabled_threshold_collapses_modes() {
    let lin = Equipped::plain(LinearModel::new(vec![1.0, -2.0], 0.3).unwrap());
    let regions =
        region(&[-0.2, 0.1], &[RegionLabel::confident(0), RegionLabel::confident(2), RegionLabel::confident(1)]);
    for seed in 0..4 {
        let cfg = quick(0.3, seed);
        let results: Vec<_> = CertificationMode::ALL
            .iter()
            .map(|&m| strip_mode(certify(&lin, &[0.1, 0.2], &cfg, m, &Sequential).unwrap()))
            .collect();
        assert_eq!(results[0], results[1]);
        assert_eq!(results[0], results[2]);
        let results: Vec<_> = CertificationMode::ALL
            .iter()
            .map(|&m| strip_mode(certify(&regions, &[0.0], &cfg, m, &Sequential).unwrap()))
            .collect();
        assert_eq!(results[0], results[1]);
        assert_eq!(results[0], results[2]);
    }
}

#[test]
fn certification_is_deterministic() {
    let rc = region(&[-0.4, 0.2], &[RegionLabel::confident(0), RegionLabel::uncertain(1), RegionLabel::confident(2)]);
    let cfg = quick(0.5, 1234);
    for mode in CertificationMode::ALL {
        let a = certify(&rc, &[0.0], &cfg, mode, &Sequential).unwrap();
        let b = certify(&rc, &[0.0], &cfg, mode, &Sequential).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn cc_abstains_inside_a_wide_uncertain_region() {
    let rc = region(&[-5.0, 5.0], &[RegionLabel::confident(0), RegionLabel::uncertain(0), RegionLabel::confident(1)]);
    let res = certify(&rc, &[0.0], &quick(0.5, 3), CertificationMode::Cc, &Sequential).unwrap();
    assert_eq!(res.predicted, Some(ExtendedLabel::Uncertain));
    assert_eq!(res.abstain, Some(AbstainReason::UncertainPrediction));
    assert_eq!(res.radius, None);
    assert_eq!(res.p_uncertain_hat, 1.0);
}

#[test]
fn coin_flip_input_abstains() {
    let rc = region(&[0.0], &[RegionLabel::confident(0), RegionLabel::confident(1)]);
    let res = certify(&rc, &[0.0], &quick(1.0, 5), CertificationMode::Standard, &Sequential).unwrap();
    assert_eq!(res.abstain, Some(AbstainReason::NoSignificantWinner));
    assert_eq!(res.predicted, None);
    assert_eq!(res.distinct_labels, 2);
}

#[test]
fn dimension_checked_before_sampling() {
    let rc = region(&[0.0], &[RegionLabel::confident(0), RegionLabel::confident(1)]);
    assert!(certify(&rc, &[0.0, 1.0], &quick(1.0, 5), CertificationMode::Standard, &Sequential).is_err());
}

#[test]
fn exact_radii_examples() {
    let r = exact_radii_from_probs(&[0.7, 0.3], &[0.7, 0.2, 0.1], 1.0).unwrap();
    // Frozen from an independent scipy evaluation of the two formulas.
    assert!((r.cc - 0.683_010_873_140_477_4).abs() < 1e-12);
    assert!((r.ncl - 0.841_621_233_572_914_3).abs() < 1e-12);

    let r = exact_radii_from_probs(&[0.6, 0.4], &[0.6, 0.4, 0.0], 0.5).unwrap();
    assert_eq!(r.cc, r.ncl);

    let r = exact_radii_from_probs(&[0.4, 0.6], &[0.3, 0.1, 0.6], 1.0).unwrap();
    assert!(r.uncertifiable);
    assert_eq!((r.cc, r.ncl), (0.0, 0.0));

    assert!(exact_radii_from_probs(&[0.5, 0.4], &[0.5, 0.4, 0.1], 1.0).is_err());
    assert!(exact_radii_from_probs(&[0.5, 0.5], &[0.5, 0.5], 1.0).is_err());
}

#[test]
fn improvement_check_examples() {
    // Mass moved from the runner-up to the uncertainty class.
    let c = improvement_check(&[0.6, 0.4], &[0.6, 0.2, 0.2]).unwrap();
    assert!(c.predicts_improvement);
    assert!(c.lhs > 0.0 && c.rhs == 0.0);
    let r = exact_radii_from_probs(&[0.6, 0.4], &[0.6, 0.2, 0.2], 1.0).unwrap();
    assert!(r.cc > r.standard);

    let c = improvement_check(&[0.6, 0.4], &[0.6, 0.4, 0.0]).unwrap();
    assert_eq!((c.lhs, c.rhs, c.predicts_improvement), (0.0, 0.0, false));

    // Mass moved from the winner.
    let c = improvement_check(&[0.9, 0.1], &[0.7, 0.1, 0.2]).unwrap();
    assert!(!c.predicts_improvement);
    assert!(c.rhs > 0.0 && c.lhs <= 0.0);
    let r = exact_radii_from_probs(&[0.9, 0.1], &[0.7, 0.1, 0.2], 1.0).unwrap();
    assert!(r.cc < r.standard);

    assert!(improvement_check(&[0.6, 0.4], &[0.3, 0.5, 0.2]).is_err());
}

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    })
}

proptest! {
    #[test]
    fn exact_cc_never_exceeds_ncl(p in simplex(4), base in simplex(3), sigma in 0.1f64..2.0) {
        let r = exact_radii_from_probs(&base, &p, sigma).unwrap();
        prop_assert!(r.cc <= r.ncl);
    }

    #[test]
    fn radius_monotone_and_linear(pa in 0.05f64..0.95, pb in 0.05f64..0.95, d in 1e-4f64..0.04, s in 0.1f64..3.0) {
        let r = certified_radius(pa, pb, 1.0).unwrap();
        prop_assert!(certified_radius(pa + d, pb, 1.0).unwrap() > r);
        prop_assert!(certified_radius(pa, pb + d, 1.0).unwrap() < r);
        prop_assert!((certified_radius(pa, pb, s).unwrap() - s * r).abs() <= 1e-12 * (1.0 + r.abs() * s));
    }

    #[test]
    fn one_vs_all_radius_form(k in 1u64..10_000) {
        let b = estimate_bounds(k, None, 10_000, alpha()).unwrap();
        let pa = b.pa_lower.clamp(CLAMP, 1.0 - CLAMP);
        let r = certified_radius(pa, 1.0 - pa, 0.7).unwrap();
        prop_assert!((r - 0.7 * crate::stats::inv_std_normal_cdf(pa).unwrap()).abs() < 1e-12);
        prop_assert_eq!(r > 0.0, b.pa_lower > 0.5);
    }
}
