//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits with
//! a failure status if any criterion fails.
//!
//! Run alone with `cargo test -p certsmooth --test acceptance`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use certsmooth::config::{Overrides, RunConfig};
use certsmooth::core::certifier::{
    certified_radius, certify, estimate_bounds, exact_radii_from_probs, improvement_check, predict_top_two,
    AbstainReason, CertificationMode, CertificationResult, SamplingConfig,
};
use certsmooth::core::classifier::{Equipped, ExtendedLabel, LabelView, LinearModel, Region1d, RegionLabel};
use certsmooth::core::noise::{sample_seed, sample_under_noise, Sequential, Stage};
use certsmooth::core::oracle::{piecewise1d_smoothed_probs, true_boundary_distance};
use certsmooth::core::report::{ood_statistics, Record};
use certsmooth::core::stats::{
    binom_p_value, clopper_pearson_lower, clopper_pearson_upper, inv_std_normal_cdf, std_normal_cdf, SignificanceLevel,
};
use certsmooth::model::load_mlp;
use certsmooth::records::records_to_string;
use certsmooth::run::run_certify_dataset;

const ALPHA: f64 = 0.001;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Allowed frequency of a level-`ALPHA` event over `reps` trials.
fn slack_bound(reps: usize) -> f64 {
    ALPHA + 3.0 * (ALPHA * (1.0 - ALPHA) / reps as f64).sqrt()
}

fn sampling(sigma: f64, n0: u64, n: u64, seed: u64) -> SamplingConfig {
    SamplingConfig::new(sigma, n0, n, ALPHA, seed).unwrap()
}

/// 1D regions whose smoothed masses at `x = 0`, `sigma = 1` equal `masses`.
fn regions_with_masses(masses: &[f64]) -> Region1d {
    let mut acc = 0.0;
    let mut breaks = Vec::new();
    for m in &masses[..masses.len() - 1] {
        acc += m;
        breaks.push(inv_std_normal_cdf(acc).unwrap());
    }
    let labels = (0..masses.len()).map(RegionLabel::confident).collect();
    Region1d::new(breaks, labels, None).unwrap()
}

fn linear_soundness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sigmas = [0.25, 0.5, 1.0];
    let (mut failures, mut certified) = (0, 0);
    for i in 0..200u64 {
        let d = rng.random_range(2..=10);
        let w: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let b: f64 = rng.sample(StandardNormal);
        let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let model = LinearModel::new(w, b).unwrap();
        let truth = if model.score(&x) > 0.0 { 1 } else { 0 };
        let limit = true_boundary_distance(&model, &x).unwrap();
        let cfg = sampling(sigmas[i as usize % 3], 1000, 10_000, 100 + i);
        let res = certify(&Equipped::plain(model), &x, &cfg, CertificationMode::Standard, &Sequential).unwrap();
        if let Some(r) = res.radius {
            certified += 1;
            if res.predicted != Some(ExtendedLabel::Class(truth)) || r > limit + 1e-9 {
                failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && secs < 300.0,
        format!("{failures} unsound radii among {certified} certified of 200 classifiers, {secs:.1}s"),
    )
}

fn random_banded_fixture(rng: &mut ChaCha8Rng) -> Region1d {
    let regions = rng.random_range(3..=6);
    let classes = rng.random_range(2..=4);
    let mut breaks: Vec<f64> = (0..regions - 1).map(|_| rng.random_range(-2.0..2.0)).collect();
    breaks.sort_by(f64::total_cmp);
    let mut labels: Vec<RegionLabel> = (0..regions)
        .map(|_| RegionLabel { class: rng.random_range(0..classes), confident: rng.random_bool(0.65) })
        .collect();
    // At least one uncertain band.
    let band = rng.random_range(0..regions);
    labels[band].confident = false;
    Region1d::new(breaks, labels, Some(classes)).unwrap()
}

fn ordering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut both, mut violations) = (0, 0);
    let mut worst = String::new();
    for f in 0..100u64 {
        let rc = random_banded_fixture(&mut rng);
        for j in 0..5u64 {
            let x = rng.random_range(-2.5..2.5);
            let sigma = [0.25, 0.5, 1.0][rng.random_range(0..3)];
            let cfg = sampling(sigma, 1000, 10_000, 1000 * f + j);
            let cc = certify(&rc, &[x], &cfg, CertificationMode::Cc, &Sequential).unwrap();
            let ncl = certify(&rc, &[x], &cfg, CertificationMode::Ncl, &Sequential).unwrap();
            if let (Some(a), Some(b)) = (cc.radius, ncl.radius) {
                both += 1;
                if a > b {
                    violations += 1;
                    worst = format!("; fixture {f} x = {x}: R_CC {a} > R_NCL {b}");
                }
            }
        }
    }
    outcome(
        violations == 0 && both > 0,
        format!("{violations} violations over {both} inputs certified in both modes{worst}"),
    )
}

fn same_except_mode(a: &CertificationResult, b: &CertificationResult) -> bool {
    let bits = |v: Option<f64>| v.map(f64::to_bits);
    a.predicted == b.predicted
        && a.runner_up == b.runner_up
        && a.abstain == b.abstain
        && bits(a.radius) == bits(b.radius)
        && bits(a.pa_lower) == bits(b.pa_lower)
        && bits(a.pb_upper) == bits(b.pb_upper)
        && a.p_uncertain_hat.to_bits() == b.p_uncertain_hat.to_bits()
        && a.used_one_vs_all == b.used_one_vs_all
        && a.distinct_labels == b.distinct_labels
        && a.clamped == b.clamped
}

fn collapse() -> Outcome {
    let mlp = Equipped::plain(load_mlp(&fixture("mlp_2d.json")).unwrap());
    let lin = Equipped::plain(LinearModel::new(vec![1.0, -2.0], 0.25).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut checked, mut mismatches) = (0, 0);
    for i in 0..60u64 {
        let x = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
        let cfg = sampling(0.5, 1000, 5000, i);
        let rc = random_banded_fixture(&mut rng);
        let all_confident: Vec<RegionLabel> = rc.labels().iter().map(|l| RegionLabel::confident(l.class)).collect();
        let plain_regions = Region1d::new(rc.breakpoints().to_vec(), all_confident, Some(4)).unwrap();
        let runs: [Vec<CertificationResult>; 3] = [
            CertificationMode::ALL.iter().map(|&m| certify(&mlp, &x, &cfg, m, &Sequential).unwrap()).collect(),
            CertificationMode::ALL.iter().map(|&m| certify(&lin, &x, &cfg, m, &Sequential).unwrap()).collect(),
            CertificationMode::ALL
                .iter()
                .map(|&m| certify(&plain_regions, &x[..1], &cfg, m, &Sequential).unwrap())
                .collect(),
        ];
        for r in &runs {
            checked += 1;
            if !(same_except_mode(&r[0], &r[1]) && same_except_mode(&r[0], &r[2])) {
                mismatches += 1;
            }
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatching inputs out of {checked}"))
}

fn random_simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn improvement_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut pairs, mut discrepancies, mut improved) = (0, 0, 0);
    while pairs < 10_000 {
        let k = rng.random_range(2..=5);
        let p_sup = random_simplex(&mut rng, k);
        // Move a random share of every class into the uncertainty class.
        let mut p_theta: Vec<f64> = p_sup.iter().map(|&p| p * (1.0 - rng.random_range(0.0..0.6))).collect();
        let moved = 1.0 - p_theta.iter().sum::<f64>();
        p_theta.push(moved);
        let Ok(c) = improvement_check(&p_sup, &p_theta) else { continue };
        pairs += 1;
        let r = exact_radii_from_probs(&p_sup, &p_theta, 1.0).unwrap();
        if c.predicts_improvement {
            improved += 1;
        }
        if c.predicts_improvement != (r.cc > r.standard) {
            discrepancies += 1;
        }
    }

    // Class 0 below 0.5, an uncertain band over [0.5, 1) that the base
    // classifier labels 1, class 1 beyond.
    let rc = Region1d::new(
        vec![0.5, 1.0],
        vec![RegionLabel::confident(0), RegionLabel::uncertain(1), RegionLabel::confident(1)],
        None,
    )
    .unwrap();
    let base = piecewise1d_smoothed_probs(&rc, 0.0, 0.5, LabelView::Base).unwrap();
    let ext = piecewise1d_smoothed_probs(&rc, 0.0, 0.5, LabelView::Extended).unwrap();
    let r = exact_radii_from_probs(&base[..2], &ext, 0.5).unwrap();
    let c = improvement_check(&base[..2], &ext).unwrap();
    let fixture_ok = r.cc > r.standard && c.predicts_improvement;
    outcome(
        discrepancies == 0 && fixture_ok,
        format!(
            "{discrepancies} discrepancies over {pairs} pairs ({improved} predicted improvements); \
             asymmetric fixture R = {:.6}, R_CC = {:.6}",
            r.standard, r.cc
        ),
    )
}

fn coverage() -> Outcome {
    let reps = 10_000;
    let n = 1000u64;
    let level = SignificanceLevel::new(ALPHA).unwrap();
    let threshold = 1.0 - ALPHA - 3.0 * (ALPHA / reps as f64).sqrt();
    let mut lower = vec![None; n as usize + 1];
    let mut upper = vec![None; n as usize + 1];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 1.0f64;
    for i in 1..=9 {
        let p = i as f64 / 10.0;
        let binom = Binomial::new(n, p).unwrap();
        let (mut lo_ok, mut hi_ok) = (0, 0);
        for _ in 0..reps {
            let k = binom.sample(&mut rng);
            let l = *lower[k as usize].get_or_insert_with(|| clopper_pearson_lower(k, n, level).unwrap());
            let u = *upper[k as usize].get_or_insert_with(|| clopper_pearson_upper(k, n, level).unwrap());
            lo_ok += usize::from(l <= p);
            hi_ok += usize::from(u >= p);
        }
        worst = worst.min(lo_ok as f64 / reps as f64).min(hi_ok as f64 / reps as f64);
    }
    outcome(worst >= threshold, format!("lowest coverage {worst:.4}, required {threshold:.4}"))
}

fn rank_selection() -> Outcome {
    let reps = 10_000u64;
    let rc = regions_with_masses(&[0.5, 0.3, 0.2]);
    let (mut wrong_winner, mut with_runner_up, mut wrong_order) = (0, 0, 0);
    for r in 0..reps {
        let cfg = sampling(1.0, 1000, 1000, sample_seed(6, r));
        let sel = predict_top_two(&rc, &[0.0], &cfg, CertificationMode::Standard, &Sequential).unwrap();
        if let Some(w) = sel.winner {
            if w != ExtendedLabel::Class(0) {
                wrong_winner += 1;
            }
            if let Some(b) = sel.runner_up {
                with_runner_up += 1;
                if (w, b) != (ExtendedLabel::Class(0), ExtendedLabel::Class(1)) {
                    wrong_order += 1;
                }
            }
        }
    }
    let f_winner = wrong_winner as f64 / reps as f64;
    let f_order = if with_runner_up == 0 { 0.0 } else { wrong_order as f64 / with_runner_up as f64 };
    let pass =
        f_winner <= slack_bound(reps as usize) && f_order <= slack_bound(with_runner_up.max(1)) && with_runner_up > 0;
    outcome(
        pass,
        format!(
            "wrong winner {f_winner:.5} (bound {:.5}); wrong ordering {f_order:.5} over {with_runner_up} pairs (bound {:.5})",
            slack_bound(reps as usize),
            slack_bound(with_runner_up.max(1))
        ),
    )
}

fn lower_bound_validity() -> Outcome {
    let reps = 2000u64;
    let rc = regions_with_masses(&[0.6, 0.3, 0.1]);
    let truth = piecewise1d_smoothed_probs(&rc, 0.0, 1.0, LabelView::Base).unwrap();
    let (mut pa_bad, mut pb_bad, mut estimated) = (0, 0, 0);
    for r in 0..reps {
        let cfg = sampling(1.0, 1000, 10_000, sample_seed(7, r));
        let res = certify(&rc, &[0.0], &cfg, CertificationMode::Standard, &Sequential).unwrap();
        let (Some(ExtendedLabel::Class(a)), Some(pa), Some(pb)) = (res.predicted, res.pa_lower, res.pb_upper) else {
            continue;
        };
        estimated += 1;
        let p_b = match res.runner_up {
            Some(ExtendedLabel::Class(b)) => truth[b],
            _ => (0..3).filter(|&c| c != a).map(|c| truth[c]).fold(0.0, f64::max),
        };
        pa_bad += usize::from(pa > truth[a]);
        pb_bad += usize::from(pb < p_b);
    }
    let bound = slack_bound(reps as usize);
    let (fa, fb) = (pa_bad as f64 / reps as f64, pb_bad as f64 / reps as f64);
    outcome(
        fa <= bound && fb <= bound && estimated > 0,
        format!("pA_lower above truth {fa:.5}, pB_upper below truth {fb:.5} (bound {bound:.5}, {estimated} estimated)"),
    )
}

fn one_vs_all_fallback() -> Outcome {
    // Two labels only: the runner-up is identified but its paired bound
    // meets the winner's, which forces the fallback.
    let rc = Region1d::new(vec![0.0], vec![RegionLabel::confident(0), RegionLabel::confident(1)], None).unwrap();
    let sigma = 1.0;
    let (mut forced, mut bad, mut certified, mut nonpositive) = (0, 0, 0, 0);
    for i in 0..400u64 {
        // Winner mass between about 0.55 and 0.9.
        let x = -0.13 - 1.15 * (i % 40) as f64 / 40.0;
        let cfg = sampling(sigma, 1000, 1000, sample_seed(8, i));
        let res = certify(&rc, &[x], &cfg, CertificationMode::Standard, &Sequential).unwrap();
        let (Some(pa), Some(pb)) = (res.pa_lower, res.pb_upper) else { continue };
        if res.runner_up.is_none() {
            continue;
        }
        forced += 1;
        let mut ok = res.used_one_vs_all && pb == 1.0 - pa;
        let expected = sigma * inv_std_normal_cdf(pa).unwrap();
        match res.radius {
            Some(r) => {
                certified += 1;
                ok &= pa > 0.5 && (r - expected).abs() <= 1e-12 * (1.0 + expected.abs());
            }
            None => {
                nonpositive += 1;
                ok &= pa <= 0.5 && res.abstain == Some(AbstainReason::NonpositiveRadius);
            }
        }
        if !ok {
            bad += 1;
        }
    }
    outcome(
        bad == 0 && certified > 0 && nonpositive > 0,
        format!("{bad} inconsistent of {forced} forced fallbacks ({certified} certified, {nonpositive} nonpositive)"),
    )
}

fn exact_upper_tail(k: u64, n: u64) -> f64 {
    let mut c = 1u128;
    let mut sum = 0u128;
    for j in 0..=n {
        if j >= k {
            sum += c;
        }
        c = c * (n - j) as u128 / (j + 1) as u128;
    }
    sum as f64 / 2f64.powi(n as i32)
}

fn numerics() -> Outcome {
    let points = 100_000;
    let (lo, hi) = (1e-10f64, 1.0 - 1e-10);
    let mut worst_abs = 0.0f64;
    let mut worst_tail_rel = 0.0f64;
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        // Alternate between a linear grid and a grid uniform in log-odds.
        let p = if i % 2 == 0 {
            lo + (hi - lo) * t
        } else {
            let (a, b) = ((lo / (1.0 - lo)).ln(), (hi / (1.0 - hi)).ln());
            1.0 / (1.0 + (-(a + (b - a) * t)).exp())
        };
        let q = inv_std_normal_cdf(p).unwrap();
        worst_abs = worst_abs.max((std_normal_cdf(q) - p).abs());
        let (tail, target) = if p < 0.5 { (std_normal_cdf(q), p) } else { (std_normal_cdf(-q), 1.0 - p) };
        worst_tail_rel = worst_tail_rel.max((tail - target).abs() / target);
    }
    let mut worst_rel = 0.0f64;
    for n in 1..=60u64 {
        for k in 0..=n {
            let exact = exact_upper_tail(k, n);
            let got = binom_p_value(k, n).unwrap();
            worst_rel = worst_rel.max((got - exact).abs() / exact);
        }
    }
    outcome(
        worst_abs <= 1e-10 && worst_rel <= 1e-12,
        format!(
            "quantile round trip {worst_abs:.2e} absolute ({worst_tail_rel:.2e} relative in the tail); \
             binomial tail {worst_rel:.2e} relative"
        ),
    )
}

fn runner_up_improvement() -> Outcome {
    let rc = regions_with_masses(&[0.8, 0.15, 0.05]);
    let level = SignificanceLevel::new(ALPHA).unwrap();
    let (mut wins, mut runs_with_runner_up, mut mismatched) = (0, 0, 0);
    for r in 0..100u64 {
        let cfg = sampling(1.0, 1000, 10_000, sample_seed(10, r));
        let res = certify(&rc, &[0.0], &cfg, CertificationMode::Standard, &Sequential).unwrap();
        let (Some(a), Some(b)) = (res.predicted, res.runner_up) else { continue };
        runs_with_runner_up += 1;
        let counts = sample_under_noise(&rc, &[0.0], 1.0, cfg.n, cfg.seed, Stage::Estimation, LabelView::Base).unwrap();
        let paired = estimate_bounds(counts.get(a), Some(counts.get(b)), cfg.n, level).unwrap();
        let single = estimate_bounds(counts.get(a), None, cfg.n, level).unwrap();
        let r_paired = certified_radius(paired.pa_lower, paired.pb_upper, 1.0).unwrap();
        let r_single = certified_radius(single.pa_lower, single.pb_upper, 1.0).unwrap();
        if res.radius != Some(r_paired) || paired.one_vs_all {
            mismatched += 1;
        }
        if r_paired > r_single {
            wins += 1;
        }
    }
    outcome(
        wins >= 95 && mismatched == 0,
        format!(
            "paired bound larger in {wins}/100 runs ({runs_with_runner_up} with a runner-up, {mismatched} mismatched)"
        ),
    )
}

fn ood_direction() -> Outcome {
    let run = |name: &str| -> Vec<Record> {
        let cfg = RunConfig::load(&fixture(name), &Overrides::default()).unwrap();
        run_certify_dataset(&cfg, 1).unwrap().records
    };
    let id = ood_statistics(&run("boxes_id_config.json"));
    let ood = ood_statistics(&run("boxes_ood_config.json"));
    let pass = ood.uncertain_predicted > id.uncertain_predicted
        && ood.runner_up_uncertain > id.runner_up_uncertain
        && ood.no_uncertain_mass < id.no_uncertain_mass;
    outcome(
        pass,
        format!(
            "uncertain predicted {:.2} vs {:.2}, uncertain runner-up {:.2} vs {:.2}, no uncertain mass {:.2} vs {:.2} (OOD vs ID)",
            ood.uncertain_predicted,
            id.uncertain_predicted,
            ood.runner_up_uncertain,
            id.runner_up_uncertain,
            ood.no_uncertain_mass,
            id.no_uncertain_mass
        ),
    )
}

fn determinism() -> Outcome {
    let config = fixture("mlp_config.json");
    let cfg = RunConfig::load(&config, &Overrides::default()).unwrap();
    let library: Vec<String> =
        [1, 4, 16].iter().map(|&w| records_to_string(&run_certify_dataset(&cfg, w).unwrap().records)).collect();
    let cli: Vec<Vec<u8>> = ["1", "4", "16"]
        .iter()
        .map(|t| {
            let out = Command::new(env!("CARGO_BIN_EXE_certsmooth"))
                .args(["certify", "--config", config.to_str().unwrap()])
                .env("CERTSMOOTH_THREADS", t)
                .output()
                .unwrap();
            assert!(out.status.success());
            out.stdout
        })
        .collect();
    let pass =
        library.iter().all(|s| s == &library[0]) && cli.iter().all(|s| s == &cli[0]) && cli[0] == library[0].as_bytes();
    outcome(pass, format!("{} bytes of records for 1, 4 and 16 workers", library[0].len()))
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check); 12] = [
        ("linear-oracle soundness", linear_soundness),
        ("R_CC <= R_NCL ordering", ordering),
        ("threshold-disabled collapse", collapse),
        ("improvement inequality equivalence", improvement_equivalence),
        ("Clopper-Pearson coverage", coverage),
        ("rank-selection error", rank_selection),
        ("lower-bound validity", lower_bound_validity),
        ("one-vs-all fallback", one_vs_all_fallback),
        ("numerics", numerics),
        ("runner-up improvement", runner_up_improvement),
        ("OOD direction", ood_direction),
        ("determinism across worker counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
