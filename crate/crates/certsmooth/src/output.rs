//! Tables and plot data as CSV and aligned text.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use certsmooth_core::calibration::CalibrationOutcome;
use certsmooth_core::certifier::CertificationMode;
use certsmooth_core::report::{
    neighboring_class_histogram, CertifiedAccuracyTable, OodFractions, RadiiComparison, Record, SignCounts,
};

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().enumerate().map(|(c, cell)| format!("{cell:<w$}", w = widths[c])).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn csv_lines(rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

fn percent(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

pub fn table_csv(t: &CertifiedAccuracyTable) -> String {
    let mut rows =
        vec![["mode".to_string(), "samples".into()].into_iter().chain(t.grid.iter().map(|r| r.to_string())).collect()];
    for row in &t.rows {
        rows.push(
            [row.mode.as_str().to_string(), row.samples.to_string()]
                .into_iter()
                .chain(row.accuracy.iter().map(|a| a.to_string()))
                .collect(),
        );
    }
    csv_lines(&rows)
}

/// Certified accuracy in percent, one row per mode.
pub fn table_text(t: &CertifiedAccuracyTable) -> String {
    let mut rows = vec![["mode".to_string(), "samples".into()]
        .into_iter()
        .chain(t.grid.iter().map(|r| format!("r={r}")))
        .collect::<Vec<_>>()];
    for row in &t.rows {
        rows.push(
            [row.mode.as_str().to_string(), row.samples.to_string()]
                .into_iter()
                .chain(row.accuracy.iter().map(|&a| percent(a)))
                .collect(),
        );
    }
    align(&rows)
}

fn sign_cells(s: &SignCounts, c: &RadiiComparison) -> [String; 3] {
    [percent(c.fraction(s.positive)), percent(c.fraction(s.negative)), percent(c.fraction(s.zero))]
}

pub fn compare_csv(c: &RadiiComparison) -> String {
    let mut rows =
        vec![["radius", "mean_relative_change", "positive", "negative", "zero", "eligible"].map(String::from).to_vec()];
    for (name, mean, s) in [("cc", c.mean_relative_cc, &c.cc_signs), ("ncl", c.mean_relative_ncl, &c.ncl_signs)] {
        rows.push(vec![
            name.into(),
            mean.to_string(),
            s.positive.to_string(),
            s.negative.to_string(),
            s.zero.to_string(),
            c.eligible.to_string(),
        ]);
    }
    csv_lines(&rows)
}

/// Mean relative change and sign fractions (in percent) against `R`.
pub fn compare_text(c: &RadiiComparison) -> String {
    let mut rows =
        vec![["radius", "mean change %", "positive %", "negative %", "zero %", "total"].map(String::from).to_vec()];
    for (name, mean, s) in [("R_CC", c.mean_relative_cc, &c.cc_signs), ("R_NCL", c.mean_relative_ncl, &c.ncl_signs)] {
        let mut row = vec![name.to_string(), percent(mean)];
        row.extend(sign_cells(s, c));
        row.push(c.eligible.to_string());
        rows.push(row);
    }
    align(&rows)
}

const OOD_COLUMNS: [&str; 7] = [
    "dataset",
    "samples",
    "uncertain_predicted",
    "runner_up_uncertain",
    "no_runner_up",
    "no_uncertain_mass",
    "abstained",
];

fn ood_values(f: &OodFractions) -> [f64; 5] {
    [f.uncertain_predicted, f.runner_up_uncertain, f.no_runner_up, f.no_uncertain_mass, f.abstained]
}

pub fn ood_csv(id: &OodFractions, ood: &OodFractions) -> String {
    let mut rows = vec![OOD_COLUMNS.map(String::from).to_vec()];
    for (name, f) in [("id", id), ("ood", ood)] {
        let mut row = vec![name.to_string(), f.samples.to_string()];
        row.extend(ood_values(f).iter().map(|v| v.to_string()));
        rows.push(row);
    }
    csv_lines(&rows)
}

pub fn ood_text(id: &OodFractions, ood: &OodFractions) -> String {
    let mut rows = vec![OOD_COLUMNS.map(String::from).to_vec()];
    for (name, f) in [("id", id), ("ood", ood)] {
        let mut row = vec![name.to_string(), f.samples.to_string()];
        row.extend(ood_values(f).iter().map(|&v| percent(v)));
        rows.push(row);
    }
    align(&rows)
}

/// Distinct-label histograms, one per mode present in `records`.
pub fn histograms(records: &[Record]) -> Vec<(CertificationMode, BTreeMap<usize, usize>)> {
    CertificationMode::ALL
        .into_iter()
        .filter_map(|m| {
            let subset: Vec<Record> = records.iter().filter(|r| r.mode() == m).cloned().collect();
            (!subset.is_empty()).then(|| (m, neighboring_class_histogram(&subset)))
        })
        .collect()
}

pub fn hist_csv(hists: &[(CertificationMode, BTreeMap<usize, usize>)]) -> String {
    let mut rows = vec![vec!["mode".to_string(), "distinct_labels".into(), "samples".into()]];
    for (mode, h) in hists {
        for (k, v) in h {
            rows.push(vec![mode.as_str().into(), k.to_string(), v.to_string()]);
        }
    }
    csv_lines(&rows)
}

pub fn hist_text(hists: &[(CertificationMode, BTreeMap<usize, usize>)]) -> String {
    let mut out = String::new();
    for (mode, h) in hists {
        let total: usize = h.values().sum();
        let _ = writeln!(out, "{} ({} samples)", mode.as_str(), total);
        let rows: Vec<Vec<String>> = h
            .iter()
            .map(|(k, v)| {
                vec![format!("  {k} labels"), v.to_string(), format!("{}%", percent(*v as f64 / total as f64))]
            })
            .collect();
        out.push_str(&align(&rows));
    }
    out
}

pub fn calibration_trace_csv(o: &CalibrationOutcome) -> String {
    let mut rows = vec![vec!["theta".to_string(), "accuracy".into()]];
    rows.extend(o.trace.iter().map(|(t, a)| vec![t.to_string(), a.to_string()]));
    csv_lines(&rows)
}

pub fn calibration_text(o: &CalibrationOutcome) -> String {
    let mut out = format!(
        "theta {}\nbaseline accuracy {}\naccuracy at theta {}\nthresholds evaluated {}\n",
        o.theta,
        percent(o.baseline_accuracy),
        percent(o.accuracy),
        o.trace.len()
    );
    if o.budget_violated_at_start {
        out.push_str("warning: the least restrictive threshold already exceeds the accuracy budget\n");
    }
    out
}
