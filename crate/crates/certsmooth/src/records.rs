//! Per-sample records CSV.
//!
//! Columns: `index, true_label, mode, predicted, abstain_reason, radius,
//! pa_lower, pb_upper, p_uncertain_hat, one_vs_all, distinct_labels,
//! runner_up`. Missing values are empty fields. Floats use the shortest
//! representation that parses back to the same value.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use certsmooth_core::certifier::{AbstainReason, CertificationMode, CertificationResult};
use certsmooth_core::classifier::ExtendedLabel;
use certsmooth_core::report::Record;

use crate::error::{Error, Result};

pub const COLUMNS: [&str; 12] = [
    "index",
    "true_label",
    "mode",
    "predicted",
    "abstain_reason",
    "radius",
    "pa_lower",
    "pb_upper",
    "p_uncertain_hat",
    "one_vs_all",
    "distinct_labels",
    "runner_up",
];

fn label_field(label: Option<ExtendedLabel>, none: &str) -> String {
    match label {
        Some(ExtendedLabel::Class(c)) => c.to_string(),
        Some(ExtendedLabel::Uncertain) => "uncertain".into(),
        None => none.into(),
    }
}

fn float_field(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn row(r: &Record) -> [String; 12] {
    let res = &r.result;
    [
        r.index.to_string(),
        r.true_label.to_string(),
        res.mode.as_str().into(),
        label_field(res.predicted, "abstain"),
        res.abstain.map(|a| a.as_str().to_string()).unwrap_or_default(),
        float_field(res.radius),
        float_field(res.pa_lower),
        float_field(res.pb_upper),
        res.p_uncertain_hat.to_string(),
        res.used_one_vs_all.to_string(),
        res.distinct_labels.to_string(),
        label_field(res.runner_up, ""),
    ]
}

pub fn write_records<W: Write>(out: W, records: &[Record]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record(row(r))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn records_to_string(records: &[Record]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, records).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("records are ASCII")
}

pub fn save_records(path: &Path, records: &[Record]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(file, records)
}

struct Fields<'a> {
    rec: &'a csv::StringRecord,
    line: usize,
    path: &'a Path,
}

impl Fields<'_> {
    fn err(&self, msg: impl ToString) -> Error {
        Error::parse(self.path, Some(self.line), msg)
    }

    fn get(&self, i: usize) -> &str {
        self.rec.get(i).unwrap_or("")
    }

    fn parse<T: std::str::FromStr>(&self, i: usize) -> Result<T> {
        self.get(i).parse().map_err(|_| self.err(format!("bad {} value {:?}", COLUMNS[i], self.get(i))))
    }

    fn optional_float(&self, i: usize) -> Result<Option<f64>> {
        if self.get(i).is_empty() {
            Ok(None)
        } else {
            self.parse(i).map(Some)
        }
    }

    fn label(&self, i: usize, none: &str) -> Result<Option<ExtendedLabel>> {
        match self.get(i) {
            s if s == none => Ok(None),
            "uncertain" => Ok(Some(ExtendedLabel::Uncertain)),
            _ => self.parse(i).map(|c| Some(ExtendedLabel::Class(c))),
        }
    }
}

/// Read records back. The trailing `runner_up` column is optional.
pub fn read_records<R: Read>(input: R, path: &Path) -> Result<Vec<Record>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = reader.headers()?.clone();
    let n = header.len();
    if !(n == COLUMNS.len() || n == COLUMNS.len() - 1) || header.iter().zip(COLUMNS).any(|(h, c)| h != c) {
        return Err(Error::parse(path, Some(1), "unexpected header"));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let f = Fields { rec: &rec, line: i + 2, path };
        if rec.len() != n {
            return Err(f.err(format!("expected {n} fields, found {}", rec.len())));
        }
        let mode = CertificationMode::parse(f.get(2)).ok_or_else(|| f.err("unknown mode"))?;
        let abstain = match f.get(4) {
            "" => None,
            s => Some(AbstainReason::parse(s).ok_or_else(|| f.err("unknown abstain reason"))?),
        };
        let result = CertificationResult {
            mode,
            predicted: f.label(3, "abstain")?,
            runner_up: if n == COLUMNS.len() { f.label(11, "")? } else { None },
            abstain,
            radius: f.optional_float(5)?,
            pa_lower: f.optional_float(6)?,
            pb_upper: f.optional_float(7)?,
            p_uncertain_hat: f.parse(8)?,
            used_one_vs_all: f.parse(9)?,
            distinct_labels: f.parse(10)?,
            clamped: false,
        };
        out.push(Record { index: f.parse(0)?, true_label: f.parse(1)?, result });
    }
    Ok(out)
}

pub fn load_records(path: &Path) -> Result<Vec<Record>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(file, path)
}
