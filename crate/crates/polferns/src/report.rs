//! Text, key-value and CSV reports.
//!
//! Machine-readable outputs (`.kv`, `.csv`) print floats in shortest
//! round-trip form so that downstream tools see the exact values; the
//! human-readable tables round to four decimals.

use std::fmt::Write as _;

use polferns_core::eval::{CalibrationBin, ConfusionMatrix, MetricsReport};
use polferns_core::optimize::IterationRecord;

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

fn pct(v: f64) -> String {
    if v.is_nan() {
        "   n/a".into()
    } else {
        format!("{:6.4}", v)
    }
}

/// Key-value metrics; per-class entries are numbered from 1, absent
/// classes are written as `nan`.
pub fn metrics_kv(m: &MetricsReport) -> String {
    let mut out = String::new();
    for (k, v) in [
        ("oa", m.oa),
        ("aa", m.aa),
        ("kappa", m.kappa),
        ("f1_macro", m.f1_macro),
        ("miou", m.miou),
    ] {
        writeln!(out, "{k}={v:?}").unwrap();
    }
    for (name, values) in [
        ("accuracy", &m.per_class_accuracy),
        ("iou", &m.per_class_iou),
        ("f1", &m.per_class_f1),
    ] {
        for (c, v) in values.iter().enumerate() {
            writeln!(out, "{name}.{}={v:?}", c + 1).unwrap();
        }
    }
    out
}

/// Parses `key=value` lines back into pairs, ignoring blank lines.
pub fn parse_kv(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

pub fn metrics_table(m: &MetricsReport) -> String {
    let mut out = String::new();
    writeln!(out, "OA     {}", pct(m.oa)).unwrap();
    writeln!(out, "AA     {}", pct(m.aa)).unwrap();
    writeln!(out, "kappa  {}", pct(m.kappa)).unwrap();
    writeln!(out, "F1     {}", pct(m.f1_macro)).unwrap();
    writeln!(out, "mIoU   {}", pct(m.miou)).unwrap();
    out.push('\n');
    writeln!(out, "class  accuracy     IoU      F1").unwrap();
    for c in 0..m.per_class_accuracy.len() {
        writeln!(
            out,
            "{:>5}    {}  {}  {}",
            c + 1,
            pct(m.per_class_accuracy[c]),
            pct(m.per_class_iou[c]),
            pct(m.per_class_f1[c])
        )
        .unwrap();
    }
    out
}

/// Confusion table, rows are reference classes, columns predictions.
pub fn confusion_table(cm: &ConfusionMatrix) -> String {
    let l = cm.num_classes();
    let width = cm
        .counts()
        .iter()
        .map(|c| c.to_string().len())
        .max()
        .unwrap_or(1)
        .max(4);
    let mut out = format!("{:>5}", "ref\\pred");
    for p in 1..=l {
        write!(out, " {p:>width$}").unwrap();
    }
    out.push('\n');
    for r in 1..=l {
        write!(out, "{r:>8}").unwrap();
        for p in 1..=l {
            write!(out, " {:>width$}", cm.get(r, p)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn entropy_csv(hist: &[f64]) -> String {
    let mut out = String::from("bin_lower,bin_upper,probability\n");
    let n = hist.len() as f64;
    for (b, p) in hist.iter().enumerate() {
        writeln!(out, "{:?},{:?},{p:?}", b as f64 / n, (b + 1) as f64 / n).unwrap();
    }
    out
}

/// Empty cells mark bins without pixels.
pub fn calibration_csv(bins: &[CalibrationBin]) -> String {
    let mut out = String::from("bin_lower,bin_upper,mean_confidence,accuracy,count\n");
    for b in bins {
        writeln!(
            out,
            "{:?},{:?},{},{},{}",
            b.lower,
            b.upper,
            opt(b.mean_confidence),
            opt(b.accuracy),
            b.count
        )
        .unwrap();
    }
    out
}

pub fn trace_csv(trace: &[IterationRecord]) -> String {
    let mut out = String::from(
        "iteration,op,accepted,candidate_val,train_objective,val_objective,num_ferns,num_features\n",
    );
    for r in trace {
        writeln!(
            out,
            "{},{},{},{:?},{:?},{:?},{},{}",
            r.iteration,
            r.op.name(),
            r.accepted as u8,
            r.candidate_val,
            r.train_objective,
            r.val_objective,
            r.num_ferns,
            r.num_features
        )
        .unwrap();
    }
    out
}
