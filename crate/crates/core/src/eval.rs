//! Segmentation quality: confusion matrices, accuracy metrics, posterior
//! entropy and calibration.
//!
//! Class-averaged metrics (AA, macro F1, mIoU) skip classes that have no
//! reference pixels. Per-class entries for such classes are `NaN`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::polsar::LabelMap;

/// Default number of calibration bins.
pub const DEFAULT_CALIBRATION_BINS: usize = 20;

/// Rows are reference classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: u8) -> Self {
        let l = num_classes as usize;
        ConfusionMatrix {
            num_classes: l,
            counts: alloc::vec![0; l * l],
        }
    }

    pub fn from_counts(num_classes: u8, counts: Vec<u64>) -> Result<Self> {
        let l = num_classes as usize;
        if counts.len() != l * l {
            return Err(Error::LengthMismatch {
                left: counts.len(),
                right: l * l,
            });
        }
        Ok(ConfusionMatrix {
            num_classes: l,
            counts,
        })
    }

    pub fn num_classes(&self) -> u8 {
        self.num_classes as u8
    }

    /// Count for 1-based reference and predicted classes.
    pub fn get(&self, reference: u8, predicted: u8) -> u64 {
        self.counts[(reference as usize - 1) * self.num_classes + predicted as usize - 1]
    }

    pub fn add(&mut self, reference: u8, predicted: u8) {
        self.counts[(reference as usize - 1) * self.num_classes + predicted as usize - 1] += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn at(&self, r: usize, p: usize) -> f64 {
        self.counts[r * self.num_classes + p] as f64
    }

    fn row_sum(&self, r: usize) -> f64 {
        (0..self.num_classes).map(|p| self.at(r, p)).sum()
    }

    fn col_sum(&self, p: usize) -> f64 {
        (0..self.num_classes).map(|r| self.at(r, p)).sum()
    }
}

/// Counts `(reference, prediction)` pairs over pixels with a nonzero
/// reference and a nonzero prediction.
pub fn confusion(pred: &LabelMap, reference: &LabelMap) -> Result<ConfusionMatrix> {
    if !pred.same_shape(reference.width(), reference.height()) {
        return Err(Error::DimensionMismatch(
            pred.width(),
            pred.height(),
            reference.width(),
            reference.height(),
        ));
    }
    let l = pred.num_classes().max(reference.num_classes());
    confusion_from_pairs(
        l,
        reference
            .labels()
            .iter()
            .copied()
            .zip(pred.labels().iter().copied()),
    )
}

pub fn confusion_from_pairs(
    num_classes: u8,
    pairs: impl IntoIterator<Item = (u8, u8)>,
) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(num_classes);
    for (r, p) in pairs {
        if r == 0 || p == 0 {
            continue;
        }
        if r > num_classes || p > num_classes {
            return Err(Error::LabelOutOfRange {
                label: r.max(p),
                classes: num_classes,
            });
        }
        cm.add(r, p);
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
    pub f1_macro: f64,
    pub miou: f64,
    pub per_class_accuracy: Vec<f64>,
    pub per_class_iou: Vec<f64>,
    pub per_class_f1: Vec<f64>,
}

fn mean_present(values: &[f64]) -> f64 {
    let present: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    present.iter().sum::<f64>() / present.len() as f64
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total() as f64;
    if total == 0.0 {
        return Err(Error::Empty("confusion matrix"));
    }
    let l = cm.num_classes;
    let diag: f64 = (0..l).map(|c| cm.at(c, c)).sum();
    let oa = diag / total;

    let mut per_class_accuracy = Vec::with_capacity(l);
    let mut per_class_iou = Vec::with_capacity(l);
    let mut per_class_f1 = Vec::with_capacity(l);
    let mut p_e = 0.0;
    for c in 0..l {
        let tp = cm.at(c, c);
        let row = cm.row_sum(c);
        let col = cm.col_sum(c);
        p_e += (row / total) * (col / total);
        if row == 0.0 {
            per_class_accuracy.push(f64::NAN);
            per_class_iou.push(f64::NAN);
            per_class_f1.push(f64::NAN);
            continue;
        }
        let fn_ = row - tp;
        let fp = col - tp;
        per_class_accuracy.push(tp / row);
        per_class_iou.push(tp / (tp + fp + fn_));
        per_class_f1.push(2.0 * tp / (2.0 * tp + fp + fn_));
    }
    let kappa = if p_e < 1.0 {
        (oa - p_e) / (1.0 - p_e)
    } else {
        1.0
    };
    Ok(MetricsReport {
        oa,
        aa: mean_present(&per_class_accuracy),
        kappa,
        f1_macro: mean_present(&per_class_f1),
        miou: mean_present(&per_class_iou),
        per_class_accuracy,
        per_class_iou,
        per_class_f1,
    })
}

/// Entropy of a class distribution with base-`L` logarithm, in `[0, 1]`.
pub fn posterior_entropy(dist: &[f64], num_classes: usize) -> f64 {
    if num_classes < 2 {
        return 0.0;
    }
    let base = libm::log(num_classes as f64);
    let h: f64 = dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * libm::log(p))
        .sum::<f64>()
        / base;
    h.clamp(0.0, 1.0)
}

fn rows(posteriors: &[f64], num_classes: usize) -> impl Iterator<Item = (usize, &[f64])> {
    posteriors
        .chunks_exact(num_classes)
        .enumerate()
        .filter(|(_, d)| d.iter().any(|&p| p != 0.0))
}

fn bin_of(value: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let t = if hi > lo {
        (value - lo) / (hi - lo)
    } else {
        1.0
    };
    ((t * bins as f64) as usize).min(bins - 1)
}

/// Normalized histogram of posterior entropies over `[0, 1]`. Rows that are
/// entirely zero (unclassified pixels) are skipped.
pub fn entropy_histogram(posteriors: &[f64], num_classes: u8, bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::Config(
            "entropy histogram needs at least two bins".into(),
        ));
    }
    let l = num_classes as usize;
    let mut hist = alloc::vec![0.0; bins];
    let mut n = 0usize;
    for (_, d) in rows(posteriors, l) {
        hist[bin_of(posterior_entropy(d, l), 0.0, 1.0, bins)] += 1.0;
        n += 1;
    }
    if n > 0 {
        hist.iter_mut().for_each(|h| *h /= n as f64);
    }
    Ok(hist)
}

/// Fraction of classified pixels whose posterior entropy is below `threshold`.
pub fn low_entropy_fraction(posteriors: &[f64], num_classes: u8, threshold: f64) -> f64 {
    let l = num_classes as usize;
    let (mut low, mut n) = (0usize, 0usize);
    for (_, d) in rows(posteriors, l) {
        n += 1;
        if posterior_entropy(d, l) < threshold {
            low += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        low as f64 / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    /// Mean maximum posterior of the pixels in the bin.
    pub mean_confidence: Option<f64>,
    /// Fraction of those pixels whose prediction matches the reference.
    pub accuracy: Option<f64>,
    pub count: usize,
}

/// Reliability curve: labeled pixels binned by maximum posterior over
/// `[1/L, 1]`.
pub fn calibration_curve(
    posteriors: &[f64],
    pred: &LabelMap,
    reference: &LabelMap,
    bins: usize,
) -> Result<Vec<CalibrationBin>> {
    if bins < 2 {
        return Err(Error::Config(
            "calibration curve needs at least two bins".into(),
        ));
    }
    if !pred.same_shape(reference.width(), reference.height()) {
        return Err(Error::DimensionMismatch(
            pred.width(),
            pred.height(),
            reference.width(),
            reference.height(),
        ));
    }
    let l = pred.num_classes() as usize;
    if posteriors.len() != pred.labels().len() * l {
        return Err(Error::LengthMismatch {
            left: posteriors.len(),
            right: pred.labels().len() * l,
        });
    }
    let lo = 1.0 / l as f64;
    let mut conf_sum = alloc::vec![0.0; bins];
    let mut hits = alloc::vec![0usize; bins];
    let mut counts = alloc::vec![0usize; bins];
    for (i, d) in rows(posteriors, l) {
        let r = reference.labels()[i];
        if r == 0 {
            continue;
        }
        let conf = d.iter().copied().fold(0.0, f64::max);
        let b = bin_of(conf, lo, 1.0, bins);
        conf_sum[b] += conf;
        counts[b] += 1;
        if pred.labels()[i] == r {
            hits[b] += 1;
        }
    }
    Ok((0..bins)
        .map(|b| {
            let width = (1.0 - lo) / bins as f64;
            let n = counts[b];
            CalibrationBin {
                lower: lo + b as f64 * width,
                upper: lo + (b + 1) as f64 * width,
                mean_confidence: (n > 0).then(|| conf_sum[b] / n as f64),
                accuracy: (n > 0).then(|| hits[b] as f64 / n as f64),
                count: n,
            }
        })
        .collect())
}
