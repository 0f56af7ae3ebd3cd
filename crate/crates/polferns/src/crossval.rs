//! Vertical-stripe cross-validation.
//!
//! The image is cut into `folds` vertical stripes; fold `f` tests on
//! columns `[f·W/k, (f+1)·W/k)` and trains on the labeled pixels of the
//! other stripes. Every fold is repeated with distinct seeds.

use polferns_core::eval::{confusion, metrics, MetricsReport};
use polferns_core::ferns::classify_image;
use polferns_core::optimize::{fit, FitConfig};
use polferns_core::polsar::{LabelMap, PolSarImage};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalConfig {
    pub folds: usize,
    pub repeats: usize,
    pub fit: FitConfig,
}

impl CrossvalConfig {
    pub fn validate(&self, width: usize) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Usage(format!(
                "at least 2 folds are required, got {}",
                self.folds
            )));
        }
        if self.repeats < 1 {
            return Err(Error::Usage("at least one repeat is required".into()));
        }
        if width < self.folds {
            return Err(Error::Usage(format!(
                "image width {width} is smaller than the fold count {}",
                self.folds
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldRun {
    pub fold: usize,
    pub repeat: usize,
    pub seed: u64,
    pub metrics: MetricsReport,
}

/// Column range `[start, end)` of the test stripe of `fold`.
pub fn fold_columns(width: usize, folds: usize, fold: usize) -> (usize, usize) {
    (fold * width / folds, (fold + 1) * width / folds)
}

/// Training and test label maps for one fold.
pub fn fold_split(labels: &LabelMap, folds: usize, fold: usize) -> (LabelMap, LabelMap) {
    let (a, b) = fold_columns(labels.width(), folds, fold);
    let inside = move |x: usize| (a..b).contains(&x);
    (
        labels.masked(|p| !inside(p.x)),
        labels.masked(|p| inside(p.x)),
    )
}

/// Seed of one (fold, repeat) run, derived from the base seed.
pub fn run_seed(base: u64, folds: usize, fold: usize, repeat: usize) -> u64 {
    base.wrapping_add((repeat * folds + fold) as u64)
}

pub fn run_fold(
    img: &PolSarImage,
    labels: &LabelMap,
    cfg: &CrossvalConfig,
    fold: usize,
    repeat: usize,
) -> Result<FoldRun> {
    let (train, test) = fold_split(labels, cfg.folds, fold);
    let mut fit_cfg = cfg.fit.clone();
    fit_cfg.train.seed = run_seed(cfg.fit.train.seed, cfg.folds, fold, repeat);
    let outcome = fit(img, &train, &fit_cfg)?;
    let pred = classify_image(&outcome.model, img, Some(&test))?;
    let cm = confusion(&pred.labels, &test)?;
    Ok(FoldRun {
        fold,
        repeat,
        seed: fit_cfg.train.seed,
        metrics: metrics(&cm)?,
    })
}

/// All `folds × repeats` runs, repeat-major.
pub fn crossval(
    img: &PolSarImage,
    labels: &LabelMap,
    cfg: &CrossvalConfig,
) -> Result<Vec<FoldRun>> {
    cfg.validate(img.width())?;
    let mut runs = Vec::with_capacity(cfg.folds * cfg.repeats);
    for repeat in 0..cfg.repeats {
        for fold in 0..cfg.folds {
            runs.push(run_fold(img, labels, cfg, fold, repeat)?);
        }
    }
    Ok(runs)
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub const SUMMARY_METRICS: [&str; 5] = ["oa", "aa", "kappa", "f1_macro", "miou"];

pub fn metric_value(m: &MetricsReport, name: &str) -> f64 {
    match name {
        "oa" => m.oa,
        "aa" => m.aa,
        "kappa" => m.kappa,
        "f1_macro" => m.f1_macro,
        "miou" => m.miou,
        _ => f64::NAN,
    }
}

/// `(metric, mean, std)` over all runs.
pub fn summarize(runs: &[FoldRun]) -> Vec<(&'static str, f64, f64)> {
    SUMMARY_METRICS
        .iter()
        .map(|&name| {
            let values: Vec<f64> = runs
                .iter()
                .map(|r| metric_value(&r.metrics, name))
                .collect();
            let (mean, std) = mean_std(&values);
            (name, mean, std)
        })
        .collect()
}

pub fn runs_csv(runs: &[FoldRun]) -> String {
    let mut out = format!("repeat,fold,seed,{}\n", SUMMARY_METRICS.join(","));
    for r in runs {
        let values: Vec<String> = SUMMARY_METRICS
            .iter()
            .map(|m| format!("{:?}", metric_value(&r.metrics, m)))
            .collect();
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.repeat,
            r.fold,
            r.seed,
            values.join(",")
        ));
    }
    out
}

pub fn summary_kv(summary: &[(&str, f64, f64)]) -> String {
    summary
        .iter()
        .map(|(name, mean, std)| format!("{name}.mean={mean:?}\n{name}.std={std:?}\n"))
        .collect()
}

pub fn summary_table(summary: &[(&str, f64, f64)], runs: usize) -> String {
    let mut out = format!("{runs} runs\n");
    for (name, mean, std) in summary {
        out.push_str(&format!("{name:<9} {mean:.4} ± {std:.4}\n"));
    }
    out
}
