//! Feature preselection by split impurity, correlation-based rejection of
//! redundant features and greedy grouping of correlated features into ferns.

use alloc::vec::Vec;

use rand::Rng;

use super::bits::BitVector;
use crate::dataset::TrainingSet;
use crate::error::{Error, Result};
use crate::features::{sample_feature, BinaryFeature, FeatureConfig};
use crate::polsar::PolSarImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreselectConfig {
    /// Number of random candidates generated.
    pub pool_size: usize,
    /// Minimum quality `H(D) - ÎG(f)` a candidate needs to survive.
    pub ig_threshold: f64,
    /// Maximum absolute correlation between two surviving candidates.
    pub corr_threshold: f64,
    pub num_ferns: usize,
    pub fern_size: usize,
}

impl PreselectConfig {
    pub fn new(num_ferns: usize, fern_size: usize) -> Self {
        PreselectConfig {
            pool_size: 2000,
            ig_threshold: 0.01,
            corr_threshold: 0.9,
            num_ferns,
            fern_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.corr_threshold > 0.0 && self.corr_threshold <= 1.0) {
            return Err(Error::Config(alloc::format!(
                "corr_threshold must lie in (0, 1], got {}",
                self.corr_threshold
            )));
        }
        if self.num_ferns < 1 || self.fern_size < 1 {
            return Err(Error::Config(
                "num_ferns and fern_size must be at least 1".into(),
            ));
        }
        if self.fern_size > crate::ferns::MAX_FERN_SIZE {
            return Err(Error::Config(alloc::format!(
                "fern size {} too large",
                self.fern_size
            )));
        }
        if self.pool_size < self.num_ferns * self.fern_size {
            return Err(Error::Config(alloc::format!(
                "pool_size {} is smaller than the {} features required",
                self.pool_size,
                self.num_ferns * self.fern_size
            )));
        }
        Ok(())
    }
}

/// A candidate feature with its bits over the training samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub feature: BinaryFeature,
    pub bits: BitVector,
    pub ig_hat: f64,
}

fn entropy_of_counts(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * libm::log(p)
        })
        .sum()
}

/// Shannon entropy (natural log) of the class distribution of `labels`.
pub fn label_entropy(labels: &[u8], num_classes: u8) -> f64 {
    let mut counts = alloc::vec![0usize; num_classes as usize + 1];
    for &l in labels {
        counts[l as usize] += 1;
    }
    entropy_of_counts(&counts, labels.len())
}

/// Weighted impurity after splitting by `bits`: `P0·H(D0) + P1·H(D1)`.
/// Smaller is better.
pub fn info_gain_hat(bits: &BitVector, labels: &[u8], num_classes: u8) -> Result<f64> {
    if bits.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: bits.len(),
            right: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty("labels"));
    }
    let l = num_classes as usize + 1;
    let mut halves = [alloc::vec![0usize; l], alloc::vec![0usize; l]];
    for (i, &c) in labels.iter().enumerate() {
        halves[bits.get(i) as usize][c as usize] += 1;
    }
    let n = labels.len() as f64;
    Ok(halves
        .iter()
        .map(|h| {
            let size: usize = h.iter().sum();
            size as f64 / n * entropy_of_counts(h, size)
        })
        .sum())
}

/// Pearson correlation of two bit sequences.
pub fn feature_correlation(a: &BitVector, b: &BitVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() || a.is_constant() || b.is_constant() {
        return Err(Error::ConstantFeature);
    }
    let n = a.len() as f64;
    let pa = a.count_ones() as f64 / n;
    let pb = b.count_ones() as f64 / n;
    let pab = a.count_common(b) as f64 / n;
    let cov = pab - pa * pb;
    let sd = libm::sqrt((pa * (1.0 - pa)) * (pb * (1.0 - pb)));
    Ok((cov / sd).clamp(-1.0, 1.0))
}

fn abs_corr(a: &BitVector, b: &BitVector) -> f64 {
    feature_correlation(a, b).map(f64::abs).unwrap_or(0.0)
}

/// Evaluates a feature on every training sample.
pub fn feature_bits(
    feature: &BinaryFeature,
    img: &PolSarImage,
    training: &TrainingSet,
) -> BitVector {
    BitVector::from_bools(training.pixels.iter().map(|&p| feature.eval(img, p)))
}

/// Bits and `ÎG` for each candidate.
pub fn evaluate_candidates(
    candidates: Vec<BinaryFeature>,
    img: &PolSarImage,
    training: &TrainingSet,
) -> Result<Vec<FeatureStats>> {
    let stats = |feature: BinaryFeature| -> Result<FeatureStats> {
        let bits = feature_bits(&feature, img, training);
        let ig_hat = info_gain_hat(&bits, &training.labels, training.num_classes)?;
        Ok(FeatureStats {
            feature,
            bits,
            ig_hat,
        })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        candidates.into_par_iter().map(stats).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        candidates.into_iter().map(stats).collect()
    }
}

/// Indices of non-constant candidates whose quality reaches the threshold,
/// sorted by quality descending (stable on ties).
pub fn rank_by_quality(
    stats: &[FeatureStats],
    dataset_entropy: f64,
    ig_threshold: f64,
) -> Vec<usize> {
    let quality = |s: &FeatureStats| (dataset_entropy - s.ig_hat).max(0.0);
    let mut keep: Vec<usize> = (0..stats.len())
        .filter(|&i| !stats[i].bits.is_constant() && quality(&stats[i]) >= ig_threshold)
        .collect();
    keep.sort_by(|&a, &b| quality(&stats[b]).total_cmp(&quality(&stats[a])));
    keep
}

/// Scans candidates in the given (quality) order and drops any whose absolute
/// correlation with an already kept candidate exceeds the threshold.
pub fn reject_correlated(
    stats: &[FeatureStats],
    ranked: &[usize],
    corr_threshold: f64,
) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for &i in ranked {
        if kept
            .iter()
            .all(|&j| abs_corr(&stats[i].bits, &stats[j].bits) <= corr_threshold)
        {
            kept.push(i);
        }
    }
    kept
}

/// Greedy grouping: each group starts with the best ungrouped candidate and
/// grows by the candidate with the highest mean absolute correlation to the
/// current members. `survivors` must be sorted by quality.
pub fn group_correlated(
    stats: &[FeatureStats],
    survivors: &[usize],
    num_groups: usize,
    group_size: usize,
) -> Result<Vec<Vec<usize>>> {
    let required = num_groups * group_size;
    if survivors.len() < required {
        return Err(Error::InsufficientFeatures {
            survivors: survivors.len(),
            required,
        });
    }
    let mut used = alloc::vec![false; survivors.len()];
    let mut groups = Vec::with_capacity(num_groups);
    for _ in 0..num_groups {
        let seed = used.iter().position(|&u| !u).expect("enough survivors");
        used[seed] = true;
        let mut members = alloc::vec![seed];
        let mut corr_sum = alloc::vec![0.0; survivors.len()];
        while members.len() < group_size {
            let last = stats[survivors[*members.last().unwrap()]].bits.clone();
            let mut best: Option<usize> = None;
            for k in 0..survivors.len() {
                if used[k] {
                    continue;
                }
                corr_sum[k] += abs_corr(&stats[survivors[k]].bits, &last);
                if best.is_none_or(|b| corr_sum[k] > corr_sum[b]) {
                    best = Some(k);
                }
            }
            let b = best.expect("enough survivors");
            used[b] = true;
            members.push(b);
        }
        groups.push(members.into_iter().map(|k| survivors[k]).collect());
    }
    Ok(groups)
}

/// Generates a candidate pool, filters it and groups the survivors into
/// `num_ferns` groups of `fern_size` features.
pub fn preselect_and_group<R: Rng + ?Sized>(
    rng: &mut R,
    img: &PolSarImage,
    training: &TrainingSet,
    features: &FeatureConfig,
    cfg: &PreselectConfig,
) -> Result<Vec<Vec<BinaryFeature>>> {
    cfg.validate()?;
    let candidates = (0..cfg.pool_size)
        .map(|_| sample_feature(rng, features, img, &training.pixels))
        .collect::<Result<Vec<_>>>()?;
    let stats = evaluate_candidates(candidates, img, training)?;
    select_groups(&stats, training, cfg)
}

/// The filtering and grouping steps on already evaluated candidates.
pub fn select_groups(
    stats: &[FeatureStats],
    training: &TrainingSet,
    cfg: &PreselectConfig,
) -> Result<Vec<Vec<BinaryFeature>>> {
    let h = label_entropy(&training.labels, training.num_classes);
    let ranked = rank_by_quality(stats, h, cfg.ig_threshold);
    let survivors = reject_correlated(stats, &ranked, cfg.corr_threshold);
    let groups = group_correlated(stats, &survivors, cfg.num_ferns, cfg.fern_size)?;
    Ok(groups
        .into_iter()
        .map(|g| g.into_iter().map(|i| stats[i].feature).collect())
        .collect())
}
