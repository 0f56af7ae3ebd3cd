//! The Random Ferns classifier.
//!
//! Each fern is an ordered group of binary features whose joint outcome
//! indexes a per-class histogram. Ferns are combined as independent factors,
//! so class scores are sums of per-fern log-likelihoods plus the class
//! log-prior.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{draw_training_samples, TrainingSet};
use crate::error::{Error, Result};
use crate::features::{sample_feature, BinaryFeature, FeatureConfig};
use crate::polsar::{LabelMap, Pixel, PolSarImage};

/// Largest supported fern size; a fern holds `2^N · L` counters.
pub const MAX_FERN_SIZE: usize = 24;

/// A group of binary features with its per-class bin histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Fern {
    features: Vec<BinaryFeature>,
    num_classes: usize,
    /// Row-major `2^N × L` hit counts.
    counts: Vec<u32>,
    class_totals: Vec<u64>,
}

impl Fern {
    /// A fern with all counters at zero.
    pub fn untrained(features: Vec<BinaryFeature>, num_classes: u8) -> Result<Self> {
        if features.is_empty() || features.len() > MAX_FERN_SIZE {
            return Err(Error::Config(alloc::format!(
                "fern size must lie in [1, {MAX_FERN_SIZE}], got {}",
                features.len()
            )));
        }
        if num_classes == 0 {
            return Err(Error::Config("at least one class is required".into()));
        }
        let rows = 1usize << features.len();
        Ok(Fern {
            features,
            num_classes: num_classes as usize,
            counts: alloc::vec![0; rows * num_classes as usize],
            class_totals: alloc::vec![0; num_classes as usize],
        })
    }

    /// Rebuilds a fern from a stored count table.
    pub fn from_counts(
        features: Vec<BinaryFeature>,
        num_classes: u8,
        counts: Vec<u32>,
    ) -> Result<Self> {
        let mut fern = Fern::untrained(features, num_classes)?;
        if counts.len() != fern.counts.len() {
            return Err(Error::LengthMismatch {
                left: counts.len(),
                right: fern.counts.len(),
            });
        }
        fern.counts = counts;
        fern.recount_totals();
        Ok(fern)
    }

    /// Trains a fresh fern on the given samples. Returns the fern and the bin
    /// index of every sample.
    pub fn fit(
        features: Vec<BinaryFeature>,
        img: &PolSarImage,
        training: &TrainingSet,
    ) -> Result<(Fern, Vec<u32>)> {
        let mut fern = Fern::untrained(features, training.num_classes)?;
        let bins: Vec<u32> = training
            .pixels
            .iter()
            .map(|&p| fern.bin_index(img, p) as u32)
            .collect();
        for (&bin, &class) in bins.iter().zip(&training.labels) {
            fern.increment(bin as usize, class);
        }
        Ok((fern, bins))
    }

    fn recount_totals(&mut self) {
        let l = self.num_classes;
        self.class_totals = (0..l)
            .map(|c| {
                self.counts
                    .iter()
                    .skip(c)
                    .step_by(l)
                    .map(|&v| v as u64)
                    .sum()
            })
            .collect();
    }

    pub fn features(&self) -> &[BinaryFeature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn num_classes(&self) -> u8 {
        self.num_classes as u8
    }

    pub fn num_bins(&self) -> usize {
        1 << self.features.len()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Training hits in `bin` for `class` (1-based).
    pub fn count(&self, bin: usize, class: u8) -> u32 {
        self.counts[bin * self.num_classes + class as usize - 1]
    }

    /// Number of samples of `class` (1-based) the fern has seen.
    pub fn class_total(&self, class: u8) -> u64 {
        self.class_totals[class as usize - 1]
    }

    pub fn total(&self) -> u64 {
        self.class_totals.iter().sum()
    }

    pub fn increment(&mut self, bin: usize, class: u8) {
        self.counts[bin * self.num_classes + class as usize - 1] += 1;
        self.class_totals[class as usize - 1] += 1;
    }

    /// `Σ_k 2^(k-1) f_k` over the fern's features.
    #[inline]
    pub fn bin_index(&self, img: &PolSarImage, pos: Pixel) -> usize {
        self.features
            .iter()
            .enumerate()
            .fold(0, |acc, (k, f)| acc | ((f.eval(img, pos) as usize) << k))
    }

    /// Laplace-smoothed `log P(bin | class)`.
    pub fn log_likelihood(&self, bin: usize, class: u8, smoothing: f64) -> f64 {
        let num = self.count(bin, class) as f64 + smoothing;
        let den = self.class_total(class) as f64 + smoothing * self.num_bins() as f64;
        libm::log(num / den)
    }

    /// Row-major `2^N × L` table of smoothed log-likelihoods.
    pub fn log_table(&self, smoothing: f64) -> Vec<f64> {
        let l = self.num_classes;
        let dens: Vec<f64> = self
            .class_totals
            .iter()
            .map(|&t| t as f64 + smoothing * self.num_bins() as f64)
            .collect();
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &n)| libm::log((n as f64 + smoothing) / dens[i % l]))
            .collect()
    }
}

pub fn bin_index(fern: &Fern, img: &PolSarImage, pos: Pixel) -> usize {
    fern.bin_index(img, pos)
}

pub fn fern_log_likelihood(fern: &Fern, bin: usize, class: u8, smoothing: f64) -> f64 {
    fern.log_likelihood(bin, class, smoothing)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassPrior {
    #[default]
    Uniform,
    /// Relative frequency of each class among the labeled pixels.
    Empirical,
}

/// Log class prior. Empirical priors of absent classes fall back to one
/// pseudo-count so that every class keeps a finite prior.
pub fn class_log_prior(prior: ClassPrior, labels: &LabelMap) -> Vec<f64> {
    let l = labels.num_classes() as usize;
    match prior {
        ClassPrior::Uniform => alloc::vec![-libm::log(l as f64); l],
        ClassPrior::Empirical => {
            let counts: Vec<f64> = labels
                .class_counts()
                .iter()
                .map(|&c| (c.max(1)) as f64)
                .collect();
            let total: f64 = counts.iter().sum();
            counts.iter().map(|c| libm::log(c / total)).collect()
        }
    }
}

/// The complete classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomFernsModel {
    ferns: Vec<Fern>,
    num_classes: u8,
    smoothing: f64,
    class_log_prior: Vec<f64>,
    patch_radius: f64,
    tables: Vec<Vec<f64>>,
}

impl RandomFernsModel {
    pub fn new(
        ferns: Vec<Fern>,
        num_classes: u8,
        smoothing: f64,
        class_log_prior: Vec<f64>,
        patch_radius: f64,
    ) -> Result<Self> {
        if ferns.is_empty() {
            return Err(Error::Config("a model needs at least one fern".into()));
        }
        if !(smoothing > 0.0 && smoothing.is_finite()) {
            return Err(Error::Config(alloc::format!(
                "smoothing must be positive, got {smoothing}"
            )));
        }
        if class_log_prior.len() != num_classes as usize {
            return Err(Error::LengthMismatch {
                left: class_log_prior.len(),
                right: num_classes as usize,
            });
        }
        let mass: f64 = class_log_prior.iter().map(|&v| libm::exp(v)).sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Config(alloc::format!(
                "class prior sums to {mass}, expected 1"
            )));
        }
        if let Some(f) = ferns.iter().find(|f| f.num_classes() != num_classes) {
            return Err(Error::Config(alloc::format!(
                "fern has {} classes, model has {num_classes}",
                f.num_classes()
            )));
        }
        let tables = ferns.iter().map(|f| f.log_table(smoothing)).collect();
        Ok(RandomFernsModel {
            ferns,
            num_classes,
            smoothing,
            class_log_prior,
            patch_radius,
            tables,
        })
    }

    pub fn ferns(&self) -> &[Fern] {
        &self.ferns
    }

    pub fn num_ferns(&self) -> usize {
        self.ferns.len()
    }

    pub fn num_features(&self) -> usize {
        self.ferns.iter().map(Fern::len).sum()
    }

    pub fn num_classes(&self) -> u8 {
        self.num_classes
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn class_log_prior(&self) -> &[f64] {
        &self.class_log_prior
    }

    pub fn patch_radius(&self) -> f64 {
        self.patch_radius
    }

    /// Total number of histogram cells across all ferns.
    pub fn num_parameters(&self) -> usize {
        self.ferns.iter().map(|f| f.counts().len()).sum()
    }

    pub fn replace_fern(&mut self, index: usize, fern: Fern) {
        assert_eq!(fern.num_classes(), self.num_classes);
        self.tables[index] = fern.log_table(self.smoothing);
        self.ferns[index] = fern;
    }

    pub fn push_fern(&mut self, fern: Fern) {
        assert_eq!(fern.num_classes(), self.num_classes);
        self.tables.push(fern.log_table(self.smoothing));
        self.ferns.push(fern);
    }

    /// Adds fern `j`'s log-likelihoods for `bin` into `scores`.
    #[inline]
    pub fn accumulate(&self, fern: usize, bin: usize, scores: &mut [f64]) {
        let l = self.num_classes as usize;
        for (s, &v) in scores
            .iter_mut()
            .zip(&self.tables[fern][bin * l..(bin + 1) * l])
        {
            *s += v;
        }
    }

    /// Unnormalized log posterior: log prior plus summed fern log-likelihoods.
    pub fn log_scores(&self, img: &PolSarImage, pos: Pixel) -> Vec<f64> {
        let mut scores = self.class_log_prior.clone();
        for (j, fern) in self.ferns.iter().enumerate() {
            self.accumulate(j, fern.bin_index(img, pos), &mut scores);
        }
        scores
    }

    pub fn posterior(&self, img: &PolSarImage, pos: Pixel) -> Vec<f64> {
        let mut scores = self.log_scores(img, pos);
        normalize_log_scores(&mut scores);
        scores
    }

    pub fn predict(&self, img: &PolSarImage, pos: Pixel) -> u8 {
        argmax(&self.log_scores(img, pos))
    }
}

/// Turns log scores into probabilities in place (log-sum-exp). Entries are
/// floored at the smallest normal float so none is exactly zero.
pub fn normalize_log_scores(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = libm::exp(*s - max).max(f64::MIN_POSITIVE);
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

/// 1-based index of the largest score; ties go to the smaller class.
pub fn argmax(scores: &[f64]) -> u8 {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best as u8 + 1
}

pub fn posterior(model: &RandomFernsModel, img: &PolSarImage, pos: Pixel) -> Vec<f64> {
    model.posterior(img, pos)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub num_ferns: usize,
    pub fern_size: usize,
    pub samples_per_class: usize,
    pub smoothing: f64,
    pub seed: u64,
    pub features: FeatureConfig,
    pub prior: ClassPrior,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            num_ferns: 30,
            fern_size: 8,
            samples_per_class: 3000,
            smoothing: 1.0,
            seed: 0,
            features: FeatureConfig::default(),
            prior: ClassPrior::Uniform,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_ferns < 1 {
            return Err(Error::Config("at least one fern is required".into()));
        }
        if !(1..=MAX_FERN_SIZE).contains(&self.fern_size) {
            return Err(Error::Config(alloc::format!(
                "fern size must lie in [1, {MAX_FERN_SIZE}], got {}",
                self.fern_size
            )));
        }
        if self.samples_per_class < 1 {
            return Err(Error::Config("samples_per_class must be at least 1".into()));
        }
        if !(self.smoothing > 0.0 && self.smoothing.is_finite()) {
            return Err(Error::Config(alloc::format!(
                "smoothing must be positive, got {}",
                self.smoothing
            )));
        }
        self.features.validate()
    }
}

/// Trains one fern per feature group on a shared sample set.
pub fn fit_groups(
    img: &PolSarImage,
    training: &TrainingSet,
    groups: Vec<Vec<BinaryFeature>>,
    smoothing: f64,
    class_log_prior: Vec<f64>,
    patch_radius: f64,
) -> Result<RandomFernsModel> {
    let fit = |g: Vec<BinaryFeature>| Fern::fit(g, img, training).map(|(f, _)| f);
    #[cfg(feature = "parallel")]
    let ferns = {
        use rayon::prelude::*;
        groups
            .into_par_iter()
            .map(fit)
            .collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let ferns = groups.into_iter().map(fit).collect::<Result<Vec<_>>>()?;
    RandomFernsModel::new(
        ferns,
        training.num_classes,
        smoothing,
        class_log_prior,
        patch_radius,
    )
}

/// Samples `groups × size` random features, in group order.
pub fn sample_groups<R: rand::Rng + ?Sized>(
    rng: &mut R,
    cfg: &FeatureConfig,
    img: &PolSarImage,
    training: &TrainingSet,
    groups: usize,
    size: usize,
) -> Result<Vec<Vec<BinaryFeature>>> {
    (0..groups)
        .map(|_| {
            (0..size)
                .map(|_| sample_feature(rng, cfg, img, &training.pixels))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// Trains a fully random fern ensemble on `samples_per_class` pixels per class.
pub fn train(img: &PolSarImage, labels: &LabelMap, cfg: &TrainConfig) -> Result<RandomFernsModel> {
    cfg.validate()?;
    check_shape(img, labels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let training = draw_training_samples(&mut rng, labels, cfg.samples_per_class)?;
    train_on_samples(
        &mut rng,
        img,
        &training,
        cfg,
        class_log_prior(cfg.prior, labels),
    )
}

/// Random ensemble on an already drawn sample set.
pub fn train_on_samples<R: rand::Rng + ?Sized>(
    rng: &mut R,
    img: &PolSarImage,
    training: &TrainingSet,
    cfg: &TrainConfig,
    class_log_prior: Vec<f64>,
) -> Result<RandomFernsModel> {
    let groups = sample_groups(
        rng,
        &cfg.features,
        img,
        training,
        cfg.num_ferns,
        cfg.fern_size,
    )?;
    fit_groups(
        img,
        training,
        groups,
        cfg.smoothing,
        class_log_prior,
        cfg.features.r_max,
    )
}

pub(crate) fn check_shape(img: &PolSarImage, labels: &LabelMap) -> Result<()> {
    if !labels.same_shape(img.width(), img.height()) {
        return Err(Error::DimensionMismatch(
            img.width(),
            img.height(),
            labels.width(),
            labels.height(),
        ));
    }
    Ok(())
}

/// Per-pixel classification result.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub labels: LabelMap,
    /// Row-major `width × height × L` posteriors; zero outside the mask.
    pub posteriors: Vec<f64>,
}

impl Classification {
    pub fn posterior_at(&self, index: usize) -> &[f64] {
        let l = self.labels.num_classes() as usize;
        &self.posteriors[index * l..(index + 1) * l]
    }
}

/// Classifies every pixel, or only the labeled pixels of `mask`.
pub fn classify_image(
    model: &RandomFernsModel,
    img: &PolSarImage,
    mask: Option<&LabelMap>,
) -> Result<Classification> {
    if let Some(m) = mask {
        check_shape(img, m)?;
    }
    let l = model.num_classes() as usize;
    let row = |y: usize| -> (Vec<u8>, Vec<f64>) {
        let mut labels = alloc::vec![0u8; img.width()];
        let mut post = alloc::vec![0.0; img.width() * l];
        for x in 0..img.width() {
            let p = Pixel::new(x, y);
            if mask.is_some_and(|m| m.get(p) == 0) {
                continue;
            }
            let mut scores = model.log_scores(img, p);
            labels[x] = argmax(&scores);
            normalize_log_scores(&mut scores);
            post[x * l..(x + 1) * l].copy_from_slice(&scores);
        }
        (labels, post)
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<(Vec<u8>, Vec<f64>)> = {
        use rayon::prelude::*;
        (0..img.height()).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<(Vec<u8>, Vec<f64>)> = (0..img.height()).map(row).collect();

    let mut labels = Vec::with_capacity(img.len());
    let mut posteriors = Vec::with_capacity(img.len() * l);
    for (lab, post) in rows {
        labels.extend(lab);
        posteriors.extend(post);
    }
    Ok(Classification {
        labels: LabelMap::new(img.width(), img.height(), model.num_classes(), labels)?,
        posteriors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Projection, RegionSpec};
    use crate::polsar::{precompute_image, HermitianMat};

    fn center_feature(threshold: f64) -> BinaryFeature {
        BinaryFeature {
            projection: Projection::OnePoint {
                region: RegionSpec::CENTER,
                reference: HermitianMat::ZERO,
            },
            threshold,
        }
    }

    /// Image whose log-covariance at pixel i is diag(v_i, 0, 0), so one-point
    /// center features against the zero reference project to |v_i|.
    fn ramp_image(values: &[f64]) -> PolSarImage {
        let cov = values
            .iter()
            .map(|&v| HermitianMat::from_diag([libm::exp(v), 1.0, 1.0]))
            .collect();
        precompute_image(values.len(), 1, cov).unwrap()
    }

    #[test]
    fn bits_fold_into_index() {
        let img = ramp_image(&[2.0]);
        let on = center_feature(1.0);
        let off = center_feature(3.0);
        let fern = Fern::untrained(alloc::vec![on, off, on], 2).unwrap();
        assert_eq!(fern.bin_index(&img, Pixel::new(0, 0)), 5);
        let none = Fern::untrained(alloc::vec![off, off, off], 2).unwrap();
        assert_eq!(none.bin_index(&img, Pixel::new(0, 0)), 0);
    }

    #[test]
    fn single_sample_training() {
        let img = ramp_image(&[2.0]);
        let set = TrainingSet::new(alloc::vec![Pixel::new(0, 0)], alloc::vec![1], 1).unwrap();
        let (fern, bins) = Fern::fit(alloc::vec![center_feature(1.0)], &img, &set).unwrap();
        assert_eq!(bins, alloc::vec![1]);
        assert_eq!(fern.counts(), &[0, 1]);
    }

    #[test]
    fn smoothing_hand_cases() {
        let empty = Fern::untrained(alloc::vec![center_feature(0.0)], 1).unwrap();
        assert!((empty.log_likelihood(0, 1, 1.0) - libm::log(0.5)).abs() < 1e-15);
        let f = Fern::from_counts(alloc::vec![center_feature(0.0)], 1, alloc::vec![3, 1]).unwrap();
        assert!((f.log_likelihood(0, 1, 1.0) - libm::log(4.0 / 6.0)).abs() < 1e-15);
        assert!((f.log_likelihood(1, 1, 1.0) - libm::log(2.0 / 6.0)).abs() < 1e-15);
        let g = Fern::from_counts(alloc::vec![center_feature(0.0)], 1, alloc::vec![50, 0]).unwrap();
        assert!(g.log_likelihood(1, 1, 1.0).is_finite());
        let table = f.log_table(1.0);
        assert_eq!(
            table,
            alloc::vec![f.log_likelihood(0, 1, 1.0), f.log_likelihood(1, 1, 1.0)]
        );
    }

    #[test]
    fn symmetric_counts_give_uniform_posterior() {
        let img = ramp_image(&[2.0]);
        let fern = Fern::from_counts(
            alloc::vec![center_feature(1.0)],
            3,
            alloc::vec![4, 4, 4, 7, 7, 7],
        )
        .unwrap();
        let prior = alloc::vec![-libm::log(3.0); 3];
        let model = RandomFernsModel::new(alloc::vec![fern], 3, 1.0, prior, 25.0).unwrap();
        let post = model.posterior(&img, Pixel::new(0, 0));
        for p in &post {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        // Tie goes to class 1.
        assert_eq!(model.predict(&img, Pixel::new(0, 0)), 1);
    }

    #[test]
    fn model_validation() {
        let fern = Fern::untrained(alloc::vec![center_feature(1.0)], 2).unwrap();
        assert!(
            RandomFernsModel::new(alloc::vec![], 2, 1.0, alloc::vec![-libm::log(2.0); 2], 1.0)
                .is_err()
        );
        assert!(RandomFernsModel::new(
            alloc::vec![fern.clone()],
            2,
            0.0,
            alloc::vec![-libm::log(2.0); 2],
            1.0
        )
        .is_err());
        assert!(
            RandomFernsModel::new(alloc::vec![fern.clone()], 2, 1.0, alloc::vec![0.0; 2], 1.0)
                .is_err()
        );
        assert!(RandomFernsModel::new(
            alloc::vec![fern],
            3,
            1.0,
            alloc::vec![-libm::log(3.0); 3],
            1.0
        )
        .is_err());
        assert!(Fern::untrained(alloc::vec![], 2).is_err());
    }

    #[test]
    fn fern_size_cap() {
        let cfg = TrainConfig {
            fern_size: 25,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(TrainConfig {
            fern_size: 24,
            ..Default::default()
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn normalization_floor_keeps_entries_positive() {
        let mut s = [0.0, -1e6, -3.0];
        normalize_log_scores(&mut s);
        assert!(s.iter().all(|&p| p > 0.0));
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_mask_gives_empty_map() {
        let img = ramp_image(&[0.5, 1.5, 2.5]);
        let fern = Fern::from_counts(alloc::vec![center_feature(1.0)], 2, alloc::vec![5, 0, 0, 5])
            .unwrap();
        let model = RandomFernsModel::new(
            alloc::vec![fern],
            2,
            1.0,
            alloc::vec![-libm::log(2.0); 2],
            1.0,
        )
        .unwrap();
        let mask = LabelMap::unlabeled(3, 1, 2);
        let out = classify_image(&model, &img, Some(&mask)).unwrap();
        assert!(out.labels.labels().iter().all(|&l| l == 0));
        let full = classify_image(&model, &img, None).unwrap();
        assert_eq!(full.labels.labels(), &[1, 2, 2]);
        assert_eq!(
            full.posterior_at(1),
            model.posterior(&img, Pixel::new(1, 0)).as_slice()
        );
    }
}
