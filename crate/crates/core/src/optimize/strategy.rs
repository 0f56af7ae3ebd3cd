//! End-to-end training with a chosen optimization strategy.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::iterative::{iterative_optimize, IterConfig, IterationRecord, MutationContext};
use super::preselect::{preselect_and_group, PreselectConfig};
use crate::dataset::{draw_at_most, draw_training_samples, stratified_split, TrainingSet};
use crate::error::{Error, Result};
use crate::ferns::{
    check_shape, class_log_prior, fit_groups, sample_groups, RandomFernsModel, TrainConfig,
};
use crate::polsar::{LabelMap, PolSarImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Fully random features and grouping.
    #[default]
    None,
    /// Candidate preselection, redundancy rejection and correlated grouping.
    Preselect,
    /// Structure search from a small random ensemble.
    Iterative,
    /// Preselection followed by structure search.
    Both,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Preselect => "preselect",
            Strategy::Iterative => "iterative",
            Strategy::Both => "both",
        }
    }

    fn is_iterative(&self) -> bool {
        matches!(self, Strategy::Iterative | Strategy::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub train: TrainConfig,
    pub strategy: Strategy,
    pub pool_size: usize,
    pub ig_threshold: f64,
    pub corr_threshold: f64,
    pub iterative: IterConfig,
    /// Fraction of labeled pixels per class held out for validation in the
    /// iterative strategies.
    pub val_fraction: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            train: TrainConfig::default(),
            strategy: Strategy::None,
            pool_size: 2000,
            ig_threshold: 0.01,
            corr_threshold: 0.9,
            iterative: IterConfig::default(),
            val_fraction: 0.2,
        }
    }
}

impl FitConfig {
    pub fn preselect_config(&self) -> PreselectConfig {
        PreselectConfig {
            pool_size: self.pool_size,
            ig_threshold: self.ig_threshold,
            corr_threshold: self.corr_threshold,
            num_ferns: self.train.num_ferns,
            fern_size: self.train.fern_size,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: RandomFernsModel,
    pub trace: Vec<IterationRecord>,
    pub training: TrainingSet,
    pub validation: Option<TrainingSet>,
}

/// Trains a model on the labeled pixels of `labels` with the configured
/// strategy. The whole run is a function of the configuration and its seed.
pub fn fit(img: &PolSarImage, labels: &LabelMap, cfg: &FitConfig) -> Result<FitOutcome> {
    cfg.train.validate()?;
    check_shape(img, labels)?;
    let tc = &cfg.train;
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let prior = class_log_prior(tc.prior, labels);

    let (train_labels, validation) = if cfg.strategy.is_iterative() {
        cfg.iterative.validate()?;
        let (keep, held) = stratified_split(&mut rng, labels, cfg.val_fraction)?;
        if let Some(c) = held.class_counts().iter().position(|&n| n == 0) {
            return Err(Error::MissingClass(c as u8 + 1));
        }
        let val = draw_at_most(&mut rng, &held, tc.samples_per_class)?;
        (keep, Some(val))
    } else {
        (labels.clone(), None)
    };
    let training = draw_training_samples(&mut rng, &train_labels, tc.samples_per_class)?;

    let initial = match cfg.strategy {
        Strategy::None => {
            let groups = sample_groups(
                &mut rng,
                &tc.features,
                img,
                &training,
                tc.num_ferns,
                tc.fern_size,
            )?;
            fit_groups(
                img,
                &training,
                groups,
                tc.smoothing,
                prior,
                tc.features.r_max,
            )?
        }
        Strategy::Iterative => {
            let it = &cfg.iterative;
            let groups = sample_groups(
                &mut rng,
                &tc.features,
                img,
                &training,
                it.init_ferns,
                it.init_fern_size,
            )?;
            fit_groups(
                img,
                &training,
                groups,
                tc.smoothing,
                prior,
                tc.features.r_max,
            )?
        }
        Strategy::Preselect | Strategy::Both => {
            let groups = preselect_and_group(
                &mut rng,
                img,
                &training,
                &tc.features,
                &cfg.preselect_config(),
            )?;
            fit_groups(
                img,
                &training,
                groups,
                tc.smoothing,
                prior,
                tc.features.r_max,
            )?
        }
    };

    let (model, trace) = match &validation {
        Some(val) => {
            let mean_size = initial.num_features() as f64 / initial.num_ferns() as f64;
            let ctx = MutationContext {
                img,
                training: &training,
                features: tc.features,
                new_fern_size: (libm::round(mean_size) as usize).max(1),
            };
            iterative_optimize(initial, &ctx, val, &cfg.iterative, &mut rng)?
        }
        None => (initial, Vec::new()),
    };
    Ok(FitOutcome {
        model,
        trace,
        training,
        validation,
    })
}
