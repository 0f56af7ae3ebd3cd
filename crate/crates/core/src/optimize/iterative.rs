//! Iterative structure search: random local edits to a fern ensemble, kept
//! only when they strictly improve a validation objective.

use alloc::vec::Vec;

use rand::Rng;

use crate::dataset::TrainingSet;
use crate::error::{Error, Result};
use crate::eval::{confusion_from_pairs, metrics};
use crate::features::{sample_feature, sample_threshold, BinaryFeature, FeatureConfig};
use crate::ferns::{argmax, Fern, RandomFernsModel, MAX_FERN_SIZE};
use crate::polsar::PolSarImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutationKind {
    AddFern,
    AddFeature,
    DeleteFeature,
    SwitchFeatures,
    ResampleThreshold,
}

impl MutationKind {
    pub const ALL: [MutationKind; 5] = [
        MutationKind::AddFern,
        MutationKind::AddFeature,
        MutationKind::DeleteFeature,
        MutationKind::SwitchFeatures,
        MutationKind::ResampleThreshold,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MutationKind::AddFern => "add-fern",
            MutationKind::AddFeature => "add-feature",
            MutationKind::DeleteFeature => "delete-feature",
            MutationKind::SwitchFeatures => "switch-features",
            MutationKind::ResampleThreshold => "resample-threshold",
        }
    }
}

/// One structural edit with all of its random choices resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum MutationOp {
    AddFern {
        features: Vec<BinaryFeature>,
    },
    AddFeature {
        fern: usize,
        feature: BinaryFeature,
    },
    DeleteFeature {
        fern: usize,
        feature: usize,
    },
    SwitchFeatures {
        fern_a: usize,
        feature_a: usize,
        fern_b: usize,
        feature_b: usize,
    },
    ResampleThreshold {
        fern: usize,
        feature: usize,
        threshold: f64,
    },
}

impl MutationOp {
    pub fn kind(&self) -> MutationKind {
        match self {
            MutationOp::AddFern { .. } => MutationKind::AddFern,
            MutationOp::AddFeature { .. } => MutationKind::AddFeature,
            MutationOp::DeleteFeature { .. } => MutationKind::DeleteFeature,
            MutationOp::SwitchFeatures { .. } => MutationKind::SwitchFeatures,
            MutationOp::ResampleThreshold { .. } => MutationKind::ResampleThreshold,
        }
    }
}

/// Everything a mutation needs besides the model: the image and the fixed
/// training samples ferns are retrained on.
#[derive(Debug, Clone, Copy)]
pub struct MutationContext<'a> {
    pub img: &'a PolSarImage,
    pub training: &'a TrainingSet,
    pub features: FeatureConfig,
    /// Size of ferns created by [`MutationKind::AddFern`].
    pub new_fern_size: usize,
}

impl MutationContext<'_> {
    fn sample_feature<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BinaryFeature> {
        sample_feature(rng, &self.features, self.img, &self.training.pixels)
    }
}

fn feasible(model: &RandomFernsModel, kind: MutationKind) -> bool {
    let ferns = model.ferns();
    match kind {
        MutationKind::AddFern | MutationKind::ResampleThreshold => true,
        MutationKind::AddFeature => ferns.iter().any(|f| f.len() < MAX_FERN_SIZE),
        MutationKind::DeleteFeature => ferns.iter().any(|f| f.len() >= 2),
        MutationKind::SwitchFeatures => ferns.len() >= 2,
    }
}

fn pick<R: Rng + ?Sized>(rng: &mut R, candidates: &[usize]) -> usize {
    candidates[rng.random_range(0..candidates.len())]
}

/// Draws a feasible edit, uniformly over the feasible kinds.
pub fn draw_mutation<R: Rng + ?Sized>(
    model: &RandomFernsModel,
    rng: &mut R,
    ctx: &MutationContext<'_>,
) -> Result<MutationOp> {
    let kinds: Vec<MutationKind> = MutationKind::ALL
        .into_iter()
        .filter(|&k| feasible(model, k))
        .collect();
    let ferns = model.ferns();
    let all: Vec<usize> = (0..ferns.len()).collect();
    Ok(match kinds[rng.random_range(0..kinds.len())] {
        MutationKind::AddFern => MutationOp::AddFern {
            features: (0..ctx.new_fern_size)
                .map(|_| ctx.sample_feature(rng))
                .collect::<Result<_>>()?,
        },
        MutationKind::AddFeature => {
            let open: Vec<usize> = all
                .iter()
                .copied()
                .filter(|&j| ferns[j].len() < MAX_FERN_SIZE)
                .collect();
            let fern = pick(rng, &open);
            MutationOp::AddFeature {
                fern,
                feature: ctx.sample_feature(rng)?,
            }
        }
        MutationKind::DeleteFeature => {
            let large: Vec<usize> = all
                .iter()
                .copied()
                .filter(|&j| ferns[j].len() >= 2)
                .collect();
            let fern = pick(rng, &large);
            MutationOp::DeleteFeature {
                fern,
                feature: rng.random_range(0..ferns[fern].len()),
            }
        }
        MutationKind::SwitchFeatures => {
            let fern_a = rng.random_range(0..ferns.len());
            let mut fern_b = rng.random_range(0..ferns.len() - 1);
            if fern_b >= fern_a {
                fern_b += 1;
            }
            MutationOp::SwitchFeatures {
                fern_a,
                feature_a: rng.random_range(0..ferns[fern_a].len()),
                fern_b,
                feature_b: rng.random_range(0..ferns[fern_b].len()),
            }
        }
        MutationKind::ResampleThreshold => {
            let fern = rng.random_range(0..ferns.len());
            let feature = rng.random_range(0..ferns[fern].len());
            let projection = ferns[fern].features()[feature].projection;
            MutationOp::ResampleThreshold {
                fern,
                feature,
                threshold: sample_threshold(rng, &projection, ctx.img, &ctx.training.pixels)?,
            }
        }
    })
}

fn check_index(len: usize, i: usize, what: &str) -> Result<()> {
    if i >= len {
        return Err(Error::Config(alloc::format!(
            "{what} index {i} out of range ({len})"
        )));
    }
    Ok(())
}

/// Index of a retrained fern and the bin of every training sample.
pub type Retrained = (usize, Vec<u32>);

/// Applies an edit and retrains only the ferns it touches. Returns the new
/// model together with the retrained ferns' indices and training bins.
pub fn apply_mutation(
    model: &RandomFernsModel,
    op: &MutationOp,
    ctx: &MutationContext<'_>,
) -> Result<(RandomFernsModel, Vec<Retrained>)> {
    let ferns = model.ferns();
    // New feature lists of the affected ferns, `None` index meaning "append".
    let mut edits: Vec<(Option<usize>, Vec<BinaryFeature>)> = Vec::new();
    match op {
        MutationOp::AddFern { features } => edits.push((None, features.clone())),
        MutationOp::AddFeature { fern, feature } => {
            check_index(ferns.len(), *fern, "fern")?;
            let mut fs = ferns[*fern].features().to_vec();
            fs.push(*feature);
            edits.push((Some(*fern), fs));
        }
        MutationOp::DeleteFeature { fern, feature } => {
            check_index(ferns.len(), *fern, "fern")?;
            check_index(ferns[*fern].len(), *feature, "feature")?;
            if ferns[*fern].len() < 2 {
                return Err(Error::Config(
                    "cannot delete the last feature of a fern".into(),
                ));
            }
            let mut fs = ferns[*fern].features().to_vec();
            fs.remove(*feature);
            edits.push((Some(*fern), fs));
        }
        MutationOp::SwitchFeatures {
            fern_a,
            feature_a,
            fern_b,
            feature_b,
        } => {
            check_index(ferns.len(), *fern_a, "fern")?;
            check_index(ferns.len(), *fern_b, "fern")?;
            if fern_a == fern_b {
                return Err(Error::Config("switch needs two different ferns".into()));
            }
            check_index(ferns[*fern_a].len(), *feature_a, "feature")?;
            check_index(ferns[*fern_b].len(), *feature_b, "feature")?;
            let mut fa = ferns[*fern_a].features().to_vec();
            let mut fb = ferns[*fern_b].features().to_vec();
            core::mem::swap(&mut fa[*feature_a], &mut fb[*feature_b]);
            edits.push((Some(*fern_a), fa));
            edits.push((Some(*fern_b), fb));
        }
        MutationOp::ResampleThreshold {
            fern,
            feature,
            threshold,
        } => {
            check_index(ferns.len(), *fern, "fern")?;
            check_index(ferns[*fern].len(), *feature, "feature")?;
            let mut fs = ferns[*fern].features().to_vec();
            fs[*feature].threshold = *threshold;
            edits.push((Some(*fern), fs));
        }
    }

    let mut next = model.clone();
    let mut retrained = Vec::with_capacity(edits.len());
    for (slot, features) in edits {
        let (fern, bins) = Fern::fit(features, ctx.img, ctx.training)?;
        let index = match slot {
            Some(j) => {
                next.replace_fern(j, fern);
                j
            }
            None => {
                next.push_fern(fern);
                next.num_ferns() - 1
            }
        };
        retrained.push((index, bins));
    }
    Ok((next, retrained))
}

/// Draws and applies one feasible edit.
pub fn mutate<R: Rng + ?Sized>(
    model: &RandomFernsModel,
    rng: &mut R,
    ctx: &MutationContext<'_>,
) -> Result<(MutationOp, RandomFernsModel)> {
    let op = draw_mutation(model, rng, ctx)?;
    let (next, _) = apply_mutation(model, &op, ctx)?;
    Ok((op, next))
}

/// Metric maximized by the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    #[default]
    AverageAccuracy,
    OverallAccuracy,
    Kappa,
    F1Macro,
    MeanIou,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::AverageAccuracy => "aa",
            Objective::OverallAccuracy => "oa",
            Objective::Kappa => "kappa",
            Objective::F1Macro => "f1",
            Objective::MeanIou => "miou",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterConfig {
    pub it_min: usize,
    pub patience: usize,
    pub init_ferns: usize,
    pub init_fern_size: usize,
    pub objective: Objective,
}

impl Default for IterConfig {
    fn default() -> Self {
        IterConfig {
            it_min: 30,
            patience: 15,
            init_ferns: 5,
            init_fern_size: 6,
            objective: Objective::AverageAccuracy,
        }
    }
}

impl IterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patience < 1 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if self.init_ferns < 1 || !(1..=MAX_FERN_SIZE).contains(&self.init_fern_size) {
            return Err(Error::Config(
                "initial fern count and size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-fern bin indices of a fixed sample set, so that objectives can be
/// re-scored after an edit without re-evaluating untouched ferns.
#[derive(Debug, Clone)]
struct BinCache {
    bins: Vec<Vec<u32>>,
}

impl BinCache {
    fn build(model: &RandomFernsModel, img: &PolSarImage, set: &TrainingSet) -> Self {
        BinCache {
            bins: model
                .ferns()
                .iter()
                .map(|f| fern_bins(f, img, set))
                .collect(),
        }
    }

    fn set(&mut self, fern: usize, bins: Vec<u32>) {
        if fern == self.bins.len() {
            self.bins.push(bins);
        } else {
            self.bins[fern] = bins;
        }
    }

    fn objective(&self, model: &RandomFernsModel, set: &TrainingSet, objective: Objective) -> f64 {
        let mut scores = alloc::vec![0.0; model.num_classes() as usize];
        let predictions = (0..set.len()).map(|i| {
            scores.copy_from_slice(model.class_log_prior());
            for (j, bins) in self.bins.iter().enumerate() {
                model.accumulate(j, bins[i] as usize, &mut scores);
            }
            argmax(&scores)
        });
        let pairs: Vec<(u8, u8)> = set.labels.iter().copied().zip(predictions).collect();
        let cm =
            confusion_from_pairs(model.num_classes(), pairs).expect("labels within class range");
        let Ok(m) = metrics(&cm) else { return 0.0 };
        match objective {
            Objective::AverageAccuracy => m.aa,
            Objective::OverallAccuracy => m.oa,
            Objective::Kappa => m.kappa,
            Objective::F1Macro => m.f1_macro,
            Objective::MeanIou => m.miou,
        }
    }
}

fn fern_bins(fern: &Fern, img: &PolSarImage, set: &TrainingSet) -> Vec<u32> {
    set.pixels
        .iter()
        .map(|&p| fern.bin_index(img, p) as u32)
        .collect()
}

/// Objective of a model on a labeled sample set.
pub fn evaluate_objective(
    model: &RandomFernsModel,
    img: &PolSarImage,
    set: &TrainingSet,
    objective: Objective,
) -> f64 {
    BinCache::build(model, img, set).objective(model, set, objective)
}

/// One row of the optimization trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub op: MutationKind,
    pub accepted: bool,
    /// Validation objective of the proposed model.
    pub candidate_val: f64,
    /// Objectives of the model retained after this iteration.
    pub train_objective: f64,
    pub val_objective: f64,
    pub num_features: usize,
    pub num_ferns: usize,
}

/// Hill climbing over fern structures.
///
/// Runs at least `it_min` iterations. After that, the search stops once
/// `patience` consecutive proposals beyond iteration `it_min` have been
/// rejected. `model` must have been trained on `ctx.training`.
pub fn iterative_optimize<R: Rng + ?Sized>(
    model: RandomFernsModel,
    ctx: &MutationContext<'_>,
    validation: &TrainingSet,
    cfg: &IterConfig,
    rng: &mut R,
) -> Result<(RandomFernsModel, Vec<IterationRecord>)> {
    cfg.validate()?;
    if validation.is_empty() || ctx.training.is_empty() {
        return Err(Error::Empty("training or validation samples"));
    }
    let mut current = model;
    let mut train_cache = BinCache::build(&current, ctx.img, ctx.training);
    let mut val_cache = BinCache::build(&current, ctx.img, validation);
    let mut train_score = train_cache.objective(&current, ctx.training, cfg.objective);
    let mut val_score = val_cache.objective(&current, validation, cfg.objective);

    let mut trace = Vec::new();
    let mut iteration = 0;
    let mut streak = 0;
    while iteration < cfg.it_min || streak < cfg.patience {
        iteration += 1;
        let op = draw_mutation(&current, rng, ctx)?;
        let (candidate, retrained) = apply_mutation(&current, &op, ctx)?;

        let mut cand_val = val_cache.clone();
        let mut cand_train = train_cache.clone();
        for (j, bins) in &retrained {
            cand_val.set(*j, fern_bins(&candidate.ferns()[*j], ctx.img, validation));
            cand_train.set(*j, bins.clone());
        }
        let candidate_val = cand_val.objective(&candidate, validation, cfg.objective);
        let accepted = candidate_val > val_score;
        if accepted {
            current = candidate;
            val_cache = cand_val;
            train_cache = cand_train;
            val_score = candidate_val;
            train_score = train_cache.objective(&current, ctx.training, cfg.objective);
            streak = 0;
        } else if iteration > cfg.it_min {
            streak += 1;
        }
        trace.push(IterationRecord {
            iteration,
            op: op.kind(),
            accepted,
            candidate_val,
            train_objective: train_score,
            val_objective: val_score,
            num_features: current.num_features(),
            num_ferns: current.num_ferns(),
        });
    }
    Ok((current, trace))
}
