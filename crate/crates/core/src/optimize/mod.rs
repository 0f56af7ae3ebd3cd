//! Fern structure optimization: candidate preselection with correlation-based
//! grouping, and iterative mutate-and-accept search.

mod bits;
mod iterative;
mod preselect;
mod strategy;

pub use bits::BitVector;
pub use iterative::{
    apply_mutation, draw_mutation, evaluate_objective, iterative_optimize, mutate, IterConfig,
    IterationRecord, MutationContext, MutationKind, MutationOp, Objective, Retrained,
};
pub use preselect::{
    evaluate_candidates, feature_bits, feature_correlation, group_correlated, info_gain_hat,
    label_entropy, preselect_and_group, rank_by_quality, reject_correlated, select_groups,
    FeatureStats, PreselectConfig,
};
pub use strategy::{fit, FitConfig, FitOutcome, Strategy};
