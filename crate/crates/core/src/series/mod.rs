//! Duhamel series for the one-particle fluctuation, pruning and cumulants.

pub mod cumulants;
pub mod estimator;
pub mod tree;

pub use cumulants::{cumulant_decay_report, extract_cumulants, CumulantFamily, DecayReport};
pub use estimator::{geometric_ratio, series_estimate_f1, SeriesConfig, SeriesEstimate, TermSummary};
pub use tree::{
    apply_pruning, build_pseudo_trajectory, enumerate_trees, Adjunction, CollisionTree, PruningSchedule,
    PseudoTrajectory,
};
