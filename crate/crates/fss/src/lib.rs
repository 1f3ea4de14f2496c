//! Feature subset selection with a genetic algorithm.
//!
//! An individual is an attribute mask. Its fitness is the best fold accuracy
//! of a gain-ratio decision tree trained on the masked attributes
//! ([`crossing_folding_fitness`]). [`exhaustive_best_subset`] tries every
//! mask and serves as the reference answer for small attribute counts.

pub mod dataset;
pub mod error;
pub mod tree;
pub mod wrapper;

pub use dataset::{
    load_dataset, parse_dataset, project, split_train_test, Attribute, AttributeKind,
    AttributeMask, Dataset, Instance, Value,
};
pub use error::{FssError, Result};
pub use tree::{accuracy, build_tree, gain_ratio, DecisionTree, Node};
pub use wrapper::{
    crossing_folding_fitness, crossing_folding_with, exhaustive_best_subset, fold_ranges,
    fss_operator_suite, FssEvaluator, DEFAULT_EXHAUSTIVE_LIMIT, DEFAULT_FOLDS,
};
