//! Normalization, PCA, weighted soft-margin SVMs and hyperparameter search.

mod artifact;
mod grid;
mod kernel;
mod multiclass;
mod normalize;
mod pca;
mod svm;

pub use artifact::{pipeline_from_json, pipeline_to_json, ARTIFACT_VERSION};
pub(crate) use grid::search;
pub use grid::{exponent_grid, grid_search, Config, GridSearchResult, HyperGrid, LabeledSet, Pipeline};
pub use kernel::Kernel;
pub use multiclass::{balanced_weights, predict_multiclass, present_classes, vote, OneVsOne, PairModel};
pub use normalize::{Normalizer, Scheme};
pub use pca::{Pca, DEFAULT_ENERGY};
pub use svm::{smo, train_svm, DualSolution, SmoParams, SvmModel, DEFAULT_TOL};
