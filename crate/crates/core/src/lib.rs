//! Rebalancing strategies for imbalanced binary classification, and the
//! numerical machinery used to study how SMOTE behaves.
//!
//! The crate is organised by role:
//!
//! * [`dataset`]: feature matrix + binary labels, CSV I/O, stratified folds,
//!   nested minority subsampling.
//! * [`neighbors`]: exact brute-force Euclidean k-nearest-neighbour search.
//! * [`samplers`]: SMOTE, Borderline SMOTE 1/2, Multivariate Gaussian SMOTE,
//!   CV-SMOTE, random over/under sampling, NearMiss1 and class weighting.
//! * [`specfun`]: incomplete beta function and binomial CDF.
//! * [`density`]: SMOTE conditional density, Monte-Carlo density estimates
//!   and tail / boundary bound checks.
//! * [`classify`]: logistic regression, random forest, ROC / PR AUC.
//! * [`protocols`]: similarity experiments and the cross-validated
//!   predictive evaluation.
//!
//! Every stochastic routine takes a [`Seed`]; outputs are pure functions of
//! `(inputs, seed)` and do not depend on the number of worker threads.

pub mod classify;
pub mod dataset;
pub mod density;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod matrix;
pub mod neighbors;
pub mod protocols;
pub mod quadrature;
pub mod rng;
pub mod samplers;
pub mod specfun;

pub use classify::{ClassifierSpec, ForestConfig, LogRegConfig, Model};
pub use dataset::{Dataset, FoldAssignment, ImbalanceSpec, LabelColumn};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use neighbors::NeighborTable;
pub use rng::Seed;
pub use samplers::{rebalance, Rebalanced, StrategyConfig, StrategyKind, SyntheticBatch};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
