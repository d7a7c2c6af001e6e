//! End-to-end experiments: similarity of SMOTE output to its source sample
//! (simulated and real-data), and the repeated cross-validated comparison of
//! rebalancing strategies.

mod predictive;
mod similarity;

pub use predictive::{predictive_protocol, CellResult, EvaluationReport, PredictiveConfig, StrategyRow};
pub use similarity::{
    default_simulation_law, realdata_protocol, similarity_c, simulated_protocol, SimilarityPoint, SimilarityResult,
};

/// Default sample-size grid of the similarity experiments.
pub const DEFAULT_N_GRID: [usize; 5] = [100, 500, 1000, 5000, 10_000];
