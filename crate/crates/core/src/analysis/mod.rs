//! Aggregate analyses over images and models: stable-rank curves, frame
//! CKA, frame-size sweeps, intrinsic dimension and accuracy correlation.

mod cka;
mod correlation;
mod curve;
mod idim;
mod stats;
mod sweep;

pub use cka::{frame_cka, frame_cka_neural, CkaLayer, CkaReport};
pub use correlation::{accuracy_correlation, AccuracyCorrelation, TapCorrelation, MIN_CORRELATION_MODELS};
pub use curve::{
    aggregate_curve, checkpoint_series, layer_stable_ranks, stable_rank_curve, ImageOutcome,
    StableRankCurve, TapStats,
};
pub use idim::{
    mle_id, twonn_id, IdEstimate, IdEstimator, SyntheticManifold, MLE_DEFAULT_K, TWONN_DEFAULT_DISCARD, TWONN_MIN_POINTS,
};
pub use stats::{average_ranks, pearson, spearman, t_interval, Interval};
pub use sweep::{prefix_subset, sweep_order, vary_k_sweep};
