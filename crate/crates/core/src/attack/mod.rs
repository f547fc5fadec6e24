//! Logistic-regression modeling attack on (n,k)-XOR PUFs, trained with
//! resilient backpropagation.

mod features;
mod model;
mod rprop;
mod sweep;

pub use features::{feature_map, Dataset, FeatureKind};
pub use model::{evaluate, loss_and_gradient, XorModel};
pub use rprop::{train_rprop, Rprop, RpropConfig, TrainReport};
pub use sweep::{
    accuracy_map, attack, build_target, length_sweep, run_sweep, summarize, thresholds,
    AccuracyRow, CellKey, CellSummary, SweepSpec, Threshold, ACCURACY_HEADER,
};
