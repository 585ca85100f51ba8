//! Training, evaluation, baselines, experiment runs and report files.

mod checkpoint;
mod config;
mod experiment;
mod inspect;
mod metrics;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{LossKind, TrainConfig};
pub use experiment::{render_report, run_experiment, BaselineResult, MetricsReport, SeedResult, Summary};
pub use inspect::inspect_hierarchy;
pub use metrics::{
    baseline_forecast, evaluate_baseline, evaluate_mae, evaluate_mse, mae, mse, predict_all, BaselineKind,
};
pub use train::{loss_between, prepare, train, Example, Prepared, TrainOutcome};
