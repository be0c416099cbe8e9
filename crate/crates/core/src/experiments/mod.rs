//! Synthetic data and the experiment protocols.

pub mod config;
pub mod protocols;
pub mod synthetic;

pub use config::{run_experiment_file, DataSource, ExperimentConfig, ExperimentKind, ExperimentOutput, RunMeta};
pub use protocols::{
    run_comparison, run_threshold_sweep, trend_slope, ExperimentFeatures, SweepMode, SweepResult, SweepRow,
};
pub use synthetic::{generate_synthetic, GroundTruth, PlantedModel, ScoreBasis, SyntheticData, SyntheticSpec};
