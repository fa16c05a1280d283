//! Desk-scale synthetic training simulator.
//!
//! Exercises masking, merging, and sample selection end to end on a toy
//! classifier, measuring compute proxies and accuracy retention instead of
//! wall-clock time, which varies with hardware.

mod dataset;
mod model;
mod report;
mod train;

pub use dataset::{generate_dataset, Sample, SyntheticDataset, SyntheticDatasetSpec};
pub use model::ToyModel;
pub use report::ExperimentReport;
pub use train::{run_retention_experiment, select_by_training, train, PipelineConfig};
