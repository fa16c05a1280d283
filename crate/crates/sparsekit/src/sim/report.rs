//! Experiment bookkeeping.

use serde::{Deserialize, Serialize};
use std::time::Duration;

use crate::sim::dataset::SyntheticDatasetSpec;
use crate::sim::train::PipelineConfig;

/// Everything a single training run produced.
///
/// The compute proxy counts tokens flowing through gradient-bearing steps
/// only; it is the hardware-independent stand-in for training time.
/// `total_tokens_processed` additionally counts evaluation forward passes.
/// Wall clock is kept in memory for display but never serialized, so report
/// files from identical configs are byte-identical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub label: String,
    pub seed: u64,
    pub epochs: usize,
    pub pipeline: PipelineConfig,
    pub dataset: SyntheticDatasetSpec,
    pub per_epoch_accuracy: Vec<f64>,
    pub per_epoch_proxy: Vec<u64>,
    pub final_accuracy: f64,
    pub total_tokens_processed: u64,
    pub total_gradient_steps: u64,
    pub compute_proxy: u64,
    pub subset_indices: Option<Vec<usize>>,
    pub planted_hard_recall: Option<f64>,
    /// Subset-trained accuracy divided by full-data accuracy.
    pub retention_ratio: Option<f64>,
    /// Same quotient measured on the accuracy gain above chance.
    pub above_chance_retention: Option<f64>,
    pub baseline_final_accuracy: Option<f64>,
    #[serde(skip, default)]
    pub wall_clock: Duration,
}

impl ExperimentReport {
    /// Per-epoch curves as CSV for external plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,accuracy,gradient_tokens\n");
        for (e, (acc, proxy)) in self
            .per_epoch_accuracy
            .iter()
            .zip(&self.per_epoch_proxy)
            .enumerate()
        {
            out.push_str(&format!("{e},{acc},{proxy}\n"));
        }
        out
    }
}
