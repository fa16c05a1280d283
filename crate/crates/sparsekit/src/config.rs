//! Declarative run configuration.
//!
//! One TOML file drives everything; command-line flags override individual
//! fields. Unknown keys are rejected so typos fail loudly instead of
//! silently falling back to defaults. All randomness flows from the
//! explicit `seed` here - nothing is ever seeded from the clock.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::masking::MaskSchedule;
use crate::sim::{PipelineConfig, SyntheticDatasetSpec};
use crate::subset::{InfoBatchConfig, SelectionConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    /// Training epochs for simulator runs.
    pub epochs: usize,
    pub learning_rate: f64,
    pub dataset: DatasetSection,
    pub masking: MaskingSection,
    pub merging: MergingSection,
    pub infobatch: InfoBatchSection,
    pub selection: SelectionSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub n_samples: usize,
    pub hard_fraction: f64,
    pub tokens_per_sample: usize,
    pub dim: usize,
    pub n_classes: usize,
    pub noise_sigma_easy: f64,
    pub noise_sigma_hard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaskingSection {
    pub ratio: f64,
    pub active_epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MergingSection {
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InfoBatchSection {
    pub enabled: bool,
    pub prune_ratio: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionSection {
    pub epochs: usize,
    pub group_size: usize,
    pub decay_ratio: f64,
    /// Defaults to a quarter of the dataset when absent.
    pub subset_size: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 42,
            epochs: 15,
            learning_rate: 0.1,
            dataset: DatasetSection::default(),
            masking: MaskingSection::default(),
            merging: MergingSection::default(),
            infobatch: InfoBatchSection::default(),
            selection: SelectionSection::default(),
        }
    }
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            n_samples: 512,
            hard_fraction: 0.2,
            tokens_per_sample: 32,
            dim: 16,
            n_classes: 4,
            noise_sigma_easy: 0.5,
            noise_sigma_hard: 2.0,
        }
    }
}

impl Default for MaskingSection {
    fn default() -> Self {
        MaskingSection {
            ratio: 0.5,
            active_epochs: 3,
        }
    }
}

impl Default for MergingSection {
    fn default() -> Self {
        MergingSection { enabled: true }
    }
}

impl Default for InfoBatchSection {
    fn default() -> Self {
        InfoBatchSection {
            enabled: true,
            prune_ratio: 0.5,
            delta: 0.875,
        }
    }
}

impl Default for SelectionSection {
    fn default() -> Self {
        SelectionSection {
            epochs: 15,
            group_size: 3,
            decay_ratio: 0.618,
            subset_size: None,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-field checks beyond what each consumer validates for itself.
    pub fn validate(&self) -> Result<()> {
        self.dataset_spec().validate()?;
        self.sparse_pipeline().validate(self.epochs)?;
        self.selection_config().validate(self.dataset.n_samples)?;
        self.selection_infobatch().validate()?;
        Ok(())
    }

    pub fn dataset_spec(&self) -> SyntheticDatasetSpec {
        SyntheticDatasetSpec {
            n_samples: self.dataset.n_samples,
            hard_fraction: self.dataset.hard_fraction,
            tokens_per_sample: self.dataset.tokens_per_sample,
            dim: self.dataset.dim,
            n_classes: self.dataset.n_classes,
            noise_sigma_easy: self.dataset.noise_sigma_easy,
            noise_sigma_hard: self.dataset.noise_sigma_hard,
            seed: self.seed,
        }
    }

    /// Pipeline with every configured sparsification stage on.
    pub fn sparse_pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            mask_ratio: self.masking.ratio,
            mask_schedule: MaskSchedule {
                active_epochs: self.masking.active_epochs,
            },
            merge: self.merging.enabled,
            infobatch: self.infobatch.enabled.then_some(InfoBatchConfig {
                prune_ratio: self.infobatch.prune_ratio,
                delta: self.infobatch.delta,
                total_epochs: self.epochs,
            }),
            learning_rate: self.learning_rate,
        }
    }

    pub fn dense_pipeline(&self) -> PipelineConfig {
        PipelineConfig::dense(self.learning_rate)
    }

    pub fn selection_config(&self) -> SelectionConfig {
        SelectionConfig {
            epochs: self.selection.epochs,
            group_size: self.selection.group_size,
            decay_ratio: self.selection.decay_ratio,
            subset_size: self
                .selection
                .subset_size
                .unwrap_or(self.dataset.n_samples / 4)
                .max(1),
        }
    }

    /// Pruning schedule for the selection stage (warm-up epoch included).
    pub fn selection_infobatch(&self) -> InfoBatchConfig {
        InfoBatchConfig {
            prune_ratio: self.infobatch.prune_ratio,
            delta: self.infobatch.delta,
            total_epochs: self.selection.epochs + 1,
        }
    }
}
