//! Training loops over the synthetic workload.
//!
//! Three entry points:
//!
//! * [`train`] - one run with any combination of masking, merging, and soft
//!   pruning, with exact compute accounting.
//! * [`select_by_training`] - the selection stage: soft pruning only, with
//!   full per-sample loss vectors fed to the key-subset loop each epoch.
//! * [`run_retention_experiment`] - trains on a subset alone and on the full
//!   data under the same seed, reporting how much accuracy the subset keeps.
//!
//! Every stochastic choice draws from a stream derived from the run seed via
//! [`mix_seed`], so paired runs share shuffle order and differ only where
//! their configurations differ.

use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::masking::{apply_mask, mask_active, plan_mask, MaskSchedule, Modality, TokenSet};
use crate::merging::{sparse_merge, AttentionInputs};
use crate::numeric::{mix_seed, Matrix, SeededRng};
use crate::sim::dataset::SyntheticDataset;
use crate::sim::model::ToyModel;
use crate::sim::report::ExperimentReport;
use crate::subset::{
    infobatch_step, run_selection, InfoBatchConfig, KeySubset, LossPhase, PruneDecision,
    SelectionConfig,
};

const STREAM_SHUFFLE: u64 = 1;
const STREAM_MASK: u64 = 2;
const STREAM_INFOBATCH: u64 = 3;

/// Which sparsification stages a run applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mask_ratio: f64,
    pub mask_schedule: MaskSchedule,
    pub merge: bool,
    pub infobatch: Option<InfoBatchConfig>,
    pub learning_rate: f64,
}

impl PipelineConfig {
    /// Baseline: every sparsification stage off.
    pub fn dense(learning_rate: f64) -> Self {
        PipelineConfig {
            mask_ratio: 0.0,
            mask_schedule: MaskSchedule { active_epochs: 0 },
            merge: false,
            infobatch: None,
            learning_rate,
        }
    }

    pub fn validate(&self, epochs: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mask_ratio) {
            return Err(Error::invalid(format!(
                "mask ratio {} outside [0, 1]",
                self.mask_ratio
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive and finite"));
        }
        if let Some(ib) = &self.infobatch {
            ib.validate()?;
            if ib.total_epochs != epochs {
                return Err(Error::invalid(format!(
                    "pruning schedule covers {} epochs but the run has {epochs}",
                    ib.total_epochs
                )));
            }
        }
        Ok(())
    }
}

fn keep_all(n: usize) -> PruneDecision {
    PruneDecision {
        kept: (0..n).collect(),
        factors: vec![1.0; n],
    }
}

fn modality_tag(m: Modality) -> u64 {
    match m {
        Modality::Visual => 0,
        Modality::Audio => 1,
    }
}

/// Runs masking and merging for one sample at one epoch, returning the
/// tokens the model will actually process.
fn reduce_tokens(
    tokens: &TokenSet,
    pipe: &PipelineConfig,
    epoch: usize,
    dataset_index: usize,
    base_seed: u64,
) -> Result<TokenSet> {
    let mut current = tokens.clone();
    if mask_active(epoch, &pipe.mask_schedule) && pipe.mask_ratio > 0.0 {
        let seed = mix_seed(
            base_seed,
            &[
                STREAM_MASK,
                epoch as u64,
                dataset_index as u64,
                modality_tag(current.modality),
            ],
        );
        let plan = plan_mask(current.len(), pipe.mask_ratio, seed)?;
        current = apply_mask(&current, &plan)?;
    }
    if pipe.merge && current.len() > 1 {
        // The pooled token probes its own grid: a cheap stand-in for the
        // question/context query, enough to rank tokens by salience.
        let pooled = ToyModel::features(&current);
        let k = Matrix::from_rows(&current.tokens)?;
        let inp = AttentionInputs::new(Matrix::new(1, current.dim, pooled)?, k.clone(), k)?;
        current = sparse_merge(&current, &inp)?.merged;
    }
    Ok(current)
}

fn evaluate(model: &ToyModel, ds: &SyntheticDataset) -> f64 {
    let correct = ds
        .samples
        .iter()
        .filter(|s| model.predict(&ToyModel::features(&s.tokens)) == s.label)
        .count();
    correct as f64 / ds.len() as f64
}

fn run_training(
    ds: &SyntheticDataset,
    pipe: &PipelineConfig,
    epochs: usize,
    seed: u64,
    label: &str,
    active: Option<&[usize]>,
) -> Result<ExperimentReport> {
    ds.spec.validate()?;
    pipe.validate(epochs)?;
    if epochs == 0 {
        return Err(Error::invalid("training needs at least one epoch"));
    }
    let active: Vec<usize> = match active {
        Some(idx) => {
            if idx.is_empty() {
                return Err(Error::invalid("training subset is empty"));
            }
            if idx.iter().any(|&i| i >= ds.len()) {
                return Err(Error::invalid("subset index out of range"));
            }
            idx.to_vec()
        }
        None => (0..ds.len()).collect(),
    };
    let started = Instant::now();
    let mut model = ToyModel::new(ds.spec.dim, ds.spec.n_classes);
    // Scores start uniform, so the first pruning decision keeps everything.
    let mut last_losses = vec![1.0; active.len()];
    let mut per_epoch_accuracy = Vec::with_capacity(epochs);
    let mut per_epoch_proxy = Vec::with_capacity(epochs);
    let mut compute_proxy = 0u64;
    let mut total_tokens = 0u64;
    let mut gradient_steps = 0u64;

    for epoch in 0..epochs {
        let decision = match &pipe.infobatch {
            Some(ib) => {
                let mut rng = SeededRng::new(mix_seed(seed, &[STREAM_INFOBATCH, epoch as u64]));
                infobatch_step(&last_losses, ib, epoch, &mut rng)?
            }
            None => keep_all(active.len()),
        };
        let mut order: Vec<usize> = (0..active.len()).collect();
        SeededRng::new(mix_seed(seed, &[STREAM_SHUFFLE, epoch as u64])).shuffle(&mut order);

        let mut epoch_proxy = 0u64;
        for &pos in &order {
            let Some(factor) = decision.factor_of(pos) else {
                continue;
            };
            let sample = &ds.samples[active[pos]];
            let sparse = reduce_tokens(&sample.tokens, pipe, epoch, active[pos], seed)?;
            let features = ToyModel::features(&sparse);
            let loss = model.train_step(&features, sample.label, pipe.learning_rate, factor);
            last_losses[pos] = loss;
            epoch_proxy += sparse.len() as u64;
            gradient_steps += 1;
        }
        compute_proxy += epoch_proxy;
        total_tokens += epoch_proxy;
        per_epoch_proxy.push(epoch_proxy);

        per_epoch_accuracy.push(evaluate(&model, ds));
        total_tokens += ds
            .samples
            .iter()
            .map(|s| s.tokens.len() as u64)
            .sum::<u64>();
    }

    let final_accuracy = *per_epoch_accuracy.last().expect("at least one epoch");
    Ok(ExperimentReport {
        label: label.to_string(),
        seed,
        epochs,
        pipeline: pipe.clone(),
        dataset: ds.spec.clone(),
        per_epoch_accuracy,
        per_epoch_proxy,
        final_accuracy,
        total_tokens_processed: total_tokens,
        total_gradient_steps: gradient_steps,
        compute_proxy,
        subset_indices: None,
        planted_hard_recall: None,
        retention_ratio: None,
        above_chance_retention: None,
        baseline_final_accuracy: None,
        wall_clock: started.elapsed(),
    })
}

/// Trains on the full dataset under the given pipeline.
pub fn train(
    ds: &SyntheticDataset,
    pipe: &PipelineConfig,
    epochs: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    run_training(ds, pipe, epochs, seed, "train", None)
}

/// Selection stage: trains with soft pruning only (no masking or merging)
/// and feeds complete per-sample loss vectors to the key-subset loop after
/// the warm-up epoch and after each of the `cfg.epochs` epochs.
///
/// `infobatch.total_epochs` must cover the warm-up too, i.e. equal
/// `cfg.epochs + 1`.
pub fn select_by_training(
    ds: &SyntheticDataset,
    cfg: &SelectionConfig,
    infobatch: &InfoBatchConfig,
    learning_rate: f64,
    seed: u64,
) -> Result<KeySubset> {
    ds.spec.validate()?;
    infobatch.validate()?;
    if infobatch.total_epochs != cfg.epochs + 1 {
        return Err(Error::invalid(format!(
            "pruning schedule covers {} epochs but selection runs {} (warm-up plus {})",
            infobatch.total_epochs,
            cfg.epochs + 1,
            cfg.epochs
        )));
    }
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::invalid("learning rate must be positive and finite"));
    }
    let n = ds.len();
    let mut model = ToyModel::new(ds.spec.dim, ds.spec.n_classes);
    let mut last_losses = vec![1.0; n];
    run_selection(n, cfg, |phase| {
        let epoch = match phase {
            LossPhase::Warmup => 0,
            LossPhase::Epoch(e) => e + 1,
        };
        let mut rng = SeededRng::new(mix_seed(seed, &[STREAM_INFOBATCH, epoch as u64]));
        let decision = infobatch_step(&last_losses, infobatch, epoch, &mut rng)?;
        let mut order: Vec<usize> = (0..n).collect();
        SeededRng::new(mix_seed(seed, &[STREAM_SHUFFLE, epoch as u64])).shuffle(&mut order);
        for &i in &order {
            let Some(factor) = decision.factor_of(i) else {
                continue;
            };
            let sample = &ds.samples[i];
            let features = ToyModel::features(&sample.tokens);
            model.train_step(&features, sample.label, learning_rate, factor);
        }
        // Complete loss vector, pruned samples included.
        let losses: Vec<f64> = ds
            .samples
            .iter()
            .map(|s| model.loss(&ToyModel::features(&s.tokens), s.label))
            .collect();
        last_losses.copy_from_slice(&losses);
        Ok(losses)
    })
}

/// Trains on `subset` alone and on the full data under the same seed, both
/// without sparsification, and reports the subset run with retention ratios
/// and planted-hard recall filled in. Accuracy is always measured on the
/// whole dataset.
pub fn run_retention_experiment(
    ds: &SyntheticDataset,
    subset: &[usize],
    epochs: usize,
    seed: u64,
    learning_rate: f64,
) -> Result<ExperimentReport> {
    let unique: std::collections::BTreeSet<usize> = subset.iter().copied().collect();
    if unique.len() != subset.len() {
        return Err(Error::invalid("subset contains duplicate indices"));
    }
    let pipe = PipelineConfig::dense(learning_rate);
    let full = run_training(ds, &pipe, epochs, seed, "full_data", None)?;
    let mut report = run_training(ds, &pipe, epochs, seed, "subset", Some(subset))?;

    let chance = 1.0 / ds.spec.n_classes as f64;
    report.retention_ratio = Some(if full.final_accuracy > 0.0 {
        report.final_accuracy / full.final_accuracy
    } else {
        0.0
    });
    report.above_chance_retention = Some(if full.final_accuracy > chance {
        (report.final_accuracy - chance) / (full.final_accuracy - chance)
    } else {
        0.0
    });
    report.baseline_final_accuracy = Some(full.final_accuracy);
    let hard = ds.hard_indices();
    if !hard.is_empty() {
        let caught = hard.iter().filter(|i| unique.contains(i)).count();
        report.planted_hard_recall = Some(caught as f64 / hard.len() as f64);
    }
    report.subset_indices = Some(subset.to_vec());
    Ok(report)
}
