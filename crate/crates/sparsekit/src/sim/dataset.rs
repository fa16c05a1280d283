//! Synthetic classification workload.
//!
//! Stands in for a real multimodal dataset: each sample is a grid of
//! d-dimensional tokens drawn around a class centroid. A chosen fraction of
//! samples is planted "hard" - their tokens carry an attenuated centroid
//! (lower margin) under heavier noise, so a linear probe keeps losing on
//! them long after the easy samples are fit. The hard tag is ground truth
//! for recall measurement only; nothing in the selection path ever sees it.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::{Modality, TokenSet};
use crate::numeric::{sample_without_replacement, SeededRng};

/// Signal attenuation applied to hard samples' centroids.
const HARD_MARGIN: f64 = 0.35;
/// Centroid magnitude for easy samples.
const CENTROID_SCALE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDatasetSpec {
    pub n_samples: usize,
    pub hard_fraction: f64,
    pub tokens_per_sample: usize,
    pub dim: usize,
    pub n_classes: usize,
    pub noise_sigma_easy: f64,
    pub noise_sigma_hard: f64,
    pub seed: u64,
}

impl SyntheticDatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0
            || self.n_classes == 0
            || self.tokens_per_sample == 0
            || self.dim == 0
        {
            return Err(Error::invalid(
                "dataset needs at least one sample, class, token, and dimension",
            ));
        }
        if !(0.0..=1.0).contains(&self.hard_fraction) {
            return Err(Error::invalid(format!(
                "hard fraction {} outside [0, 1]",
                self.hard_fraction
            )));
        }
        if self.noise_sigma_easy < 0.0 || self.noise_sigma_hard < 0.0 {
            return Err(Error::invalid("noise sigmas must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub tokens: TokenSet,
    pub label: usize,
    /// Ground-truth difficulty tag; for evaluation only.
    pub hard: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub spec: SyntheticDatasetSpec,
    pub samples: Vec<Sample>,
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn hard_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.samples[i].hard).collect()
    }
}

/// Generates the workload. Reproducible per seed; exactly
/// `floor(hard_fraction * n_samples)` samples carry the hard tag.
pub fn generate_dataset(spec: &SyntheticDatasetSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let unit_normal = Normal::new(0.0, 1.0).expect("valid normal");

    // Class centroids: random directions of fixed magnitude.
    let mut centroids = Vec::with_capacity(spec.n_classes);
    for _ in 0..spec.n_classes {
        let mut c: Vec<f64> = (0..spec.dim)
            .map(|_| unit_normal.sample(&mut rng))
            .collect();
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        for x in &mut c {
            *x *= CENTROID_SCALE / norm;
        }
        centroids.push(c);
    }

    let n_hard = (spec.hard_fraction * spec.n_samples as f64).floor() as usize;
    let hard_set: std::collections::BTreeSet<usize> =
        sample_without_replacement(spec.n_samples, n_hard, &mut rng)?
            .into_iter()
            .collect();

    let mut samples = Vec::with_capacity(spec.n_samples);
    for i in 0..spec.n_samples {
        let label = rng.below(spec.n_classes);
        let hard = hard_set.contains(&i);
        let (margin, sigma) = if hard {
            (HARD_MARGIN, spec.noise_sigma_hard)
        } else {
            (1.0, spec.noise_sigma_easy)
        };
        let tokens: Vec<Vec<f64>> = (0..spec.tokens_per_sample)
            .map(|_| {
                centroids[label]
                    .iter()
                    .map(|&c| margin * c + sigma * unit_normal.sample(&mut rng))
                    .collect()
            })
            .collect();
        let modality = if i % 2 == 0 {
            Modality::Visual
        } else {
            Modality::Audio
        };
        samples.push(Sample {
            tokens: TokenSet::from_tokens(modality, spec.dim, tokens)?,
            label,
            hard,
        });
    }
    Ok(SyntheticDataset {
        spec: spec.clone(),
        samples,
    })
}
