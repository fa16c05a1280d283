//! Schedule-driven random token masking.
//!
//! Drops a fixed fraction of patch tokens (visual patches or spectrogram
//! patches) during the early epochs of training. Masked tokens are removed
//! from the sequence rather than zeroed, so downstream stages genuinely
//! process fewer tokens. Survivors keep their embeddings bit-identical and
//! their original grid positions.
//!
//! Both modalities share the masking ratio but draw independent plans;
//! callers derive one seed per (sample, epoch, modality) via
//! [`crate::numeric::mix_seed`].

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::numeric::{sample_without_replacement, SeededRng};

/// Which stream a token set came from. Audio arrives pre-patched as a
/// spectrogram token grid; raw waveform conversion is outside this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Visual,
    Audio,
}

/// Ordered collection of d-dimensional token embeddings with a modality tag.
///
/// `origin_ids` are stable per-token identifiers (original grid positions);
/// they survive masking and merging so outputs can be traced back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSet {
    pub modality: Modality,
    pub dim: usize,
    pub origin_ids: Vec<usize>,
    pub tokens: Vec<Vec<f64>>,
}

impl TokenSet {
    pub fn new(
        modality: Modality,
        dim: usize,
        origin_ids: Vec<usize>,
        tokens: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let ts = TokenSet {
            modality,
            dim,
            origin_ids,
            tokens,
        };
        ts.validate()?;
        Ok(ts)
    }

    /// Builds a token set with origin ids `0..tokens.len()`.
    pub fn from_tokens(modality: Modality, dim: usize, tokens: Vec<Vec<f64>>) -> Result<Self> {
        let ids = (0..tokens.len()).collect();
        TokenSet::new(modality, dim, ids, tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.origin_ids.len() != self.tokens.len() {
            return Err(Error::invalid(format!(
                "{} origin ids for {} tokens",
                self.origin_ids.len(),
                self.tokens.len()
            )));
        }
        if let Some(t) = self.tokens.iter().find(|t| t.len() != self.dim) {
            return Err(Error::shape(format!(
                "token of length {} in a dim-{} token set",
                t.len(),
                self.dim
            )));
        }
        for t in &self.tokens {
            if let Some(v) = t.iter().find(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite token entry {v}")));
            }
        }
        let unique: BTreeSet<_> = self.origin_ids.iter().collect();
        if unique.len() != self.origin_ids.len() {
            return Err(Error::invalid("duplicate origin ids"));
        }
        Ok(())
    }
}

/// A reproducible set of token indices to drop: `floor(ratio * total)`
/// indices, drawn uniformly under the given seed, stored sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPlan {
    pub total: usize,
    pub masked: Vec<usize>,
    pub ratio: f64,
    pub seed: u64,
}

impl MaskPlan {
    pub fn validate(&self) -> Result<()> {
        let expect = masked_count(self.total, self.ratio);
        if self.masked.len() != expect {
            return Err(Error::invalid(format!(
                "plan has {} masked indices, ratio {} of {} requires {}",
                self.masked.len(),
                self.ratio,
                self.total,
                expect
            )));
        }
        if self.masked.iter().any(|&i| i >= self.total) {
            return Err(Error::invalid("masked index out of range"));
        }
        Ok(())
    }
}

/// How many leading epochs masking stays active for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSchedule {
    pub active_epochs: usize,
}

fn masked_count(total: usize, ratio: f64) -> usize {
    ((ratio * total as f64).floor() as usize).min(total)
}

/// Draws a uniformly random subset of `floor(ratio * total)` token indices
/// to mask. Identical `(total, ratio, seed)` always produce the same plan.
pub fn plan_mask(total: usize, ratio: f64, seed: u64) -> Result<MaskPlan> {
    if !(0.0..=1.0).contains(&ratio) || !ratio.is_finite() {
        return Err(Error::invalid(format!("ratio {ratio} out of range [0, 1]")));
    }
    if total == 0 {
        return Err(Error::invalid("cannot plan a mask over zero tokens"));
    }
    let mut rng = SeededRng::new(seed);
    let masked = sample_without_replacement(total, masked_count(total, ratio), &mut rng)?;
    Ok(MaskPlan {
        total,
        masked,
        ratio,
        seed,
    })
}

/// Removes the planned tokens, keeping survivors in their original order
/// with embeddings and origin ids untouched.
pub fn apply_mask(ts: &TokenSet, plan: &MaskPlan) -> Result<TokenSet> {
    ts.validate()?;
    plan.validate()?;
    if plan.total != ts.len() {
        return Err(Error::shape(format!(
            "plan covers {} tokens but token set has {}",
            plan.total,
            ts.len()
        )));
    }
    let drop: BTreeSet<usize> = plan.masked.iter().copied().collect();
    let mut origin_ids = Vec::with_capacity(ts.len() - drop.len());
    let mut tokens = Vec::with_capacity(ts.len() - drop.len());
    for i in 0..ts.len() {
        if !drop.contains(&i) {
            origin_ids.push(ts.origin_ids[i]);
            tokens.push(ts.tokens[i].clone());
        }
    }
    Ok(TokenSet {
        modality: ts.modality,
        dim: ts.dim,
        origin_ids,
        tokens,
    })
}

/// True while masking is scheduled: 0-based `epoch` strictly below
/// `active_epochs`. A schedule of 3 covers epochs {0, 1, 2}.
pub fn mask_active(epoch: usize, schedule: &MaskSchedule) -> bool {
    epoch < schedule.active_epochs
}
