//! Loss-driven sample selection and soft pruning.
//!
//! Two cooperating mechanisms live here:
//!
//! * **Key-subset selection** - track which samples stay hard across
//!   training: each epoch, flag every sample whose fresh loss exceeds the
//!   mean of the previous epoch's losses, then aggregate the per-epoch flag
//!   vectors with geometrically decaying group weights (`w_g = r^(g-1)` over
//!   `k`-epoch groups) and keep the top `n` samples.
//! * **InfoBatch-style soft pruning** - each step, drop below-mean-loss
//!   samples with probability `prune_ratio` and rescale the gradients of
//!   the surviving below-mean samples by `1 / (1 - prune_ratio)`, keeping
//!   the expected gradient unchanged. Pruning anneals off for the last
//!   `(1 - delta)` fraction of training.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{argsort_desc, SeededRng};

/// Per-sample loss history: the latest loss per sample plus one hard-flag
/// vector per completed epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBoard {
    /// Latest per-sample losses.
    pub scores: Vec<f64>,
    /// One {0,1} vector per epoch; entry `i` is 1 when sample `i`'s new loss
    /// exceeded the mean of the previous scores.
    pub epoch_flags: Vec<Vec<u8>>,
}

impl ScoreBoard {
    pub fn n_samples(&self) -> usize {
        self.scores.len()
    }
}

/// Parameters of the key-subset selection loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Number of flag-collecting epochs after warm-up.
    pub epochs: usize,
    /// Epochs per weight group.
    pub group_size: usize,
    /// Geometric decay applied to later groups, in (0, 1].
    pub decay_ratio: f64,
    /// How many samples to keep.
    pub subset_size: usize,
}

impl SelectionConfig {
    pub fn validate(&self, n_samples: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("selection needs at least one epoch"));
        }
        if self.group_size == 0 {
            return Err(Error::invalid("group size must be at least 1"));
        }
        if !(self.decay_ratio > 0.0 && self.decay_ratio <= 1.0) {
            return Err(Error::invalid(format!(
                "decay ratio {} outside (0, 1]",
                self.decay_ratio
            )));
        }
        if self.subset_size == 0 || self.subset_size > n_samples {
            return Err(Error::invalid(format!(
                "subset size {} outside [1, {n_samples}]",
                self.subset_size
            )));
        }
        Ok(())
    }
}

/// Soft-pruning parameters. Pruning is disabled for epochs at or past
/// `floor(delta * total_epochs)` so the tail of training sees every sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoBatchConfig {
    /// Probability of dropping a below-mean sample, in [0, 1).
    pub prune_ratio: f64,
    /// Fraction of training during which pruning is active, in (0, 1].
    pub delta: f64,
    pub total_epochs: usize,
}

impl InfoBatchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.prune_ratio) {
            return Err(Error::invalid(format!(
                "prune ratio {} outside [0, 1)",
                self.prune_ratio
            )));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid(format!(
                "delta {} outside (0, 1]",
                self.delta
            )));
        }
        if self.total_epochs == 0 {
            return Err(Error::invalid("total epochs must be at least 1"));
        }
        Ok(())
    }

    /// First epoch at which pruning is disabled.
    pub fn annealing_start(&self) -> usize {
        (self.delta * self.total_epochs as f64).floor() as usize
    }
}

/// Which samples take a gradient step this epoch and with what weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneDecision {
    /// Kept sample indices, ascending.
    pub kept: Vec<usize>,
    /// Gradient rescale factor per kept sample, parallel to `kept`.
    /// 1 for above-mean samples, `1 / (1 - prune_ratio)` for below-mean
    /// survivors.
    pub factors: Vec<f64>,
}

impl PruneDecision {
    pub fn factor_of(&self, index: usize) -> Option<f64> {
        self.kept
            .binary_search(&index)
            .ok()
            .map(|pos| self.factors[pos])
    }
}

/// The selected sample indices plus the aggregated scores they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeySubset {
    /// Selected indices, sorted ascending.
    pub indices: Vec<usize>,
    /// Aggregated per-sample scores (length = dataset size).
    pub merged_scores: Vec<f64>,
}

fn ensure_losses(losses: &[f64]) -> Result<()> {
    if losses.is_empty() {
        return Err(Error::invalid("loss vector must be non-empty"));
    }
    if let Some(l) = losses.iter().find(|l| !l.is_finite()) {
        return Err(Error::invalid(format!("non-finite loss {l}")));
    }
    Ok(())
}

/// Starts a score board from warm-up losses; no flags recorded yet.
pub fn warmup_scores(losses: &[f64]) -> Result<ScoreBoard> {
    ensure_losses(losses)?;
    Ok(ScoreBoard {
        scores: losses.to_vec(),
        epoch_flags: Vec::new(),
    })
}

/// Folds one epoch of fresh losses into the board.
///
/// The comparison mean comes from the scores held *before* this call, so a
/// sample is flagged hard when its new loss exceeds the previous epoch's
/// mean (strictly). The new losses then replace the scores.
pub fn epoch_update(board: &mut ScoreBoard, losses: &[f64]) -> Result<()> {
    ensure_losses(losses)?;
    if losses.len() != board.n_samples() {
        return Err(Error::shape(format!(
            "epoch has {} losses for {} samples",
            losses.len(),
            board.n_samples()
        )));
    }
    let mean = board.scores.iter().sum::<f64>() / board.n_samples() as f64;
    let mut flags = vec![0u8; board.n_samples()];
    for (i, &loss) in losses.iter().enumerate() {
        board.scores[i] = loss;
        if loss > mean {
            flags[i] = 1;
        }
    }
    board.epoch_flags.push(flags);
    Ok(())
}

/// Weight applied to each epoch's flags: epochs are packed into groups of
/// `group_size` and group `g` (1-based) carries `decay_ratio^(g-1)`.
pub fn epoch_weights(epochs: usize, group_size: usize, decay_ratio: f64) -> Vec<f64> {
    (0..epochs)
        .map(|e| decay_ratio.powi((e / group_size) as i32))
        .collect()
}

/// Aggregates the recorded flag vectors into one score per sample.
pub fn merge_epoch_flags(board: &ScoreBoard, cfg: &SelectionConfig) -> Result<Vec<f64>> {
    cfg.validate(board.n_samples())?;
    if board.epoch_flags.len() != cfg.epochs {
        return Err(Error::invalid(format!(
            "board holds {} epochs of flags, config expects {}",
            board.epoch_flags.len(),
            cfg.epochs
        )));
    }
    let weights = epoch_weights(cfg.epochs, cfg.group_size, cfg.decay_ratio);
    let mut merged = vec![0.0; board.n_samples()];
    for (flags, w) in board.epoch_flags.iter().zip(&weights) {
        for (m, &f) in merged.iter_mut().zip(flags) {
            *m += w * f as f64;
        }
    }
    Ok(merged)
}

/// Top-`n` samples by aggregated score (stable tie-break by index), returned
/// sorted ascending.
pub fn select_key_subset(merged_scores: &[f64], n: usize) -> Result<KeySubset> {
    if n > merged_scores.len() {
        return Err(Error::invalid(format!(
            "cannot select {n} samples from {}",
            merged_scores.len()
        )));
    }
    let order = argsort_desc(merged_scores)?;
    let mut indices = order[..n].to_vec();
    indices.sort_unstable();
    Ok(KeySubset {
        indices,
        merged_scores: merged_scores.to_vec(),
    })
}

/// One soft-pruning decision.
///
/// Below-mean samples are dropped independently with probability
/// `prune_ratio`; survivors from that pool get factor `1 / (1 - prune_ratio)`
/// so the expected rescaled gradient matches the unpruned one. At-or-above
/// mean samples are always kept at factor 1. Past the annealing boundary
/// everything is kept.
///
/// Stream contract: consumes exactly one `next_f64` per below-mean sample,
/// in ascending index order, and nothing else. Replaying the same seed
/// reproduces the decision.
pub fn infobatch_step(
    losses: &[f64],
    cfg: &InfoBatchConfig,
    epoch: usize,
    rng: &mut SeededRng,
) -> Result<PruneDecision> {
    ensure_losses(losses)?;
    cfg.validate()?;
    if epoch >= cfg.total_epochs {
        return Err(Error::invalid(format!(
            "epoch {epoch} out of range for {} total epochs",
            cfg.total_epochs
        )));
    }
    let n = losses.len();
    if epoch >= cfg.annealing_start() {
        return Ok(PruneDecision {
            kept: (0..n).collect(),
            factors: vec![1.0; n],
        });
    }
    let mean = losses.iter().sum::<f64>() / n as f64;
    let rescale = 1.0 / (1.0 - cfg.prune_ratio);
    let mut kept = Vec::with_capacity(n);
    let mut factors = Vec::with_capacity(n);
    for (i, &loss) in losses.iter().enumerate() {
        if loss < mean {
            if rng.bernoulli(cfg.prune_ratio) {
                continue;
            }
            kept.push(i);
            factors.push(rescale);
        } else {
            kept.push(i);
            factors.push(1.0);
        }
    }
    Ok(PruneDecision { kept, factors })
}

/// Where a requested loss vector sits in the selection schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossPhase {
    Warmup,
    /// 0-based epoch within the selection loop.
    Epoch(usize),
}

/// Runs the whole selection loop against a loss provider.
///
/// The provider is called once for warm-up and once per epoch, and must
/// return a full per-sample loss vector each time (selection needs complete
/// vectors even when training itself prunes samples).
pub fn run_selection<F>(
    n_samples: usize,
    cfg: &SelectionConfig,
    mut loss_oracle: F,
) -> Result<KeySubset>
where
    F: FnMut(LossPhase) -> Result<Vec<f64>>,
{
    cfg.validate(n_samples)?;
    let check_len = |losses: &[f64]| -> Result<()> {
        if losses.len() != n_samples {
            return Err(Error::shape(format!(
                "loss provider returned {} losses for {n_samples} samples",
                losses.len()
            )));
        }
        Ok(())
    };
    let warm = loss_oracle(LossPhase::Warmup)?;
    check_len(&warm)?;
    let mut board = warmup_scores(&warm)?;
    for e in 0..cfg.epochs {
        let losses = loss_oracle(LossPhase::Epoch(e))?;
        check_len(&losses)?;
        epoch_update(&mut board, &losses)?;
    }
    let merged = merge_epoch_flags(&board, cfg)?;
    select_key_subset(&merged, cfg.subset_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg(
        epochs: usize,
        group_size: usize,
        decay_ratio: f64,
        subset_size: usize,
    ) -> SelectionConfig {
        SelectionConfig {
            epochs,
            group_size,
            decay_ratio,
            subset_size,
        }
    }

    #[test]
    fn warmup_copies_losses() {
        let b = warmup_scores(&[1.0, 0.0]).unwrap();
        assert_eq!(b.scores, vec![1.0, 0.0]);
        assert!(b.epoch_flags.is_empty());
        let c = warmup_scores(&[0.3; 5]).unwrap();
        assert_eq!(c.scores, vec![0.3; 5]);
        assert!(matches!(warmup_scores(&[]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn epoch_update_hand_trace() {
        let mut b = warmup_scores(&[1.0, 0.0]).unwrap();
        epoch_update(&mut b, &[0.9, 0.1]).unwrap();
        // mean of previous scores is 0.5: 0.9 flags, 0.1 does not.
        assert_eq!(b.epoch_flags, vec![vec![1, 0]]);
        assert_eq!(b.scores, vec![0.9, 0.1]);
    }

    #[test]
    fn flags_require_strict_inequality() {
        let mut b = warmup_scores(&[1.0, 3.0]).unwrap();
        epoch_update(&mut b, &[2.0, 2.0]).unwrap();
        assert_eq!(b.epoch_flags, vec![vec![0, 0]]);
    }

    #[test]
    fn single_sample_never_flags_itself() {
        let mut b = warmup_scores(&[0.7]).unwrap();
        epoch_update(&mut b, &[0.7]).unwrap();
        assert_eq!(b.epoch_flags, vec![vec![0]]);
    }

    #[test]
    fn epoch_update_rejects_length_mismatch() {
        let mut b = warmup_scores(&[1.0, 2.0]).unwrap();
        assert!(matches!(epoch_update(&mut b, &[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn group_weights_decay_geometrically() {
        let w = epoch_weights(15, 3, 0.618);
        assert_eq!(w.len(), 15);
        for (e, &we) in w.iter().enumerate() {
            let g = e / 3;
            assert_abs_diff_eq!(we, 0.618f64.powi(g as i32), epsilon = 1e-15);
        }
        assert_eq!(w[0], 1.0);
        assert_eq!(w[3], 0.618);
        assert_abs_diff_eq!(w[14], 0.618f64.powi(4), epsilon = 1e-15);
    }

    #[test]
    fn merge_flags_hand_trace() {
        let board = ScoreBoard {
            scores: vec![0.0, 0.0],
            epoch_flags: vec![vec![1, 0], vec![1, 0]],
        };
        let m = merge_epoch_flags(&board, &cfg(2, 1, 0.5, 1)).unwrap();
        assert_eq!(m, vec![1.5, 0.0]);
    }

    #[test]
    fn unit_decay_gives_plain_flag_sums() {
        let board = ScoreBoard {
            scores: vec![0.0; 3],
            epoch_flags: vec![vec![1, 0, 1], vec![0, 0, 1], vec![1, 1, 1]],
        };
        let m = merge_epoch_flags(&board, &cfg(3, 2, 1.0, 1)).unwrap();
        assert_eq!(m, vec![2.0, 1.0, 3.0]);
    }

    #[test]
    fn merge_flags_checks_epoch_count() {
        let board = ScoreBoard {
            scores: vec![0.0; 2],
            epoch_flags: vec![vec![0, 0]],
        };
        assert!(matches!(
            merge_epoch_flags(&board, &cfg(2, 1, 0.5, 1)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn subset_selection_and_ties() {
        let s = select_key_subset(&[1.5, 0.0], 1).unwrap();
        assert_eq!(s.indices, vec![0]);
        let s = select_key_subset(&[2.0, 2.0, 2.0, 2.0], 3).unwrap();
        assert_eq!(s.indices, vec![0, 1, 2]);
        let s = select_key_subset(&[0.1, 0.2], 2).unwrap();
        assert_eq!(s.indices, vec![0, 1]);
        assert!(matches!(
            select_key_subset(&[1.0], 2),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn zero_prune_ratio_keeps_everything() {
        let cfg = InfoBatchConfig {
            prune_ratio: 0.0,
            delta: 0.875,
            total_epochs: 16,
        };
        let d = infobatch_step(&[0.5, 1.5, 2.5], &cfg, 0, &mut SeededRng::new(1)).unwrap();
        assert_eq!(d.kept, vec![0, 1, 2]);
        assert_eq!(d.factors, vec![1.0; 3]);
    }

    #[test]
    fn pruning_matches_bernoulli_replay() {
        // Oracle: replay the documented stream (one draw per below-mean
        // sample, ascending index) on a fresh generator with the same seed.
        let losses = [0.1, 0.2, 0.9, 1.0];
        let cfg = InfoBatchConfig {
            prune_ratio: 0.5,
            delta: 0.875,
            total_epochs: 16,
        };
        for seed in 0..200 {
            let d = infobatch_step(&losses, &cfg, 1, &mut SeededRng::new(seed)).unwrap();
            let mut replay = SeededRng::new(seed);
            let mut expected_kept = Vec::new();
            let mut expected_factors = Vec::new();
            for (i, &l) in losses.iter().enumerate() {
                if l < 0.55 {
                    if replay.next_f64() < 0.5 {
                        continue;
                    }
                    expected_kept.push(i);
                    expected_factors.push(2.0);
                } else {
                    expected_kept.push(i);
                    expected_factors.push(1.0);
                }
            }
            assert_eq!(d.kept, expected_kept, "seed {seed}");
            assert_eq!(d.factors, expected_factors, "seed {seed}");
            // Above-mean samples 2 and 3 are always kept at factor 1.
            assert_eq!(d.factor_of(2), Some(1.0));
            assert_eq!(d.factor_of(3), Some(1.0));
        }
    }

    #[test]
    fn annealing_boundary_arithmetic() {
        let cfg = InfoBatchConfig {
            prune_ratio: 0.5,
            delta: 0.875,
            total_epochs: 16,
        };
        assert_eq!(cfg.annealing_start(), 14);
        // Distinct losses would normally allow pruning; epoch 14 must not.
        let losses = [0.0, 1.0, 2.0, 3.0];
        let d = infobatch_step(&losses, &cfg, 14, &mut SeededRng::new(3)).unwrap();
        assert_eq!(d.kept, vec![0, 1, 2, 3]);
        assert_eq!(d.factors, vec![1.0; 4]);
        // One epoch earlier pruning is still possible.
        let mut pruned_any = false;
        for seed in 0..32 {
            let d = infobatch_step(&losses, &cfg, 13, &mut SeededRng::new(seed)).unwrap();
            pruned_any |= d.kept.len() < 4;
        }
        assert!(pruned_any);
    }

    #[test]
    fn delta_one_never_anneals_before_the_end() {
        let cfg = InfoBatchConfig {
            prune_ratio: 0.5,
            delta: 1.0,
            total_epochs: 8,
        };
        assert_eq!(cfg.annealing_start(), 8);
        let losses = [0.0, 10.0];
        for epoch in 0..8 {
            let mut pruned_any = false;
            for seed in 0..64 {
                let d = infobatch_step(&losses, &cfg, epoch, &mut SeededRng::new(seed)).unwrap();
                pruned_any |= d.kept.len() < 2;
            }
            assert!(pruned_any, "epoch {epoch} should still prune");
        }
    }

    #[test]
    fn infobatch_rejects_bad_inputs() {
        let cfg = InfoBatchConfig {
            prune_ratio: 0.5,
            delta: 0.875,
            total_epochs: 4,
        };
        assert!(matches!(
            infobatch_step(&[], &cfg, 0, &mut SeededRng::new(0)),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            infobatch_step(&[1.0], &cfg, 4, &mut SeededRng::new(0)),
            Err(Error::InvalidInput(_))
        ));
        let bad = InfoBatchConfig {
            prune_ratio: 1.0,
            delta: 0.875,
            total_epochs: 4,
        };
        assert!(matches!(
            infobatch_step(&[1.0], &bad, 0, &mut SeededRng::new(0)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn rescaled_sum_is_unbiased() {
        // E[sum over kept of factor * g] should equal sum of g.
        let mut rng = SeededRng::new(99);
        let losses: Vec<f64> = (0..32).map(|_| rng.next_f64()).collect();
        let g: Vec<f64> = (0..32).map(|_| rng.next_f64() + 0.5).collect();
        let cfg = InfoBatchConfig {
            prune_ratio: 0.5,
            delta: 1.0,
            total_epochs: 2,
        };
        let full: f64 = g.iter().sum();
        let trials = 10_000u64;
        let mut acc = 0.0;
        for seed in 0..trials {
            let d = infobatch_step(&losses, &cfg, 0, &mut SeededRng::new(seed)).unwrap();
            acc += d
                .kept
                .iter()
                .zip(&d.factors)
                .map(|(&i, f)| f * g[i])
                .sum::<f64>();
        }
        let mean = acc / trials as f64;
        assert!(
            (mean - full).abs() / full < 0.02,
            "mean {mean} vs full {full}"
        );
    }

    #[test]
    fn run_selection_hand_trace() {
        let mut calls = Vec::new();
        let subset = run_selection(2, &cfg(2, 1, 0.5, 1), |phase| {
            calls.push(phase);
            Ok(match phase {
                LossPhase::Warmup => vec![1.0, 0.0],
                LossPhase::Epoch(0) => vec![0.9, 0.1],
                LossPhase::Epoch(_) => vec![0.8, 0.2],
            })
        })
        .unwrap();
        assert_eq!(subset.indices, vec![0]);
        assert_eq!(subset.merged_scores, vec![1.5, 0.0]);
        assert_eq!(
            calls,
            vec![LossPhase::Warmup, LossPhase::Epoch(0), LossPhase::Epoch(1)]
        );
    }

    #[test]
    fn identical_losses_select_leading_indices() {
        let subset = run_selection(5, &cfg(3, 2, 0.9, 2), |_| Ok(vec![0.4; 5])).unwrap();
        assert_eq!(subset.merged_scores, vec![0.0; 5]);
        assert_eq!(subset.indices, vec![0, 1]);
    }

    #[test]
    fn run_selection_rejects_wrong_length() {
        let r = run_selection(3, &cfg(1, 1, 1.0, 1), |_| Ok(vec![1.0, 2.0]));
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    /// Independent second transcription of the selection pseudocode, written
    /// with 1-based loops to mirror the published form.
    #[allow(clippy::manual_memcpy)]
    fn selection_oracle(
        warmup: &[f64],
        epoch_losses: &[Vec<f64>],
        k: usize,
        r: f64,
        n: usize,
    ) -> (Vec<usize>, Vec<f64>) {
        let big_n = warmup.len();
        let big_e = epoch_losses.len();
        let mut s = vec![1.0f64; big_n];
        let mut epochs_list: Vec<Vec<f64>> = Vec::new();
        for i in 1..=big_n {
            s[i - 1] = warmup[i - 1];
        }
        for e in 1..=big_e {
            let mut t = vec![0.0f64; big_n];
            let mu = s.iter().sum::<f64>() / big_n as f64;
            for i in 1..=big_n {
                let l = epoch_losses[e - 1][i - 1];
                s[i - 1] = l;
                if s[i - 1] > mu {
                    t[i - 1] += 1.0;
                }
            }
            epochs_list.push(t);
        }
        let mut m = vec![0.0f64; big_n];
        let big_g = big_e.div_ceil(k);
        for g in 1..=big_g {
            let w = r.powi(g as i32 - 1);
            let mut e = (g - 1) * k + 1;
            while e <= (g * k).min(big_e) {
                for i in 0..big_n {
                    m[i] += w * epochs_list[e - 1][i];
                }
                e += 1;
            }
        }
        let mut order: Vec<usize> = (0..big_n).collect();
        order.sort_by(|&a, &b| m[b].partial_cmp(&m[a]).unwrap().then(a.cmp(&b)));
        let mut chosen = order[..n].to_vec();
        chosen.sort_unstable();
        (chosen, m)
    }

    #[test]
    fn matches_independent_transcription_on_random_instances() {
        let mut rng = SeededRng::new(2024);
        for case in 0..50 {
            let n_samples = 2 + rng.below(19);
            let epochs = 1 + rng.below(6);
            let k = 1 + rng.below(4);
            let r = 0.2 + 0.8 * rng.next_f64();
            let n = 1 + rng.below(n_samples);
            let warmup: Vec<f64> = (0..n_samples).map(|_| rng.next_f64() * 3.0).collect();
            let losses: Vec<Vec<f64>> = (0..epochs)
                .map(|_| (0..n_samples).map(|_| rng.next_f64() * 3.0).collect())
                .collect();
            let got = run_selection(n_samples, &cfg(epochs, k, r, n), |phase| {
                Ok(match phase {
                    LossPhase::Warmup => warmup.clone(),
                    LossPhase::Epoch(e) => losses[e].clone(),
                })
            })
            .unwrap();
            let (want_idx, want_m) = selection_oracle(&warmup, &losses, k, r, n);
            assert_eq!(got.indices, want_idx, "case {case}");
            for (a, b) in got.merged_scores.iter().zip(&want_m) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn merged_scores_respect_group_weight_bound(
            seed in 0u64..400,
            epochs in 1usize..10,
            k in 1usize..4,
        ) {
            let mut rng = SeededRng::new(seed);
            let n = 4;
            let r = 0.618;
            let flags: Vec<Vec<u8>> = (0..epochs)
                .map(|_| (0..n).map(|_| u8::from(rng.next_f64() < 0.5)).collect())
                .collect();
            let board = ScoreBoard { scores: vec![0.0; n], epoch_flags: flags };
            let m = merge_epoch_flags(&board, &cfg(epochs, k, r, 1)).unwrap();
            let groups = epochs.div_ceil(k);
            let bound: f64 = (0..groups).map(|g| r.powi(g as i32) * k as f64).sum();
            for &x in &m {
                prop_assert!(x >= 0.0);
                prop_assert!(x <= bound + 1e-12);
            }
        }

        #[test]
        fn selection_depends_only_on_loss_ordering(shift in -5.0f64..5.0, seed in 0u64..200) {
            let mut rng = SeededRng::new(seed);
            let n = 8;
            let warmup: Vec<f64> = (0..n).map(|_| rng.next_f64() * 2.0).collect();
            let losses: Vec<Vec<f64>> =
                (0..4).map(|_| (0..n).map(|_| rng.next_f64() * 2.0).collect()).collect();
            let run = |c: f64| {
                run_selection(n, &cfg(4, 2, 0.618, 3), |phase| {
                    Ok(match phase {
                        LossPhase::Warmup => warmup.iter().map(|x| x + c).collect(),
                        LossPhase::Epoch(e) => losses[e].iter().map(|x| x + c).collect(),
                    })
                })
                .unwrap()
            };
            prop_assert_eq!(run(0.0).indices, run(shift).indices);
        }

        #[test]
        fn above_mean_samples_are_never_pruned(seed in 0u64..500) {
            let mut rng = SeededRng::new(seed);
            let losses: Vec<f64> = (0..16).map(|_| rng.next_f64()).collect();
            let mean = losses.iter().sum::<f64>() / 16.0;
            let cfg = InfoBatchConfig { prune_ratio: 0.7, delta: 1.0, total_epochs: 3 };
            let d = infobatch_step(&losses, &cfg, 0, &mut SeededRng::new(seed * 31 + 7)).unwrap();
            for (i, &l) in losses.iter().enumerate() {
                if l >= mean {
                    prop_assert_eq!(d.factor_of(i), Some(1.0));
                } else if let Some(f) = d.factor_of(i) {
                    prop_assert!((f - 1.0 / 0.3).abs() < 1e-12);
                }
            }
        }
    }
}
