//! Independent oracles for the integration suites.
//!
//! Everything here is written from first principles and shares no code with
//! the library paths it checks: a second transcription of the key-subset
//! selection loop, and a naive end-to-end reimplementation of the merge
//! pipeline (attention, quartile selection, clustering, weighted sums).

use std::collections::BTreeMap;

/// Line-by-line second transcription of the selection procedure, kept in
/// 1-based loops to mirror the published pseudocode shape. Returns the
/// selected indices (sorted ascending) and the aggregated score vector.
pub fn selection_oracle(
    warmup: &[f64],
    epoch_losses: &[Vec<f64>],
    group_size: usize,
    decay_ratio: f64,
    subset_size: usize,
) -> (Vec<usize>, Vec<f64>) {
    let n = warmup.len();
    let e_total = epoch_losses.len();
    let mut s = vec![1.0f64; n];
    let mut epochs_list: Vec<Vec<f64>> = Vec::new();
    for i in 1..=n {
        let l = warmup[i - 1];
        s[i - 1] = l;
    }
    for e in 1..=e_total {
        let mut t = vec![0.0f64; n];
        let mu = s.iter().sum::<f64>() / n as f64;
        for i in 1..=n {
            let l = epoch_losses[e - 1][i - 1];
            s[i - 1] = l;
            if s[i - 1] > mu {
                t[i - 1] += 1.0;
            }
        }
        epochs_list.push(t);
    }
    let mut m = vec![0.0f64; n];
    let groups = e_total.div_ceil(group_size);
    for g in 1..=groups {
        let w = decay_ratio.powi(g as i32 - 1);
        let mut e = (g - 1) * group_size + 1;
        while e <= (g * group_size).min(e_total) {
            for i in 0..n {
                m[i] += w * epochs_list[e - 1][i];
            }
            e += 1;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[b].partial_cmp(&m[a]).unwrap().then(a.cmp(&b)));
    let mut chosen = order[..subset_size].to_vec();
    chosen.sort_unstable();
    (chosen, m)
}

fn naive_softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Quantile by the position formula `p * (n - 1)` on a sorted copy.
fn naive_quantile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub struct MergeOracle {
    pub key_indices: Vec<usize>,
    pub assignment: BTreeMap<usize, usize>,
    pub merged_tokens: Vec<Vec<f64>>,
    pub compression_ratio: f64,
}

/// Brute-force reimplementation of the whole merge pipeline. `q` has one
/// row per query; `keys` doubles as the similarity geometry; `tokens` are
/// the embeddings to merge.
pub fn merge_oracle(tokens: &[Vec<f64>], q: &[Vec<f64>], keys: &[Vec<f64>]) -> MergeOracle {
    let n = keys.len();
    let d = q[0].len();

    // Importance: mean over query rows of the attention probabilities.
    let mut scores = vec![0.0f64; n];
    for qrow in q {
        let logits: Vec<f64> = keys
            .iter()
            .map(|krow| {
                let s: f64 = qrow.iter().zip(krow).map(|(a, b)| a * b).sum();
                s / (d as f64).sqrt()
            })
            .collect();
        let probs = naive_softmax(&logits);
        for (acc, p) in scores.iter_mut().zip(&probs) {
            *acc += p / q.len() as f64;
        }
    }

    // Outlier rule with top-quartile fallback.
    let q1 = naive_quantile(&scores, 0.25);
    let q3 = naive_quantile(&scores, 0.75);
    let threshold = q3 + 1.5 * (q3 - q1);
    let mut key_indices: Vec<usize> = (0..n).filter(|&i| scores[i] > threshold).collect();
    if key_indices.is_empty() {
        let take = n.div_ceil(4);
        let mut pairs: Vec<(f64, usize)> = scores.iter().map(|&s| -s).zip(0..).collect();
        pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        key_indices = pairs[..take].iter().map(|&(_, i)| i).collect();
        key_indices.sort_unstable();
    }

    // Exhaustive nearest-key assignment, ties to the lowest key index.
    let sim =
        |a: usize, b: usize| -> f64 { keys[a].iter().zip(&keys[b]).map(|(x, y)| x * y).sum() };
    let mut assignment = BTreeMap::new();
    for t in 0..n {
        if key_indices.contains(&t) {
            continue;
        }
        let mut best = key_indices[0];
        let mut best_sim = f64::NEG_INFINITY;
        for &k in &key_indices {
            let s = sim(t, k);
            if s > best_sim {
                best_sim = s;
                best = k;
            }
        }
        assignment.insert(t, best);
    }

    // Explicit softmax-weighted sum per cluster, members ascending.
    let dim = tokens[0].len();
    let mut merged_tokens = Vec::with_capacity(key_indices.len());
    for &k in &key_indices {
        let mut members: Vec<usize> = vec![k];
        members.extend(assignment.iter().filter(|(_, &v)| v == k).map(|(&t, _)| t));
        members.sort_unstable();
        let sims: Vec<f64> = members.iter().map(|&t| sim(t, k)).collect();
        let weights = naive_softmax(&sims);
        let mut out = vec![0.0; dim];
        for (&t, &w) in members.iter().zip(&weights) {
            for (o, x) in out.iter_mut().zip(&tokens[t]) {
                *o += w * x;
            }
        }
        merged_tokens.push(out);
    }
    MergeOracle {
        compression_ratio: key_indices.len() as f64 / n as f64,
        key_indices,
        assignment,
        merged_tokens,
    }
}
