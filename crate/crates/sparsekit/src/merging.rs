//! Adaptive token merging guided by attention scores.
//!
//! Pipeline: score each candidate token by how much attention the queries
//! pay it, pick "key" tokens whose scores are interquartile-range outliers
//! (falling back to the top quartile when the distribution has none), assign
//! every remaining token to its most similar key, and collapse each cluster
//! into one embedding by a softmax-weighted sum.
//!
//! Similarity between tokens is the dot product of their key vectors, so the
//! key matrix is the only geometry the clustering ever sees. Merging runs
//! per modality; callers concatenate the merged outputs afterwards.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::masking::TokenSet;
use crate::numeric::{argsort_desc, quartiles, scaled_dot_attention, softmax, Matrix};

/// Query/key/value blocks entering attention. `q` holds the probing tokens
/// (question or cross-modal context), `k`/`v` describe the candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionInputs {
    pub q: Matrix,
    pub k: Matrix,
    pub v: Matrix,
}

impl AttentionInputs {
    pub fn new(q: Matrix, k: Matrix, v: Matrix) -> Result<Self> {
        let inp = AttentionInputs { q, k, v };
        inp.validate()?;
        Ok(inp)
    }

    pub fn validate(&self) -> Result<()> {
        self.q.validate()?;
        self.k.validate()?;
        self.v.validate()?;
        if self.q.cols != self.k.cols {
            return Err(Error::shape(format!(
                "query dim {} must match key dim {}",
                self.q.cols, self.k.cols
            )));
        }
        if self.k.rows != self.v.rows {
            return Err(Error::shape(format!(
                "key rows {} must match value rows {}",
                self.k.rows, self.v.rows
            )));
        }
        if self.q.rows == 0 || self.k.rows == 0 {
            return Err(Error::invalid(
                "attention inputs need at least one query and one key",
            ));
        }
        Ok(())
    }

    /// Number of candidate tokens.
    pub fn n_candidates(&self) -> usize {
        self.k.rows
    }
}

/// One scalar importance per candidate token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceScores {
    pub scores: Vec<f64>,
}

impl ImportanceScores {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::invalid("importance scores must be non-empty"));
        }
        if scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::invalid(
                "importance scores must be finite and nonnegative",
            ));
        }
        Ok(ImportanceScores { scores })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Output of the full merge pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeResult {
    /// Retained token indices, sorted ascending.
    pub key_indices: Vec<usize>,
    /// Non-key index -> key index it was absorbed into.
    pub assignment: BTreeMap<usize, usize>,
    /// One merged token per key, in `key_indices` order.
    pub merged: TokenSet,
    /// `|key_indices| / n`; 1.0 means nothing was merged away.
    pub compression_ratio: f64,
}

/// Mean attention probability each candidate token receives across query
/// rows. The probability matrix (not its value-weighted product) is what
/// reduces to one scalar per token; scores are nonnegative and sum to 1.
pub fn importance_scores(inp: &AttentionInputs) -> Result<ImportanceScores> {
    inp.validate()?;
    let (probs, _context) = scaled_dot_attention(&inp.q, &inp.k, &inp.v)?;
    let n = probs.cols;
    let m = probs.rows as f64;
    let mut scores = vec![0.0; n];
    for row in probs.rows_iter() {
        for (j, p) in row.iter().enumerate() {
            scores[j] += p / m;
        }
    }
    ImportanceScores::new(scores)
}

/// Selects key tokens: indices whose score exceeds the outlier threshold
/// `q3 + 1.5 * (q3 - q1)`. When no score does, falls back to the top
/// `ceil(n / 4)` by descending score. Never empty; sorted ascending.
///
/// Both rules are positively homogeneous, so rescaling all scores by a
/// positive constant leaves the selection unchanged.
pub fn select_key_tokens(s: &ImportanceScores) -> Vec<usize> {
    let n = s.len();
    let (q1, _q2, q3) = quartiles(&s.scores).expect("scores are non-empty and finite");
    let threshold = q3 + 1.5 * (q3 - q1);
    let mut keys: Vec<usize> = (0..n).filter(|&i| s.scores[i] > threshold).collect();
    if keys.is_empty() {
        let take = n.div_ceil(4);
        let order = argsort_desc(&s.scores).expect("scores are finite");
        keys = order[..take].to_vec();
        keys.sort_unstable();
    }
    keys
}

/// Dot product of key rows `i` and `j`.
pub fn token_similarity(k: &Matrix, i: usize, j: usize) -> Result<f64> {
    if i >= k.rows || j >= k.rows {
        return Err(Error::invalid(format!(
            "similarity indices ({i}, {j}) out of range for {} keys",
            k.rows
        )));
    }
    Ok(crate::numeric::dot(k.row(i), k.row(j)))
}

/// Maps every non-key token to the key token it is most similar to.
/// Ties go to the lowest key index.
pub fn assign_clusters(k: &Matrix, key_indices: &[usize]) -> Result<BTreeMap<usize, usize>> {
    if key_indices.is_empty() {
        return Err(Error::invalid(
            "cluster assignment requires at least one key token",
        ));
    }
    if key_indices.iter().any(|&i| i >= k.rows) {
        return Err(Error::invalid("key index out of range"));
    }
    let key_set: BTreeMap<usize, ()> = key_indices.iter().map(|&i| (i, ())).collect();
    let mut assignment = BTreeMap::new();
    for t in 0..k.rows {
        if key_set.contains_key(&t) {
            continue;
        }
        let mut best_key = key_indices[0];
        let mut best_sim = f64::NEG_INFINITY;
        for &key in key_indices {
            let sim = token_similarity(k, t, key)?;
            if sim > best_sim {
                best_sim = sim;
                best_key = key;
            }
        }
        assignment.insert(t, best_key);
    }
    Ok(assignment)
}

/// Collapses each cluster into one embedding.
///
/// For key `kk` with cluster {kk} union assigned non-keys, the merged
/// embedding is the convex combination of member embeddings under softmax
/// of their key-space similarity to `kk` (the key contributes its
/// self-similarity). Output follows `key_indices` order and inherits the
/// keys' origin ids.
pub fn merge_tokens(
    ts: &TokenSet,
    k: &Matrix,
    key_indices: &[usize],
    assignment: &BTreeMap<usize, usize>,
) -> Result<TokenSet> {
    ts.validate()?;
    if k.rows != ts.len() {
        return Err(Error::shape(format!(
            "{} key rows for {} tokens",
            k.rows,
            ts.len()
        )));
    }
    if key_indices.is_empty() {
        return Err(Error::invalid("merge requires at least one key token"));
    }
    if key_indices.iter().any(|&i| i >= ts.len()) {
        return Err(Error::invalid("key index out of range"));
    }
    let key_set: std::collections::BTreeSet<usize> = key_indices.iter().copied().collect();
    // The assignment must cover exactly the non-key indices.
    for (&t, &key) in assignment {
        if key_set.contains(&t) {
            return Err(Error::invalid(format!(
                "key token {t} appears as a cluster member"
            )));
        }
        if t >= ts.len() {
            return Err(Error::invalid(format!("assigned index {t} out of range")));
        }
        if !key_set.contains(&key) {
            return Err(Error::invalid(format!(
                "assignment target {key} is not a key token"
            )));
        }
    }
    if assignment.len() != ts.len() - key_set.len() {
        return Err(Error::invalid(format!(
            "assignment covers {} tokens, expected {}",
            assignment.len(),
            ts.len() - key_set.len()
        )));
    }

    let mut origin_ids = Vec::with_capacity(key_indices.len());
    let mut tokens = Vec::with_capacity(key_indices.len());
    for &key in key_indices {
        let mut members: Vec<usize> = vec![key];
        members.extend(
            assignment
                .iter()
                .filter(|(_, &v)| v == key)
                .map(|(&t, _)| t),
        );
        members.sort_unstable();
        let sims: Vec<f64> = members
            .iter()
            .map(|&t| token_similarity(k, t, key))
            .collect::<Result<_>>()?;
        let weights = softmax(&sims)?;
        let mut merged = vec![0.0; ts.dim];
        for (&t, &w) in members.iter().zip(&weights) {
            for (acc, x) in merged.iter_mut().zip(&ts.tokens[t]) {
                *acc += w * x;
            }
        }
        origin_ids.push(ts.origin_ids[key]);
        tokens.push(merged);
    }
    TokenSet::new(ts.modality, ts.dim, origin_ids, tokens)
}

/// Full merge pipeline: score, select keys, cluster, merge.
pub fn sparse_merge(ts: &TokenSet, inp: &AttentionInputs) -> Result<MergeResult> {
    ts.validate()?;
    inp.validate()?;
    if inp.n_candidates() != ts.len() {
        return Err(Error::shape(format!(
            "attention describes {} candidates but token set has {}",
            inp.n_candidates(),
            ts.len()
        )));
    }
    let scores = importance_scores(inp)?;
    let key_indices = select_key_tokens(&scores);
    let assignment = assign_clusters(&inp.k, &key_indices)?;
    let merged = merge_tokens(ts, &inp.k, &key_indices, &assignment)?;
    let compression_ratio = key_indices.len() as f64 / ts.len() as f64;
    Ok(MergeResult {
        key_indices,
        assignment,
        merged,
        compression_ratio,
    })
}
