//! Deterministic numeric primitives shared by every other module.
//!
//! Everything here is a pure function of its inputs: softmax, scaled-dot
//! attention, quantiles, stable argsort, and seeded sampling. All floating
//! point is `f64`. Inputs must be finite; each entry point checks and
//! returns [`Error::InvalidInput`] otherwise.
//!
//! Randomness flows through [`SeededRng`], a thin wrapper over ChaCha8.
//! The stream a given seed produces is identical on every platform, which
//! is what makes masking plans and pruning decisions reproducible.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of finite `f64` values.
///
/// Used to hold the query/key/value blocks consumed by attention scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major storage; `values[r * cols + c]` is entry `(r, c)`.
    pub values: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        let m = Matrix { rows, cols, values };
        m.validate()?;
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("matrix rows have unequal lengths"));
        }
        Matrix::new(n, cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows * self.cols != self.values.len() {
            return Err(Error::shape(format!(
                "matrix {}x{} does not match {} values",
                self.rows,
                self.cols,
                self.values.len()
            )));
        }
        ensure_finite(&self.values)?;
        Ok(())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols.max(1))
    }

    /// `self * other`; errors when the inner dimensions disagree.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.values[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// `self * other^T`, the score block of attention.
    pub fn matmul_transposed(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by transpose of {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                out.values[i * other.rows + j] = dot(self.row(i), other.row(j));
            }
        }
        Ok(out)
    }
}

fn ensure_finite(values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite entry {v}")));
    }
    Ok(())
}

fn ensure_finite_nonempty(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(format!("{what} must be non-empty")));
    }
    ensure_finite(values)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stabilized softmax: subtracts the max before exponentiating,
/// so the output is a probability vector for any finite input.
pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    ensure_finite_nonempty(v, "softmax input")?;
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Scaled dot-product attention over full matrices.
///
/// Returns `(probs, context)` where `probs` is the row-wise softmax of
/// `Q K^T / sqrt(d)` (shape `Q.rows x K.rows`) and `context = probs * V`.
pub fn scaled_dot_attention(q: &Matrix, k: &Matrix, v: &Matrix) -> Result<(Matrix, Matrix)> {
    q.validate()?;
    k.validate()?;
    v.validate()?;
    if q.cols != k.cols {
        return Err(Error::shape(format!(
            "query dim {} must match key dim {}",
            q.cols, k.cols
        )));
    }
    if k.rows != v.rows {
        return Err(Error::shape(format!(
            "key rows {} must match value rows {}",
            k.rows, v.rows
        )));
    }
    if q.rows == 0 || k.rows == 0 {
        return Err(Error::invalid(
            "attention requires at least one query and one key",
        ));
    }
    let scale = 1.0 / (q.cols as f64).sqrt();
    let mut scores = q.matmul_transposed(k)?;
    for s in &mut scores.values {
        *s *= scale;
    }
    let mut probs = Matrix::zeros(scores.rows, scores.cols);
    for r in 0..scores.rows {
        let row = softmax(scores.row(r))?;
        probs.values[r * scores.cols..(r + 1) * scores.cols].copy_from_slice(&row);
    }
    let context = probs.matmul(v)?;
    Ok((probs, context))
}

/// First, second, and third quartiles of `v`.
///
/// Convention: quantile at probability `p` sits at position `p * (n - 1)`
/// of the sorted copy, linearly interpolated between the two closest ranks.
/// Every interquartile-range decision downstream depends on this single
/// choice, so it is fixed here and nowhere else.
pub fn quartiles(v: &[f64]) -> Result<(f64, f64, f64)> {
    ensure_finite_nonempty(v, "quartiles input")?;
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    let at = |p: f64| -> f64 {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    };
    Ok((at(0.25), at(0.5), at(0.75)))
}

/// Indices of `v` in stable descending order of value.
///
/// Ties break by ascending original index, which makes every consumer
/// (top-k selection, key-token fallback) deterministic.
pub fn argsort_desc(v: &[f64]) -> Result<Vec<usize>> {
    ensure_finite(v)?;
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| {
        v[b].partial_cmp(&v[a])
            .expect("finite values compare")
            .then(a.cmp(&b))
    });
    Ok(idx)
}

/// Seeded, platform-independent random source (ChaCha8).
///
/// The same seed always yields the same stream, independent of platform
/// and build. Operations that need randomness either take a `&mut SeededRng`
/// or a bare `u64` seed; there is no global RNG state anywhere in the crate.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The seed this generator was constructed with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw from `[0, 1)`. Consumes exactly one 64-bit word of the
    /// stream; pruning decisions rely on that for replayability.
    pub fn next_f64(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform draw from `[0, bound)`.
    pub fn below(&mut self, bound: usize) -> usize {
        self.inner.gen_range(0..bound)
    }

    /// Bernoulli draw; consumes one `next_f64`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// Derives an independent stream seed from a base seed and a path of tags
/// (splitmix64 mixing). Lets one experiment seed fan out into per-sample,
/// per-epoch, per-modality streams without correlation.
pub fn mix_seed(base: u64, tags: &[u64]) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    tags.iter()
        .fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// Exactly `k` distinct indices drawn uniformly from `[0, n)`, sorted
/// ascending. Partial Fisher-Yates; reproducible for identical `(n, k, seed)`.
pub fn sample_without_replacement(n: usize, k: usize, rng: &mut SeededRng) -> Result<Vec<usize>> {
    if k > n {
        return Err(Error::invalid(format!(
            "cannot draw {k} distinct indices from {n}"
        )));
    }
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.below(n - i);
        pool.swap(i, j);
    }
    let mut chosen = pool[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}
