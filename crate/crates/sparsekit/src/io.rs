//! File formats and disk I/O.
//!
//! JSON throughout, with one JSON Lines format for loss logs. Parse failures
//! and validation failures are kept distinct: the former exit the CLI with
//! code 2, the latter with 3.
//!
//! Formats:
//!
//! * Token sets: `{"modality": "visual"|"audio", "dim": d,
//!   "origin_ids": [...], "tokens": [[...], ...]}`
//! * Attention inputs: `{"q": {"rows", "cols", "values"}, "k": ..., "v": ...}`
//!   with row-major `values`.
//! * Loss logs (JSON Lines): one `{"epoch": e, "losses": [...]}` record per
//!   line; `"epoch": -1` is the warm-up record, then epochs `0..E-1`.
//! * Key subsets: `{"indices": [...], "merged_scores": [...], "config": {...}}`.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::masking::TokenSet;
use crate::merging::AttentionInputs;
use crate::subset::{KeySubset, SelectionConfig};

pub fn read_token_set(path: &Path) -> Result<TokenSet> {
    let text = fs::read_to_string(path)?;
    let ts: TokenSet = serde_json::from_str(&text)?;
    ts.validate()?;
    Ok(ts)
}

pub fn read_attention_inputs(path: &Path) -> Result<AttentionInputs> {
    let text = fs::read_to_string(path)?;
    let inp: AttentionInputs = serde_json::from_str(&text)?;
    inp.validate()?;
    Ok(inp)
}

/// Writes any serializable value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// One epoch record of a loss log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    /// -1 for warm-up, otherwise the 0-based epoch.
    pub epoch: i64,
    pub losses: Vec<f64>,
}

/// Parsed loss log: warm-up plus one loss vector per epoch, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct LossLog {
    pub warmup: Vec<f64>,
    pub epochs: Vec<Vec<f64>>,
}

impl LossLog {
    pub fn n_samples(&self) -> usize {
        self.warmup.len()
    }
}

/// Parses a JSON Lines loss log. Requires exactly one warm-up record and a
/// contiguous epoch sequence `0..E-1` (any line order), all with matching
/// lengths.
pub fn parse_loss_log(text: &str) -> Result<LossLog> {
    let mut warmup: Option<Vec<f64>> = None;
    let mut epochs: Vec<(i64, Vec<f64>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: LossRecord = serde_json::from_str(line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        if record.epoch < -1 {
            return Err(Error::invalid(format!(
                "line {}: epoch {} out of range",
                lineno + 1,
                record.epoch
            )));
        }
        if record.epoch == -1 {
            if warmup.replace(record.losses).is_some() {
                return Err(Error::invalid("duplicate warm-up record"));
            }
        } else {
            epochs.push((record.epoch, record.losses));
        }
    }
    let warmup = warmup.ok_or_else(|| Error::invalid("missing warm-up record (epoch -1)"))?;
    epochs.sort_by_key(|(e, _)| *e);
    for (want, (got, _)) in epochs.iter().enumerate() {
        if *got != want as i64 {
            return Err(Error::invalid(format!(
                "expected epoch {want}, found {got}"
            )));
        }
    }
    let n = warmup.len();
    if epochs.iter().any(|(_, l)| l.len() != n) {
        return Err(Error::shape("loss vectors have inconsistent lengths"));
    }
    Ok(LossLog {
        warmup,
        epochs: epochs.into_iter().map(|(_, l)| l).collect(),
    })
}

pub fn read_loss_log(path: &Path) -> Result<LossLog> {
    parse_loss_log(&fs::read_to_string(path)?)
}

/// Renders a loss log in the JSON Lines format.
pub fn render_loss_log(log: &LossLog) -> String {
    let mut out = String::new();
    let mut push = |epoch: i64, losses: &[f64]| {
        let record = LossRecord {
            epoch,
            losses: losses.to_vec(),
        };
        out.push_str(&serde_json::to_string(&record).expect("loss record serializes"));
        out.push('\n');
    };
    push(-1, &log.warmup);
    for (e, losses) in log.epochs.iter().enumerate() {
        push(e as i64, losses);
    }
    out
}

/// On-disk shape of a selected key subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeySubsetFile {
    pub indices: Vec<usize>,
    pub merged_scores: Vec<f64>,
    pub config: SelectionConfig,
}

impl KeySubsetFile {
    pub fn new(subset: KeySubset, config: SelectionConfig) -> Self {
        KeySubsetFile {
            indices: subset.indices,
            merged_scores: subset.merged_scores,
            config,
        }
    }
}
