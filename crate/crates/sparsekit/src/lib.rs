//! # sparsekit
//!
//! A sparse-training toolkit built around three ways of spending less
//! compute on redundant data, plus a synthetic simulator that measures what
//! they buy:
//!
//! * [`masking`] - drop a random fraction of patch tokens during the early
//!   epochs of training (visual patches and spectrogram patches alike).
//! * [`merging`] - score tokens by the attention they receive, keep the
//!   interquartile-range outliers as key tokens, and absorb the rest into
//!   their most similar key.
//! * [`subset`] - track which samples stay hard across epochs, aggregate the
//!   evidence with geometrically decaying weights, and keep the top slice;
//!   plus soft pruning that drops easy samples per step and rescales the
//!   survivors' gradients so the expected update is unchanged.
//! * [`sim`] - a desk-scale workload (synthetic tokens, linear probe) that
//!   runs the stages end to end with exact compute accounting.
//!
//! Shared numeric primitives (softmax, attention, quantiles, seeded
//! sampling) live in [`numeric`]; every stochastic operation takes an
//! explicit seed and reproduces bit-identically.
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --example mask_tokens
//! cargo run --example merge_tokens
//! cargo run --example select_subset
//! cargo run --example soft_pruning
//! cargo run --example simulate_training
//! ```
//!
//! The same functionality is reachable from the `sparsekit` binary
//! (`mask | merge | select | simulate`); see the README for file formats.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod masking;
pub mod merging;
pub mod numeric;
pub mod sim;
pub mod subset;

pub use error::{Error, Result};
