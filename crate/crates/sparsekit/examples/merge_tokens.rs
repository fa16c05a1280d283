//! Attention-guided token merging: a handful of salient tokens absorb the
//! rest of the grid.
//!
//! ```bash
//! cargo run --example merge_tokens
//! ```

use sparsekit::masking::{Modality, TokenSet};
use sparsekit::merging::{importance_scores, sparse_merge, AttentionInputs};
use sparsekit::numeric::{Matrix, SeededRng};

fn main() -> sparsekit::Result<()> {
    let dim = 4;
    let n = 12;
    let mut rng = SeededRng::new(9);

    // Background tokens are small random vectors; tokens 3 and 8 are set up
    // to dominate the query's attention.
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| 0.2 * (rng.next_f64() - 0.5)).collect())
        .collect();
    rows[3] = vec![3.0, 0.0, 0.0, 0.0];
    rows[8] = vec![0.0, 3.0, 0.0, 0.0];

    let keys = Matrix::from_rows(&rows)?;
    let query = Matrix::new(2, dim, vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0])?;
    let inputs = AttentionInputs::new(query, keys.clone(), keys)?;
    let tokens = TokenSet::from_tokens(Modality::Visual, dim, rows)?;

    let scores = importance_scores(&inputs)?;
    println!("importance per token:");
    for (i, s) in scores.scores.iter().enumerate() {
        println!("  token {i:>2}: {s:.4}");
    }

    let result = sparse_merge(&tokens, &inputs)?;
    println!("\nkey tokens: {:?}", result.key_indices);
    println!("compression ratio: {:.3}", result.compression_ratio);
    println!("cluster assignment (token -> key):");
    for (t, k) in &result.assignment {
        println!("  {t:>2} -> {k}");
    }
    println!(
        "\nmerged token set holds {} tokens with origin ids {:?}",
        result.merged.len(),
        result.merged.origin_ids
    );
    Ok(())
}
