//! End-to-end simulation: dense baseline vs the fully sparse pipeline, plus
//! key-subset selection and a retention run on the selected quarter.
//!
//! ```bash
//! cargo run --example simulate_training
//! ```

use sparsekit::cli::proxy_reduction;
use sparsekit::config::Config;
use sparsekit::sim::{generate_dataset, run_retention_experiment, select_by_training, train};

fn main() -> sparsekit::Result<()> {
    // Default configuration, shrunk a little so a debug build stays snappy.
    let mut config = Config::default();
    config.dataset.n_samples = 256;
    config.epochs = 15;

    let ds = generate_dataset(&config.dataset_spec())?;
    println!(
        "dataset: {} samples, {} planted hard, {} tokens x dim {}",
        ds.len(),
        ds.hard_indices().len(),
        config.dataset.tokens_per_sample,
        config.dataset.dim
    );

    let dense = train(&ds, &config.dense_pipeline(), config.epochs, config.seed)?;
    let sparse = train(&ds, &config.sparse_pipeline(), config.epochs, config.seed)?;
    println!(
        "\ndense : proxy {:>9}  accuracy {:.4}",
        dense.compute_proxy, dense.final_accuracy
    );
    println!(
        "sparse: proxy {:>9}  accuracy {:.4}  -> {:.1}% fewer gradient tokens",
        sparse.compute_proxy,
        sparse.final_accuracy,
        100.0 * proxy_reduction(&dense, &sparse)
    );

    let subset = select_by_training(
        &ds,
        &config.selection_config(),
        &config.selection_infobatch(),
        config.learning_rate,
        config.seed,
    )?;
    println!(
        "\nselected {} of {} samples",
        subset.indices.len(),
        ds.len()
    );

    let retention = run_retention_experiment(
        &ds,
        &subset.indices,
        config.epochs,
        config.seed,
        config.learning_rate,
    )?;
    println!(
        "subset-trained accuracy {:.4} vs full-data {:.4} (retention {:.3}, hard recall {:.3})",
        retention.final_accuracy,
        retention.baseline_final_accuracy.unwrap(),
        retention.retention_ratio.unwrap(),
        retention.planted_hard_recall.unwrap(),
    );
    Ok(())
}
