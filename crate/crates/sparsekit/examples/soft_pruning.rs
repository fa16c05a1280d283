//! Soft pruning with gradient rescaling: below-mean-loss samples are dropped
//! at random each step, survivors compensate with larger gradient weights,
//! and the expected update stays unchanged.
//!
//! ```bash
//! cargo run --example soft_pruning
//! ```

use sparsekit::numeric::SeededRng;
use sparsekit::subset::{infobatch_step, InfoBatchConfig};

fn main() -> sparsekit::Result<()> {
    let cfg = InfoBatchConfig {
        prune_ratio: 0.5,
        delta: 0.875,
        total_epochs: 16,
    };
    let mut rng = SeededRng::new(5);
    let losses: Vec<f64> = (0..12).map(|_| rng.next_f64() * 2.0).collect();
    let mean = losses.iter().sum::<f64>() / losses.len() as f64;

    println!("losses (mean {mean:.3}):");
    for (i, l) in losses.iter().enumerate() {
        println!(
            "  sample {i:>2}: {l:.3} {}",
            if *l < mean { "(prunable)" } else { "" }
        );
    }

    println!("\nper-epoch decisions (x = pruned, factor otherwise):");
    for epoch in [0usize, 6, 13, 14, 15] {
        let d = infobatch_step(&losses, &cfg, epoch, &mut SeededRng::new(epoch as u64))?;
        let marks: Vec<String> = (0..losses.len())
            .map(|i| d.factor_of(i).map_or("  x".into(), |f| format!("{f:>3.0}")))
            .collect();
        let note = if epoch >= cfg.annealing_start() {
            " (annealed: keep all)"
        } else {
            ""
        };
        println!("  epoch {epoch:>2}: [{}]{note}", marks.join(" "));
    }

    // Unbiasedness: averaged over many seeds, the rescaled sum of any
    // per-sample quantity matches the full sum.
    let g: Vec<f64> = (0..losses.len()).map(|i| 1.0 + i as f64).collect();
    let full: f64 = g.iter().sum();
    let trials = 20_000;
    let mut acc = 0.0;
    for seed in 0..trials {
        let d = infobatch_step(&losses, &cfg, 1, &mut SeededRng::new(seed))?;
        acc += d
            .kept
            .iter()
            .zip(&d.factors)
            .map(|(&i, f)| f * g[i])
            .sum::<f64>();
    }
    let mean_rescaled = acc / trials as f64;
    println!(
        "\nrescaled sum over {trials} seeds: {mean_rescaled:.3} vs full sum {full:.3} \
         ({:+.3}% relative error)",
        100.0 * (mean_rescaled - full) / full
    );
    Ok(())
}
