//! Key-subset selection from a loss history: samples that stay above the
//! mean loss epoch after epoch accumulate the highest aggregated scores.
//!
//! ```bash
//! cargo run --example select_subset
//! ```

use sparsekit::io::{parse_loss_log, render_loss_log, LossLog};
use sparsekit::numeric::SeededRng;
use sparsekit::subset::{run_selection, LossPhase, SelectionConfig};

fn main() -> sparsekit::Result<()> {
    let n = 16;
    let epochs = 6;
    let mut rng = SeededRng::new(123);

    // Synthesize a history: samples 2, 5, 11 stay hard (loss ~2), the rest
    // decay toward zero as "training" progresses.
    let hard = [2usize, 5, 11];
    let loss_at = |sample: usize, epoch: usize, rng: &mut SeededRng| -> f64 {
        let noise = 0.05 * rng.next_f64();
        if hard.contains(&sample) {
            2.0 + noise
        } else {
            (1.0 - epoch as f64 / epochs as f64).max(0.1) * 0.8 + noise
        }
    };
    let warmup: Vec<f64> = (0..n).map(|i| loss_at(i, 0, &mut rng)).collect();
    let per_epoch: Vec<Vec<f64>> = (0..epochs)
        .map(|e| (0..n).map(|i| loss_at(i, e + 1, &mut rng)).collect())
        .collect();

    // The same history rendered as the JSON Lines log format the CLI reads.
    let log = LossLog {
        warmup: warmup.clone(),
        epochs: per_epoch.clone(),
    };
    let rendered = render_loss_log(&log);
    println!(
        "loss log ({} lines):\n{}",
        rendered.lines().count(),
        &rendered[..rendered.find('\n').unwrap() + 1]
    );
    assert_eq!(parse_loss_log(&rendered)?, log);

    let cfg = SelectionConfig {
        epochs,
        group_size: 3,
        decay_ratio: 0.618,
        subset_size: 4,
    };
    let subset = run_selection(n, &cfg, |phase| {
        Ok(match phase {
            LossPhase::Warmup => warmup.clone(),
            LossPhase::Epoch(e) => per_epoch[e].clone(),
        })
    })?;

    println!("aggregated scores:");
    for (i, m) in subset.merged_scores.iter().enumerate() {
        let tag = if hard.contains(&i) {
            "  <- planted hard"
        } else {
            ""
        };
        println!("  sample {i:>2}: {m:.3}{tag}");
    }
    println!("\nselected subset: {:?}", subset.indices);
    Ok(())
}
