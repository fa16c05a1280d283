//! Random token masking on a 14x14 patch grid with an early-epoch schedule.
//!
//! ```bash
//! cargo run --example mask_tokens
//! ```

use sparsekit::masking::{apply_mask, mask_active, plan_mask, MaskSchedule, Modality, TokenSet};
use sparsekit::numeric::mix_seed;

fn main() -> sparsekit::Result<()> {
    // A 14x14 grid of 8-dimensional patch tokens, like a low-res image.
    let dim = 8;
    let tokens: Vec<Vec<f64>> = (0..196)
        .map(|i| {
            (0..dim)
                .map(|d| ((i * dim + d) as f64 * 0.37).sin())
                .collect()
        })
        .collect();
    let grid = TokenSet::from_tokens(Modality::Visual, dim, tokens)?;

    let schedule = MaskSchedule { active_epochs: 3 };
    let base_seed = 42;

    println!("epoch  active  kept  dropped");
    for epoch in 0..6 {
        if mask_active(epoch, &schedule) {
            // One independent plan per (epoch, modality); audio grids would
            // use modality tag 1 with the same ratio.
            let seed = mix_seed(base_seed, &[epoch as u64, 0]);
            let plan = plan_mask(grid.len(), 0.5, seed)?;
            let kept = apply_mask(&grid, &plan)?;
            println!(
                "{epoch:>5}  {:>6}  {:>4}  {:>7}",
                "yes",
                kept.len(),
                plan.masked.len()
            );
        } else {
            println!("{epoch:>5}  {:>6}  {:>4}  {:>7}", "no", grid.len(), 0);
        }
    }

    // The same seed always reproduces the same plan.
    let again = plan_mask(grid.len(), 0.5, mix_seed(base_seed, &[0, 0]))?;
    let first = plan_mask(grid.len(), 0.5, mix_seed(base_seed, &[0, 0]))?;
    assert_eq!(again, first);
    println!(
        "\nplans are reproducible per seed; first five masked indices: {:?}",
        &first.masked[..5]
    );
    Ok(())
}
