//! Implementations behind the `sparsekit` binary's subcommands.
//!
//! Each command reads its inputs, runs the corresponding library routine,
//! and writes JSON outputs. Everything is deterministic given the same
//! inputs and seeds, so rerunning a command reproduces its output files
//! byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::io;
use crate::masking::{apply_mask, plan_mask};
use crate::merging::sparse_merge;
use crate::numeric::{mix_seed, sample_without_replacement, SeededRng};
use crate::sim::{
    generate_dataset, run_retention_experiment, select_by_training, train, ExperimentReport,
};
use crate::subset::{run_selection, LossPhase};

const STREAM_RANDOM_CONTROL: u64 = 11;

pub struct MaskArgs {
    pub input: PathBuf,
    pub ratio: f64,
    pub seed: u64,
    pub out: PathBuf,
    /// Defaults to `<out>` with a `.plan.json` extension.
    pub plan_out: Option<PathBuf>,
}

/// Reads a token set, masks it, and writes the surviving tokens plus the
/// plan that produced them.
pub fn cmd_mask(args: &MaskArgs) -> Result<()> {
    let ts = io::read_token_set(&args.input)?;
    let plan = plan_mask(ts.len(), args.ratio, args.seed)?;
    let masked = apply_mask(&ts, &plan)?;
    io::write_json(&args.out, &masked)?;
    let plan_path = args
        .plan_out
        .clone()
        .unwrap_or_else(|| args.out.with_extension("plan.json"));
    io::write_json(&plan_path, &plan)?;
    println!(
        "masked {} of {} tokens (ratio {}, seed {}) -> {}",
        plan.masked.len(),
        plan.total,
        plan.ratio,
        plan.seed,
        args.out.display()
    );
    Ok(())
}

pub struct MergeArgs {
    pub tokens: PathBuf,
    pub attention: PathBuf,
    pub out: PathBuf,
}

/// Runs the merge pipeline on a token set with its attention inputs.
pub fn cmd_merge(args: &MergeArgs) -> Result<()> {
    let ts = io::read_token_set(&args.tokens)?;
    let inp = io::read_attention_inputs(&args.attention)?;
    let result = sparse_merge(&ts, &inp)?;
    io::write_json(&args.out, &result)?;
    println!(
        "kept {} of {} tokens (compression {:.4}) -> {}",
        result.key_indices.len(),
        ts.len(),
        result.compression_ratio,
        args.out.display()
    );
    Ok(())
}

pub struct SelectArgs {
    pub log: PathBuf,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub subset_size: Option<usize>,
    pub epochs: Option<usize>,
}

/// Runs key-subset selection over a recorded loss log.
pub fn cmd_select(args: &SelectArgs) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let log = io::read_loss_log(&args.log)?;
    let mut sel = config.selection_config();
    // Precedence: flag, then config file, then infer from the log itself.
    sel.epochs = match (args.epochs, &args.config) {
        (Some(e), _) => e,
        (None, Some(_)) => config.selection.epochs,
        (None, None) => log.epochs.len(),
    };
    if let Some(n) = args.subset_size {
        sel.subset_size = n;
    } else if config.selection.subset_size.is_none() {
        // No explicit size anywhere: default to a quarter of the logged samples.
        sel.subset_size = (log.n_samples() / 4).max(1);
    }
    if sel.epochs != log.epochs.len() {
        return Err(Error::invalid(format!(
            "log holds {} epochs but selection is configured for {}",
            log.epochs.len(),
            sel.epochs
        )));
    }
    // Negative losses still have well-defined means; accept them but say so.
    if log
        .warmup
        .iter()
        .chain(log.epochs.iter().flatten())
        .any(|&l| l < 0.0)
    {
        eprintln!("warning: loss log contains negative losses");
    }
    let subset = run_selection(log.n_samples(), &sel, |phase| {
        Ok(match phase {
            LossPhase::Warmup => log.warmup.clone(),
            LossPhase::Epoch(e) => log.epochs[e].clone(),
        })
    })?;
    println!(
        "selected {} of {} samples -> {}",
        subset.indices.len(),
        log.n_samples(),
        args.out.display()
    );
    io::write_json(&args.out, &io::KeySubsetFile::new(subset, sel))?;
    Ok(())
}

pub struct SimulateArgs {
    pub config: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
}

/// Runs the paired experiments and writes four reports (JSON + CSV curves):
/// dense baseline, fully sparse run, key-subset retention run, and a
/// random-subset control of the same size.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        config.epochs = epochs;
    }
    config.validate()?;

    fs::create_dir_all(&args.out_dir)?;
    let ds = generate_dataset(&config.dataset_spec())?;

    let dense = train(&ds, &config.dense_pipeline(), config.epochs, config.seed)?;
    let sparse = train(&ds, &config.sparse_pipeline(), config.epochs, config.seed)?;

    let sel = config.selection_config();
    let key_subset = select_by_training(
        &ds,
        &sel,
        &config.selection_infobatch(),
        config.learning_rate,
        config.seed,
    )?;
    let mut subset_report = run_retention_experiment(
        &ds,
        &key_subset.indices,
        config.epochs,
        config.seed,
        config.learning_rate,
    )?;
    subset_report.label = "key_subset".to_string();

    let mut control_rng = SeededRng::new(mix_seed(config.seed, &[STREAM_RANDOM_CONTROL]));
    let random_indices =
        sample_without_replacement(ds.len(), key_subset.indices.len(), &mut control_rng)?;
    let mut random_report = run_retention_experiment(
        &ds,
        &random_indices,
        config.epochs,
        config.seed,
        config.learning_rate,
    )?;
    random_report.label = "random_subset".to_string();

    let mut dense = dense;
    dense.label = "dense".to_string();
    let mut sparse = sparse;
    sparse.label = "sparse".to_string();

    for report in [&dense, &sparse, &subset_report, &random_report] {
        write_report(&args.out_dir, report)?;
    }

    let reduction = proxy_reduction(&dense, &sparse);
    println!(
        "dense   : proxy {:>12}  accuracy {:.4}",
        dense.compute_proxy, dense.final_accuracy
    );
    println!(
        "sparse  : proxy {:>12}  accuracy {:.4}  ({:.2}% fewer gradient tokens)",
        sparse.compute_proxy,
        sparse.final_accuracy,
        reduction * 100.0
    );
    for r in [&subset_report, &random_report] {
        println!(
            "{:<8}: accuracy {:.4}  retention {:.4}  hard recall {}",
            r.label,
            r.final_accuracy,
            r.retention_ratio.unwrap_or(f64::NAN),
            r.planted_hard_recall
                .map_or("n/a".to_string(), |x| format!("{x:.4}")),
        );
    }
    eprintln!(
        "wall clock: dense {:?}, sparse {:?}, subset {:?}, random {:?}",
        dense.wall_clock, sparse.wall_clock, subset_report.wall_clock, random_report.wall_clock
    );
    Ok(())
}

/// Fraction of gradient-step tokens the sparse run avoided.
pub fn proxy_reduction(dense: &ExperimentReport, sparse: &ExperimentReport) -> f64 {
    if dense.compute_proxy == 0 {
        return 0.0;
    }
    1.0 - sparse.compute_proxy as f64 / dense.compute_proxy as f64
}

fn write_report(dir: &Path, report: &ExperimentReport) -> Result<()> {
    io::write_json(&dir.join(format!("{}.json", report.label)), report)?;
    fs::write(dir.join(format!("{}.csv", report.label)), report.to_csv())?;
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::from_toml(&fs::read_to_string(p)?),
        None => Ok(Config::default()),
    }
}
