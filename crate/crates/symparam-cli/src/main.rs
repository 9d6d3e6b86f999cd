//! `symparam` binary: reproducible experiments over the simplex-conditioned
//! toy problem. Every subcommand is deterministic under a fixed seed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use symparam_cli::checkpoint::Checkpoint;
use symparam_cli::config::ExperimentConfig;
use symparam_cli::{exit_code, io, probe};
use symparam_core::rng;
use symparam_core::sym::{sample_dirichlet, Concentration, SymParameter};
use symparam_core::toy::{
    evaluate_grid, evenly_spaced, loss_landscape, make_dataset, report_csv, size_sweep,
    to_train_samples, toy_objective, ToyModel, ToySample,
};
use symparam_core::train::{history_csv, Trainer};
use symparam_core::Error;

#[derive(Parser)]
#[command(name = "symparam", version, about = "sym-parameter toy experiments")]
struct Cli {
    /// Experiment configuration (TOML); defaults are the published recipe.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for all artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the (x, y_r, y_c) dataset as CSV.
    GenerateData {
        /// Override the configured sample count.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Train a model and write checkpoint plus loss history.
    Train {
        /// Override the configured mode (sym, hyper, s_in).
        #[arg(long)]
        mode: Option<String>,
        /// Fixed loss weights for hyper/s_in, e.g. "0.5,0.5".
        #[arg(long)]
        fixed_weights: Option<String>,
        /// Read the training set from a dataset CSV instead of regenerating.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Continue from a checkpoint written mid-schedule.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Stop (and checkpoint) after this many epochs of the schedule.
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Evaluate a checkpoint over the weight grid.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Additional checkpoints for a merged comparison table.
        #[arg(long)]
        baseline: Vec<PathBuf>,
    },
    /// Loss landscape over (x, y) for a fixed S, optional model overlay.
    Landscape {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Condition vector, e.g. "0.5,0.5"; defaults to the config's.
        #[arg(long)]
        s: Option<String>,
        /// Allow S outside the simplex (extrapolation study).
        #[arg(long)]
        extrapolate: bool,
        /// Also write a PGM grayscale image of the matrix.
        #[arg(long)]
        pgm: bool,
    },
    /// Sym-vs-hyper comparison across network widths.
    SweepSize,
    /// Emit Dirichlet draws as CSV for statistical tests.
    SampleDirichlet {
        /// Override the configured draw count.
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Synthetic conditioning task: attention table plus gradient checks.
    CcamProbe,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)?;

    match cli.command {
        Command::GenerateData { n } => generate_data(&cfg, &cli.out, n),
        Command::Train {
            mode,
            fixed_weights,
            data,
            resume,
            stop_after,
        } => {
            if let Some(mode) = mode {
                cfg.mode = mode;
            }
            if let Some(w) = fixed_weights {
                cfg.fixed_weights = Some(parse_weights(&w)?);
            }
            train(&cfg, &cli.out, data.as_deref(), resume.as_deref(), stop_after)
        }
        Command::Evaluate {
            checkpoint,
            baseline,
        } => evaluate(&cfg, &cli.out, &checkpoint, &baseline),
        Command::Landscape {
            checkpoint,
            s,
            extrapolate,
            pgm,
        } => landscape(&cfg, &cli.out, checkpoint.as_deref(), s.as_deref(), extrapolate, pgm),
        Command::SweepSize => sweep_size(&cfg, &cli.out),
        Command::SampleDirichlet { draws } => sample_dirichlet_cmd(&cfg, &cli.out, draws),
        Command::CcamProbe => ccam_probe(&cfg, &cli.out),
    }
}

fn parse_weights(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("bad weight entry '{t}'")).into())
        })
        .collect()
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn train_dataset(cfg: &ExperimentConfig, n: Option<usize>) -> anyhow::Result<Vec<ToySample>> {
    let n = n.unwrap_or(cfg.dataset.train_n);
    Ok(make_dataset(n, cfg.sampling()?, cfg.seed)?)
}

/// Evaluation set: fixed across all models trained from the same config.
fn eval_dataset(cfg: &ExperimentConfig) -> anyhow::Result<Vec<ToySample>> {
    Ok(make_dataset(
        cfg.dataset.eval_n,
        cfg.sampling()?,
        cfg.seed.wrapping_add(1),
    )?)
}

fn generate_data(cfg: &ExperimentConfig, out: &Path, n: Option<usize>) -> anyhow::Result<()> {
    cfg.validate()?;
    let data = train_dataset(cfg, n)?;
    let path = out.join("dataset.csv");
    write(&path, &io::dataset_csv(&data))?;
    println!("wrote {} (seed={}, n={})", path.display(), cfg.seed, data.len());
    Ok(())
}

fn train(
    cfg: &ExperimentConfig,
    out: &Path,
    data: Option<&Path>,
    resume: Option<&Path>,
    stop_after: Option<usize>,
) -> anyhow::Result<()> {
    cfg.validate()?;
    let train_cfg = cfg.train_config()?;
    let dataset = match data {
        Some(path) => io::parse_dataset(&std::fs::read_to_string(path)?)?,
        None => train_dataset(cfg, None)?,
    };
    let samples = to_train_samples(&dataset);

    let mode = cfg.mode()?;
    let mut trainer = match resume {
        Some(path) => {
            let ckpt = Checkpoint::load(path)?;
            if ckpt.mode()? != mode || ckpt.k != cfg.k() || ckpt.width != cfg.width {
                return Err(Error::ShapeMismatch(format!(
                    "checkpoint architecture ({}, k={}, width={}) does not match config",
                    ckpt.mode, ckpt.k, ckpt.width
                ))
                .into());
            }
            let mut trainer =
                Trainer::new(ckpt.to_model()?, toy_objective(), samples, train_cfg)?;
            ckpt.restore_into(&mut trainer)?;
            trainer
        }
        None => {
            let model = ToyModel::new(mode, cfg.k(), cfg.width, cfg.seed);
            Trainer::new(model, toy_objective(), samples, train_cfg)?
        }
    };

    let mut history = Vec::new();
    while !trainer.is_finished() {
        if let Some(stop) = stop_after {
            if trainer.epoch() >= stop {
                break;
            }
        }
        history.extend(trainer.run_epoch()?);
    }

    let ckpt = Checkpoint::from_trainer(&trainer);
    ckpt.save(&out.join("checkpoint.json"))?;
    write(&out.join("history.csv"), &history_csv(&history, &["L_r", "L_c"]))?;
    println!(
        "trained mode={} to epoch {} ({} batches this run)",
        mode.as_str(),
        trainer.epoch(),
        history.len()
    );
    Ok(())
}

fn evaluate(
    cfg: &ExperimentConfig,
    out: &Path,
    checkpoint: &Path,
    baselines: &[PathBuf],
) -> anyhow::Result<()> {
    cfg.validate()?;
    let data = eval_dataset(cfg)?;
    let grid = cfg.weight_grid()?;

    let ckpt = Checkpoint::load(checkpoint)?;
    let report = evaluate_grid(&ckpt.to_model()?, &data, &grid)?;
    write(&out.join("report.csv"), &report_csv(&report))?;

    if !baselines.is_empty() {
        let mut merged = format!("# {}\n{}", report.mode.as_str(), report_csv(&report));
        for path in baselines {
            let ckpt = Checkpoint::load(path)?;
            let block = evaluate_grid(&ckpt.to_model()?, &data, &grid)?;
            // a hyper block keeps only its native row's model-input semantics;
            // the remaining rows reweight the same measured losses
            merged.push_str(&format!("# {}\n{}", block.mode.as_str(), report_csv(&block)));
        }
        write(&out.join("comparison.csv"), &merged)?;
    }
    println!("evaluated {} rows", report.rows.len());
    Ok(())
}

fn landscape(
    cfg: &ExperimentConfig,
    out: &Path,
    checkpoint: Option<&Path>,
    s: Option<&str>,
    extrapolate: bool,
    pgm: bool,
) -> anyhow::Result<()> {
    cfg.validate()?;
    let values = match s {
        Some(text) => parse_weights(text)?,
        None => cfg.landscape.s.clone(),
    };
    let s = if extrapolate {
        SymParameter::unchecked(&values)
    } else {
        SymParameter::new(&values)?
    };
    let model = match checkpoint {
        Some(path) => Some(Checkpoint::load(path)?.to_model()?),
        None => None,
    };
    let x_grid = evenly_spaced(-1.0, 1.0, cfg.landscape.x_points);
    let y_grid = evenly_spaced(0.0, 1.0, cfg.landscape.y_points);
    let land = loss_landscape(&s, &x_grid, &y_grid, model.as_ref())?;

    write(&out.join("landscape.csv"), &io::landscape_csv(&land))?;
    if land.overlay.is_some() {
        write(&out.join("overlay.csv"), &io::overlay_csv(&land)?)?;
    }
    if pgm {
        write(&out.join("landscape.pgm"), &io::landscape_pgm(&land))?;
    }
    println!(
        "landscape {}x{} at S={:?}",
        cfg.landscape.x_points, cfg.landscape.y_points, s.values()
    );
    Ok(())
}

fn sweep_size(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    cfg.validate()?;
    let train_cfg = cfg.train_config()?;
    let train_data = train_dataset(cfg, None)?;
    let eval_data = eval_dataset(cfg)?;
    let grid = cfg.weight_grid()?;
    let entries = size_sweep(&cfg.sweep_widths, &train_cfg, &train_data, &eval_data, &grid)?;

    let mut csv = String::from("width,w_r,w_c,sym_L_total,hyper_L_total,gap\n");
    for entry in &entries {
        for (row, hyper) in entry.sym.rows.iter().zip(&entry.hyper) {
            // each hyper report's native row shares the sym row's weights
            let native = hyper
                .rows
                .iter()
                .find(|r| r.weights == row.weights)
                .ok_or_else(|| Error::ShapeMismatch("hyper report missing native row".into()))?;
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                entry.width,
                row.weights[0],
                row.weights[1],
                row.total,
                native.total,
                (row.total - native.total).abs()
            ));
        }
    }
    write(&out.join("sweep.csv"), &csv)?;
    println!("swept widths {:?}", cfg.sweep_widths);
    Ok(())
}

fn sample_dirichlet_cmd(
    cfg: &ExperimentConfig,
    out: &Path,
    draws: Option<usize>,
) -> anyhow::Result<()> {
    cfg.validate()?;
    let n = draws.unwrap_or(cfg.dirichlet_draws);
    let alpha = Concentration::new(&cfg.alpha)?;
    let mut rng = rng::substream(cfg.seed, "dirichlet");
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        samples.push(sample_dirichlet(&alpha, &mut rng)?);
    }
    write(&out.join("dirichlet.csv"), &io::dirichlet_csv(&samples))?;
    println!("drew {n} samples at alpha={:?}", cfg.alpha);
    Ok(())
}

fn ccam_probe(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    cfg.validate()?;
    let result = probe::run_probe(cfg.seed)?;
    write(
        &out.join("sensitivity.csv"),
        &symparam_core::ccam::sensitivity_csv(&result.sensitivity, 2),
    )?;
    write(&out.join("probe.txt"), &result.summary())?;
    println!(
        "ccam mse {} vs concat {} (ratio {:.1}), grad max rel err {:.2e}",
        result.ccam_mse,
        result.concat_mse,
        result.mse_ratio(),
        result.grad_max_rel_err
    );
    Ok(())
}
