use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use foliage::config::ExperimentConfig;
use foliage::csvio::{write_cir, write_paths, write_pdp};
use foliage::obj::write_model;
use foliage::output::{emit_cdfs, emit_outputs, prepare_output_dir};
use foliage::runner::{self, Cell};
use foliage::{FoliageError, Result};

/// Stochastic tree crowns and single-bounce mmWave channels through them.
#[derive(Parser)]
#[command(name = "foliage", version)]
struct Cli {
    /// JSON experiment configuration; built-in defaults when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Overrides the crown seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CellArgs {
    /// Receiver angle in degrees.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Realization index.
    #[arg(long, default_value_t = 0)]
    realization: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one crown and write it as OBJ and/or JSON.
    Generate {
        #[command(flatten)]
        cell: CellArgs,
        #[arg(long, default_value = "foliage.obj")]
        obj: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Trace one scene and write its impulse response.
    Trace {
        #[command(flatten)]
        cell: CellArgs,
        /// Carrier frequency in Hz.
        #[arg(long, default_value_t = 60e9)]
        frequency: f64,
        #[arg(long, default_value = "cir.csv")]
        cir: PathBuf,
        #[arg(long)]
        pdp: Option<PathBuf>,
        #[arg(long)]
        paths: Option<PathBuf>,
    },
    /// Fit the calibration gain and store it in the config file.
    Calibrate {
        /// Target mean PL in dB (default: config value).
        #[arg(long, allow_hyphen_values = true)]
        target: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        frequency: Option<f64>,
        /// Print the gain without rewriting the config.
        #[arg(long)]
        dry_run: bool,
    },
    /// Sweep all angles, frequencies and realizations.
    Sweep {
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Skip the RSSI CDF run.
        #[arg(long)]
        no_cdf: bool,
    },
    /// RSSI CDFs at the configured angle for each crown density.
    Cdf {
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.crown.seed = seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|source| FoliageError::File {
        path: path.to_path_buf(),
        source,
    })?))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Generate { cell, obj, json } => {
            let model = runner::realization_foliage(&cfg.crown, cell.realization, cell.alpha)?;
            let mut w = create(&obj)?;
            write_model(&mut w, &model)?;
            w.flush()?;
            if let Some(path) = json {
                let mut w = create(&path)?;
                serde_json::to_writer(&mut w, &model)?;
                w.flush()?;
            }
            println!(
                "{} scatterers, volume {:.6} m^3, diameter {:.3} m",
                model.scatterers.len(),
                model.achieved_volume,
                model.diameter()
            );
        }
        Command::Trace {
            cell,
            frequency,
            cir,
            pdp,
            paths,
        } => {
            let traced = runner::trace_cell(
                &cfg,
                Cell {
                    frequency_hz: frequency,
                    alpha_deg: cell.alpha,
                    realization: cell.realization,
                },
            )?;
            let mut w = create(&cir)?;
            write_cir(&mut w, &traced.cir)?;
            w.flush()?;
            if let Some(path) = pdp {
                let mut w = create(&path)?;
                write_pdp(&mut w, &traced.cir.pdp())?;
                w.flush()?;
            }
            if let Some(path) = paths {
                let mut w = create(&path)?;
                write_paths(&mut w, &traced.paths)?;
                w.flush()?;
            }
            println!(
                "{} paths, PL {:.3} dB, DS {:.3} ns",
                traced.paths.len(),
                traced.stats.pl_db,
                traced.stats.ds_s * 1e9
            );
        }
        Command::Calibrate {
            target,
            alpha,
            frequency,
            dry_run,
        } => {
            let anchor = cfg.calibration;
            let target = target.unwrap_or(anchor.target_pl_db);
            let alpha = alpha.unwrap_or(anchor.alpha_deg);
            let frequency = frequency.unwrap_or(anchor.frequency_hz);
            let cal = runner::calibrate_at(&cfg, target, alpha, frequency)?;
            println!(
                "mean PL {:.4} dB over {} realizations, calibration gain {:.6} dB",
                cal.mean_pl_db, cal.realizations, cal.gain_db
            );
            match (&cli.config, dry_run) {
                (Some(path), false) => {
                    cfg.scatter.calibration_gain_db = cal.gain_db;
                    cfg.save(path)?;
                    println!("gain written to {}", path.display());
                }
                (None, false) => eprintln!("no --config given, gain not stored"),
                (_, true) => {}
            }
        }
        Command::Sweep { output_dir, no_cdf } => {
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            prepare_output_dir(&cfg.output_dir)?;
            let result = runner::run_sweep(&cfg)?;
            let cdf = if no_cdf { None } else { Some(runner::run_cdf(&cfg)?) };
            let written = emit_outputs(&result, cdf.as_deref(), &cfg)?;
            println!(
                "{} cells, {} failed, {} files in {}",
                result.records.len(),
                result.failed_cells(),
                written.len(),
                cfg.output_dir.display()
            );
            let cdf_failed: usize = cdf
                .iter()
                .flatten()
                .flat_map(|r| &r.curves)
                .map(|c| c.failed)
                .sum();
            if result.failed_cells() > 0 || cdf_failed > 0 {
                for r in result.records.iter().filter(|r| r.failed()) {
                    eprintln!(
                        "cell f={} alpha={} r={}: {}",
                        r.frequency_hz,
                        r.alpha_deg,
                        r.realization,
                        r.error.as_deref().unwrap_or_default()
                    );
                }
                return Ok(ExitCode::from(2));
            }
        }
        Command::Cdf { output_dir } => {
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            prepare_output_dir(&cfg.output_dir)?;
            let results = runner::run_cdf(&cfg)?;
            emit_cdfs(&results, &cfg.output_dir)?;
            let mut failed = 0;
            for res in &results {
                for c in &res.curves {
                    failed += c.failed;
                    match c.cdf() {
                        Some(cdf) => println!(
                            "{} GHz, rho {}: median {:.2} dBm over {} taps",
                            res.frequency_hz / 1e9,
                            c.density_per_m3,
                            cdf.median(),
                            cdf.sample_count()
                        ),
                        None => println!(
                            "{} GHz, rho {}: no taps above the noise floor",
                            res.frequency_hz / 1e9,
                            c.density_per_m3
                        ),
                    }
                }
            }
            if failed > 0 {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
