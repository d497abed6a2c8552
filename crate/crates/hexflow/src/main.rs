//! Command-line front end for the motion-estimation experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hexflow::harness::{self, curves_csv, thresholds_csv, EngineKind, ExperimentConfig};

#[derive(Parser)]
#[command(name = "hexflow", version, about = "Bayesian temporal-coherence motion estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Experiment configuration file (flat key-value text).
    config: PathBuf,
    /// Override the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the prediction engine.
    #[arg(long, value_parser = ["kernel", "pde"])]
    engine: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured stimulus and write per-frame metrics and snapshots.
    Run(CommonOpts),
    /// Run the speed-discrimination experiment and write the threshold table.
    Discriminate(CommonOpts),
    /// Run the numerical validation checks and print the report.
    Validate(CommonOpts),
    /// Generate the configured stimulus and write its text serialization.
    EmitStimulus(CommonOpts),
}

fn load_config(opts: &CommonOpts) -> hexflow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&opts.config)?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(engine) = &opts.engine {
        cfg.engine = match engine.as_str() {
            "kernel" => EngineKind::Kernel,
            _ => EngineKind::Pde,
        };
    }
    if let Some(out) = &opts.out {
        cfg.out_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn write_file(path: &std::path::Path, contents: &str) -> hexflow::Result<()> {
    std::fs::write(path, contents).map_err(|e| hexflow::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(opts) => cmd_run(opts),
        Command::Discriminate(opts) => cmd_discriminate(opts),
        Command::Validate(opts) => cmd_validate(opts),
        Command::EmitStimulus(opts) => cmd_emit_stimulus(opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(opts: &CommonOpts) -> hexflow::Result<()> {
    let cfg = load_config(opts)?;
    let record = harness::run(&cfg)?;
    let lattice = cfg.lattice()?;
    let dir = out_dir(&cfg);
    for path in harness::emit(&record, &lattice, &dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_discriminate(opts: &CommonOpts) -> hexflow::Result<()> {
    let cfg = load_config(opts)?;
    let cells = harness::speed_discrimination(&cfg, &cfg.dv_grid, &cfg.n_jumps_list, cfg.trials)?;
    for cell in &cells {
        println!("n_jumps {:>3}: threshold dv/V = {}", cell.n_jumps, cell.threshold);
    }
    let dir = out_dir(&cfg);
    std::fs::create_dir_all(&dir).map_err(|e| hexflow::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let thresholds = dir.join("thresholds.csv");
    write_file(&thresholds, &thresholds_csv(&cells))?;
    println!("wrote {}", thresholds.display());
    let curves = dir.join("psychometric.csv");
    write_file(&curves, &curves_csv(&cells))?;
    println!("wrote {}", curves.display());
    Ok(())
}

fn cmd_validate(opts: &CommonOpts) -> hexflow::Result<()> {
    let cfg = load_config(opts)?;
    let report = harness::validate(&cfg)?;
    print!("{}", report.render());
    Ok(())
}

fn cmd_emit_stimulus(opts: &CommonOpts) -> hexflow::Result<()> {
    let cfg = load_config(opts)?;
    let seq = cfg.build_stimulus()?;
    let dir = out_dir(&cfg);
    std::fs::create_dir_all(&dir).map_err(|e| hexflow::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let path = dir.join("stimulus.txt");
    seq.write_file(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
