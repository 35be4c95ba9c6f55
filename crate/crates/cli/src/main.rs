use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use predvit::coding::{build_encoder_trellis, qpsk_map};
use predvit::detectors::DetectorRegistry;
use predvit::harness::selftest::run_selftest;
use predvit::harness::{plot_labels, render_svg, run_ber_sweep, write_csv, PlotOptions, RunConfig};
use predvit::supertrellis::build_full_supertrellis;

#[derive(Parser)]
#[command(name = "predvit", version, about = "Noncoherent Viterbi detection for coded DQPSK-OFDM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo BER sweep.
    Simulate(SimulateArgs),
    /// Print the unnormalized supertrellis transition table.
    DumpSupertrellis {
        #[arg(long, default_value_t = 1)]
        order: usize,
    },
    /// Run the built-in consistency checks.
    Selftest,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// TOML file with system parameters; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated SNR points in dB.
    #[arg(long, value_delimiter = ',')]
    snr: Option<Vec<f64>>,
    /// Comma-separated detector names.
    #[arg(long, value_delimiter = ',')]
    detectors: Option<Vec<String>>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Draw the published curves as dashed lines.
    #[arg(long)]
    overlay_paper: bool,
    /// Stop a detector at 500 errors once 10% of the frames are done.
    #[arg(long)]
    early_stop: bool,
    /// Write 0 in the seconds column for reproducible output.
    #[arg(long)]
    no_timing: bool,
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(v) = args.snr {
        cfg.snr_points_db = v;
    }
    if let Some(v) = args.detectors {
        cfg.detectors = v.into_iter().map(|s| s.trim().to_lowercase()).collect();
    }
    if let Some(v) = args.frames {
        cfg.frames_per_point = v;
    }
    if let Some(v) = args.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = args.workers {
        cfg.workers = v;
    }
    cfg.early_stop = args.early_stop;
    cfg.record_wall_time = !args.no_timing;
    cfg.overlay_reference = args.overlay_paper;

    let registry = DetectorRegistry::with_defaults();
    for name in &cfg.detectors {
        registry.get(name)?;
    }
    let records = run_ber_sweep(&cfg, &registry)?;
    write_csv(&records, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(path) = &args.plot {
        let opts = PlotOptions {
            labels: plot_labels(&registry, &cfg.detectors, cfg.params.encoder),
            overlay_reference: cfg.overlay_reference,
        };
        render_svg(&records, path, &opts).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::DumpSupertrellis { order } => {
            let enc = build_encoder_trellis(Default::default())?;
            print!("{}", build_full_supertrellis(&enc, order, qpsk_map)?.dump_table());
            Ok(())
        }
        Command::Selftest => {
            let results = run_selftest()?;
            let mut failed = 0;
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                failed += usize::from(!r.passed);
            }
            if failed > 0 {
                bail!("{failed} of {} checks failed", results.len());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
