//! `seafdm` CLI: seeded SE-AFDM experiments from flat config files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use seafdm_harness::ber::{run_ber_sweep, run_search_sweep};
use seafdm_harness::config::{ExperimentConfig, ExperimentKind};
use seafdm_harness::output::{ber_csv, gnuplot_script, search_csv, sinr_csv};
use seafdm_harness::sinr_sweep::run_sinr_sweep;
use seafdm_harness::syncdemo::run_sync_demo;

#[derive(Debug, Parser)]
#[command(
    name = "seafdm",
    about = "SE-AFDM physical-layer-security experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config file (flat key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; CSV sweeps also emit a companion .gp script.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// BER versus SNR for the synchronized receiver, the constant-chirp
    /// baseline and the eavesdropper.
    BerSweep(RunArgs),
    /// Closed-form average eavesdropper SINR versus c2_max.
    SinrSweep(RunArgs),
    /// Eavesdropper BER versus the search interval at fixed SNR.
    SearchSweep(RunArgs),
    /// Full three-stage synchronization protocol over complete frames.
    SyncDemo(RunArgs),
    /// Dump LPPN chips (or c2 vectors) from the built-in generator preset.
    LppnDump {
        /// Chips (or subcarrier values) to emit.
        #[arg(long, default_value_t = 1024)]
        count: usize,
        /// Chips to skip first.
        #[arg(long, default_value_t = 0)]
        skip: u64,
        /// Emit per-subcarrier c2 values (CSV) instead of raw chips.
        #[arg(long, default_value_t = false)]
        c2: bool,
        /// Codebook half-range for --c2.
        #[arg(long, default_value_t = 4.88e-6)]
        c2_max: f64,
        /// Codebook size for --c2 (power of two).
        #[arg(long, default_value_t = 1024)]
        codebook_m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(args: &RunArgs, kind: ExperimentKind) -> Result<ExperimentConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ExperimentConfig::parse(&text).map_err(|e| e.to_string())?
        }
        None => ExperimentConfig::default(),
    };
    cfg.experiment = kind;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.display().to_string());
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn init_threads(threads: Option<usize>) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn write_out(cfg: &ExperimentConfig, csv: String, gp: Option<(String, String)>) -> Result<(), String> {
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| format!("cannot write {path}: {e}"))?;
            if let Some((xlabel, ylabel)) = gp {
                let script = gnuplot_script(path, &xlabel, &ylabel, true);
                let gp_path = format!("{path}.gp");
                std::fs::write(&gp_path, script)
                    .map_err(|e| format!("cannot write {gp_path}: {e}"))?;
            }
            eprintln!("wrote {path}");
            Ok(())
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn run() -> Result<(), String> {
    let cli = Cli::parse();
    match cli.command {
        Command::BerSweep(args) => {
            init_threads(args.threads)?;
            let cfg = load_config(&args, ExperimentKind::BerSweep)?;
            let rows = run_ber_sweep(&cfg).map_err(|e| e.to_string())?;
            write_out(&cfg, ber_csv(&rows), Some(("SNR (dB)".into(), "BER".into())))
        }
        Command::SinrSweep(args) => {
            init_threads(args.threads)?;
            let cfg = load_config(&args, ExperimentKind::SinrSweep)?;
            let rows = run_sinr_sweep(&cfg).map_err(|e| e.to_string())?;
            write_out(
                &cfg,
                sinr_csv(&rows),
                Some(("c2max".into(), "SINR at Eve (dB)".into())),
            )
        }
        Command::SearchSweep(args) => {
            init_threads(args.threads)?;
            let cfg = load_config(&args, ExperimentKind::SearchSweep)?;
            let rows = run_search_sweep(&cfg).map_err(|e| e.to_string())?;
            write_out(
                &cfg,
                search_csv(&rows),
                Some(("search interval".into(), "BER at Eve".into())),
            )
        }
        Command::SyncDemo(args) => {
            init_threads(args.threads)?;
            let cfg = load_config(&args, ExperimentKind::SyncDemo)?;
            let summary = run_sync_demo(&cfg).map_err(|e| e.to_string())?;
            write_out(&cfg, summary.to_log(), None)
        }
        Command::LppnDump {
            count,
            skip,
            c2,
            c2_max,
            codebook_m,
            out,
        } => {
            use seafdm_core::codebook::{ChirpCodebook, ChirpStream};
            use seafdm_core::lppn::{LppnConfig, LppnGenerator};
            let mut gen =
                LppnGenerator::new(LppnConfig::p_code_12()).map_err(|e| e.to_string())?;
            gen.skip(skip);
            let text = if c2 {
                let cb = ChirpCodebook::new(c2_max, codebook_m).map_err(|e| e.to_string())?;
                let mut stream = ChirpStream::new(gen, cb).map_err(|e| e.to_string())?;
                let v = stream.next_c2_vector(count);
                let mut s = String::from("subcarrier,c2\n");
                for (m, c) in v.c2.iter().enumerate() {
                    s.push_str(&format!("{m},{c:.12e}\n"));
                }
                s
            } else {
                let mut s = String::with_capacity(count + 1);
                for _ in 0..count {
                    s.push(if gen.next() == 1 { '1' } else { '0' });
                }
                s.push('\n');
                s
            };
            match out {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
