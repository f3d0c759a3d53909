use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fpm_cli::config::LoadedConfig;
use fpm_cli::run::{run, RunOptions};
use fpm_cli::CliError;

/// Environment variable that overrides the config's output directory.
const OUTPUT_ENV: &str = "FPM_OUTPUT_DIR";

#[derive(Parser)]
#[command(version, about = "Fragile points fracture simulations from a TOML config")]
struct Args {
    /// Worker threads for assembly; defaults to the machine parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the analysis described by a config file.
    Run {
        config: PathBuf,
        /// Validate config, mesh and problem without solving.
        #[arg(long)]
        check_only: bool,
        /// Continue a crack-growth run from a checkpoint file.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Output directory; overrides FPM_OUTPUT_DIR and the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn output_dir(cfg: &LoadedConfig, flag: Option<PathBuf>) -> PathBuf {
    if let Some(d) = flag {
        return d;
    }
    if let Some(d) = std::env::var_os(OUTPUT_ENV).filter(|d| !d.is_empty()) {
        return PathBuf::from(d);
    }
    if let Some(d) = &cfg.config.output.dir {
        return cfg.resolve(d);
    }
    let stem = cfg.path.file_stem().unwrap_or("run".as_ref());
    Path::new("out").join(stem)
}

fn execute(args: Args) -> Result<(), CliError> {
    let threads = args.threads.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    if threads == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let Command::Run { config, check_only, resume, output_dir: flag } = args.command;
    let cfg = LoadedConfig::load(&config)?;
    let out = output_dir(&cfg, flag);
    let opts = RunOptions { check_only, resume, threads };
    let m = run(&cfg, &out, &opts)?;
    if check_only {
        println!("{}: ok", config.display());
    } else {
        println!(
            "{}: {} finished in {:.1} s, outputs in {}",
            config.display(),
            m.analysis,
            m.wall_time_s,
            out.display()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": { "category": e.category(), "message": e.to_string() } });
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
