use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use optomech_cli::{cmd_point, cmd_preset, cmd_sweep, load_config, CliError, Exit, RunConfig};

/// Stationary entanglement of two optomechanical cavities coupled by photon hopping.
#[derive(Debug, Parser)]
#[command(name = "optomech", version)]
struct Cli {
    /// Worker threads for sweeps (0 = one per core).
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    threads: usize,
    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a single parameter point and print a report.
    Point {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
    /// Evaluate a parameter grid and write it as CSV.
    Sweep {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Defaults to `output.path` from the config.
        #[arg(long, value_name = "FILE.csv")]
        out: Option<PathBuf>,
    },
    /// Run a built-in figure grid (fig2, fig3, fig4a, fig4b, fig4c).
    ///
    /// Without --out the preset's configuration is printed instead.
    Preset {
        name: String,
        #[arg(long, value_name = "FILE.csv")]
        out: Option<PathBuf>,
        /// Also save the preset's configuration.
        #[arg(long, value_name = "FILE")]
        config_out: Option<PathBuf>,
    },
}

fn sweep_to(cfg: &RunConfig, out: &Path, quiet: bool) -> Result<Exit, CliError> {
    let rows = cmd_sweep(cfg, out)?;
    if !quiet {
        eprintln!("wrote {rows} rows to {}", out.display());
    }
    Ok(Exit::Ok)
}

fn run(cli: Cli) -> Result<Exit, CliError> {
    match cli.command {
        Command::Point { config } => {
            let cfg = load_config(&config)?;
            let (exit, error) = cmd_point(&cfg, io::stdout().lock()).map_err(|e| match e {
                CliError::Config { source, .. } => CliError::Config { path: config.clone(), source },
                e => e,
            })?;
            if let Some(msg) = error {
                eprintln!("error: {msg}");
            }
            Ok(exit)
        }
        Command::Sweep { config, out } => {
            let cfg = load_config(&config)?;
            let out = out
                .or_else(|| cfg.output.path.as_ref().map(PathBuf::from))
                .ok_or_else(|| CliError::Usage("no output file: pass --out or set output.path".into()))?;
            sweep_to(&cfg, &out, cli.quiet).map_err(|e| match e {
                CliError::Config { source, .. } => CliError::Config { path: config.clone(), source },
                e => e,
            })
        }
        Command::Preset { name, out, config_out } => {
            let cfg = cmd_preset(&name)?;
            if let Some(path) = &config_out {
                std::fs::write(path, cfg.to_toml()).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
            }
            match out {
                Some(out) => sweep_to(&cfg, &out, cli.quiet),
                None => {
                    if config_out.is_none() {
                        print!("{}", cfg.to_toml());
                    }
                    Ok(Exit::Ok)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap reserves 2 for usage errors; here 2 means an unstable point
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Exit::Error as u8);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(exit) => ExitCode::from(exit as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Exit::Error as u8)
        }
    }
}
