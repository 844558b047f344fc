//! Command-line front end: `run` for single experiments, `validate` for
//! config checking, `figures` for the bundled catalog.
//!
//! Exit codes: 0 success, 2 configuration error (bad flags, unknown names,
//! unreadable or invalid config), 3 runtime error. Bad input never produces
//! a panic trace.

pub mod config;
pub mod experiments;
pub mod figures;
pub mod svg;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::Config;
use experiments::{run_experiment, Experiment, OutputFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Parser)]
#[command(
    name = "ferrosim",
    version,
    about = "Ferroelectric synaptic transistor simulator and metrology toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment into its own output directory
    Run {
        /// One of: pv-loop, cv-butterfly, rv-hysteresis, minor-loops, pund,
        /// endurance, retention, potdep-amplitude, potdep-width, xd-curve,
        /// metrics
        experiment: String,
        /// Analyze an existing pulse-series CSV instead of simulating
        /// (metrics only)
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check a config file against every invariant without running anything
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Produce the bundled figure catalog
    Figures {
        /// Figure name, or "all"
        name: String,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file; built-in defaults fill anything absent
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override the run seed from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Output root directory (default: $FERROSIM_OUT, then ./out)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// csv writes the canonical files; json also prints the manifest;
    /// svg also renders line charts
    #[arg(long, value_parser = ["csv", "json", "svg"])]
    format: Option<String>,
    /// Suppress progress lines
    #[arg(long)]
    quiet: bool,
}

/// Parses arguments (the first element is the program name) and executes;
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let requested = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if requested { EXIT_OK } else { EXIT_CONFIG };
        }
    };
    match cli.command {
        Command::Run { experiment, input, common } => {
            cmd_run(&experiment, input.as_deref(), &common)
        }
        Command::Validate { common } => cmd_validate(&common),
        Command::Figures { name, common } => cmd_figures(&name, &common),
    }
}

fn config_error(msg: &str) -> i32 {
    eprintln!("config error: {msg}");
    EXIT_CONFIG
}

fn load_config(common: &CommonArgs) -> Result<Config, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            Config::from_toml(&text)?
        }
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    Ok(cfg)
}

/// Loads, applies the seed override, and rejects any invariant violation.
fn load_checked_config(common: &CommonArgs) -> Result<Config, Vec<String>> {
    let cfg = load_config(common).map_err(|e| vec![e])?;
    let violations = config::violations(&cfg);
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(violations)
    }
}

fn out_root(common: &CommonArgs, cfg: &Config) -> PathBuf {
    if let Some(out) = &common.out {
        return out.clone();
    }
    if let Some(dir) = &cfg.output.dir {
        return PathBuf::from(dir);
    }
    if let Some(env) = std::env::var_os("FERROSIM_OUT") {
        return PathBuf::from(env);
    }
    PathBuf::from("out")
}

fn output_format(common: &CommonArgs, cfg: &Config) -> Result<OutputFormat, String> {
    let name = common.format.as_deref().or(cfg.output.format.as_deref()).unwrap_or("csv");
    OutputFormat::parse(name)
}

fn cmd_run(experiment: &str, input: Option<&Path>, common: &CommonArgs) -> i32 {
    let exp = match Experiment::parse(experiment) {
        Ok(e) => e,
        Err(msg) => return config_error(&msg),
    };
    if input.is_some() && exp != Experiment::Metrics {
        return config_error("--input applies only to the metrics experiment");
    }
    let cfg = match load_checked_config(common) {
        Ok(cfg) => cfg,
        Err(violations) => {
            for v in &violations {
                eprintln!("config error: {v}");
            }
            return EXIT_CONFIG;
        }
    };
    let format = match output_format(common, &cfg) {
        Ok(f) => f,
        Err(msg) => return config_error(&msg),
    };
    let root = out_root(common, &cfg);
    match run_experiment(exp, &cfg, &root, format, input) {
        Ok(outcome) => {
            if format == OutputFormat::Json {
                print!("{}", outcome.manifest_json);
            } else if let Some(report) = &outcome.report_json {
                if !common.quiet {
                    print!("{report}");
                }
            }
            if !common.quiet {
                eprintln!("wrote {} files to {}", outcome.n_files, outcome.dir.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("runtime error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn cmd_validate(common: &CommonArgs) -> i32 {
    let Some(path) = &common.config else {
        return config_error("validate requires --config <FILE>");
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return config_error(&format!("cannot read {}: {e}", path.display())),
    };
    let mut cfg = match Config::from_toml(&text) {
        Ok(cfg) => cfg,
        Err(msg) => {
            println!("{msg}");
            return EXIT_CONFIG;
        }
    };
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    let violations = config::violations(&cfg);
    if violations.is_empty() {
        println!("OK");
        EXIT_OK
    } else {
        for v in &violations {
            println!("{v}");
        }
        EXIT_CONFIG
    }
}

fn cmd_figures(name: &str, common: &CommonArgs) -> i32 {
    let figs = match figures::select(name) {
        Ok(f) => f,
        Err(msg) => return config_error(&msg),
    };
    let cfg = match load_checked_config(common) {
        Ok(cfg) => cfg,
        Err(violations) => {
            for v in &violations {
                eprintln!("config error: {v}");
            }
            return EXIT_CONFIG;
        }
    };
    let format = match output_format(common, &cfg) {
        Ok(f) => f,
        Err(msg) => return config_error(&msg),
    };
    let root = out_root(common, &cfg);
    let mut outcomes = Vec::new();
    for fig in &figs {
        match figures::run_figure(fig, &cfg, &root, format) {
            Ok(o) => {
                if !common.quiet {
                    eprintln!("{}: wrote {} files to {}", o.name, o.outputs.len(), o.dir.display());
                }
                outcomes.push(o);
            }
            Err(e) => {
                eprintln!("runtime error: {}: {e:#}", fig.name);
                return EXIT_RUNTIME;
            }
        }
    }
    match figures::write_index(&root, &outcomes) {
        Ok(index_json) => {
            if format == OutputFormat::Json {
                print!("{index_json}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("runtime error: {e:#}");
            EXIT_RUNTIME
        }
    }
}
