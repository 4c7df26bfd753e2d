use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use gamow_lab::decay::MethodPolicy;
use gamow_lab::run::{execute, exit_code, Command, OutputFormat, RunConfig};

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Poles,
    Evolve,
    Survival,
    Report,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Direct,
    Rotated,
    Both,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Resonances and decay of a particle in a delta-shell well (hbar = 2m = 1).
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    #[arg(long, default_value_t = 100.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    /// box:n or gauss:center,sigma
    #[arg(long, default_value = "box:1")]
    profile: String,
    /// start:stop:points-per-decade or a comma list
    #[arg(long, allow_hyphen_values = true)]
    times: Option<String>,
    #[arg(long, default_value_t = 20.0)]
    kmax: f64,
    #[arg(long, value_enum, default_value = "auto")]
    policy: Policy,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// grid nodes on [0, a] for snapshots
    #[arg(long, default_value_t = 257)]
    nodes: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = std::env::var("GAMOW_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    let config = RunConfig {
        lambda: args.lambda,
        width: args.width,
        profile: args.profile,
        times: args.times,
        k_max: args.kmax,
        policy: match args.policy {
            Policy::Direct => MethodPolicy::Direct,
            Policy::Rotated => MethodPolicy::Rotated,
            Policy::Both => MethodPolicy::Both,
            Policy::Auto => MethodPolicy::Auto,
        },
        out: args.out,
        format: match args.format {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        },
        nodes: args.nodes,
        ..RunConfig::default()
    };
    let command = match args.command {
        Cmd::Poles => Command::Poles,
        Cmd::Evolve => Command::Evolve,
        Cmd::Survival => Command::Survival,
        Cmd::Report => Command::Report,
    };
    match execute(command, &config) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
