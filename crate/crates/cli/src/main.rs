use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cdft_cli::{run, Command, Invocation};

/// Constrained-search CDFT laboratory.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = std::env::var("CDFT_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("CDFT_THREADS ignored: {e}");
        }
    }
    let inv = Invocation { command: args.command, config: args.config, output_dir: args.output_dir, seed: args.seed };
    let (code, manifest) = run(&inv);
    match &manifest.error {
        Some(e) => eprintln!("{}: {} ({})", manifest.command, e.message, e.name),
        None => println!("{}: ok, {} artifacts", manifest.command, manifest.artifacts.len()),
    }
    ExitCode::from(code as u8)
}
