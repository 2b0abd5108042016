use clap::{Parser, ValueEnum};
use planar_opoly::cli::{run, Command};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Clone, Copy, ValueEnum)]
enum Sub {
    Droplet,
    Expand,
    Oracle,
    Density,
    Berezin,
    Flow,
    Verify,
}

/// Planar orthogonal polynomial asymptotics: deterministic job runner.
///
/// The thread count follows `PLANAR_OPOLY_THREADS` (default: all cores).
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(value_enum)]
    subcommand: Sub,
    /// JSON job configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Ok(n) = std::env::var("PLANAR_OPOLY_THREADS") {
        match n.parse::<usize>() {
            Ok(k) if k > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global();
            }
            _ => {
                eprintln!("error: PLANAR_OPOLY_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let cmd = match args.subcommand {
        Sub::Droplet => Command::Droplet,
        Sub::Expand => Command::Expand,
        Sub::Oracle => Command::Oracle,
        Sub::Density => Command::Density,
        Sub::Berezin => Command::Berezin,
        Sub::Flow => Command::Flow,
        Sub::Verify => Command::Verify,
    };
    match run(cmd, &args.config, &args.out) {
        Ok(rep) => {
            for m in &rep.messages {
                println!("{m}");
            }
            for f in &rep.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
