//! Writes a synthetic keyword-labeled corpus in the default CSV schema.

use std::path::PathBuf;

use clap::Parser;
use hsdlab::fixtures::{generate, gold_csv, write_fixture, FixtureConfig};
use hsdlab::fsutil::write_atomic;

#[derive(Parser)]
#[command(name = "hsdlab-fixtures", version, about = "Generate a synthetic HOF/NOT corpus")]
struct Args {
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Fraction of labels flipped
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 2023)]
    seed: u64,
    /// Prefix for sample ids
    #[arg(long, default_value = "s")]
    prefix: String,
    #[arg(long)]
    out: PathBuf,
    /// Also write an `id,label` gold file
    #[arg(long)]
    gold: Option<PathBuf>,
}

fn main() {
    let args = Args::parse();
    let cfg = FixtureConfig {
        n: args.n,
        noise: args.noise,
        seed: args.seed,
    };
    let result = generate(&cfg, &args.prefix).and_then(|ds| {
        write_fixture(&ds, &args.out)?;
        if let Some(path) = &args.gold {
            write_atomic(path, gold_csv(&ds)?.as_bytes())?;
        }
        Ok(())
    });
    if let Err(e) = result {
        eprintln!("hsdlab-fixtures: error[{}]: {e}", e.kind().as_str());
        std::process::exit(hsdlab::cli::exit_code(e.kind()));
    }
}
