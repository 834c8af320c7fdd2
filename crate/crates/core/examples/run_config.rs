//! Run a JSON experiment config and write `results.csv` and `manifest.json`,
//! exactly as `smoothedvotes run` does.
//!
//! ```text
//! cargo run --release --example run_config -- crates/core/examples/prop63.json /tmp/prop63
//! ```

use std::error::Error;
use std::path::PathBuf;

use smoothed_votes::cli::{run, verify_manifest, RunOptions};
use smoothed_votes::smoothed::read_csv;

fn main() -> Result<(), Box<dyn Error>> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/margins.json").into());
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("smoothedvotes-example"));
    let manifest = run(&config, &out, &RunOptions::default())?;
    verify_manifest(&manifest)?;
    let rows = read_csv(std::fs::File::open(&manifest.outputs[0])?)?;
    println!("{} -> {} ({} rows, config {})", config.display(), out.display(), rows.len(), &manifest.config_hash[..12]);
    for r in rows.iter().take(12) {
        println!("  {:<28} {:>10} {:>5} {:>6} {:.4}", r.experiment, r.axiom, r.phi, r.n, r.p_hat);
    }
    Ok(())
}
