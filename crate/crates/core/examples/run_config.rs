//! Parse a run config, execute it into a scratch directory and report the checks.
//!
//! `cargo run --example run_config -- [path/to/config.json]`

use univ_lab::cli::{execute, RunConfig};

fn main() -> univ_lab::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/quick.json").to_string());
    let text = std::fs::read_to_string(&path)?;
    let mut cfg = RunConfig::parse(&text)?;
    cfg.out = std::env::temp_dir().join(format!("univ-example-{}", cfg.digest()));
    let summary = execute(&cfg, true)?;
    for e in &summary.experiments {
        println!("{}: {} rows -> {}", e.name, e.rows, cfg.out.join(&e.csv).display());
    }
    for c in &summary.checks {
        println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.label);
    }
    Ok(())
}
