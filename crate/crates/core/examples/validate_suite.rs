//! Runs the cross-check suite and prints one line per check.
//!
//! `cargo run --release --example validate_suite -- [fast|full] [ID ...]`

use broadcast_backoff::validation::{self, Level};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let level: Level = args.next().as_deref().unwrap_or("fast").parse()?;
    let ids: Vec<String> = args.collect();
    let report = if ids.is_empty() {
        validation::run(level)
    } else {
        let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
        validation::run_selected(level, &ids)?
    };
    println!("{report}");
    if !report.passed() {
        std::process::exit(2);
    }
    Ok(())
}
