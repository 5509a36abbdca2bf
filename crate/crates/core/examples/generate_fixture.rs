//! Writes the bundled population as files the CLI can consume.
//!
//! ```text
//! cargo run --example generate_fixture -- crates/core/fixtures
//! ```
//!
//! Produces `population.csv` (rank,domain), `sim.json` (origin config with
//! the bundled population on 127.0.0.1:8080) and `origin-map.json` (every
//! host to that origin).

use std::path::PathBuf;

use utiq_lab::fixture::Population;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    let population = Population::bundled();

    std::fs::write(dir.join("population.csv"), population.to_tranco_csv())?;
    std::fs::write(
        dir.join("sim.json"),
        "{\n  \"bind\": \"127.0.0.1:8080\",\n  \"bundled_population\": true\n}\n",
    )?;
    std::fs::write(
        dir.join("origin-map.json"),
        "{\n  \"default\": \"http://127.0.0.1:8080\"\n}\n",
    )?;

    println!(
        "wrote {} domains ({} adopters) to {}",
        population.len(),
        population.adopters().len(),
        dir.display()
    );
    Ok(())
}
