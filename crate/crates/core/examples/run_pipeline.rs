//! Drives the batch runner from code: writes a config, runs the caustics
//! pipeline and prints the manifest.

use std::fs;

use semiclassics::cli::{run, Invocation, Pipeline};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("semiclassics-example");
    fs::create_dir_all(&dir)?;
    let config = dir.join("caustics.json");
    fs::write(
        &config,
        r##"{
  "hamiltonian": {"text": "# harmonic oscillator\n0.5 2 0\n0.5 0 2"},
  "times": [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
  "caustics": {"source": {"orbit": [1.0, 0.5]}}
}"##,
    )?;
    let manifest = run(&Invocation {
        pipeline: Pipeline::Caustics,
        config,
        out: Some(dir.join("out")),
        seed_convention: None,
    });
    println!("{}", serde_json::to_string_pretty(&manifest)?);
    println!("exit code {}", manifest.exit_code());
    Ok(())
}
