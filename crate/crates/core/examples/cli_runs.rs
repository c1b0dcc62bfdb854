//! Driving the command-line front end from code.
//!
//! Writes a run configuration and an instance file to a temporary
//! directory, then runs `shear-check` and a zero-forcing `solve` through
//! the same entry point as the `shearwave` binary.
//!
//! ```bash
//! cargo run --example cli_runs
//! ```

use shearwave::cli::{main_with_args, write_json, Forcing, InstanceFile, RunConfig};

fn main() -> shearwave::Result<()> {
    let dir = std::env::temp_dir().join("shearwave-cli-runs");
    std::fs::create_dir_all(&dir)?;
    let config = RunConfig {
        cutoffs: vec![4],
        vertical_m: 48,
        ..RunConfig::default()
    };
    let spec = dir.join("config.json");
    write_json(&spec, &config)?;
    let inst = dir.join("inst.json");
    write_json(
        &inst,
        &InstanceFile {
            domain: None,
            cutoffs: None,
            vertical_m: None,
            forcing: Forcing::None,
        },
    )?;
    let s = spec.to_string_lossy().into_owned();
    let code = main_with_args([
        "shearwave",
        "shear-check",
        "--spec",
        &s,
        "--out",
        &dir.join("shear").to_string_lossy(),
    ]);
    println!("shear-check exit code {code}");
    let i = inst.to_string_lossy().into_owned();
    let run = dir.join("run");
    let code = main_with_args([
        "shearwave",
        "solve",
        "--spec",
        &s,
        "--instance",
        &i,
        "--out",
        &run.to_string_lossy(),
    ]);
    println!("solve exit code {code}; artifacts in {}", run.display());
    Ok(())
}
