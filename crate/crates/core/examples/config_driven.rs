//! Parses a JSON run configuration with expression-valued data, solves it
//! and runs the experiments it lists, the same path the binary takes.
//!
//! ```bash
//! cargo run --release --example config_driven
//! ```

use carnot_lab::runner::{self, Mode, RunOptions};
use carnot_lab::{parse_config, Expr};

const CONFIG: &str = r#"{
    "group": "euclidean(2)",
    "box": [-1, 1],
    "cells": 16,
    "h": 3,
    "T": 0.05,
    "psi": "x1^2 - x2^2 + 0.1*max(x1, x2)",
    "g": "x1^2 - x2^2 + 0.1*max(x1, x2)",
    "snapshots": [0.01, 0.05],
    "experiments": ["comparison", "sup_bound", "homogeneity", "doubling_penalty"],
    "seed": 3
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let e = Expr::parse("x1*x2 + 2^-1*t", 2)?;
    println!("{e:?} at (3, 4, t = 1) = {}", e.eval(&[3.0, 4.0], 1.0));
    println!("polynomial form: {:?}", e.to_poly());
    println!("bad name: {}", Expr::parse("x3 + 1", 2).unwrap_err());

    let config = parse_config(CONFIG)?;
    let out = std::env::temp_dir().join("carnot_lab_config_driven");
    let options = RunOptions { out: Some(out.clone()), seed: None, quiet: false };
    let solved = runner::run(&config, Mode::Solve, &options)?;
    let verified = runner::run(&config, Mode::Verify, &options)?;
    println!("exit codes: solve {solved}, verify {verified}; artifacts in {}", out.display());

    let bad = CONFIG.replace("\"h\": 3", "\"h\": 0.5");
    println!("h = 0.5: {}", parse_config(&bad).unwrap_err());
    Ok(())
}
