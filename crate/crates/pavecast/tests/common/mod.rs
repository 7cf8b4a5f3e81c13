#![allow(dead_code)]

use std::path::{Path, PathBuf};

use clap::Parser;
use pavecast::cli::{run, Cli};
use pavecast::Result;

/// A small run that trains every model in a few seconds.
pub const FAST: &str = r#"
synthetic_sections = 60
seed = 11

[transformer]
d_model = 8
heads = 2
d_k = 4
layers = 1
d_ff = 16
max_epochs = 15
patience = 5

[baselines]
forest_trees = 10
gbt_rounds = 20
mlp_epochs = 30
"#;

pub fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

/// Runs the CLI in-process and returns its standard output.
pub fn cli(args: &[&str]) -> (Result<()>, String) {
    let mut argv = vec!["pavecast"];
    argv.extend_from_slice(args);
    let parsed = Cli::try_parse_from(argv).expect("arguments parse");
    let mut out = Vec::new();
    let r = run(parsed, &mut out);
    (r, String::from_utf8(out).unwrap())
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
