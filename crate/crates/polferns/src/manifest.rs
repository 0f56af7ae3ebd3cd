//! `run.manifest`: everything needed to repeat a command.
//!
//! Sections hold `key = value` lines in insertion order. The `[timings]`
//! section is the only part that differs between otherwise identical runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "run.manifest";

#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub config: Vec<(String, String)>,
    pub inputs: Vec<(String, PathBuf)>,
    pub outputs: Vec<(String, PathBuf)>,
    pub timings: Vec<(String, Duration)>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.into(),
            args: std::env::args().skip(1).collect(),
            ..Default::default()
        }
    }

    pub fn config(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.push((key.into(), value.to_string()));
        self
    }

    pub fn input(&mut self, key: &str, path: &Path) -> &mut Self {
        self.inputs.push((key.into(), path.to_path_buf()));
        self
    }

    pub fn output(&mut self, key: &str, path: &Path) -> &mut Self {
        self.outputs.push((key.into(), path.to_path_buf()));
        self
    }

    pub fn timing(&mut self, key: &str, elapsed: Duration) -> &mut Self {
        self.timings.push((key.into(), elapsed));
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "command = {}", self.command).unwrap();
        writeln!(out, "version = {}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(out, "args = {}", self.args.join(" ")).unwrap();
        if let Some(seed) = self.seed {
            writeln!(out, "seed = {seed}").unwrap();
        }
        let mut section = |name: &str, rows: Vec<(&str, String)>| {
            writeln!(out, "\n[{name}]").unwrap();
            for (k, v) in rows {
                writeln!(out, "{k} = {v}").unwrap();
            }
        };
        section(
            "config",
            self.config
                .iter()
                .map(|(k, v)| (k.as_str(), v.clone()))
                .collect(),
        );
        section("inputs", paths(&self.inputs));
        section("outputs", paths(&self.outputs));
        section(
            "timings",
            self.timings
                .iter()
                .map(|(k, d)| (k.as_str(), format!("{:.6}", d.as_secs_f64())))
                .collect(),
        );
        out
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        std::fs::write(&path, self.render()).map_err(Error::io(&path))?;
        Ok(path)
    }
}

fn paths(v: &[(String, PathBuf)]) -> Vec<(&str, String)> {
    v.iter()
        .map(|(k, p)| (k.as_str(), p.display().to_string()))
        .collect()
}
