//! Plain-text run reports. Every stage writes `<stage>_report.txt` into the
//! output directory: what it counted, what it skipped, the seed, and the
//! full effective config. Reports carry no wall-clock content, so reruns
//! with identical inputs are byte-identical.

use crate::config::Settings;
use crate::CliError;
use std::fmt::Display;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct RunReport {
    stage: String,
    lines: Vec<String>,
}

impl RunReport {
    pub fn new(stage: impl Into<String>) -> Self {
        let stage = stage.into();
        RunReport {
            lines: vec![format!("photostyle {stage} run report"), String::new()],
            stage,
        }
    }

    pub fn kv(&mut self, key: &str, value: impl Display) {
        self.lines.push(format!("{key}: {value}"));
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    pub fn blank(&mut self) {
        self.lines.push(String::new());
    }

    /// Appends the effective configuration block.
    pub fn config(&mut self, settings: &Settings, source: Option<&Path>) {
        self.blank();
        match source {
            Some(p) => self.note(format!("effective config (file: {}):", p.display())),
            None => self.note("effective config (built-in defaults):"),
        }
        for line in settings.echo_lines() {
            self.lines.push(format!("  {line}"));
        }
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{}_report.txt", self.stage));
        std::fs::write(&path, self.render())
            .map_err(|e| CliError::Run(format!("cannot write report `{}`: {e}", path.display())))?;
        Ok(path)
    }
}
