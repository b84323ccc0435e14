//! CSV emission: `#` comment preamble, a header row, then `{:.14e}` values.

use crate::config::RunConfig;
use std::io::Write;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Csv<'a> {
    out: &'a mut dyn Write,
}

impl<'a> Csv<'a> {
    /// Writes the provenance comment: version, command and seed.
    pub fn new(out: &'a mut dyn Write, cfg: &RunConfig) -> std::io::Result<Self> {
        writeln!(out, "# fraglog {VERSION} command={} seed={}", cfg.command.name(), cfg.seed)?;
        Ok(Csv { out })
    }

    pub fn comment(&mut self, text: &str) -> std::io::Result<()> {
        writeln!(self.out, "# {text}")
    }

    /// Documents the formula behind a column.
    pub fn formula(&mut self, column: &str, formula: &str) -> std::io::Result<()> {
        writeln!(self.out, "# {column} = {formula}")
    }

    pub fn header(&mut self, columns: &[&str]) -> std::io::Result<()> {
        writeln!(self.out, "{}", columns.join(","))
    }

    pub fn row(&mut self, values: &[f64]) -> std::io::Result<()> {
        let cells: Vec<String> = values.iter().map(|v| format_value(*v)).collect();
        writeln!(self.out, "{}", cells.join(","))
    }
}

pub fn format_value(v: f64) -> String {
    format!("{v:.14e}")
}
