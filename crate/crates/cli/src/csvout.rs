//! CSV emission: UTF-8, LF line endings, comma separators, '#'-prefixed
//! header comments echoing the effective configuration, floats at 17
//! significant digits for round-trip fidelity.

use std::io::Write;
use std::path::Path;

use crate::config::RunConfig;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvDoc {
    lines: Vec<String>,
}

impl CsvDoc {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let mut lines = vec![
            format!("# kaclab {}", env!("CARGO_PKG_VERSION")),
            format!("# command={command}"),
        ];
        for (k, v) in config.entries() {
            lines.push(format!("# {k}={v}"));
        }
        CsvDoc { lines }
    }

    pub fn comment(&mut self, text: &str) {
        self.lines.push(format!("# {text}"));
    }

    pub fn columns(&mut self, names: &[&str]) {
        self.lines.push(names.join(","));
    }

    pub fn row(&mut self, fields: &[String]) {
        self.lines.push(fields.join(","));
    }

    pub fn render(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }

    /// Writes to the path when given, stdout otherwise.
    pub fn emit(&self, out: Option<&Path>) -> std::io::Result<()> {
        let text = self.render();
        match out {
            Some(path) => std::fs::write(path, text),
            None => std::io::stdout().write_all(text.as_bytes()),
        }
    }
}
