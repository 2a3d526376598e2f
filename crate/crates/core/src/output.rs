//! Deterministic CSV writing: a `#` metadata block, a header row, then rows
//! with every number in 17 significant digits.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// Fixed 17-significant-digit scientific notation.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    meta: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    footer: Vec<String>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            ..Default::default()
        }
    }

    /// Adds `# line` to the leading metadata block.
    pub fn meta(&mut self, line: impl Into<String>) -> &mut Self {
        self.meta.push(line.into());
        self
    }

    pub fn meta_kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.meta(format!("{key} = {value}"))
    }

    pub fn row_nums(&mut self, values: &[f64]) -> &mut Self {
        self.rows.push(values.iter().map(|&v| num(v)).collect());
        self
    }

    pub fn row(&mut self, cells: Vec<String>) -> &mut Self {
        self.rows.push(cells);
        self
    }

    /// Adds `# key = value` after the data rows.
    pub fn footer_kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.footer.push(format!("{key} = {value}"));
        self
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for m in &self.meta {
            let _ = writeln!(s, "# {m}");
        }
        let _ = writeln!(s, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        for f in &self.footer {
            let _ = writeln!(s, "# {f}");
        }
        s
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.render())
    }
}
