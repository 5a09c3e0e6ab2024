//! Plain CSV tables with fixed numeric formatting.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

/// Twelve significant digits in scientific notation; `nan` for NaN.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.11e}")
    }
}

/// [`num`] for present values, empty otherwise.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone)]
pub struct Table {
    banner: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            banner: Vec::new(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// A `# `-prefixed line above the header.
    pub fn banner(&mut self, line: &str) {
        self.banner.push(format!("# {line}"));
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for b in &self.banner {
            let _ = writeln!(out, "{b}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.0), "1.00000000000e0");
        assert_eq!(num(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(opt(None), "");
    }

    #[test]
    fn banner_precedes_header() {
        let mut t = Table::new(["a", "b"]);
        t.banner("NOT_CONVERGED");
        t.row(vec![num(1.0), String::new()]);
        assert_eq!(t.render(), "# NOT_CONVERGED\na,b\n1.00000000000e0,\n");
    }
}
