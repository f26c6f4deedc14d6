//! Result tables and their CSV form.

use std::fs;
use std::path::Path;

use crate::BenchError;

/// Column headers, rows of formatted cells and `#` metadata lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Locale-independent shortest round-trip form.
pub fn num(v: f64) -> String {
    format!("{v}")
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row arity");
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    /// Cells of the named column, top to bottom.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    /// Metadata lines, then the header and the records.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        let body = w.into_inner().expect("in-memory flush");
        out.push_str(std::str::from_utf8(&body).expect("cells are UTF-8"));
        out
    }
}

/// Writes `table` to `path` as UTF-8 CSV.
pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<(), BenchError> {
    fs::write(path, table.to_csv()).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}
