//! Time-stamped scalar records with free-form provenance metadata.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSeries {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<(f64, Vec<f64>)>,
    pub metadata: BTreeMap<String, String>,
}

impl DiagnosticSeries {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    /// Appends one row; panics if the width does not match the columns.
    pub fn push(&mut self, t: f64, values: Vec<f64>) {
        assert_eq!(values.len(), self.columns.len(), "row width mismatch in {}", self.name);
        self.rows.push((t, values));
    }

    pub fn annotate(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.0).collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.1[k]).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV with a `t` column first; metadata goes in leading `#` lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s.push('t');
        for c in &self.columns {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for (t, vals) in &self.rows {
            let _ = write!(s, "{t:.17e}");
            for v in vals {
                let _ = write!(s, ",{v:.17e}");
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut d = DiagnosticSeries::new("mass", &["m", "e"]);
        d.annotate("seed", 4);
        d.push(0.0, vec![1.0, 2.0]);
        d.push(0.5, vec![1.0, 2.5]);
        let csv = d.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# seed = 4");
        assert_eq!(lines[1], "t,m,e");
        assert_eq!(lines.len(), 4);
        assert_eq!(d.column("e").unwrap(), vec![2.0, 2.5]);
        assert!(d.column("x").is_none());
    }
}
