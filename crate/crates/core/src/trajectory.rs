//! Sampled time series of observables, written as CSV with a header row.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Free-form run metadata (`key`, `value`), not part of the CSV body.
    pub meta: Vec<(String, String)>,
}

impl Trajectory {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self { columns: columns.iter().map(|c| c.as_ref().to_string()).collect(), rows: Vec::new(), meta: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn add_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.index(name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn last(&self, name: &str) -> Option<f64> {
        let k = self.index(name)?;
        self.rows.last().map(|r| r[k])
    }

    pub fn max(&self, name: &str) -> Option<f64> {
        self.column(name).map(|c| c.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Renames a column in place; no-op when absent.
    pub fn rename(&mut self, from: &str, to: &str) {
        if let Some(k) = self.index(from) {
            self.columns[k] = to.to_string();
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:.12e}")))?;
        }
        w.flush().map_err(Error::from)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut t = Trajectory::new(&columns);
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Format(format!("{s}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            t.push(row);
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut t = Trajectory::new(&["t", "p_ee"]);
        t.push(vec![0.0, 0.25]);
        t.push(vec![1.5, 1.0 / 3.0]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        t.save_csv(&path).unwrap();
        let back = Trajectory::read_csv(&path).unwrap();
        assert_eq!(back.columns, t.columns);
        assert!((back.last("p_ee").unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(t.to_csv_string().starts_with("t,p_ee\n"));
    }
}
