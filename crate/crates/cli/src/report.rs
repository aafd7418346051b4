use std::io::Write;
use std::path::Path;

use protofeat::eval::Metrics;
use protofeat::{Error, Result};

/// A small table written as CSV and printed aligned.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(&self.header).map_err(csv_error)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn print(&self, out: &mut impl Write) -> Result<()> {
        let n = self.header.len();
        let mut width = vec![0; n];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (i, c) in r.iter().enumerate().take(n) {
                width[i] = width[i].max(c.len());
            }
        }
        let line = |r: &[String]| {
            r.iter()
                .enumerate()
                .map(|(i, c)| format!("{c:>w$}", w = width[i]))
                .collect::<Vec<_>>()
                .join("  ")
        };
        writeln!(out, "{}", line(&self.header))?;
        writeln!(
            out,
            "{}",
            width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ")
        )?;
        for r in &self.rows {
            writeln!(out, "{}", line(r))?;
        }
        Ok(())
    }

    /// Writes the CSV when a path is given and prints the table to stdout.
    pub fn emit(&self, csv_path: Option<&Path>) -> Result<()> {
        if let Some(p) = csv_path {
            self.write_csv(p)?;
        }
        self.print(&mut std::io::stdout().lock())
    }
}

pub fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Decode(format!("{other:?}")),
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.4}"))
}

pub const METRIC_COLUMNS: [&str; 10] = [
    "tp",
    "fp",
    "tn",
    "fn",
    "se",
    "sp",
    "accuracy",
    "mcc",
    "recognition",
    "fpRate",
];

pub fn metric_cells(m: &Metrics) -> Vec<String> {
    vec![
        m.tp.to_string(),
        m.fp.to_string(),
        m.tn.to_string(),
        m.fn_.to_string(),
        fmt_opt(m.se),
        fmt_opt(m.sp),
        fmt_opt(m.accuracy),
        fmt_opt(m.mcc),
        fmt_opt(m.recognition_rate),
        fmt_opt(m.false_positive_rate),
    ]
}
