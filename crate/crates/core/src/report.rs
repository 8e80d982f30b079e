//! Result tables rendered as CSV or aligned text.
//!
//! Both formats start with `# key: value` comment lines describing the run.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::Aggregate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Table,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "table" => Ok(Format::Table),
            other => Err(Error::Config(format!(
                "unknown format `{other}`; expected csv or table"
            ))),
        }
    }
}

/// `mean ± std` with four decimals.
pub fn mean_std(a: &Aggregate) -> String {
    mean_std_digits(a, 4)
}

/// `mean ± std` with `digits` decimals; used for timings too small to show
/// at four.
pub fn mean_std_digits(a: &Aggregate, digits: usize) -> String {
    format!("{:.digits$} ± {:.digits$}", a.mean, a.std)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    meta: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Report {
            meta: Vec::new(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn push_row(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Invalid(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn render(&self, format: Format) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row)?;
                }
                let bytes = w
                    .into_inner()
                    .map_err(|e| Error::Invalid(format!("csv buffer: {e}")))?;
                out.push_str(&String::from_utf8_lossy(&bytes));
            }
            Format::Table => {
                let width = |s: &String| s.chars().count();
                let mut widths: Vec<usize> = self.columns.iter().map(width).collect();
                for row in &self.rows {
                    for (w, cell) in widths.iter_mut().zip(row) {
                        *w = (*w).max(width(cell));
                    }
                }
                let line = |cells: &[String], out: &mut String| {
                    let padded: Vec<String> = cells
                        .iter()
                        .zip(&widths)
                        .map(|(c, &w)| format!("{c}{}", " ".repeat(w - width(c))))
                        .collect();
                    let _ = writeln!(out, "{}", padded.join("  ").trim_end());
                };
                line(&self.columns, &mut out);
                let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
                line(&rule, &mut out);
                for row in &self.rows {
                    line(row, &mut out);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new(["algorithm", "error_rate"]);
        r.meta("seed", 7);
        r.push_row(vec!["PA".into(), "0.2981 ± 0.0201".into()]).unwrap();
        r.push_row(vec!["Perceptron".into(), "0.3100 ± 0.0300".into()]).unwrap();
        r
    }

    #[test]
    fn csv_layout() {
        let text = sample().render(Format::Csv).unwrap();
        assert_eq!(
            text,
            "# seed: 7\nalgorithm,error_rate\nPA,0.2981 ± 0.0201\nPerceptron,0.3100 ± 0.0300\n"
        );
    }

    #[test]
    fn table_alignment() {
        let text = sample().render(Format::Table).unwrap();
        let lines: Vec<&str> = text.lines().skip(1).collect();
        let col = lines[0].find("error_rate").unwrap();
        assert_eq!(lines[2].chars().position(|c| c == '0'), Some(col));
        assert_eq!(lines[3].chars().position(|c| c == '0'), Some(col));
    }

    #[test]
    fn mean_std_format() {
        let a = Aggregate::from_values(&[0.25, 0.35]).unwrap();
        assert_eq!(mean_std(&a), "0.3000 ± 0.0707");
    }

    #[test]
    fn ragged_row_rejected() {
        let mut r = Report::new(["a", "b"]);
        assert!(r.push_row(vec!["x".into()]).is_err());
        assert!("tsv".parse::<Format>().is_err());
    }
}
