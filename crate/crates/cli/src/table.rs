//! Result rows and their CSV form.

use std::cmp::Ordering;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{CliError, Result};

pub const CSV_HEADER: [&str; 7] = [
    "sweep_name",
    "sweep_value",
    "scheme",
    "metric",
    "estimate",
    "ci_halfwidth",
    "analytic",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub scheme: String,
    pub metric: String,
    pub estimate: f64,
    pub ci_halfwidth: f64,
    /// Closed-form value, where one exists for the scheme and metric.
    pub analytic: Option<f64>,
}

impl Row {
    /// Row with every float rounded to the precision written to CSV, so that
    /// a table survives a round trip through its file unchanged.
    pub fn new(
        sweep_name: &str,
        sweep_value: f64,
        scheme: &str,
        metric: &str,
        estimate: f64,
        ci_halfwidth: f64,
        analytic: Option<f64>,
    ) -> Self {
        Row {
            sweep_name: sweep_name.to_string(),
            sweep_value: quantize(sweep_value),
            scheme: scheme.to_string(),
            metric: metric.to_string(),
            estimate: quantize(estimate),
            ci_halfwidth: quantize(ci_halfwidth),
            analytic: analytic.map(quantize),
        }
    }

    fn order(&self, other: &Row) -> Ordering {
        self.sweep_value
            .total_cmp(&other.sweep_value)
            .then_with(|| self.scheme.cmp(&other.scheme))
            .then_with(|| self.metric.cmp(&other.metric))
    }
}

/// Ten significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.9e}")
}

fn quantize(x: f64) -> f64 {
    format_float(x).parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<Row>,
}

impl ResultTable {
    /// Sorts by `(sweep_value, scheme, metric)`; ties keep insertion order.
    pub fn sort(&mut self) {
        self.rows.sort_by(Row::order);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Writes the CSV to `out`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.sweep_name.clone(),
                format_float(r.sweep_value),
                r.scheme.clone(),
                r.metric.clone(),
                format_float(r.estimate),
                format_float(r.ci_halfwidth),
                r.analytic.map(format_float).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses CSV written by [`ResultTable::write_csv`].
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r.headers().map_err(|e| CliError::Parse(e.to_string()))?;
        if header.iter().ne(CSV_HEADER) {
            return Err(CliError::Parse(format!("unexpected header {header:?}")));
        }
        let float = |s: &str, line: u64| {
            s.parse::<f64>()
                .map_err(|_| CliError::Parse(format!("line {line}: {s:?} is not a number")))
        };
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| CliError::Parse(e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            let analytic = match &rec[6] {
                "" => None,
                s => Some(float(s, line)?),
            };
            rows.push(Row {
                sweep_name: rec[0].to_string(),
                sweep_value: float(&rec[1], line)?,
                scheme: rec[2].to_string(),
                metric: rec[3].to_string(),
                estimate: float(&rec[4], line)?,
                ci_halfwidth: float(&rec[5], line)?,
                analytic,
            });
        }
        Ok(ResultTable { rows })
    }
}

/// Writes `table` to `path` as CSV.
pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    if table.is_empty() {
        return Err(CliError::config("refusing to write an empty table"));
    }
    let file = std::fs::File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    table.write_csv(std::io::BufWriter::new(file)).map_err(|source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a CSV file written by [`emit_csv`].
pub fn parse_csv(path: &Path) -> Result<ResultTable> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ResultTable::read_csv(std::io::BufReader::new(file))
}
