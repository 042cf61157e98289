//! Observations `(Yᵢ, Xᵢ)` and their CSV form.
//!
//! The CSV header is `y,x1,...,xd`; numbers are written with 17 significant
//! digits so a write/read cycle reproduces every `f64` bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits (round-trip exact).
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    y: Vec<f64>,
    x: Vec<f64>,
    dim: usize,
}

impl SampleSet {
    /// `x` is row-major with `dim` columns.
    pub fn new(y: Vec<f64>, x: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("samples need at least one covariate".into()));
        }
        if x.len() != y.len() * dim {
            return Err(Error::Invalid(format!(
                "covariate array has {} entries, expected {} x {dim}",
                x.len(),
                y.len()
            )));
        }
        if y.is_empty() {
            return Err(Error::Invalid("sample set is empty".into()));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("y in row {}", i + 1)));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("x in row {}", i / dim + 1)));
        }
        Ok(Self { y, x, dim })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn covariates(&self) -> &[f64] {
        &self.x
    }

    pub fn column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.x.iter().skip(k).step_by(self.dim).copied()
    }

    /// Sample standard deviation of column `k` (`None` selects `y`).
    pub fn std_dev(&self, column: Option<usize>) -> f64 {
        let vals: Vec<f64> = match column {
            None => self.y.clone(),
            Some(k) => self.column(k).collect(),
        };
        let n = vals.len() as f64;
        if vals.len() < 2 {
            return 0.0;
        }
        let mean = vals.iter().sum::<f64>() / n;
        (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    /// The same rows with every response mapped through `f`.
    pub fn map_y(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.y.iter().map(|v| f(*v)).collect(), self.x.clone(), self.dim)
    }

    pub fn header(&self) -> Vec<String> {
        std::iter::once("y".to_string())
            .chain((1..=self.dim).map(|k| format!("x{k}")))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.header())?;
        let mut record = Vec::with_capacity(self.dim + 1);
        for i in 0..self.n() {
            record.clear();
            record.push(fmt_f64(self.y[i]));
            record.extend(self.row(i).iter().map(|v| fmt_f64(*v)));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = r.headers()?.clone();
        let cols: Vec<&str> = header.iter().map(str::trim).collect();
        if cols.len() < 2 || cols[0] != "y" {
            return Err(Error::Invalid(format!(
                "sample CSV header must be y,x1,...,xd; got {}",
                cols.join(",")
            )));
        }
        for (k, c) in cols.iter().enumerate().skip(1) {
            if *c != format!("x{k}") {
                return Err(Error::Invalid(format!(
                    "sample CSV column {} must be named x{k}, found '{c}'",
                    k + 1
                )));
            }
        }
        let dim = cols.len() - 1;
        let mut y = Vec::new();
        let mut x = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != dim + 1 {
                return Err(Error::Invalid(format!(
                    "row {} has {} fields, expected {}",
                    line + 2,
                    rec.len(),
                    dim + 1
                )));
            }
            for (k, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Invalid(format!("row {} column {}: '{field}' is not a number", line + 2, k + 1))
                })?;
                if k == 0 {
                    y.push(v);
                } else {
                    x.push(v);
                }
            }
        }
        Self::new(y, x, dim)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}
