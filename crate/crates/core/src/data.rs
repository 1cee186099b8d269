//! Observation storage, sample splits and the headered CSV format
//! (`y1,...,yd`, one observation per row).

use std::collections::HashSet;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// An ordered, nonempty collection of finite observations of a common dimension.
///
/// Stored row-major in a flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("observation dimension must be at least 1"));
        }
        if values.is_empty() {
            return Err(Error::invalid("dataset must be nonempty"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} values cannot be split into rows of dimension {dim}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("observation {} contains a non-finite value", pos / dim)));
        }
        Ok(Self { dim, values })
    }

    /// One-dimensional dataset.
    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(i) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::invalid(format!("row {i} has dimension {} but row 0 has {dim}", rows[i].len())));
        }
        Self::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    /// Checks that every index is in range and that the set is nonempty.
    pub fn check_indices(&self, idx: &[usize]) -> Result<()> {
        if idx.is_empty() {
            return Err(Error::invalid("index set must be nonempty"));
        }
        let n = self.len();
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::invalid(format!("index {bad} out of range for {n} observations")));
        }
        Ok(())
    }

    /// Scalar values at `idx`; the dataset must be one-dimensional.
    pub fn scalars_at(&self, idx: &[usize]) -> Result<Vec<f64>> {
        if self.dim != 1 {
            return Err(Error::invalid(format!("expected one-dimensional data, got dimension {}", self.dim)));
        }
        self.check_indices(idx)?;
        Ok(idx.iter().map(|&i| self.values[i]).collect())
    }

    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        self.check_indices(idx)?;
        let mut values = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Dataset::new(self.dim, values)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
        let mut rows = CsvRows::new(reader)?;
        let dim = rows.dim();
        let mut values = Vec::new();
        for row in &mut rows {
            values.extend(row?.1);
        }
        if values.is_empty() {
            return Err(Error::Csv { line: 2, message: "no observations".into() });
        }
        Dataset::new(dim, values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (1..=self.dim).map(|j| format!("y{j}")).collect();
        w.write_record(&header).map_err(csv_io)?;
        for row in self.rows() {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Incremental reader over a headered observation CSV, yielding
/// `(line_number, values)` one row at a time.
pub struct CsvRows<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    dim: usize,
}

impl<R: Read> CsvRows<R> {
    pub fn new(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Csv { line: 1, message: e.to_string() })?.clone();
        let dim = headers.len();
        if dim == 0 || (dim == 1 && headers[0].is_empty()) {
            return Err(Error::Csv { line: 1, message: "missing header row".into() });
        }
        for (j, name) in headers.iter().enumerate() {
            let expected = format!("y{}", j + 1);
            if name != expected {
                return Err(Error::Csv {
                    line: 1,
                    message: format!("header column {} is `{name}`, expected `{expected}`", j + 1),
                });
            }
        }
        Ok(Self { records: rdr.into_records(), dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl<R: Read> Iterator for CsvRows<R> {
    type Item = Result<(u64, Vec<f64>)>;

    fn next(&mut self) -> Option<Self::Item> {
        let record = match self.records.next()? {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Some(Err(Error::Csv { line, message: e.to_string() }));
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != self.dim {
            return Some(Err(Error::Csv {
                line,
                message: format!("expected {} fields, found {}", self.dim, record.len()),
            }));
        }
        let mut row = Vec::with_capacity(self.dim);
        for field in record.iter() {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => return Some(Err(Error::Csv { line, message: format!("`{field}` is not a finite number") })),
            }
        }
        Some(Ok((line, row)))
    }
}

/// A partition of (a subset of) the observation indices into the evaluation
/// half `d0` and the estimation half `d1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSplit {
    pub d0: Vec<usize>,
    pub d1: Vec<usize>,
}

impl DataSplit {
    pub fn new(d0: Vec<usize>, d1: Vec<usize>, n: usize) -> Result<Self> {
        if d0.is_empty() || d1.is_empty() {
            return Err(Error::invalid("both halves of a split must be nonempty"));
        }
        let mut seen = HashSet::with_capacity(d0.len() + d1.len());
        for &i in d0.iter().chain(&d1) {
            if i >= n {
                return Err(Error::invalid(format!("split index {i} out of range for {n} observations")));
            }
            if !seen.insert(i) {
                return Err(Error::invalid(format!("split index {i} appears twice")));
            }
        }
        Ok(Self { d0, d1 })
    }

    /// `d0` = first ⌊n/2⌋ observations, `d1` = the rest.
    pub fn first_half(n: usize) -> Result<Self> {
        let h = n / 2;
        Self::new((0..h).collect(), (h..n).collect(), n)
    }

    /// Uniformly random half/half partition (`d1` gets the extra point when `n` is odd).
    pub fn random_halves<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let d1 = idx.split_off(n / 2);
        Self::new(idx, d1, n)
    }

    pub fn swapped(&self) -> Self {
        Self { d0: self.d1.clone(), d1: self.d0.clone() }
    }

    pub fn is_balanced(&self) -> bool {
        self.d0.len() == self.d1.len()
    }

    /// All indices covered by the split, `d0` first.
    pub fn indices(&self) -> Vec<usize> {
        self.d0.iter().chain(&self.d1).copied().collect()
    }
}
