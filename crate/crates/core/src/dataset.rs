//! Observation matrices, CSV ingestion and seeded synthetic data.
//!
//! A [`Dataset`] stores its values column-major: every coordinate is one
//! contiguous `n`-length slice. The distance kernels sweep a column at a time
//! over blocks of observations, so this layout lets the inner loop vectorize
//! without ever copying the data.

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

const IRIS_CSV: &str = include_str!("../data/iris.csv");

/// An `n x p` matrix of finite observations; row `i` is observation `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    columns: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from row-major values with `p` columns.
    pub fn from_row_major(values: &[f64], p: usize) -> Result<Self> {
        if p == 0 || values.is_empty() {
            return Err(Error::EmptyDataset {
                n: if p == 0 { 0 } else { values.len() / p },
                p,
            });
        }
        if values.len() % p != 0 {
            return Err(Error::ShapeMismatch {
                len: values.len(),
                p,
            });
        }
        let n = values.len() / p;
        let mut columns = vec![0.0; n * p];
        for (i, row) in values.chunks_exact(p).enumerate() {
            for (k, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, column: k });
                }
                columns[k * n + i] = v;
            }
        }
        Ok(Dataset { n, p, columns })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let p = rows.first().map_or(0, |r| r.as_ref().len());
        let mut flat = Vec::with_capacity(rows.len() * p);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != p {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} values, expected {p}",
                    r.len()
                )));
            }
            flat.extend_from_slice(r);
        }
        Self::from_row_major(&flat, p)
    }

    /// Builds a dataset from column-major storage (`p` columns of length `n`).
    pub fn from_column_major(columns: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 || columns.is_empty() {
            return Err(Error::EmptyDataset { n, p: 0 });
        }
        if columns.len() % n != 0 {
            return Err(Error::ShapeMismatch {
                len: columns.len(),
                p: columns.len() / n,
            });
        }
        let p = columns.len() / n;
        if let Some(pos) = columns.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos % n,
                column: pos / n,
            });
        }
        Ok(Dataset { n, p, columns })
    }

    /// A single-column dataset.
    pub fn from_column(values: &[f64]) -> Result<Self> {
        Self::from_column_major(values.to_vec(), values.len())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    /// Coordinate `k` of every observation.
    #[inline]
    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k * self.n..(k + 1) * self.n]
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.columns[k * self.n + i]
    }

    /// Copies observation `i` into `buf` (which must hold `p` values).
    #[inline]
    pub fn row_into(&self, i: usize, buf: &mut [f64]) {
        for (k, b) in buf.iter_mut().enumerate().take(self.p) {
            *b = self.columns[k * self.n + i];
        }
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        let mut buf = vec![0.0; self.p];
        self.row_into(i, &mut buf);
        buf
    }

    /// Rows in `range`, as a new dataset.
    pub fn rows(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.n {
            return Err(Error::InvalidArgument(format!(
                "row range {range:?} is empty or out of bounds for {} rows",
                self.n
            )));
        }
        let n = range.len();
        let mut columns = Vec::with_capacity(n * self.p);
        for k in 0..self.p {
            columns.extend_from_slice(&self.column(k)[range.clone()]);
        }
        Ok(Dataset {
            n,
            p: self.p,
            columns,
        })
    }

    /// Columns in `range`, as a new dataset.
    pub fn columns(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.p {
            return Err(Error::InvalidArgument(format!(
                "column range {range:?} is empty or out of bounds for {} columns",
                self.p
            )));
        }
        Ok(Dataset {
            n: self.n,
            p: range.len(),
            columns: self.columns[range.start * self.n..range.end * self.n].to_vec(),
        })
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Dataset) -> Result<Self> {
        if self.p != other.p {
            return Err(Error::DimensionMismatch {
                left: self.p,
                right: other.p,
            });
        }
        let n = self.n + other.n;
        let mut columns = Vec::with_capacity(n * self.p);
        for k in 0..self.p {
            columns.extend_from_slice(self.column(k));
            columns.extend_from_slice(other.column(k));
        }
        Ok(Dataset {
            n,
            p: self.p,
            columns,
        })
    }

    /// Applies `f(row, column, value)` to every entry.
    pub fn map(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<Self> {
        let mut columns = self.columns.clone();
        for k in 0..self.p {
            for i in 0..self.n {
                let v = &mut columns[k * self.n + i];
                *v = f(i, k, *v);
            }
        }
        Self::from_column_major(columns, self.n)
    }

    /// Row-major copy of all values.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.p);
        for i in 0..self.n {
            for k in 0..self.p {
                out.push(self.get(i, k));
            }
        }
        out
    }

    /// The 150x4 numeric part of Fisher's iris data, in its standard order.
    pub fn iris() -> Self {
        parse_csv(IRIS_CSV.as_bytes(), false, Path::new("<bundled iris>"))
            .expect("bundled iris fixture is well formed")
    }
}

/// A univariate sample: the `p = 1` special case with a slice-based API.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateSample(Vec<f64>);

impl UnivariateSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDataset { n: 0, p: 1 });
        }
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, column: 0 });
        }
        Ok(UnivariateSample(values))
    }

    /// Column `k` of a dataset.
    pub fn from_dataset_column(data: &Dataset, k: usize) -> Self {
        UnivariateSample(data.column(k).to_vec())
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_dataset(&self) -> Dataset {
        Dataset {
            n: self.0.len(),
            p: 1,
            columns: self.0.clone(),
        }
    }
}

/// Seed for every random stream in the crate.
///
/// Independent streams are derived from one seed by ChaCha stream selection:
/// stream `s` of seed `x` is `ChaCha8Rng::seed_from_u64(x)` with
/// `set_stream(s)`. Replicate `k` of a randomized procedure always uses
/// stream `k`, whatever order replicates are evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn stream(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

/// An `n x p` matrix of i.i.d. standard normal draws, filled row by row from
/// stream 0 of `seed`.
pub fn generate_gaussian(n: usize, p: usize, seed: RngSeed) -> Result<Dataset> {
    if n == 0 || p == 0 {
        return Err(Error::EmptyDataset { n, p });
    }
    let mut rng = seed.stream(0);
    let mut columns = vec![0.0; n * p];
    for i in 0..n {
        for k in 0..p {
            columns[k * n + i] = StandardNormal.sample(&mut rng);
        }
    }
    Ok(Dataset { n, p, columns })
}

/// Reads a comma-separated numeric matrix. Row and column numbers in errors
/// are 1-based file positions.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&bytes[..], has_header, path)
}

fn parse_csv(input: &[u8], has_header: bool, path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut values = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let row = record.position().map_or(0, |pos| pos.line() as usize);
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row,
                expected,
                found: record.len(),
            });
        }
        for (k, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::NotNumeric {
                path: path.to_path_buf(),
                row,
                column: k + 1,
                value: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NotNumeric {
                    path: path.to_path_buf(),
                    row,
                    column: k + 1,
                    value: field.to_string(),
                });
            }
            values.push(v);
        }
    }
    match width {
        Some(p) if p > 0 => Dataset::from_row_major(&values, p),
        _ => Err(Error::EmptyDataset { n: 0, p: 0 }),
    }
}

/// Writes `data` as headerless CSV using shortest round-trip formatting, so
/// [`load_csv`] recovers every value bit for bit.
pub fn write_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(data.n() * data.p() * 8);
    for i in 0..data.n() {
        for k in 0..data.p() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:?}", data.get(i, k));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
