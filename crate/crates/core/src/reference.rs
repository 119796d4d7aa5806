//! Naive reference implementations built from explicit distance matrices.
//!
//! Everything here is `O(n^2)` in memory and written for obviousness rather
//! than speed; it exists to check the streaming estimators.

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Largest sample size the oracle accepts by default.
pub const DEFAULT_ORACLE_CAP: usize = 500;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    pub n: usize,
    pub values: Vec<f64>,
}

impl SquareMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("matrix is not square".into()));
        }
        Ok(SquareMatrix {
            n,
            values: rows.concat(),
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// A doubly centred distance matrix: every row and column sums to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredMatrix {
    pub n: usize,
    pub values: SquareMatrix,
}

impl CenteredMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }
}

pub fn distance_matrix(x: &Dataset) -> SquareMatrix {
    let n = x.n();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i)).collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            values[i * n + j] = d.sqrt();
        }
    }
    SquareMatrix { n, values }
}

pub fn double_center(d: &SquareMatrix) -> Result<CenteredMatrix> {
    let n = d.n;
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (d.get(i, j), d.get(j, i));
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "distance matrix is not symmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let nf = n as f64;
    let row_mean: Vec<f64> = (0..n).map(|i| d.row(i).iter().sum::<f64>() / nf).collect();
    let col_mean: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| d.get(i, j)).sum::<f64>() / nf)
        .collect();
    let grand = d.values.iter().sum::<f64>() / (nf * nf);
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = d.get(i, j) - (row_mean[i] + col_mean[j]) + grand;
        }
    }
    Ok(CenteredMatrix {
        n,
        values: SquareMatrix { n, values },
    })
}

/// Reference estimators with a configurable sample-size cap.
#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    pub cap: usize,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle {
            cap: DEFAULT_ORACLE_CAP,
        }
    }
}

impl Oracle {
    fn check(&self, n: usize) -> Result<()> {
        if n > self.cap {
            return Err(Error::InvalidArgument(format!(
                "oracle limited to n <= {}, got {n}",
                self.cap
            )));
        }
        Ok(())
    }

    fn pair(&self, x: &Dataset, y: &Dataset, bc: bool) -> Result<()> {
        if x.n() != y.n() {
            return Err(Error::SampleSizeMismatch {
                left: x.n(),
                right: y.n(),
            });
        }
        self.check(x.n())?;
        let required = if bc { 4 } else { 2 };
        if x.n() < required {
            return Err(Error::TooFewObservations {
                what: "reference distance covariance",
                required,
                actual: x.n(),
            });
        }
        Ok(())
    }

    /// Raw energy statistic, every pair of every double sum visited.
    pub fn energy(&self, x: &Dataset, y: &Dataset) -> Result<f64> {
        if x.p() != y.p() {
            return Err(Error::DimensionMismatch {
                left: x.p(),
                right: y.p(),
            });
        }
        self.check(x.n().max(y.n()))?;
        let (n, m) = (x.n() as f64, y.n() as f64);
        let pooled = x.vstack(y)?;
        let d = distance_matrix(&pooled);
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for i in 0..d.n {
            for j in 0..d.n {
                match (i < x.n(), j < x.n()) {
                    (true, true) => sxx += d.get(i, j),
                    (false, false) => syy += d.get(i, j),
                    (true, false) => sxy += d.get(i, j),
                    (false, true) => {}
                }
            }
        }
        Ok(2.0 * sxy / (n * m) - sxx / (n * n) - syy / (m * m))
    }

    /// Squared distance covariance. Biased: mean of the product of the
    /// doubly centred matrices. Bias-corrected: off-diagonal products, row
    /// sums and totals of the raw distance matrices.
    pub fn dcov_sq(&self, x: &Dataset, y: &Dataset, bc: bool) -> Result<f64> {
        self.pair(x, y, bc)?;
        let (a, b) = (distance_matrix(x), distance_matrix(y));
        let n = a.n as f64;
        if !bc {
            let (ca, cb) = (double_center(&a)?, double_center(&b)?);
            let mut s = 0.0;
            for i in 0..a.n {
                for j in 0..a.n {
                    s += ca.get(i, j) * cb.get(i, j);
                }
            }
            return Ok(s / (n * n));
        }
        let row_a: Vec<f64> = (0..a.n).map(|i| a.row(i).iter().sum()).collect();
        let row_b: Vec<f64> = (0..b.n).map(|i| b.row(i).iter().sum()).collect();
        let (tot_a, tot_b): (f64, f64) = (row_a.iter().sum(), row_b.iter().sum());
        let mut off = 0.0;
        for i in 0..a.n {
            for j in 0..a.n {
                if i != j {
                    off += a.get(i, j) * b.get(i, j);
                }
            }
        }
        let rows: f64 = row_a.iter().zip(&row_b).map(|(u, v)| u * v).sum();
        Ok(off / (n * (n - 3.0)) - 2.0 * rows / (n * (n - 2.0) * (n - 3.0))
            + tot_a * tot_b / (n * (n - 1.0) * (n - 2.0) * (n - 3.0)))
    }

    pub fn dvar_sq(&self, x: &Dataset, bc: bool) -> Result<f64> {
        self.dcov_sq(x, x, bc)
    }

    /// Distance covariance on the reported scale: the root of the squared
    /// value when biased, the squared value itself when bias-corrected.
    pub fn dcov(&self, x: &Dataset, y: &Dataset, bc: bool) -> Result<f64> {
        let v = self.dcov_sq(x, y, bc)?;
        Ok(if bc { v } else { v.max(0.0).sqrt() })
    }

    pub fn dvar(&self, x: &Dataset, bc: bool) -> Result<f64> {
        self.dcov(x, x, bc)
    }

    /// Distance correlation on the reported scale.
    pub fn dcor(&self, x: &Dataset, y: &Dataset, bc: bool) -> Result<f64> {
        let vxy = self.dcov_sq(x, y, bc)?;
        let vx = self.dcov_sq(x, x, bc)?;
        let vy = self.dcov_sq(y, y, bc)?;
        if vx * vy <= 0.0 {
            return Err(Error::UndefinedCorrelation);
        }
        let r2 = vxy / (vx * vy).sqrt();
        Ok(if bc { r2 } else { r2.max(0.0).sqrt() })
    }

    /// Partial distance correlation from bias-corrected correlations.
    pub fn pdcor(&self, x: &Dataset, y: &Dataset, z: &Dataset) -> Result<f64> {
        let rxy = self.dcor(x, y, true)?;
        let rxz = self.dcor(x, z, true)?;
        let ryz = self.dcor(y, z, true)?;
        let den = (1.0 - rxz * rxz).sqrt() * (1.0 - ryz * ryz).sqrt();
        if !(den > 1e-12) {
            return Err(Error::CollinearConditioning);
        }
        Ok((rxy - rxz * ryz) / den)
    }
}

pub fn naive_energy(x: &Dataset, y: &Dataset) -> Result<f64> {
    Oracle::default().energy(x, y)
}

pub fn naive_dvar(x: &Dataset, bc: bool) -> Result<f64> {
    Oracle::default().dvar(x, bc)
}

pub fn naive_dcov(x: &Dataset, y: &Dataset, bc: bool) -> Result<f64> {
    Oracle::default().dcov(x, y, bc)
}

pub fn naive_dcor(x: &Dataset, y: &Dataset, bc: bool) -> Result<f64> {
    Oracle::default().dcor(x, y, bc)
}

pub fn naive_pdcor(x: &Dataset, y: &Dataset, z: &Dataset) -> Result<f64> {
    Oracle::default().pdcor(x, y, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_gaussian, RngSeed};

    fn iris_thirds() -> (Dataset, Dataset, Dataset) {
        let iris = Dataset::iris();
        (
            iris.rows(0..50).unwrap(),
            iris.rows(50..100).unwrap(),
            iris.rows(100..150).unwrap(),
        )
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn distance_matrix_small() {
        let x = Dataset::from_column(&[0.0, 1.0]).unwrap();
        assert_eq!(distance_matrix(&x).values, vec![0.0, 1.0, 1.0, 0.0]);
        let one = Dataset::from_rows(&[vec![3.0, 4.0]]).unwrap();
        assert_eq!(distance_matrix(&one).values, vec![0.0]);
    }

    #[test]
    fn distance_matrix_entries() {
        let x = generate_gaussian(5, 2, RngSeed(1)).unwrap();
        let d = distance_matrix(&x);
        for i in 0..5 {
            for j in 0..5 {
                let e = (x.get(i, 0) - x.get(j, 0)).hypot(x.get(i, 1) - x.get(j, 1));
                assert!(close(d.get(i, j), e, 1e-14));
            }
        }
    }

    #[test]
    fn double_center_small_cases() {
        let d = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(double_center(&d).unwrap().values.values, vec![-0.5, 0.5, 0.5, -0.5]);
        let z = SquareMatrix::from_rows(&[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]]).unwrap();
        assert!(double_center(&z).unwrap().values.values.iter().all(|&v| v == 0.0));
        let bad = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert!(double_center(&bad).is_err());
    }

    #[test]
    fn double_center_rows_and_columns_vanish() {
        let x = generate_gaussian(8, 3, RngSeed(4)).unwrap();
        let c = double_center(&distance_matrix(&x)).unwrap();
        for i in 0..8 {
            let row: f64 = (0..8).map(|j| c.get(i, j)).sum();
            let col: f64 = (0..8).map(|j| c.get(j, i)).sum();
            assert!(row.abs() < 1e-12 && col.abs() < 1e-12);
            for j in 0..8 {
                assert_eq!(c.get(i, j), c.get(j, i));
            }
        }
    }

    #[test]
    fn two_point_variance() {
        let x = Dataset::from_column(&[0.0, 1.0]).unwrap();
        let o = Oracle::default();
        assert!(close(o.dvar_sq(&x, false).unwrap(), 0.25, 1e-15));
        assert!(close(naive_dvar(&x, false).unwrap(), 0.5, 1e-15));
    }

    #[test]
    fn covariance_with_itself_is_variance() {
        let x = generate_gaussian(30, 3, RngSeed(2)).unwrap();
        for bc in [false, true] {
            assert_eq!(naive_dcov(&x, &x, bc).unwrap(), naive_dvar(&x, bc).unwrap());
        }
    }

    #[test]
    fn reproduces_iris_values() {
        let (x, y, z) = iris_thirds();
        assert!(close(naive_energy(&x, &y).unwrap() * 25.0, 123.5538, 1e-4));
        assert!(close(naive_dvar(&x, false).unwrap(), 0.2712927, 1e-6));
        assert!(close(naive_dvar(&x, true).unwrap(), 0.06524269, 1e-6));
        assert!(close(naive_dvar(&y, false).unwrap(), 0.4135274, 1e-6));
        assert!(close(naive_dvar(&y, true).unwrap(), 0.156821104, 1e-6));
        assert!(close(naive_dcov(&x, &y, false).unwrap(), 0.1025087, 1e-6));
        assert!(close(naive_dcov(&x, &y, true).unwrap(), -0.002748351, 1e-6));
        assert!(close(naive_dcor(&x, &y, false).unwrap(), 0.3060479, 1e-6));
        assert!(close(naive_dcor(&x, &y, true).unwrap(), -0.027170902, 1e-6));
        assert!(close(naive_pdcor(&x, &y, &z).unwrap(), -0.02722611, 1e-6));
    }

    #[test]
    fn cap_and_errors() {
        let x = generate_gaussian(12, 1, RngSeed(1)).unwrap();
        assert!(Oracle { cap: 10 }.dvar(&x, false).is_err());
        assert!(Oracle { cap: 12 }.dvar(&x, false).is_ok());
        let three = generate_gaussian(3, 1, RngSeed(1)).unwrap();
        assert!(naive_dvar(&three, true).is_err());
        let c = Dataset::from_column(&[1.0; 6]).unwrap();
        assert!(matches!(naive_dcor(&c, &c, false), Err(Error::UndefinedCorrelation)));
    }
}
