//! Energy distance, distance variance/covariance/correlation and partial
//! distance correlation, evaluated from the streaming accumulators.
//!
//! # Reporting scale
//!
//! The biased statistics are reported on the root scale: [`dvar`] returns
//! `V_n(X) = sqrt(V_n^2(X))`, [`dcov`] returns `V_n(X, Y)` and
//! [`DCorResult::dcor`] is `R_n`. The bias-corrected statistics can be
//! negative and are reported as-is on the squared scale (`V*_n^2`, `R*_n^2`).
//! This is the convention of the reference R implementations; the `*_sq`
//! functions expose the squared quantities for both variants.
//!
//! [`edist`] reports the two-sample statistic `nm/(n+m) * e_n`, again matching
//! the reference output; [`energy_distance`] is the unscaled `e_n`.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{self, CrossSums, GammaSums};

/// Smallest sample size for the biased and bias-corrected variants.
pub fn min_sample_size(bias_corrected: bool) -> usize {
    if bias_corrected {
        4
    } else {
        2
    }
}

fn check_size(what: &'static str, n: usize, bias_corrected: bool) -> Result<()> {
    let required = min_sample_size(bias_corrected);
    if n < required {
        return Err(Error::TooFewObservations {
            what,
            required,
            actual: n,
        });
    }
    Ok(())
}

/// Combines the three accumulated terms with either set of denominators.
fn combine(pairs: f64, rows: f64, totals: f64, n: usize, bias_corrected: bool) -> f64 {
    let n = n as f64;
    if bias_corrected {
        pairs / (n * (n - 3.0)) - 2.0 * rows / (n * (n - 2.0) * (n - 3.0))
            + totals / (n * (n - 1.0) * (n - 2.0) * (n - 3.0))
    } else {
        pairs / (n * n) - 2.0 * rows / (n * n * n) + totals / (n * n * n * n)
    }
}

impl GammaSums {
    /// Squared-scale distance variance of a sample of size `n`.
    pub fn dvar_sq(&self, n: usize, bias_corrected: bool) -> f64 {
        combine(
            self.gamma1,
            self.row_sq,
            self.total * self.total,
            n,
            bias_corrected,
        )
    }
}

impl CrossSums {
    /// Squared-scale distance covariance of a paired sample of size `n`.
    pub fn dcov_sq(&self, n: usize, bias_corrected: bool) -> f64 {
        combine(
            self.prod,
            self.row_prod,
            self.total_a * self.total_b,
            n,
            bias_corrected,
        )
    }
}

/// Squared-scale value to reported value.
fn report(sq: f64, bias_corrected: bool) -> f64 {
    if bias_corrected {
        sq
    } else {
        // Non-negative in exact arithmetic; round-off below zero reports as 0.
        sq.max(0.0).sqrt()
    }
}

/// Sample energy distance `e_n(X, Y)` with full double sums.
pub fn energy_distance(x: &Dataset, y: &Dataset) -> Result<f64> {
    let cross = kernels::cross_pairwise_sum(x, y)?;
    Ok(energy_from_sums(
        cross,
        kernels::pairwise_sum(x),
        kernels::pairwise_sum(y),
        x.n(),
        y.n(),
    ))
}

pub(crate) fn energy_from_sums(cross: f64, within_x: f64, within_y: f64, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    2.0 * cross / (n * m) - within_x / (n * n) - within_y / (m * m)
}

/// Two-sample energy statistic `nm/(n+m) * e_n(X, Y)`.
pub fn edist(x: &Dataset, y: &Dataset) -> Result<f64> {
    Ok(size_weight(x.n(), y.n()) * energy_distance(x, y)?)
}

#[inline]
pub(crate) fn size_weight(n: usize, m: usize) -> f64 {
    (n as f64 * m as f64) / (n + m) as f64
}

/// Symmetric matrix of two-sample energy statistics between `k` datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMatrix {
    k: usize,
    values: Vec<f64>,
}

impl EnergyMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.k + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.k)
    }
}

/// [`edist`] for every pair of `datasets`; each within-sample sum is
/// computed once.
pub fn edist_matrix(datasets: &[Dataset]) -> Result<EnergyMatrix> {
    let k = datasets.len();
    if k < 2 {
        return Err(Error::TooFewDatasets {
            required: 2,
            actual: k,
        });
    }
    let p = datasets[0].p();
    if let Some(d) = datasets.iter().find(|d| d.p() != p) {
        return Err(Error::DimensionMismatch {
            left: p,
            right: d.p(),
        });
    }
    let within: Vec<f64> = datasets.iter().map(kernels::pairwise_sum).collect();
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        for j in i + 1..k {
            let (a, b) = (&datasets[i], &datasets[j]);
            let cross = kernels::cross_pairwise_sum(a, b)?;
            let e = size_weight(a.n(), b.n())
                * energy_from_sums(cross, within[i], within[j], a.n(), b.n());
            values[i * k + j] = e;
            values[j * k + i] = e;
        }
    }
    Ok(EnergyMatrix { k, values })
}

/// Squared-scale distance variance (`V_n^2` or `V*_n^2`).
pub fn dvar_sq(x: &Dataset, bias_corrected: bool) -> Result<f64> {
    check_size("distance variance", x.n(), bias_corrected)?;
    Ok(kernels::dvar_sums(x).dvar_sq(x.n(), bias_corrected))
}

/// Distance variance on the reporting scale.
pub fn dvar(x: &Dataset, bias_corrected: bool) -> Result<f64> {
    Ok(report(dvar_sq(x, bias_corrected)?, bias_corrected))
}

/// Squared-scale distance covariance (`V_n^2` or `V*_n^2`).
pub fn dcov_sq(x: &Dataset, y: &Dataset, bias_corrected: bool) -> Result<f64> {
    let sums = kernels::dcov_sums(x, y)?;
    check_size("distance covariance", x.n(), bias_corrected)?;
    Ok(sums.dcov_sq(x.n(), bias_corrected))
}

/// Distance covariance on the reporting scale.
pub fn dcov(x: &Dataset, y: &Dataset, bias_corrected: bool) -> Result<f64> {
    Ok(report(dcov_sq(x, y, bias_corrected)?, bias_corrected))
}

/// Distance covariance, both distance variances and the distance correlation,
/// all on the reporting scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DCorResult {
    pub dcov: f64,
    pub dvar_x: f64,
    pub dvar_y: f64,
    pub dcor: f64,
}

/// Distance correlation from one joint pass over the pairs.
///
/// `dcor = dcov / sqrt(dvar_x * dvar_y)` on the reporting scale, which is
/// `R_n` for the biased variant and `R*_n^2` for the bias-corrected one.
pub fn dcor(x: &Dataset, y: &Dataset, bias_corrected: bool) -> Result<DCorResult> {
    let sums = kernels::dcor_sums(x, y)?;
    let n = x.n();
    check_size("distance correlation", n, bias_corrected)?;
    let dcov = report(sums.cross.dcov_sq(n, bias_corrected), bias_corrected);
    let dvar_x = report(sums.x.dvar_sq(n, bias_corrected), bias_corrected);
    let dvar_y = report(sums.y.dvar_sq(n, bias_corrected), bias_corrected);
    let denom = dvar_x * dvar_y;
    if !(denom > 0.0) {
        return Err(Error::UndefinedCorrelation);
    }
    Ok(DCorResult {
        dcov,
        dvar_x,
        dvar_y,
        dcor: dcov / denom.sqrt(),
    })
}

/// Bias-corrected partial distance correlation of `x` and `y` given `z`.
pub fn pdcor(x: &Dataset, y: &Dataset, z: &Dataset) -> Result<f64> {
    for other in [y, z] {
        if other.n() != x.n() {
            return Err(Error::SampleSizeMismatch {
                left: x.n(),
                right: other.n(),
            });
        }
    }
    let r_xy = dcor(x, y, true)?.dcor;
    let r_xz = dcor(x, z, true)?.dcor;
    let r_yz = dcor(y, z, true)?.dcor;
    partial_from_correlations(r_xy, r_xz, r_yz)
}

/// `1 - R^2` at or below this is treated as a collinear conditioning variable.
const COLLINEAR_TOL: f64 = 1e-12;

pub(crate) fn partial_from_correlations(r_xy: f64, r_xz: f64, r_yz: f64) -> Result<f64> {
    let den_x = 1.0 - r_xz * r_xz;
    let den_y = 1.0 - r_yz * r_yz;
    if !(den_x > COLLINEAR_TOL && den_y > COLLINEAR_TOL) {
        return Err(Error::CollinearConditioning);
    }
    Ok((r_xy - r_xz * r_yz) / (den_x.sqrt() * den_y.sqrt()))
}
