//! Timing grid and log-log scaling fits.

use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::approx::{adcov, DEFAULT_REPLICATES};
use crate::dataset::{generate_gaussian, Dataset, RngSeed};
use crate::error::{Error, Result};
use crate::estimators::{dcor, dcov, dvar, edist};
use crate::univariate::dcov_univariate_fast;

/// Single runs shorter than this are repeated and averaged.
pub const TIMER_FLOOR: Duration = Duration::from_millis(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchOp {
    Edist,
    Dvar,
    Dcov,
    Dcor,
    Adcov,
    /// Fast univariate distance covariance on the first coordinate.
    DcovUnivariate,
}

impl BenchOp {
    pub const ALL: [BenchOp; 6] = [
        BenchOp::Edist,
        BenchOp::Dvar,
        BenchOp::Dcov,
        BenchOp::Dcor,
        BenchOp::Adcov,
        BenchOp::DcovUnivariate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchOp::Edist => "edist",
            BenchOp::Dvar => "dvar",
            BenchOp::Dcov => "dcov",
            BenchOp::Dcor => "dcor",
            BenchOp::Adcov => "adcov",
            BenchOp::DcovUnivariate => "dcov1d",
        }
    }

    fn run(self, x: &Dataset, y: &Dataset, seed: RngSeed) -> Result<f64> {
        Ok(match self {
            BenchOp::Edist => edist(x, y)?,
            BenchOp::Dvar => dvar(x, false)?,
            BenchOp::Dcov => dcov(x, y, false)?,
            BenchOp::Dcor => dcor(x, y, false)?.dcor,
            BenchOp::Adcov => adcov(x, y, DEFAULT_REPLICATES, seed)?.estimate,
            BenchOp::DcovUnivariate => dcov_univariate_fast(x.column(0), y.column(0))?,
        })
    }
}

impl fmt::Display for BenchOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchOp::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown benchmark operation '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub op: BenchOp,
    pub n: usize,
    pub p: usize,
    pub replicate: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Seconds for one call of `f`, averaged over enough repeats to clear
/// [`TIMER_FLOOR`].
fn time_call(mut f: impl FnMut() -> Result<f64>) -> Result<f64> {
    let start = Instant::now();
    black_box(f()?);
    let single = start.elapsed();
    if single >= TIMER_FLOOR {
        return Ok(single.as_secs_f64());
    }
    let repeats = (TIMER_FLOOR.as_secs_f64() / single.as_secs_f64().max(1e-9)).ceil() as usize;
    let repeats = repeats.clamp(2, 1_000_000);
    let start = Instant::now();
    for _ in 0..repeats {
        black_box(f()?);
    }
    Ok(start.elapsed().as_secs_f64() / repeats as f64)
}

/// Times every op on every `(n, p)` cell, sequentially. Inputs are
/// standard normal draws from `seed` (first sample) and `seed + 1`.
pub fn run_bench(
    grid: &[(usize, usize)],
    ops: &[BenchOp],
    replicates: usize,
    seed: RngSeed,
) -> Result<Vec<BenchRecord>> {
    run_bench_with(grid, ops, replicates, seed, |_| {})
}

/// As [`run_bench`], calling `emit` with each record as soon as it is timed.
pub fn run_bench_with(
    grid: &[(usize, usize)],
    ops: &[BenchOp],
    replicates: usize,
    seed: RngSeed,
    mut emit: impl FnMut(&BenchRecord),
) -> Result<Vec<BenchRecord>> {
    if grid.is_empty() || ops.is_empty() || replicates == 0 {
        return Err(Error::InvalidArgument(
            "benchmark needs a grid, operations and replicates".into(),
        ));
    }
    let mut records = Vec::with_capacity(grid.len() * ops.len() * replicates);
    for &(n, p) in grid {
        let x = generate_gaussian(n, p, seed)?;
        let y = generate_gaussian(n, p, RngSeed(seed.0.wrapping_add(1)))?;
        for &op in ops {
            op.run(&x, &y, seed)?;
            for replicate in 0..replicates {
                let seconds = time_call(|| op.run(&x, &y, seed))?;
                let record = BenchRecord {
                    op,
                    n,
                    p,
                    replicate,
                    seconds,
                };
                emit(&record);
                records.push(record);
            }
        }
    }
    Ok(records)
}

/// Least-squares slope of `ln(seconds)` on `ln(n)` with a 95% Student-t
/// confidence interval.
pub fn fit_slope(points: &[(usize, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(
            "slope fit needs at least three timings".into(),
        ));
    }
    if points.iter().any(|&(n, s)| n == 0 || !(s > 0.0)) {
        return Err(Error::InvalidArgument(
            "slope fit needs positive sizes and timings".into(),
        ));
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, s)| s.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "slope fit needs at least two distinct sizes".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let df = k - 2.0;
    let se = (rss / df / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(SlopeFit {
        slope,
        ci_low: slope - t * se,
        ci_high: slope + t * se,
    })
}

/// One fit per `(op, p)`, in order of first appearance.
pub fn fit_slopes(records: &[BenchRecord]) -> Result<Vec<(BenchOp, usize, SlopeFit)>> {
    let mut keys: Vec<(BenchOp, usize)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.op, r.p)) {
            keys.push((r.op, r.p));
        }
    }
    keys.into_iter()
        .map(|(op, p)| {
            let points: Vec<(usize, f64)> = records
                .iter()
                .filter(|r| r.op == op && r.p == p)
                .map(|r| (r.n, r.seconds))
                .collect();
            Ok((op, p, fit_slope(&points)?))
        })
        .collect()
}

pub const RECORD_HEADER: &str = "op\tn\tp\treplicate\tseconds";
pub const SLOPE_HEADER: &str = "op\tp\tslope\tci_low\tci_high";

pub fn format_record(r: &BenchRecord) -> String {
    format!("{}\t{}\t{}\t{}\t{:e}", r.op, r.n, r.p, r.replicate, r.seconds)
}

pub fn format_slope(op: BenchOp, p: usize, fit: &SlopeFit) -> String {
    format!(
        "{op}\t{p}\t{:.4}\t{:.4}\t{:.4}",
        fit.slope, fit.ci_low, fit.ci_high
    )
}

pub fn write_records<W: Write>(out: &mut W, records: &[BenchRecord]) -> std::io::Result<()> {
    writeln!(out, "{RECORD_HEADER}")?;
    for r in records {
        writeln!(out, "{}", format_record(r))?;
    }
    Ok(())
}

pub fn write_slopes<W: Write>(
    out: &mut W,
    fits: &[(BenchOp, usize, SlopeFit)],
) -> std::io::Result<()> {
    writeln!(out, "{SLOPE_HEADER}")?;
    for (op, p, fit) in fits {
        writeln!(out, "{}", format_slope(*op, *p, fit))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(usize, f64)> = [1000, 2000, 4000, 8000]
            .iter()
            .flat_map(|&n| std::iter::repeat((n, 3e-9 * (n as f64).powi(2))).take(3))
            .collect();
        let fit = fit_slope(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.ci_high - fit.ci_low < 1e-9);
    }

    #[test]
    fn noisy_fit_brackets_slope() {
        let noise = [1.05, 0.97, 1.02, 0.99, 1.01, 0.96, 1.04, 1.0];
        let pts: Vec<(usize, f64)> = [100, 200, 400, 800, 1600, 3200, 6400, 12800]
            .iter()
            .zip(noise)
            .map(|(&n, e)| (n, 1e-6 * n as f64 * e))
            .collect();
        let fit = fit_slope(&pts).unwrap();
        assert!(fit.ci_low < fit.slope && fit.slope < fit.ci_high);
        assert!(fit.ci_low < 1.0 && 1.0 < fit.ci_high);
    }

    #[test]
    fn fit_argument_errors() {
        assert!(fit_slope(&[(10, 1.0), (20, 2.0)]).is_err());
        assert!(fit_slope(&[(10, 1.0), (10, 2.0), (10, 3.0)]).is_err());
        assert!(fit_slope(&[(10, 1.0), (20, 0.0), (40, 3.0)]).is_err());
    }

    #[test]
    fn record_count_and_format() {
        let grid = [(20, 1), (40, 2)];
        let ops = [BenchOp::Edist, BenchOp::Dcor];
        let mut streamed = 0;
        let records = run_bench_with(&grid, &ops, 2, RngSeed(1), |_| streamed += 1).unwrap();
        assert_eq!(records.len(), 8);
        assert_eq!(streamed, 8);
        assert!(records.iter().all(|r| r.seconds > 0.0));
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("op\tn\tp\treplicate\tseconds\n"));
        assert_eq!(text.lines().count(), 9);
        assert!(text.lines().nth(1).unwrap().starts_with("edist\t20\t1\t0\t"));
    }

    #[test]
    fn op_names_round_trip() {
        for op in BenchOp::ALL {
            assert_eq!(op.name().parse::<BenchOp>().unwrap(), op);
        }
        assert!("nope".parse::<BenchOp>().is_err());
    }
}
