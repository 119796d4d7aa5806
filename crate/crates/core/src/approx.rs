//! Approximate distance covariance by random projections.
//!
//! Each replicate projects `X` and `Y` onto independent uniformly random unit
//! directions, takes the exact univariate distance covariance of the two
//! projections with the `O(n log n)` path, and rescales by `C_p C_q`. The
//! estimate is the mean over `K` replicates.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::dataset::{Dataset, RngSeed};
use crate::error::{Error, Result};
use crate::univariate::dcov_univariate_fast;

/// Replicate count used when none is given.
pub const DEFAULT_REPLICATES: usize = 50;

/// `C_d = sqrt(pi) Gamma((d + 1) / 2) / Gamma(d / 2)`, via log-gamma so large
/// dimensions do not overflow.
pub fn cp_constant(dim: usize) -> Result<f64> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let d = dim as f64;
    Ok((0.5 * std::f64::consts::PI.ln() + ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConstants {
    pub c_p: f64,
    pub c_q: f64,
}

impl ProjectionConstants {
    pub fn new(p: usize, q: usize) -> Result<Self> {
        Ok(ProjectionConstants {
            c_p: cp_constant(p)?,
            c_q: cp_constant(q)?,
        })
    }
}

/// A uniformly distributed point on the unit sphere in `dim` dimensions:
/// normalized standard normal draws, redrawn on an all-zero vector.
pub fn sphere_sample<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            return Ok(v.into_iter().map(|c| c / norm).collect());
        }
    }
}

/// `data * direction`, one value per observation.
fn project(data: &Dataset, direction: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; data.n()];
    for (k, &u) in direction.iter().enumerate() {
        for (o, &v) in out.iter_mut().zip(data.column(k)) {
            *o += u * v;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxResult {
    /// Mean of the replicate values.
    pub estimate: f64,
    pub k: usize,
    /// The individual replicate values, when requested.
    pub per_rep: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub struct AdcovOptions {
    pub replicates: usize,
    pub seed: RngSeed,
    pub keep_replicates: bool,
}

impl Default for AdcovOptions {
    fn default() -> Self {
        AdcovOptions {
            replicates: DEFAULT_REPLICATES,
            seed: RngSeed(0),
            keep_replicates: false,
        }
    }
}

/// Approximate biased squared distance covariance with `k` replicates.
pub fn adcov(x: &Dataset, y: &Dataset, k: usize, seed: RngSeed) -> Result<ApproxResult> {
    adcov_with(
        x,
        y,
        &AdcovOptions {
            replicates: k,
            seed,
            keep_replicates: false,
        },
    )
}

/// Replicate `r` draws `u` then `v` from stream `r` of the seed, so the
/// result does not depend on how replicates are scheduled.
pub fn adcov_with(x: &Dataset, y: &Dataset, opts: &AdcovOptions) -> Result<ApproxResult> {
    if x.n() != y.n() {
        return Err(Error::SampleSizeMismatch {
            left: x.n(),
            right: y.n(),
        });
    }
    if x.n() < 2 {
        return Err(Error::TooFewObservations {
            what: "approximate distance covariance",
            required: 2,
            actual: x.n(),
        });
    }
    if opts.replicates == 0 {
        return Err(Error::InvalidArgument(
            "number of replicates must be positive".into(),
        ));
    }
    let consts = ProjectionConstants::new(x.p(), y.p())?;
    let scale = consts.c_p * consts.c_q;
    let per_rep = (0..opts.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = opts.seed.stream(r as u64);
            let u = sphere_sample(x.p(), &mut rng)?;
            let v = sphere_sample(y.p(), &mut rng)?;
            Ok(scale * dcov_univariate_fast(&project(x, &u), &project(y, &v))?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let estimate = per_rep.iter().sum::<f64>() / opts.replicates as f64;
    Ok(ApproxResult {
        estimate,
        k: opts.replicates,
        per_rep: opts.keep_replicates.then_some(per_rep),
    })
}
