//! Energy statistics with streaming pairwise-distance kernels.
//!
//! Energy distance, distance variance, covariance and (partial) correlation
//! are computed from a handful of accumulated sums over all pairs of
//! observations, so memory stays linear in the sample size. Univariate inputs
//! take `O(n log n)` sorting paths, and large multivariate problems can use a
//! random-projection approximation of distance covariance.

pub mod approx;
pub mod bench;
pub mod dataset;
pub mod eqdist;
pub mod error;
pub mod estimators;
pub mod kernels;
pub mod reference;
pub mod univariate;

pub use approx::{adcov, adcov_with, AdcovOptions, ApproxResult};
pub use dataset::{generate_gaussian, load_csv, write_csv, Dataset, RngSeed, UnivariateSample};
pub use eqdist::{eqdist_test_multivariate, eqdist_test_univariate, EqDistOptions, EqDistResult};
pub use error::{Error, Result};
pub use estimators::{
    dcor, dcov, dvar, edist, edist_matrix, energy_distance, pdcor, DCorResult, EnergyMatrix,
};
pub use kernels::init_threads_from_env;
