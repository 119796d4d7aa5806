//! Sorting-based `O(n log n)` paths for univariate samples.
//!
//! All pair sums here are full double sums over ordered pairs, the same
//! convention as the multivariate kernels: for `x = (0, 1, 3)` the pairwise
//! absolute-difference sum is 12, not the unordered half-sum 6. The Gini
//! closed forms are applied to mean-centred values; they are translation
//! invariant, and centring keeps the prefix sums small.

use crate::error::{Error, Result};
use crate::estimators::min_sample_size;
use crate::kernels::{CrossSums, GammaSums};

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn check_sorted(x: &[f64]) -> Result<()> {
    match x.windows(2).position(|w| w[0] > w[1]) {
        Some(i) => Err(Error::Unsorted { index: i + 1 }),
        None => Ok(()),
    }
}

fn sorted_copy(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Row sums `a_i. = sum_j |x_(i) - x_j|` of an ascending sample, in one
/// prefix-sum pass: `a_i. = (2i - n) x_(i) + sum x - 2 sum_{k <= i} x_(k)`.
pub fn sorted_row_sums(sorted: &[f64]) -> Result<Vec<f64>> {
    check_sorted(sorted)?;
    Ok(row_sums_unchecked(sorted))
}

fn row_sums_unchecked(sorted: &[f64]) -> Vec<f64> {
    if sorted.is_empty() {
        return Vec::new();
    }
    let n = sorted.len();
    let centre = mean(sorted);
    let total: f64 = sorted.iter().map(|v| v - centre).sum();
    let mut prefix = 0.0;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = v - centre;
            prefix += c;
            let rank = (i + 1) as f64;
            (2.0 * rank - n as f64) * c + total - 2.0 * prefix
        })
        .collect()
}

/// `sum_i (2i - n - 1) x_(i)` over an ascending sample (1-based `i`): the
/// unordered half of the pairwise absolute-difference sum.
fn gini_half_sum(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let centre = mean(sorted);
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| (2.0 * (i + 1) as f64 - n - 1.0) * (v - centre))
        .sum()
}

/// `sum_i sum_j |x_i - x_j|`.
pub fn pairwise_abs_sum(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    2.0 * gini_half_sum(&sorted_copy(x))
}

/// `sum_{i != j} (x_i - x_j)^2 = 2 (n sum x^2 - (sum x)^2)`, evaluated as
/// `2n sum (x - mean)^2`.
pub fn squared_pairwise_sum(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let centre = mean(x);
    2.0 * x.len() as f64 * x.iter().map(|v| (v - centre).powi(2)).sum::<f64>()
}

/// The distance-variance accumulators of a univariate sample.
pub fn gamma_sums_univariate(x: &[f64]) -> GammaSums {
    let rows = row_sums_unchecked(&sorted_copy(x));
    GammaSums {
        gamma1: squared_pairwise_sum(x),
        row_sq: rows.iter().map(|a| a * a).sum(),
        total: rows.iter().sum(),
    }
}

/// Distance variance of a univariate sample on the reporting scale of
/// [`crate::estimators::dvar`].
pub fn dvar_univariate(x: &[f64], bias_corrected: bool) -> Result<f64> {
    let required = min_sample_size(bias_corrected);
    if x.len() < required {
        return Err(Error::TooFewObservations {
            what: "distance variance",
            required,
            actual: x.len(),
        });
    }
    let sq = gamma_sums_univariate(x).dvar_sq(x.len(), bias_corrected);
    Ok(if bias_corrected { sq } else { sq.max(0.0).sqrt() })
}

/// The three sums of the two-sample energy statistic for univariate samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSums {
    /// `sum_i sum_j |x_i - y_j|` over the `n m` cross pairs.
    pub delta1: f64,
    /// `sum_i sum_j |x_i - x_j|`.
    pub delta2: f64,
    /// `sum_i sum_j |y_i - y_j|`.
    pub delta3: f64,
}

impl DeltaSums {
    /// `e_n = 2 delta1 / (nm) - delta2 / n^2 - delta3 / m^2`.
    pub fn energy(&self, n: usize, m: usize) -> f64 {
        crate::estimators::energy_from_sums(self.delta1, self.delta2, self.delta3, n, m)
    }
}

/// Delta sums via the Gini identity on each sample and on the pooled sample.
///
/// The pooled full sum `S_z` counts every cross pair twice, so
/// `delta1 = (S_z - delta2 - delta3) / 2`.
pub fn delta_sums(x: &[f64], y: &[f64]) -> DeltaSums {
    let delta2 = pairwise_abs_sum(x);
    let delta3 = pairwise_abs_sum(y);
    let mut pooled = Vec::with_capacity(x.len() + y.len());
    pooled.extend_from_slice(x);
    pooled.extend_from_slice(y);
    let pooled_sum = pairwise_abs_sum(&pooled);
    DeltaSums {
        delta1: 0.5 * (pooled_sum - delta2 - delta3),
        delta2,
        delta3,
    }
}

/// Positions of `x` in ascending order.
fn argsort(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_unstable_by(|&a, &b| x[a].total_cmp(&x[b]));
    idx
}

/// Row sums `a_i.` in the original order of `x`.
fn row_sums_by_position(x: &[f64], order: &[usize]) -> Vec<f64> {
    let sorted: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let sums = row_sums_unchecked(&sorted);
    let mut out = vec![0.0; x.len()];
    for (&pos, s) in order.iter().zip(sums) {
        out[pos] = s;
    }
    out
}

/// Fenwick tree of (count, sum x, sum y, sum xy) over y-ranks.
struct Fenwick {
    tree: Vec<[f64; 4]>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick {
            tree: vec![[0.0; 4]; n + 1],
        }
    }

    fn add(&mut self, rank: usize, v: [f64; 4]) {
        let mut i = rank + 1;
        while i < self.tree.len() {
            for (t, d) in self.tree[i].iter_mut().zip(v) {
                *t += d;
            }
            i += i & i.wrapping_neg();
        }
    }

    /// Sums over ranks `< rank`.
    fn prefix(&self, rank: usize) -> [f64; 4] {
        let mut acc = [0.0; 4];
        let mut i = rank;
        while i > 0 {
            for (a, t) in acc.iter_mut().zip(self.tree[i]) {
                *a += t;
            }
            i -= i & i.wrapping_neg();
        }
        acc
    }
}

/// `sum_{i != j} |x_i - x_j| |y_i - y_j|` in `O(n log n)`.
///
/// Points are visited in ascending `x`; every earlier point `j` has
/// `x_j <= x_i`, so `|x_i - x_j| = x_i - x_j`, and the sign of `y_i - y_j` is
/// decided by comparing y-ranks. A Fenwick tree over y-ranks returns the
/// moments of the earlier points below and above `y_i`, which expand the
/// products in closed form. Tied coordinates contribute zero on either side,
/// so the tie order of the sorts is irrelevant.
fn cross_abs_product_sum(x: &[f64], y: &[f64], x_order: &[usize], y_order: &[usize]) -> f64 {
    let n = x.len();
    let (cx, cy) = (mean(x), mean(y));
    let mut y_rank = vec![0usize; n];
    for (r, &i) in y_order.iter().enumerate() {
        y_rank[i] = r;
    }
    let mut tree = Fenwick::new(n);
    let mut seen = [0.0f64; 4];
    let mut acc = 0.0;
    for &i in x_order {
        let (xi, yi) = (x[i] - cx, y[i] - cy);
        let [c_lo, sx_lo, sy_lo, sxy_lo] = tree.prefix(y_rank[i]);
        let (c_hi, sx_hi, sy_hi, sxy_hi) = (
            seen[0] - c_lo,
            seen[1] - sx_lo,
            seen[2] - sy_lo,
            seen[3] - sxy_lo,
        );
        // sum over lower j of (xi - xj)(yi - yj), and of (xi - xj)(yj - yi) over upper j.
        let lower = c_lo * xi * yi - xi * sy_lo - yi * sx_lo + sxy_lo;
        let upper = xi * sy_hi - c_hi * xi * yi - sxy_hi + yi * sx_hi;
        acc += lower + upper;
        let v = [1.0, xi, yi, xi * yi];
        tree.add(y_rank[i], v);
        for (s, d) in seen.iter_mut().zip(v) {
            *s += d;
        }
    }
    2.0 * acc
}

/// Distance-covariance accumulators of a univariate paired sample in
/// `O(n log n)` time and `O(n)` memory.
pub fn cross_sums_univariate(x: &[f64], y: &[f64]) -> Result<CrossSums> {
    if x.len() != y.len() {
        return Err(Error::SampleSizeMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let (x_order, y_order) = (argsort(x), argsort(y));
    let ra = row_sums_by_position(x, &x_order);
    let rb = row_sums_by_position(y, &y_order);
    Ok(CrossSums {
        prod: cross_abs_product_sum(x, y, &x_order, &y_order),
        row_prod: ra.iter().zip(&rb).map(|(a, b)| a * b).sum(),
        total_a: ra.iter().sum(),
        total_b: rb.iter().sum(),
    })
}

/// Biased squared-scale distance covariance `V_n^2(x, y)` of two univariate
/// samples, in `O(n log n)`.
pub fn dcov_univariate_fast(x: &[f64], y: &[f64]) -> Result<f64> {
    let sums = cross_sums_univariate(x, y)?;
    if x.len() < 2 {
        return Err(Error::TooFewObservations {
            what: "distance covariance",
            required: 2,
            actual: x.len(),
        });
    }
    Ok(sums.dcov_sq(x.len(), false))
}
