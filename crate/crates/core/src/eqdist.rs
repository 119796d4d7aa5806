//! Permutation test for equality of two distributions based on the energy
//! statistic.
//!
//! The statistic is the unscaled `e_n(X, Y)`: group sizes are fixed under
//! permutation, so the `nm/(n+m)` factor cannot change which permutations
//! exceed the observed value. The p-value is `(exceed + 1) / (B + 1)`, where a
//! permuted statistic counts when it is at least the observed one.
//!
//! Permutation `b` selects the first group as `n` of the `n + m` pooled
//! indices (`0..n` are `x`, `n..n+m` are `y`), drawn uniformly from stream `b`
//! of the seed; see [`permutation_group`].

use rand::seq::index;
use rayon::prelude::*;

use crate::dataset::{Dataset, RngSeed, UnivariateSample};
use crate::error::{Error, Result};
use crate::estimators::{energy_from_sums, size_weight};
use crate::kernels::{self, Indexed};
use crate::univariate::delta_sums;

/// Permuted statistics within this relative distance (of the mean pooled
/// distance) of the observed one count as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqDistResult {
    /// Observed energy statistic.
    pub statistic: f64,
    pub permutations: usize,
    /// Number of permuted statistics at least as large as the observed one.
    pub exceed_count: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct EqDistOptions {
    pub permutations: usize,
    pub seed: RngSeed,
    /// Report and compare `nm/(n+m) e_n` instead of `e_n`.
    pub size_weighted: bool,
}

impl EqDistOptions {
    pub fn new(permutations: usize, seed: RngSeed) -> Self {
        EqDistOptions {
            permutations,
            seed,
            size_weighted: false,
        }
    }
}

/// Pooled indices forming the first group of permutation `b`, ascending.
pub fn permutation_group(n: usize, m: usize, b: usize, seed: RngSeed) -> Vec<usize> {
    let mut rng = seed.stream(b as u64);
    let mut group = index::sample(&mut rng, n + m, n).into_vec();
    group.sort_unstable();
    group
}

fn check_inputs(n: usize, m: usize, permutations: usize) -> Result<()> {
    for size in [n, m] {
        if size < 2 {
            return Err(Error::TooFewObservations {
                what: "equality-of-distributions test",
                required: 2,
                actual: size,
            });
        }
    }
    if permutations == 0 {
        return Err(Error::InvalidArgument(
            "number of permutations must be positive".into(),
        ));
    }
    Ok(())
}

fn summarize(observed: f64, permuted: &[f64], scale: f64, weight: f64) -> EqDistResult {
    let threshold = weight * (observed - TIE_TOLERANCE * scale);
    let statistic = weight * observed;
    let exceed_count = permuted.iter().filter(|&&s| weight * s >= threshold).count();
    EqDistResult {
        statistic,
        permutations: permuted.len(),
        exceed_count,
        p_value: (exceed_count + 1) as f64 / (permuted.len() + 1) as f64,
    }
}

/// The pooled univariate sample sorted once, with the prefix sums every
/// permutation reuses.
pub struct SortedPool {
    n: usize,
    m: usize,
    /// Rank of each pooled index in the sorted pool.
    rank: Vec<usize>,
    /// Sorted, mean-centred pooled values.
    sorted: Vec<f64>,
    /// `prefix[k] = sum of sorted[..k]`.
    prefix: Vec<f64>,
    /// `sum_k (k + 1) sorted[k]`.
    rank_weighted: f64,
    /// `sum_k (2(k + 1) - N - 1) sorted[k]`: unordered pooled pair sum.
    pooled_half: f64,
}

impl SortedPool {
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        let (n, m) = (x.len(), y.len());
        let total = n + m;
        let value = |i: usize| if i < n { x[i] } else { y[i - n] };
        let mut order: Vec<usize> = (0..total).collect();
        order.sort_unstable_by(|&a, &b| value(a).total_cmp(&value(b)));
        let centre = (x.iter().sum::<f64>() + y.iter().sum::<f64>()) / total as f64;
        let mut rank = vec![0; total];
        let mut sorted = Vec::with_capacity(total);
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
            sorted.push(value(i) - centre);
        }
        drop(order);
        let mut prefix = Vec::with_capacity(total + 1);
        prefix.push(0.0);
        let (mut acc, mut rank_weighted, mut pooled_half) = (0.0, 0.0, 0.0);
        for (k, &v) in sorted.iter().enumerate() {
            acc += v;
            prefix.push(acc);
            rank_weighted += (k + 1) as f64 * v;
            pooled_half += (2.0 * (k + 1) as f64 - total as f64 - 1.0) * v;
        }
        SortedPool {
            n,
            m,
            rank,
            sorted,
            prefix,
            rank_weighted,
            pooled_half,
        }
    }

    /// Energy statistic when `group` (pooled indices, any order) is the first
    /// sample and the rest of the pool is the second. `ranks` is scratch space.
    pub fn statistic(&self, group: &[usize], ranks: &mut Vec<usize>) -> f64 {
        let (n, m) = (self.n, self.m);
        debug_assert_eq!(group.len(), n);
        ranks.clear();
        ranks.extend(group.iter().map(|&i| self.rank[i]));
        ranks.sort_unstable();

        let total_sum = self.prefix[n + m];
        let mut first_sum = 0.0;
        // sum r x_(r), with r the 1-based rank inside the first group
        let mut first_weighted = 0.0;
        // sum over first-group members of their 1-based pooled rank times value
        let mut pooled_weighted = 0.0;
        // sum over first-group members of the pooled values ranked above them
        let mut above = 0.0;
        for (r, &k) in ranks.iter().enumerate() {
            let v = self.sorted[k];
            first_sum += v;
            first_weighted += (r + 1) as f64 * v;
            pooled_weighted += (k + 1) as f64 * v;
            above += total_sum - self.prefix[k + 1];
        }
        // Same sum restricted to the first group: sum_r sum_{s > r} x_(s).
        let first_above = first_weighted - first_sum;
        let second_sum = total_sum - first_sum;
        // A second-group value at pooled rank k has in-group rank k - c(k),
        // where c(k) counts first-group members below it.
        let second_weighted =
            (self.rank_weighted - pooled_weighted) - (above - first_above);

        let half_x = 2.0 * first_weighted - (n as f64 + 1.0) * first_sum;
        let half_y = 2.0 * second_weighted - (m as f64 + 1.0) * second_sum;
        let cross = self.pooled_half - half_x - half_y;
        energy_from_sums(cross, 2.0 * half_x, 2.0 * half_y, n, m)
    }

    /// Mean absolute pooled difference, the scale of the statistic.
    fn scale(&self) -> f64 {
        let total = (self.n + self.m) as f64;
        2.0 * self.pooled_half / (total * total)
    }
}

/// The `B` permuted statistics of the univariate test, in permutation order.
pub fn permuted_statistics_univariate(
    x: &UnivariateSample,
    y: &UnivariateSample,
    permutations: usize,
    seed: RngSeed,
) -> Vec<f64> {
    let pool = SortedPool::new(x.values(), y.values());
    univariate_statistics(&pool, permutations, seed)
}

fn univariate_statistics(pool: &SortedPool, permutations: usize, seed: RngSeed) -> Vec<f64> {
    (0..permutations)
        .into_par_iter()
        .map_init(Vec::new, |ranks, b| {
            let group = permutation_group(pool.n, pool.m, b, seed);
            pool.statistic(&group, ranks)
        })
        .collect()
}

/// Univariate test: sorts the pooled sample once and evaluates every
/// permutation in `O(n log n)` from integer-sorted ranks.
pub fn eqdist_test_univariate(
    x: &UnivariateSample,
    y: &UnivariateSample,
    permutations: usize,
    seed: RngSeed,
) -> Result<EqDistResult> {
    eqdist_test_univariate_with(x, y, &EqDistOptions::new(permutations, seed))
}

pub fn eqdist_test_univariate_with(
    x: &UnivariateSample,
    y: &UnivariateSample,
    opts: &EqDistOptions,
) -> Result<EqDistResult> {
    let (n, m) = (x.len(), y.len());
    check_inputs(n, m, opts.permutations)?;
    let observed = delta_sums(x.values(), y.values()).energy(n, m);
    let pool = SortedPool::new(x.values(), y.values());
    let permuted = univariate_statistics(&pool, opts.permutations, opts.seed);
    let weight = if opts.size_weighted {
        size_weight(n, m)
    } else {
        1.0
    };
    Ok(summarize(observed, &permuted, pool.scale(), weight))
}

struct MultiPool {
    pooled: Dataset,
    n: usize,
    m: usize,
    total_sum: f64,
}

impl MultiPool {
    fn new(x: &Dataset, y: &Dataset) -> Result<Self> {
        let pooled = x.vstack(y)?;
        let total_sum = kernels::pairwise_sum(&pooled);
        Ok(MultiPool {
            pooled,
            n: x.n(),
            m: y.n(),
            total_sum,
        })
    }

    fn statistic(&self, group: &[usize], rest: &mut Vec<usize>) -> f64 {
        rest.clear();
        let mut it = group.iter().peekable();
        for i in 0..self.n + self.m {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                rest.push(i);
            }
        }
        let first = Indexed {
            data: &self.pooled,
            index: group,
        };
        let second = Indexed {
            data: &self.pooled,
            index: rest,
        };
        let within_x = kernels::self_sum(&first);
        let within_y = kernels::self_sum(&second);
        let cross = 0.5 * (self.total_sum - within_x - within_y);
        energy_from_sums(cross, within_x, within_y, self.n, self.m)
    }

    fn scale(&self) -> f64 {
        let total = (self.n + self.m) as f64;
        self.total_sum / (total * total)
    }
}

fn multivariate_statistics(pool: &MultiPool, permutations: usize, seed: RngSeed) -> Vec<f64> {
    (0..permutations)
        .into_par_iter()
        .map_init(Vec::new, |rest, b| {
            let group = permutation_group(pool.n, pool.m, b, seed);
            pool.statistic(&group, rest)
        })
        .collect()
}

/// The `B` permuted statistics of the multivariate test, in permutation order.
pub fn permuted_statistics_multivariate(
    x: &Dataset,
    y: &Dataset,
    permutations: usize,
    seed: RngSeed,
) -> Result<Vec<f64>> {
    let pool = MultiPool::new(x, y)?;
    Ok(multivariate_statistics(&pool, permutations, seed))
}

/// Multivariate test: every permuted statistic is streamed over the permuted
/// row partition, so memory stays `O(n + m)` beyond the pooled data.
pub fn eqdist_test_multivariate(
    x: &Dataset,
    y: &Dataset,
    permutations: usize,
    seed: RngSeed,
) -> Result<EqDistResult> {
    eqdist_test_multivariate_with(x, y, &EqDistOptions::new(permutations, seed))
}

pub fn eqdist_test_multivariate_with(
    x: &Dataset,
    y: &Dataset,
    opts: &EqDistOptions,
) -> Result<EqDistResult> {
    if x.p() != y.p() {
        return Err(Error::DimensionMismatch {
            left: x.p(),
            right: y.p(),
        });
    }
    let (n, m) = (x.n(), y.n());
    check_inputs(n, m, opts.permutations)?;
    let observed = crate::estimators::energy_distance(x, y)?;
    let pool = MultiPool::new(x, y)?;
    let permuted = multivariate_statistics(&pool, opts.permutations, opts.seed);
    let weight = if opts.size_weighted {
        size_weight(n, m)
    } else {
        1.0
    };
    Ok(summarize(observed, &permuted, pool.scale(), weight))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_gaussian;
    use crate::estimators::energy_distance;

    fn sample(v: Vec<f64>) -> UnivariateSample {
        UnivariateSample::new(v).unwrap()
    }

    fn gaussian(n: usize, seed: u64, shift: f64) -> Vec<f64> {
        generate_gaussian(n, 1, RngSeed(seed))
            .unwrap()
            .column(0)
            .iter()
            .map(|v| v + shift)
            .collect()
    }

    /// Energy statistic of explicitly split samples, by brute force.
    fn naive_energy(x: &[f64], y: &[f64]) -> f64 {
        let mean_abs = |a: &[f64], b: &[f64]| {
            let s: f64 = a.iter().flat_map(|u| b.iter().map(move |v| (u - v).abs())).sum();
            s / (a.len() * b.len()) as f64
        };
        2.0 * mean_abs(x, y) - mean_abs(x, x) - mean_abs(y, y)
    }

    fn split(x: &[f64], y: &[f64], group: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (i, v) in pooled.into_iter().enumerate() {
            if group.binary_search(&i).is_ok() {
                a.push(v);
            } else {
                b.push(v);
            }
        }
        (a, b)
    }

    #[test]
    fn permutation_groups_are_deterministic_and_valid() {
        let g = permutation_group(10, 15, 3, RngSeed(1));
        assert_eq!(g, permutation_group(10, 15, 3, RngSeed(1)));
        assert_ne!(g, permutation_group(10, 15, 4, RngSeed(1)));
        assert_eq!(g.len(), 10);
        assert!(g.windows(2).all(|w| w[0] < w[1]) && *g.last().unwrap() < 25);
    }

    #[test]
    fn identity_group_reproduces_observed() {
        let (x, y) = (gaussian(12, 1, 0.0), gaussian(9, 2, 0.5));
        let pool = SortedPool::new(&x, &y);
        let group: Vec<usize> = (0..12).collect();
        let fast = pool.statistic(&group, &mut Vec::new());
        assert!((fast - naive_energy(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn fast_permutations_match_naive() {
        let (x, y) = (gaussian(25, 3, 0.0), gaussian(30, 4, 0.3));
        let stats =
            permuted_statistics_univariate(&sample(x.clone()), &sample(y.clone()), 50, RngSeed(9));
        for (b, s) in stats.iter().enumerate() {
            let (a, c) = split(&x, &y, &permutation_group(25, 30, b, RngSeed(9)));
            let naive = naive_energy(&a, &c);
            assert!((s - naive).abs() < 1e-10, "perm {b}: {s} vs {naive}");
        }
    }

    #[test]
    fn fast_permutations_with_ties() {
        let x: Vec<f64> = (0..20).map(|i| (i % 3) as f64).collect();
        let y: Vec<f64> = (0..17).map(|i| (i % 5) as f64).collect();
        let stats =
            permuted_statistics_univariate(&sample(x.clone()), &sample(y.clone()), 30, RngSeed(2));
        for (b, s) in stats.iter().enumerate() {
            let (a, c) = split(&x, &y, &permutation_group(20, 17, b, RngSeed(2)));
            assert!((s - naive_energy(&a, &c)).abs() < 1e-10);
        }
    }

    #[test]
    fn identical_samples_give_p_one() {
        let x = sample(gaussian(30, 5, 0.0));
        for seed in 0..3 {
            let r = eqdist_test_univariate(&x, &x, 99, RngSeed(seed)).unwrap();
            assert_eq!(r.exceed_count, 99);
            assert_eq!(r.p_value, 1.0);
        }
        let d = generate_gaussian(20, 3, RngSeed(1)).unwrap();
        let r = eqdist_test_multivariate(&d, &d, 49, RngSeed(3)).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn separated_samples_give_smallest_p() {
        let r = eqdist_test_univariate(
            &sample(gaussian(40, 1, 0.0)),
            &sample(gaussian(40, 2, 5.0)),
            199,
            RngSeed(1),
        )
        .unwrap();
        assert_eq!(r.exceed_count, 0);
        assert_eq!(r.p_value, 1.0 / 200.0);
    }

    #[test]
    fn weighting_never_changes_the_count() {
        let (x, y) = (sample(gaussian(30, 7, 0.0)), sample(gaussian(35, 8, 0.2)));
        let mut opts = EqDistOptions::new(199, RngSeed(4));
        let plain = eqdist_test_univariate_with(&x, &y, &opts).unwrap();
        opts.size_weighted = true;
        let weighted = eqdist_test_univariate_with(&x, &y, &opts).unwrap();
        assert_eq!(plain.exceed_count, weighted.exceed_count);
        let w = 30.0 * 35.0 / 65.0;
        assert!((weighted.statistic - w * plain.statistic).abs() < 1e-12 * weighted.statistic);
    }

    #[test]
    fn multivariate_permutations_match_recomputation() {
        let x = generate_gaussian(15, 2, RngSeed(1)).unwrap();
        let y = generate_gaussian(18, 2, RngSeed(2)).unwrap();
        let pooled = x.vstack(&y).unwrap();
        let stats = permuted_statistics_multivariate(&x, &y, 20, RngSeed(5)).unwrap();
        for (b, s) in stats.iter().enumerate() {
            let group = permutation_group(15, 18, b, RngSeed(5));
            let rows = |keep: bool| -> Dataset {
                let r: Vec<Vec<f64>> = (0..33)
                    .filter(|i| group.binary_search(i).is_ok() == keep)
                    .map(|i| pooled.row(i))
                    .collect();
                Dataset::from_rows(&r).unwrap()
            };
            let direct = energy_distance(&rows(true), &rows(false)).unwrap();
            assert!((s - direct).abs() < 1e-10, "perm {b}: {s} vs {direct}");
        }
    }

    #[test]
    fn univariate_and_multivariate_paths_agree() {
        let (x, y) = (gaussian(20, 1, 0.0), gaussian(25, 2, 0.4));
        let uni = eqdist_test_univariate(&sample(x.clone()), &sample(y.clone()), 99, RngSeed(6))
            .unwrap();
        let multi = eqdist_test_multivariate(
            &Dataset::from_column(&x).unwrap(),
            &Dataset::from_column(&y).unwrap(),
            99,
            RngSeed(6),
        )
        .unwrap();
        assert_eq!(uni.exceed_count, multi.exceed_count);
        assert!((uni.statistic - multi.statistic).abs() < 1e-12);
    }

    #[test]
    fn p_value_support_and_determinism() {
        let (x, y) = (sample(gaussian(15, 3, 0.0)), sample(gaussian(15, 4, 0.0)));
        let a = eqdist_test_univariate(&x, &y, 39, RngSeed(8)).unwrap();
        assert_eq!(a, eqdist_test_univariate(&x, &y, 39, RngSeed(8)).unwrap());
        assert_eq!(a.p_value, (a.exceed_count + 1) as f64 / 40.0);
        assert!(a.statistic >= -1e-12);
    }

    #[test]
    fn input_validation() {
        let one = sample(vec![1.0]);
        let two = sample(vec![1.0, 2.0]);
        assert!(eqdist_test_univariate(&one, &two, 9, RngSeed(1)).is_err());
        assert!(eqdist_test_univariate(&two, &two, 0, RngSeed(1)).is_err());
        let a = generate_gaussian(5, 2, RngSeed(1)).unwrap();
        let b = generate_gaussian(5, 3, RngSeed(1)).unwrap();
        assert!(matches!(
            eqdist_test_multivariate(&a, &b, 9, RngSeed(1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
