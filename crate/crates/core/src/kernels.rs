//! On-the-fly distance accumulation.
//!
//! Every kernel walks the index pairs `(i, j)` row by row, computes each
//! Euclidean distance when it is needed and folds it into a handful of scalar
//! accumulators. No distance matrix and no `n`-length buffer is ever stored:
//! row `i`'s sum `a_i.` is finished before row `i + 1` starts, so per-row state
//! is `O(p)` and the only `O(n)` allocation is the list of per-block partials.
//! Plain within-sample sums need no row sums and visit only `i < j`.
//!
//! Rows are grouped into fixed blocks of [`BLOCK_ROWS`]. Blocks may run on any
//! number of threads; their partials are always combined left to right, so the
//! result is bit-identical for every thread count.

use std::ops::Range;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Rows per work unit; fixes the reduction tree.
pub const BLOCK_ROWS: usize = 32;
/// Inner-loop chunk of partner rows whose squared distances live on the stack.
const CHUNK: usize = 128;
/// Below this many pair evaluations the blocks are run inline.
const PARALLEL_PAIRS: usize = 1 << 16;

/// Accumulators for the distance variance of one sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GammaSums {
    /// `sum_{i != j} a_ij^2`.
    pub gamma1: f64,
    /// `sum_i a_i.^2`.
    pub row_sq: f64,
    /// `a.. = sum_{i,j} a_ij`.
    pub total: f64,
}

/// Joint accumulators for the distance covariance of a paired sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CrossSums {
    /// `sum_{i != j} a_ij b_ij`.
    pub prod: f64,
    /// `sum_i a_i. b_i.`.
    pub row_prod: f64,
    pub total_a: f64,
    pub total_b: f64,
}

/// Everything a distance correlation needs, from one pass over the pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct JointSums {
    pub cross: CrossSums,
    pub x: GammaSums,
    pub y: GammaSums,
}

/// A set of observations the kernels can stream over.
pub(crate) trait Rows: Sync {
    fn len(&self) -> usize;
    fn dim(&self) -> usize;
    fn row_into(&self, i: usize, buf: &mut [f64]);
    /// `out[t] = ||point - row(start + t)||^2` for every `t`.
    fn sq_dists(&self, point: &[f64], start: usize, out: &mut [f64]);
}

impl Rows for Dataset {
    #[inline]
    fn len(&self) -> usize {
        self.n()
    }

    #[inline]
    fn dim(&self) -> usize {
        self.p()
    }

    #[inline]
    fn row_into(&self, i: usize, buf: &mut [f64]) {
        Dataset::row_into(self, i, buf)
    }

    #[inline]
    fn sq_dists(&self, point: &[f64], start: usize, out: &mut [f64]) {
        let len = out.len();
        accumulate_sq(point, out, |k| {
            let col = &self.column(k)[start..start + len];
            move |t| col[t]
        });
    }
}

/// The rows of `data` listed in `index`, in that order.
pub(crate) struct Indexed<'a> {
    pub data: &'a Dataset,
    pub index: &'a [usize],
}

impl Rows for Indexed<'_> {
    #[inline]
    fn len(&self) -> usize {
        self.index.len()
    }

    #[inline]
    fn dim(&self) -> usize {
        self.data.p()
    }

    #[inline]
    fn row_into(&self, i: usize, buf: &mut [f64]) {
        self.data.row_into(self.index[i], buf)
    }

    #[inline]
    fn sq_dists(&self, point: &[f64], start: usize, out: &mut [f64]) {
        let idx = &self.index[start..start + out.len()];
        accumulate_sq(point, out, |k| {
            let col = self.data.column(k);
            move |t| col[idx[t]]
        });
    }
}

/// `out[t] = sum_k (point[k] - value(k, t))^2`, four coordinates per pass so
/// each output is stored once per group. Every row source shares this
/// association order.
#[inline(always)]
fn accumulate_sq<C, G>(point: &[f64], out: &mut [f64], column: C)
where
    C: Fn(usize) -> G,
    G: Fn(usize) -> f64,
{
    out.fill(0.0);
    let len = out.len();
    let mut groups = point.chunks_exact(4);
    let mut k = 0;
    for g in &mut groups {
        let (v0, v1, v2, v3) = (column(k), column(k + 1), column(k + 2), column(k + 3));
        for t in 0..len {
            let d0 = g[0] - v0(t);
            let d1 = g[1] - v1(t);
            let d2 = g[2] - v2(t);
            let d3 = g[3] - v3(t);
            out[t] += (d0 * d0 + d1 * d1) + (d2 * d2 + d3 * d3);
        }
        k += 4;
    }
    for &c in groups.remainder() {
        let v = column(k);
        for t in 0..len {
            let d = c - v(t);
            out[t] += d * d;
        }
        k += 1;
    }
}

/// Four-lane sum; fixed association order, vectorizes.
#[inline]
fn lane_sum(values: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let mut quads = values.chunks_exact(4);
    for q in &mut quads {
        acc[0] += q[0];
        acc[1] += q[1];
        acc[2] += q[2];
        acc[3] += q[3];
    }
    let mut tail = 0.0;
    for &v in quads.remainder() {
        tail += v;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn lane_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let mut qa = a.chunks_exact(4);
    let mut qb = b.chunks_exact(4);
    for (x, y) in (&mut qa).zip(&mut qb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in qa.remainder().iter().zip(qb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Runs `f` over fixed row blocks of `0..n` and folds the partials in block
/// order.
fn blocked<T, F, C>(n: usize, pairs: usize, f: F, combine: C) -> T
where
    T: Send + Default,
    F: Fn(Range<usize>) -> T + Sync + Send,
    C: Fn(T, T) -> T,
{
    let blocks = n.div_ceil(BLOCK_ROWS);
    let range = |b: usize| b * BLOCK_ROWS..((b + 1) * BLOCK_ROWS).min(n);
    let partials: Vec<T> = if pairs >= PARALLEL_PAIRS && rayon::current_num_threads() > 1 {
        (0..blocks).into_par_iter().map(|b| f(range(b))).collect()
    } else {
        (0..blocks).map(|b| f(range(b))).collect()
    };
    partials.into_iter().fold(T::default(), combine)
}

pub(crate) fn cross_sum<A: Rows, B: Rows>(a: &A, b: &B) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    let m = b.len();
    blocked(
        a.len(),
        a.len() * m,
        |rows| {
            let mut point = vec![0.0; a.dim()];
            let mut buf = [0.0; CHUNK];
            let mut acc = 0.0;
            for i in rows {
                a.row_into(i, &mut point);
                let mut row = 0.0;
                for start in (0..m).step_by(CHUNK) {
                    let out = &mut buf[..CHUNK.min(m - start)];
                    b.sq_dists(&point, start, out);
                    out.iter_mut().for_each(|v| *v = v.sqrt());
                    row += lane_sum(out);
                }
                acc += row;
            }
            acc
        },
        |l, r| l + r,
    )
}

/// `sum_{i,j} ||a_i - a_j||` from the pairs `i < j`, doubled.
pub(crate) fn self_sum<A: Rows>(a: &A) -> f64 {
    let n = a.len();
    let half = blocked(
        n,
        n * n / 2,
        |rows| {
            let mut point = vec![0.0; a.dim()];
            let mut buf = [0.0; CHUNK];
            let mut acc = 0.0;
            for i in rows {
                a.row_into(i, &mut point);
                let mut row = 0.0;
                for start in (i + 1..n).step_by(CHUNK) {
                    let out = &mut buf[..CHUNK.min(n - start)];
                    a.sq_dists(&point, start, out);
                    out.iter_mut().for_each(|v| *v = v.sqrt());
                    row += lane_sum(out);
                }
                acc += row;
            }
            acc
        },
        |l, r| l + r,
    );
    2.0 * half
}

pub(crate) fn gamma_sums<A: Rows>(a: &A) -> GammaSums {
    let n = a.len();
    blocked(
        n,
        n * n,
        |rows| {
            let mut point = vec![0.0; a.dim()];
            let mut sq = [0.0; CHUNK];
            let mut dist = [0.0; CHUNK];
            let mut acc = GammaSums::default();
            for i in rows {
                a.row_into(i, &mut point);
                let (mut row, mut row_sq) = (0.0, 0.0);
                for start in (0..n).step_by(CHUNK) {
                    let len = CHUNK.min(n - start);
                    let (sq, dist) = (&mut sq[..len], &mut dist[..len]);
                    a.sq_dists(&point, start, sq);
                    for (d, &s) in dist.iter_mut().zip(sq.iter()) {
                        *d = s.sqrt();
                    }
                    row += lane_sum(dist);
                    row_sq += lane_sum(sq);
                }
                acc.gamma1 += row_sq;
                acc.row_sq += row * row;
                acc.total += row;
            }
            acc
        },
        |l, r| GammaSums {
            gamma1: l.gamma1 + r.gamma1,
            row_sq: l.row_sq + r.row_sq,
            total: l.total + r.total,
        },
    )
}

pub(crate) fn joint_sums<A: Rows, B: Rows>(a: &A, b: &B) -> JointSums {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    blocked(
        n,
        n * n,
        |rows| {
            let mut pa = vec![0.0; a.dim()];
            let mut pb = vec![0.0; b.dim()];
            let mut sqa = [0.0; CHUNK];
            let mut sqb = [0.0; CHUNK];
            let mut da = [0.0; CHUNK];
            let mut db = [0.0; CHUNK];
            let mut acc = JointSums::default();
            for i in rows {
                a.row_into(i, &mut pa);
                b.row_into(i, &mut pb);
                let (mut ra, mut rb, mut ra2, mut rb2, mut rab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for start in (0..n).step_by(CHUNK) {
                    let len = CHUNK.min(n - start);
                    let (sqa, sqb) = (&mut sqa[..len], &mut sqb[..len]);
                    let (da, db) = (&mut da[..len], &mut db[..len]);
                    a.sq_dists(&pa, start, sqa);
                    b.sq_dists(&pb, start, sqb);
                    for t in 0..len {
                        da[t] = sqa[t].sqrt();
                        db[t] = sqb[t].sqrt();
                    }
                    ra += lane_sum(da);
                    rb += lane_sum(db);
                    ra2 += lane_sum(sqa);
                    rb2 += lane_sum(sqb);
                    rab += lane_dot(da, db);
                }
                acc.cross.prod += rab;
                acc.cross.row_prod += ra * rb;
                acc.cross.total_a += ra;
                acc.cross.total_b += rb;
                acc.x.gamma1 += ra2;
                acc.x.row_sq += ra * ra;
                acc.x.total += ra;
                acc.y.gamma1 += rb2;
                acc.y.row_sq += rb * rb;
                acc.y.total += rb;
            }
            acc
        },
        |l, r| JointSums {
            cross: CrossSums {
                prod: l.cross.prod + r.cross.prod,
                row_prod: l.cross.row_prod + r.cross.row_prod,
                total_a: l.cross.total_a + r.cross.total_a,
                total_b: l.cross.total_b + r.cross.total_b,
            },
            x: GammaSums {
                gamma1: l.x.gamma1 + r.x.gamma1,
                row_sq: l.x.row_sq + r.x.row_sq,
                total: l.x.total + r.x.total,
            },
            y: GammaSums {
                gamma1: l.y.gamma1 + r.y.gamma1,
                row_sq: l.y.row_sq + r.y.row_sq,
                total: l.y.total + r.y.total,
            },
        },
    )
}

/// `sum_{i,j} ||X_i - X_j||` over all ordered pairs.
pub fn pairwise_sum(x: &Dataset) -> f64 {
    self_sum(x)
}

/// `sum_i sum_j ||X_i - Y_j||`.
pub fn cross_pairwise_sum(x: &Dataset, y: &Dataset) -> Result<f64> {
    if x.p() != y.p() {
        return Err(Error::DimensionMismatch {
            left: x.p(),
            right: y.p(),
        });
    }
    if std::ptr::eq(x, y) || x == y {
        return Ok(pairwise_sum(x));
    }
    Ok(cross_sum(x, y))
}

pub fn dvar_sums(x: &Dataset) -> GammaSums {
    gamma_sums(x)
}

pub fn dcov_sums(x: &Dataset, y: &Dataset) -> Result<CrossSums> {
    Ok(dcor_sums(x, y)?.cross)
}

/// Cross and per-sample accumulators of a paired sample in a single pass.
pub fn dcor_sums(x: &Dataset, y: &Dataset) -> Result<JointSums> {
    if x.n() != y.n() {
        return Err(Error::SampleSizeMismatch {
            left: x.n(),
            right: y.n(),
        });
    }
    Ok(joint_sums(x, y))
}

/// Sizes the global rayon pool from `ESTAT_THREADS` when it is set.
///
/// Has no effect if the global pool was already initialized.
pub fn init_threads_from_env() -> Result<()> {
    let Ok(raw) = std::env::var("ESTAT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("ESTAT_THREADS={raw:?}")))?;
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}
