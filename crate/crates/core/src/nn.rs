//! Euclidean distance kernels and k-nearest-neighbour radii.
//!
//! Distances are evaluated block by block, a block of query rows against a
//! strip of reference rows, in the expanded form `|a|^2 + |b|^2 - 2 a.b`.
//! Each query row is owned by exactly one worker and every per-row reduction
//! visits references in index order, so results do not depend on the number
//! of threads.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::Range;

use rayon::prelude::*;

use crate::embed_io::EmbeddingSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Accumulator lanes of the squared-distance kernel.
const LANES: usize = 8;
/// Cache tile inside a chunk: query rows and reference rows per matrix product.
const TILE_ROWS: usize = 64;
const TILE_COLS: usize = 2048;

/// Block sizes for distance evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ChunkPlan {
    /// Query rows per block; also the unit of parallel work.
    pub row_chunk: usize,
    /// Reference rows per block; `usize::MAX` means all of them.
    pub col_chunk: usize,
}

impl Default for ChunkPlan {
    fn default() -> Self {
        Self {
            row_chunk: 1024,
            col_chunk: usize::MAX,
        }
    }
}

impl ChunkPlan {
    pub fn new(row_chunk: usize, col_chunk: usize) -> Result<Self> {
        if row_chunk == 0 || col_chunk == 0 {
            return Err(Error::InvalidParameter(format!(
                "chunk sizes must be positive (got {row_chunk}x{col_chunk})"
            )));
        }
        Ok(Self {
            row_chunk,
            col_chunk,
        })
    }

    /// A plan that evaluates everything in a single block.
    pub fn unchunked() -> Self {
        Self {
            row_chunk: usize::MAX,
            col_chunk: usize::MAX,
        }
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.row_chunk, self.col_chunk).map(|_| ())
    }
}

/// Squared Euclidean distance with a fixed lane-split summation order.
///
/// Coordinate `d` accumulates into lane `d % LANES`; lanes are combined
/// pairwise at the end. Every kernel in this module uses this exact order.
#[inline(always)]
pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (x, y) in (&mut ca).zip(&mut cb) {
        let x: &[T; LANES] = x.try_into().unwrap();
        let y: &[T; LANES] = y.try_into().unwrap();
        for l in 0..LANES {
            let d = x[l] - y[l];
            acc[l] = acc[l] + d * d;
        }
    }
    for (l, (&x, &y)) in ca.remainder().iter().zip(cb.remainder()).enumerate() {
        let d = x - y;
        acc[l] = acc[l] + d * d;
    }
    combine(&acc)
}

#[inline(always)]
fn combine<T: Scalar>(acc: &[T; LANES]) -> T {
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

#[inline]
pub fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    // Difference form: never negative, and exactly zero for identical rows.
    squared_distance(a, b).sqrt()
}

/// Squared row norms, summed in the kernel's lane order.
pub(crate) fn row_norms<T: Scalar>(rows: &[T], dim: usize) -> Vec<T> {
    let zero = vec![T::zero(); dim];
    rows.chunks_exact(dim).map(|r| squared_distance(r, &zero)).collect()
}

/// Pairs whose expanded-form squared distance falls below this fraction of
/// `|a|^2 + |b|^2` are recomputed in difference form. Above it the expanded
/// form loses at most a few dozen ulps; below it cancellation would
/// dominate. This also makes coincident rows exactly 0.
fn refine_tolerance<T: Scalar>() -> T {
    T::of(1.0 / 64.0)
}

/// Fills `out` (row-major, `queries x refs`) with Euclidean distances.
///
/// The bulk is `|q|^2 + |r|^2 - 2 q.r` through a matrix product; entries in
/// the cancellation zone are recomputed exactly, so the result is never
/// negative.
pub(crate) fn distance_block<T: Scalar>(
    queries: &[T],
    query_norms: &[T],
    refs: &[T],
    ref_norms: &[T],
    dim: usize,
    out: &mut [T],
) {
    let (n_q, n_r) = (queries.len() / dim, refs.len() / dim);
    debug_assert_eq!(out.len(), n_q * n_r);
    if n_q == 0 || n_r == 0 {
        return;
    }
    T::gemm_abt(n_q, n_r, dim, queries, refs, out);
    let two = T::of(2.0);
    let tol = refine_tolerance::<T>();
    for (i, row) in out.chunks_exact_mut(n_r).enumerate() {
        let qn = query_norms[i];
        for (v, &rn) in row.iter_mut().zip(ref_norms) {
            *v = qn + rn - two * *v;
        }
        let q = &queries[i * dim..(i + 1) * dim];
        for (j, (v, &rn)) in row.iter_mut().zip(ref_norms).enumerate() {
            if *v <= tol * (qn + rn) {
                *v = squared_distance(q, &refs[j * dim..(j + 1) * dim]);
            }
        }
        for v in row.iter_mut() {
            *v = v.sqrt();
        }
    }
}

/// Distances from rows `rows` of `a` to every row of `b`, row-major
/// `(rows.len()) x b.n()`.
pub fn pairwise_block<T: Scalar>(
    a: &EmbeddingSet<T>,
    rows: Range<usize>,
    b: &EmbeddingSet<T>,
) -> Result<Vec<T>> {
    a.ensure_same_dim(b)?;
    if rows.start > rows.end || rows.end > a.n() {
        return Err(Error::InvalidParameter(format!(
            "row range {rows:?} out of bounds for {} rows",
            a.n()
        )));
    }
    let dim = a.dim();
    let q = a.rows(rows.start, rows.end);
    let mut out = vec![T::zero(); rows.len() * b.n()];
    distance_block(q, &row_norms(q, dim), b.as_slice(), &row_norms(b.as_slice(), dim), dim, &mut out);
    Ok(out)
}

/// Streams the distance matrix `queries x refs` through `visit`, one row
/// state per query.
///
/// `visit(state, query_index, first_ref_index, distances)` receives
/// consecutive strips of a query's distance row in increasing reference
/// order. Peak memory is one cache tile (at most `row_chunk x col_chunk`)
/// per worker.
pub(crate) fn scan_rows<T, S, I, V>(
    queries: &EmbeddingSet<T>,
    refs: &EmbeddingSet<T>,
    plan: ChunkPlan,
    init: I,
    visit: V,
) -> Result<Vec<S>>
where
    T: Scalar,
    S: Send,
    I: Fn(usize) -> S + Sync,
    V: Fn(&mut S, usize, usize, &[T]) + Sync,
{
    queries.ensure_same_dim(refs)?;
    plan.validate()?;
    let dim = queries.dim();
    let (n_q, n_r) = (queries.n(), refs.n());
    let row_chunk = plan.row_chunk.min(n_q);
    let col_chunk = plan.col_chunk.min(n_r);

    let query_norms = row_norms(queries.as_slice(), dim);
    let ref_norms = row_norms(refs.as_slice(), dim);
    let mut states: Vec<S> = (0..n_q).map(&init).collect();
    states
        .par_chunks_mut(row_chunk)
        .enumerate()
        .for_each(|(chunk_idx, chunk_states)| {
            let row0 = chunk_idx * row_chunk;
            let tile_rows = TILE_ROWS.min(chunk_states.len());
            let tile_cols = TILE_COLS.min(col_chunk);
            let mut block = vec![T::zero(); tile_rows * tile_cols];
            for (t, tile_states) in chunk_states.chunks_mut(tile_rows).enumerate() {
                let r0 = row0 + t * tile_rows;
                let rows = tile_states.len();
                let q = queries.rows(r0, r0 + rows);
                for col0 in (0..n_r).step_by(tile_cols) {
                    let cols = tile_cols.min(n_r - col0);
                    let block = &mut block[..rows * cols];
                    distance_block(
                        q,
                        &query_norms[r0..r0 + rows],
                        refs.rows(col0, col0 + cols),
                        &ref_norms[col0..col0 + cols],
                        dim,
                        block,
                    );
                    for (r, state) in tile_states.iter_mut().enumerate() {
                        visit(state, r0 + r, col0, &block[r * cols..(r + 1) * cols]);
                    }
                }
            }
        });
    Ok(states)
}

/// Distance to the k-th nearest neighbour of every sample, self excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnRadii<T> {
    radii: Vec<T>,
    k: usize,
}

impl<T: Scalar> KnnRadii<T> {
    /// Wraps precomputed radii (e.g. loaded from a cache).
    pub fn from_vec(radii: Vec<T>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidK { k, n: radii.len() });
        }
        if radii.iter().any(|r| !r.is_finite() || *r < T::zero()) {
            return Err(Error::InvalidParameter("radii must be finite and non-negative".into()));
        }
        Ok(Self { radii, k })
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn source_n(&self) -> usize {
        self.radii.len()
    }

    /// Arithmetic mean, summed in index order.
    pub fn mean(&self) -> T {
        let sum = self.radii.iter().fold(T::zero(), |acc, &r| acc + r);
        sum / T::from_count(self.radii.len())
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Ordered<T>(T);

impl<T: Scalar> Eq for Ordered<T> {}

impl<T: Scalar> PartialOrd for Ordered<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Ordered<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    Ok(())
}

/// k-th nearest-neighbour radii within `set` for several `k` at once.
///
/// One pass keeps the `max(ks)` smallest distances per row in a bounded
/// max-heap; each requested `k` reads its order statistic from it.
pub fn knn_radii_multi<T: Scalar>(
    set: &EmbeddingSet<T>,
    ks: &[usize],
    plan: ChunkPlan,
) -> Result<Vec<KnnRadii<T>>> {
    let n = set.n();
    for &k in ks {
        check_k(k, n)?;
    }
    let Some(&k_max) = ks.iter().max() else {
        return Ok(Vec::new());
    };
    let heaps = scan_rows(
        set,
        set,
        plan,
        |_| BinaryHeap::<Ordered<T>>::with_capacity(k_max + 1),
        |heap, i, col0, dists| {
            let mut bound = if heap.len() < k_max {
                T::infinity()
            } else {
                heap.peek().map_or(T::infinity(), |top| top.0)
            };
            for (off, &d) in dists.iter().enumerate() {
                if d >= bound || col0 + off == i {
                    continue;
                }
                if heap.len() == k_max {
                    heap.pop();
                }
                heap.push(Ordered(d));
                if heap.len() == k_max {
                    bound = heap.peek().map_or(T::infinity(), |top| top.0);
                }
            }
        },
    )?;
    let sorted: Vec<Vec<T>> = heaps
        .into_iter()
        .map(|h| h.into_sorted_vec().into_iter().map(|o| o.0).collect())
        .collect();
    Ok(ks
        .iter()
        .map(|&k| KnnRadii {
            radii: sorted.iter().map(|row| row[k - 1]).collect(),
            k,
        })
        .collect())
}

/// Radius of the closed ball around each sample that holds its `k` nearest
/// neighbours (self excluded). Ties count towards `k`.
pub fn knn_radii<T: Scalar>(set: &EmbeddingSet<T>, k: usize, plan: ChunkPlan) -> Result<KnnRadii<T>> {
    Ok(knn_radii_multi(set, &[k], plan)?.remove(0))
}

pub fn mean_knn_radius<T: Scalar>(set: &EmbeddingSet<T>, k: usize, plan: ChunkPlan) -> Result<T> {
    Ok(knn_radii(set, k, plan)?.mean())
}
