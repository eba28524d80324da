//! Exact parallel resampling with a cut-point table.
//!
//! Slot `j` (zero-based) of the table holds the smallest particle `i` with
//! `N q[i] > j`. A draw `u` starts at slot `ceil(N u) - 1` and walks forward
//! while `u > q[k]`, which lands on the smallest `k` with `u <= q[k]`.
//!
//! The table is built in parallel from `L_i = ceil(N q[i])`: particle `i`
//! owns the slots `L_{i-1} .. L_i` (empty when `L_{i-1} == L_i`). Because
//! `L` is nondecreasing, a lane owning a contiguous particle range also owns
//! a contiguous slot range, so lanes write disjoint slices.

use super::ResampleIndices;
use crate::backend::{split_slice_mut, Backend};
use crate::real::Real;
use crate::rng::UniformSource;
use crate::weights::{CutPointTable, NormalizedCdf};

/// `ceil(n * x)` with the product rounded once in working precision.
///
/// Every comparison against `j / N` in this module goes through the same
/// product, which keeps the brute-force and parallel tables identical for any `N`.
#[inline]
fn scaled_ceil<T: Real>(n: T, x: T) -> usize {
    (n * x)
        .ceil()
        .to_usize()
        .expect("scaled CDF value fits in usize")
}

/// Reference table by direct scan over the CDF for every slot.
pub fn cut_points_bruteforce<T: Real>(cdf: &NormalizedCdf<T>) -> CutPointTable {
    let q = cdf.as_slice();
    let m = q.len();
    let n = T::of_usize(m);
    let idx = (0..m)
        .map(|j| {
            let threshold = T::of_usize(j);
            (0..m)
                .find(|&i| n * q[i] > threshold)
                .expect("q[N-1] = 1 bounds every slot")
        })
        .collect();
    CutPointTable { idx }
}

/// Parallel cut-point search; equal to [`cut_points_bruteforce`].
pub fn cut_points_parallel<T: Real>(cdf: &NormalizedCdf<T>, backend: &Backend) -> CutPointTable {
    let q = cdf.as_slice();
    let m = q.len();
    let n = T::of_usize(m);
    let level = |i: usize| if i == 0 { 0 } else { scaled_ceil(n, q[i - 1]) };

    let particle_ranges = backend.lane_ranges(m);
    // Slot range owned by each lane: L_{start-1} .. L_{end-1}.
    let slot_ranges: Vec<_> = particle_ranges
        .iter()
        .map(|r| level(r.start)..level(r.end))
        .collect();
    debug_assert_eq!(slot_ranges.last().map(|r| r.end), Some(m));

    let mut idx = vec![0usize; m];
    let slices = split_slice_mut(&mut idx, &slot_ranges);
    let work: Vec<_> = particle_ranges
        .into_iter()
        .zip(slot_ranges)
        .zip(slices)
        .collect();
    backend.run(work, |((particles, slots), out)| {
        let mut prev = slots.start;
        for i in particles {
            let l = scaled_ceil(n, q[i]);
            for k in prev..l {
                out[k - slots.start] = i;
            }
            prev = prev.max(l);
        }
    });
    CutPointTable { idx }
}

/// Draws one index for uniform `u` in `(0, 1)`.
#[inline]
pub fn cut_point_draw<T: Real>(cdf: &NormalizedCdf<T>, cuts: &CutPointTable, u: T) -> usize {
    cut_point_search(cdf, cuts, u).0
}

/// [`cut_point_draw`] that also returns how many forward steps the scan took.
#[inline]
pub fn cut_point_search<T: Real>(
    cdf: &NormalizedCdf<T>,
    cuts: &CutPointTable,
    u: T,
) -> (usize, usize) {
    let q = cdf.as_slice();
    debug_assert!(u > T::zero() && u < T::one(), "uniform must lie in (0, 1)");
    let slot = scaled_ceil(T::of_usize(q.len()), u);
    let start = cuts.idx[slot - 1];
    let mut k = start;
    while u > q[k] {
        k += 1;
    }
    (k, k - start)
}

/// Builds the table in parallel, then lets every lane draw its slots independently.
pub fn resample_cutpoint<T, S>(
    cdf: &NormalizedCdf<T>,
    source: &S,
    n_out: usize,
    backend: &Backend,
) -> ResampleIndices
where
    T: Real,
    S: UniformSource<T> + ?Sized,
{
    let cuts = cut_points_parallel(cdf, backend);
    let mut idx = vec![0usize; n_out];
    backend.map_into(&mut idx, |j| cut_point_draw(cdf, &cuts, source.uniform(j)));
    ResampleIndices { idx }
}
