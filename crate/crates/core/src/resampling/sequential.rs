use std::time::{Duration, Instant};

use super::{advance_past, ResampleIndices};
use crate::backend::Backend;
use crate::real::Real;
use crate::rng::UniformSource;
use crate::weights::NormalizedCdf;

/// For each slot, scans the CDF from the start for the first `q[i] > u`.
///
/// Exact, but `O(N)` per draw.
pub fn resample_naive<T, S>(cdf: &NormalizedCdf<T>, source: &S, n_out: usize) -> ResampleIndices
where
    T: Real,
    S: UniformSource<T> + ?Sized,
{
    let q = cdf.as_slice();
    let last = q.len() - 1;
    let idx = (0..n_out)
        .map(|slot| {
            let u = source.uniform(slot);
            let mut j = 0;
            while j < last && u >= q[j] {
                j += 1;
            }
            j
        })
        .collect();
    ResampleIndices { idx }
}

/// Sorts the uniforms, then merges them against the CDF in one sweep.
pub fn resample_sorted<T, S>(cdf: &NormalizedCdf<T>, source: &S, n_out: usize) -> ResampleIndices
where
    T: Real,
    S: UniformSource<T> + ?Sized,
{
    resample_sorted_timed(cdf, source, n_out).0
}

/// [`resample_sorted`] that also reports how long the sort took.
pub fn resample_sorted_timed<T, S>(
    cdf: &NormalizedCdf<T>,
    source: &S,
    n_out: usize,
) -> (ResampleIndices, Duration)
where
    T: Real,
    S: UniformSource<T> + ?Sized,
{
    let mut u: Vec<T> = (0..n_out).map(|slot| source.uniform(slot)).collect();
    let start = Instant::now();
    u.sort_unstable_by(|a, b| a.total_cmp(b));
    let sort_time = start.elapsed();
    let q = cdf.as_slice();
    let mut j = 0;
    let idx = u
        .into_iter()
        .map(|ui| {
            j = advance_past(q, j, ui);
            j
        })
        .collect();
    (ResampleIndices { idx }, sort_time)
}

/// One uniform per stratum `[j/N, (j+1)/N)`.
pub fn resample_stratified<T, S>(
    cdf: &NormalizedCdf<T>,
    source: &S,
    n_out: usize,
    backend: &Backend,
) -> ResampleIndices
where
    T: Real,
    S: UniformSource<T> + ?Sized,
{
    let n = T::of_usize(n_out);
    merge_monotone(cdf, n_out, backend, |j| {
        (T::of_usize(j) + source.uniform(j)) / n
    })
}

/// Stratified points sharing a single offset drawn from slot 0 of `source`.
pub fn resample_systematic<T, S>(
    cdf: &NormalizedCdf<T>,
    source: &S,
    n_out: usize,
    backend: &Backend,
) -> ResampleIndices
where
    T: Real,
    S: UniformSource<T> + ?Sized,
{
    let n = T::of_usize(n_out);
    let v = source.uniform(0);
    merge_monotone(cdf, n_out, backend, |j| (T::of_usize(j) + v) / n)
}

/// Merges a nondecreasing sequence of points against the CDF.
///
/// Each lane binary-searches the start of its own range and then merges
/// sequentially; the result is identical to a single sequential merge.
fn merge_monotone<T, F>(
    cdf: &NormalizedCdf<T>,
    n_out: usize,
    backend: &Backend,
    point: F,
) -> ResampleIndices
where
    T: Real,
    F: Fn(usize) -> T + Sync + Send,
{
    let q = cdf.as_slice();
    let mut idx = vec![0usize; n_out];
    backend.for_each_chunk_mut(&mut idx, |offset, chunk| {
        if chunk.is_empty() {
            return;
        }
        let u0 = point(offset);
        let mut j = q.partition_point(|&x| u0 >= x && x < T::one());
        for (k, slot) in chunk.iter_mut().enumerate() {
            j = advance_past(q, j, point(offset + k));
            *slot = j;
        }
    });
    ResampleIndices { idx }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cdf(q: &[f64]) -> NormalizedCdf<f64> {
        NormalizedCdf::new(q.to_vec()).unwrap()
    }

    #[test]
    fn naive_hand_trace() {
        let q = cdf(&[0.2, 0.6, 0.9, 1.0]);
        assert_eq!(resample_naive(&q, &[0.55][..], 1).idx, vec![1]);
        assert_eq!(resample_naive(&cdf(&[1.0]), &[0.999][..], 1).idx, vec![0]);
        let point = cdf(&[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(
            resample_naive(&point, &[0.01, 0.5, 0.99, 0.3][..], 4).idx,
            vec![3; 4]
        );
    }

    #[test]
    fn sorted_hand_merge() {
        let q = cdf(&[0.5, 1.0]);
        assert_eq!(resample_sorted(&q, &[0.9, 0.1][..], 2).idx, vec![0, 1]);
        let q = cdf(&[0.2, 0.6, 0.9, 1.0]);
        assert_eq!(
            resample_sorted(&q, &[0.01, 0.1, 0.19, 0.05][..], 4).idx,
            vec![0; 4]
        );
    }

    #[test]
    fn stratified_examples() {
        let b = Backend::sequential();
        let uniform = cdf(&[0.25, 0.5, 0.75, 1.0]);
        for v in [0.01, 0.5, 0.99] {
            assert_eq!(
                resample_stratified(&uniform, &[v; 4][..], 4, &b).idx,
                vec![0, 1, 2, 3]
            );
        }
        assert_eq!(
            resample_stratified(&cdf(&[1.0]), &[0.3; 5][..], 5, &b).idx,
            vec![0; 5]
        );
        assert_eq!(
            resample_stratified(&cdf(&[0.5, 1.0]), &[0.2, 0.2][..], 2, &b).idx,
            vec![0, 1]
        );
    }

    #[test]
    fn systematic_examples() {
        let b = Backend::sequential();
        let uniform = cdf(&[0.25, 0.5, 0.75, 1.0]);
        assert_eq!(
            resample_systematic(&uniform, &[0.37][..], 4, &b).idx,
            vec![0, 1, 2, 3]
        );
        assert_eq!(
            resample_systematic(&cdf(&[0.5, 1.0]), &[0.7][..], 2, &b).idx,
            vec![0, 1]
        );
        let q = cdf(&[0.8, 0.9, 0.95, 1.0]);
        assert_eq!(
            resample_systematic(&q, &[0.5][..], 4, &b).idx,
            vec![0, 0, 0, 1]
        );
    }

    #[test]
    fn lane_split_merge_matches_sequential() {
        let w: Vec<f64> = (0..257).map(|i| ((i * 31) % 17) as f64).collect();
        let q = crate::prefix_sum::sequential_cdf(&w).unwrap();
        let v: Vec<f64> = (0..300)
            .map(|i| ((i * 7 + 3) % 97) as f64 / 97.0 + 0.001)
            .collect();
        let seq = Backend::sequential();
        let a = resample_stratified(&q, &v[..], 300, &seq);
        let s = resample_systematic(&q, &v[..], 300, &seq);
        for lanes in [2, 7] {
            let par = Backend::parallel(lanes).unwrap();
            assert_eq!(resample_stratified(&q, &v[..], 300, &par), a);
            assert_eq!(resample_systematic(&q, &v[..], 300, &par), s);
        }
    }
}
