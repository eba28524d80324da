//! CDF construction by a two-pass adder tree.
//!
//! The forward pass combines neighbouring pairs level by level until one node
//! holds the total. The backward pass walks down again: a right child inherits
//! its parent's prefix sum, and a left child takes the parent's prefix sum
//! minus the right sibling's subtotal from the forward pass. Each level is one
//! parallel map over disjoint output slots followed by a barrier.

use std::ops::{Add, Sub};

use crate::backend::{split_slice_mut, Backend};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::weights::{validate_weights, NormalizedCdf};

/// Values the adder tree can sum: floats, integers, anything with exact `+`/`-`.
pub trait Summand: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Send + Sync {}

impl<T> Summand for T where T: Copy + Default + Add<Output = T> + Sub<Output = T> + Send + Sync {}

/// Levels of pairwise partial sums; `levels[0]` is the input, the last level has one node.
#[derive(Debug, Clone, PartialEq)]
pub struct AdderTree<T> {
    levels: Vec<Vec<T>>,
}

impl<T: Summand> AdderTree<T> {
    pub fn levels(&self) -> &[Vec<T>] {
        &self.levels
    }

    pub fn leaves(&self) -> usize {
        self.levels[0].len()
    }

    pub fn total(&self) -> T {
        self.levels.last().expect("tree has at least one level")[0]
    }
}

/// Left-to-right inclusive running sum.
pub fn sequential_cumsum<T: Summand>(weights: &[T]) -> Vec<T> {
    let mut acc = T::default();
    weights
        .iter()
        .map(|&w| {
            acc = acc + w;
            acc
        })
        .collect()
}

/// Builds every level of the forward adder.
pub fn forward_adder<T: Summand>(weights: &[T], backend: &Backend) -> Result<AdderTree<T>> {
    let n = weights.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo { n });
    }
    let mut levels = Vec::with_capacity(n.trailing_zeros() as usize + 1);
    levels.push(weights.to_vec());
    while levels.last().map_or(0, Vec::len) > 1 {
        let prev = levels.last().expect("nonempty");
        let mut next = vec![T::default(); prev.len() / 2];
        backend.map_into(&mut next, |i| prev[2 * i] + prev[2 * i + 1]);
        levels.push(next);
    }
    Ok(AdderTree { levels })
}

/// Inclusive prefix sums recovered from a forward-adder tree.
pub fn backward_adder<T: Summand>(tree: &AdderTree<T>, backend: &Backend) -> Vec<T> {
    let mut sums = vec![tree.total()];
    for level in tree.levels[..tree.levels.len() - 1].iter().rev() {
        let parent = &sums;
        let mut child = vec![T::default(); level.len()];
        backend.map_into(&mut child, |c| {
            if c % 2 == 1 {
                parent[c / 2]
            } else {
                parent[c / 2] - level[c + 1]
            }
        });
        sums = child;
    }
    sums
}

/// Resampling CDF from nonnegative weights via the adder tree.
///
/// With `pad` set, a particle count that is not a power of two is extended
/// with zero-weight entries; those carry no probability mass, so resampling
/// never selects them.
pub fn parallel_cdf<T: Real>(
    weights: &[T],
    backend: &Backend,
    pad: bool,
) -> Result<NormalizedCdf<T>> {
    parallel_cdf_with_total(weights, backend, pad).map(|(q, _)| q)
}

pub(crate) fn parallel_cdf_with_total<T: Real>(
    weights: &[T],
    backend: &Backend,
    pad: bool,
) -> Result<(NormalizedCdf<T>, T)> {
    validate_weights(weights)?;
    let n = weights.len();
    let tree = if pad && !n.is_power_of_two() {
        let mut padded = weights.to_vec();
        padded.resize(n.next_power_of_two(), T::zero());
        forward_adder(&padded, backend)?
    } else {
        forward_adder(weights, backend)?
    };
    let total = tree.total();
    check_total(total)?;
    let sums = backward_adder(&tree, backend);
    let mut q = normalize_sums(sums, total, backend);
    if tree.leaves() > n {
        // Rounding in the tree must not leak mass into the padding.
        q.pin_one_from(n - 1);
    }
    Ok((q, total))
}

/// Sequential CDF: running sum, then normalization.
pub fn sequential_cdf<T: Real>(weights: &[T]) -> Result<NormalizedCdf<T>> {
    sequential_cdf_with_total(weights).map(|(q, _)| q)
}

pub(crate) fn sequential_cdf_with_total<T: Real>(weights: &[T]) -> Result<(NormalizedCdf<T>, T)> {
    validate_weights(weights)?;
    let sums = sequential_cumsum(weights);
    let total = *sums.last().expect("nonempty");
    check_total(total)?;
    Ok((NormalizedCdf::from_sums(sums, total), total))
}

fn check_total<T: Real>(total: T) -> Result<()> {
    if !total.is_finite() {
        return Err(Error::NonFinite("weight total"));
    }
    if total <= T::zero() {
        return Err(Error::AllWeightsZero);
    }
    Ok(())
}

/// Parallel version of [`NormalizedCdf::from_sums`].
///
/// The monotone repair is a running maximum; max is exact and associative,
/// so per-lane maxima combined with a carry give the same array as the
/// sequential pass for any lane count.
fn normalize_sums<T: Real>(mut sums: Vec<T>, total: T, backend: &Backend) -> NormalizedCdf<T> {
    let ranges = backend.lane_ranges(sums.len());
    if ranges.len() <= 1 {
        return NormalizedCdf::from_sums(sums, total);
    }
    let mut lane_max = vec![T::zero(); ranges.len()];
    {
        let chunks = split_slice_mut(&mut sums, &ranges);
        let maxima = split_slice_mut(&mut lane_max, &vec_of_units(ranges.len()));
        backend.run(chunks.into_iter().zip(maxima).collect(), |(chunk, m)| {
            let mut running = T::zero();
            for v in chunk.iter_mut() {
                let x = (*v / total).min(T::one()).max(running);
                running = x;
                *v = x;
            }
            m[0] = running;
        });
    }
    let mut carry = vec![T::zero(); ranges.len()];
    for l in 1..ranges.len() {
        carry[l] = carry[l - 1].max(lane_max[l - 1]);
    }
    {
        let chunks = split_slice_mut(&mut sums, &ranges);
        backend.run(chunks.into_iter().zip(carry).collect(), |(chunk, c)| {
            if c > T::zero() {
                for v in chunk.iter_mut() {
                    if *v < c {
                        *v = c;
                    }
                }
            }
        });
    }
    if let Some(last) = sums.last_mut() {
        *last = T::one();
    }
    NormalizedCdf::from_raw_unchecked(sums)
}

fn vec_of_units(k: usize) -> Vec<std::ops::Range<usize>> {
    (0..k).map(|i| i..i + 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn backends() -> Vec<Backend> {
        vec![
            Backend::sequential(),
            Backend::parallel(2).unwrap(),
            Backend::parallel(5).unwrap(),
        ]
    }

    #[test]
    fn table_one_forward_levels() {
        for b in backends() {
            let tree = forward_adder(&[2.0f64, 4.0, 3.0, 1.0], &b).unwrap();
            assert_eq!(
                tree.levels(),
                &[vec![2.0, 4.0, 3.0, 1.0], vec![6.0, 4.0], vec![10.0]]
            );
            assert_eq!(backward_adder(&tree, &b), vec![2.0, 6.0, 9.0, 10.0]);
        }
    }

    #[test]
    fn table_one_sequential() {
        assert_eq!(sequential_cumsum(&[2, 4, 3, 1]), vec![2, 6, 9, 10]);
        assert_eq!(sequential_cumsum(&[7.0f32]), vec![7.0]);
    }

    #[test]
    fn single_leaf() {
        let b = Backend::sequential();
        let tree = forward_adder(&[5.0f64], &b).unwrap();
        assert_eq!(tree.levels(), &[vec![5.0]]);
        assert_eq!(backward_adder(&tree, &b), vec![5.0]);
    }

    #[test]
    fn rejects_non_power_of_two() {
        let b = Backend::sequential();
        assert_eq!(
            forward_adder(&[1.0f64, 2.0, 3.0], &b),
            Err(Error::NotPowerOfTwo { n: 3 })
        );
        assert_eq!(
            parallel_cdf(&[1.0f64, 2.0, 3.0], &b, false),
            Err(Error::NotPowerOfTwo { n: 3 })
        );
    }

    #[test]
    fn cdf_examples() {
        for b in backends() {
            let q = parallel_cdf(&[2.0f64, 4.0, 3.0, 1.0], &b, false).unwrap();
            assert_eq!(q.as_slice(), &[0.2, 0.6, 0.9, 1.0]);
            let q = parallel_cdf(&[1.0f32; 4], &b, false).unwrap();
            assert_eq!(q.as_slice(), &[0.25, 0.5, 0.75, 1.0]);
        }
    }

    #[test]
    fn zero_weights_rejected() {
        let b = Backend::sequential();
        assert_eq!(
            parallel_cdf(&[0.0f64; 8], &b, false),
            Err(Error::AllWeightsZero)
        );
        assert_eq!(sequential_cdf(&[0.0f64; 3]), Err(Error::AllWeightsZero));
    }

    #[test]
    fn padding_adds_massless_tail() {
        let b = Backend::parallel(2).unwrap();
        let q = parallel_cdf(&[1.0f64, 1.0, 2.0], &b, true).unwrap();
        assert_eq!(q.as_slice(), &[0.25, 0.5, 1.0, 1.0]);
        assert_eq!(q.mass(3), 0.0);
    }

    #[test]
    fn integer_tree_matches_sequential() {
        let b = Backend::parallel(3).unwrap();
        let w: Vec<u64> = (0..1024u64).map(|i| (i * 2654435761) % 1000).collect();
        let tree = forward_adder(&w, &b).unwrap();
        assert_eq!(backward_adder(&tree, &b), sequential_cumsum(&w));
        for (d, level) in tree.levels().iter().enumerate() {
            let span = 1usize << d;
            for (i, &v) in level.iter().enumerate() {
                assert_eq!(v, w[i * span..(i + 1) * span].iter().sum::<u64>());
            }
        }
    }

    #[test]
    fn normalize_is_lane_invariant() {
        let w: Vec<f32> = (0..4096)
            .map(|i| (((i * 7919) % 1013) as f32 * 0.37).exp().recip())
            .collect();
        let reference = parallel_cdf(&w, &Backend::sequential(), false).unwrap();
        for lanes in [2, 3, 8] {
            let q = parallel_cdf(&w, &Backend::parallel(lanes).unwrap(), false).unwrap();
            assert_eq!(q, reference);
        }
    }
}
