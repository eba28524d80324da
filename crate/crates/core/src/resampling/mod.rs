//! Resampling: draw `N` particle indices from a [`NormalizedCdf`].
//!
//! Exact multinomial samplers: [`resample_naive`], [`resample_sorted`] and the
//! parallel [`resample_cutpoint`]. Low-variance but inexact schemes:
//! [`resample_stratified`] and [`resample_systematic`].

mod cutpoint;
mod sequential;

use std::time::Duration;

pub use cutpoint::{
    cut_point_draw, cut_point_search, cut_points_bruteforce, cut_points_parallel, resample_cutpoint,
};
pub use sequential::{
    resample_naive, resample_sorted, resample_sorted_timed, resample_stratified,
    resample_systematic,
};

use crate::backend::Backend;
use crate::real::Real;
use crate::rng::UniformSource;
use crate::weights::NormalizedCdf;

/// Zero-based indices of the selected particles, one per output slot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResampleIndices {
    pub idx: Vec<usize>,
}

impl ResampleIndices {
    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.idx
    }

    /// Number of times each particle was selected.
    pub fn counts(&self, n_particles: usize) -> Vec<usize> {
        let mut c = vec![0; n_particles];
        for &i in &self.idx {
            c[i] += 1;
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resampler {
    Naive,
    Sorted,
    Stratified,
    Systematic,
    CutPoint,
}

impl Resampler {
    pub const ALL: [Resampler; 5] = [
        Resampler::Naive,
        Resampler::Sorted,
        Resampler::Stratified,
        Resampler::Systematic,
        Resampler::CutPoint,
    ];

    /// Whether the draws form an exact multinomial sample.
    pub fn is_exact(self) -> bool {
        matches!(
            self,
            Resampler::Naive | Resampler::Sorted | Resampler::CutPoint
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct ResampleOutcome {
    pub indices: ResampleIndices,
    /// Time spent sorting uniforms (sorted resampler only).
    pub sort_time: Duration,
}

/// Runs the chosen resampler, drawing `n_out` indices.
pub fn resample<T, S>(
    resampler: Resampler,
    cdf: &NormalizedCdf<T>,
    source: &S,
    n_out: usize,
    backend: &Backend,
) -> ResampleOutcome
where
    T: Real,
    S: UniformSource<T> + ?Sized,
{
    let (indices, sort_time) = match resampler {
        Resampler::Naive => (resample_naive(cdf, source, n_out), Duration::ZERO),
        Resampler::Sorted => resample_sorted_timed(cdf, source, n_out),
        Resampler::Stratified => (
            resample_stratified(cdf, source, n_out, backend),
            Duration::ZERO,
        ),
        Resampler::Systematic => (
            resample_systematic(cdf, source, n_out, backend),
            Duration::ZERO,
        ),
        Resampler::CutPoint => (
            resample_cutpoint(cdf, source, n_out, backend),
            Duration::ZERO,
        ),
    };
    ResampleOutcome { indices, sort_time }
}

/// First index at or after `from` whose CDF value exceeds `u`.
///
/// Never walks past the first entry equal to 1, so zero-mass padding at the
/// tail is unreachable even if `u` rounds up to 1.
#[inline]
pub(crate) fn advance_past<T: Real>(q: &[T], mut from: usize, u: T) -> usize {
    while u >= q[from] && q[from] < T::one() {
        from += 1;
    }
    from
}
