//! Weight normalization and the resampling distribution types.
//!
//! Indices are zero-based throughout: particle `i` here is particle `i + 1`
//! in one-based notation, and cut-point slot `j` covers `u` in `(j/N, (j+1)/N]`.

use crate::error::{Error, Result};
use crate::real::Real;

/// Monotone cumulative distribution over particle indices with `q[N-1] == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedCdf<T> {
    q: Vec<T>,
}

impl<T: Real> NormalizedCdf<T> {
    /// Validates an explicit CDF.
    pub fn new(q: Vec<T>) -> Result<Self> {
        let Some(&last) = q.last() else {
            return Err(Error::Empty);
        };
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCdf("non-finite entry".into()));
        }
        if q[0] < T::zero() {
            return Err(Error::InvalidCdf("negative first entry".into()));
        }
        if let Some(i) = q.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidCdf(format!("decreasing at index {}", i + 1)));
        }
        if last != T::one() {
            return Err(Error::InvalidCdf(format!(
                "last entry {last} is not exactly 1"
            )));
        }
        Ok(Self { q })
    }

    /// Builds the CDF from already-accumulated sums by dividing by the total.
    ///
    /// Entries are clamped to `[0, 1]`, made nondecreasing, and the final entry
    /// is pinned to exactly 1.
    pub(crate) fn from_sums(mut sums: Vec<T>, total: T) -> Self {
        let mut running = T::zero();
        for v in sums.iter_mut() {
            let mut x = *v / total;
            if x > T::one() {
                x = T::one();
            }
            if x < running {
                x = running;
            }
            running = x;
            *v = x;
        }
        if let Some(last) = sums.last_mut() {
            *last = T::one();
        }
        Self { q: sums }
    }

    pub(crate) fn from_raw_unchecked(q: Vec<T>) -> Self {
        debug_assert!(q.last().is_some_and(|&v| v == T::one()));
        Self { q }
    }

    pub(crate) fn pin_one_from(&mut self, start: usize) {
        for v in &mut self.q[start..] {
            *v = T::one();
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.q
    }

    pub fn into_vec(self) -> Vec<T> {
        self.q
    }

    /// Probability mass of particle `i`.
    pub fn mass(&self, i: usize) -> T {
        if i == 0 {
            self.q[0]
        } else {
            self.q[i] - self.q[i - 1]
        }
    }
}

/// Cut-point index table: `idx[j]` is the smallest `i` with `N q[i] > j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutPointTable {
    pub idx: Vec<usize>,
}

impl CutPointTable {
    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }
}

/// Checks finiteness and nonnegativity and returns the index of the first offender.
pub(crate) fn validate_weights<T: Real>(weights: &[T]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(index) = weights
        .iter()
        .position(|w| !w.is_finite() || *w < T::zero())
    {
        return Err(Error::NonFiniteWeight { index });
    }
    Ok(())
}

/// Normalizes nonnegative weights to probabilities.
pub fn normalize_weights<T: Real>(weights: &[T]) -> Result<Vec<T>> {
    validate_weights(weights)?;
    let total: T = weights.iter().copied().sum();
    if total <= T::zero() {
        return Err(Error::AllWeightsZero);
    }
    if !total.is_finite() {
        return Err(Error::NonFiniteWeight {
            index: weights.len() - 1,
        });
    }
    Ok(weights.iter().map(|&w| w / total).collect())
}

/// Turns log-weights into weights in `[0, 1]` by subtracting the maximum.
///
/// Returns the maximum that was subtracted. The largest weight becomes exactly 1.
pub fn exp_shifted<T: Real>(log_weights: &mut [T]) -> Result<T> {
    let mut max = T::neg_infinity();
    for (index, &lw) in log_weights.iter().enumerate() {
        if lw.is_nan() || lw == T::infinity() {
            return Err(Error::NonFiniteWeight { index });
        }
        if lw > max {
            max = lw;
        }
    }
    if max == T::neg_infinity() {
        return Err(Error::AllWeightsZero);
    }
    for lw in log_weights.iter_mut() {
        *lw = (*lw - max).exp();
    }
    Ok(max)
}
