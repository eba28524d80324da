//! Weighted posterior summaries.

use crate::backend::Backend;
use crate::real::Real;

/// Probabilities reported for every summary.
pub const QUANTILE_PROBS: [f64; 5] = [0.005, 0.05, 0.5, 0.95, 0.995];

/// Mean, standard deviation and quantiles of a weighted sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub sd: f64,
    pub q005: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    pub q995: f64,
}

impl PosteriorSummary {
    /// Central 90% interval.
    pub fn interval90(&self) -> (f64, f64) {
        (self.q05, self.q95)
    }

    /// Central 99% interval.
    pub fn interval99(&self) -> (f64, f64) {
        (self.q005, self.q995)
    }
}

/// Summarizes `value(i)` under weights `w` (need not be normalized).
pub(crate) fn summarize<T, F>(
    n: usize,
    value: F,
    weights: &[T],
    backend: &Backend,
    scratch: &mut Vec<(f64, f64)>,
) -> PosteriorSummary
where
    T: Real,
    F: Fn(usize) -> T + Sync + Send,
{
    let w = |i: usize| weights[i].to_f64_lossy();
    let x = |i: usize| value(i).to_f64_lossy();
    let total = backend.sum_f64(n, w);
    let mean = backend.sum_f64(n, |i| w(i) * x(i)) / total;
    let var = backend.sum_f64(n, |i| {
        let d = x(i) - mean;
        w(i) * d * d
    }) / total;
    scratch.clear();
    scratch.extend((0..n).map(|i| (x(i), w(i))));
    let mut q = [0.0; QUANTILE_PROBS.len()];
    weighted_quantiles(scratch, &QUANTILE_PROBS, total, &mut q);
    PosteriorSummary {
        mean,
        sd: var.max(0.0).sqrt(),
        q005: q[0],
        q05: q[1],
        q50: q[2],
        q95: q[3],
        q995: q[4],
    }
}

/// For each `p`, the smallest value `v` with `sum(w : x <= v) >= p * total`.
///
/// Multi-target quickselect with three-way partitioning; expected `O(n log k)`.
/// `probs` must be sorted ascending. Reorders `items`.
pub fn weighted_quantiles(items: &mut [(f64, f64)], probs: &[f64], total: f64, out: &mut [f64]) {
    debug_assert!(probs.windows(2).all(|w| w[0] <= w[1]));
    let targets: Vec<(usize, f64)> = probs
        .iter()
        .enumerate()
        .map(|(k, p)| (k, p * total))
        .collect();
    select(items, &targets, 0.0, out);
}

const SMALL: usize = 24;

fn select(items: &mut [(f64, f64)], targets: &[(usize, f64)], below: f64, out: &mut [f64]) {
    if targets.is_empty() {
        return;
    }
    if items.len() <= SMALL {
        items.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = below;
        let mut t = 0;
        for &(v, w) in items.iter() {
            acc += w;
            while t < targets.len() && targets[t].1 <= acc {
                out[targets[t].0] = v;
                t += 1;
            }
        }
        // Rounding can leave the largest targets unmet; they take the maximum.
        let max = items.last().map_or(f64::NAN, |p| p.0);
        for &(k, _) in &targets[t..] {
            out[k] = max;
        }
        return;
    }
    let pivot = median_of_three(
        items[0].0,
        items[items.len() / 2].0,
        items[items.len() - 1].0,
    );
    let (lt, gt) = partition3(items, pivot);
    let mass_lt: f64 = items[..lt].iter().map(|p| p.1).sum();
    let mass_eq: f64 = items[lt..gt].iter().map(|p| p.1).sum();
    let cut_lt = below + mass_lt;
    let cut_eq = cut_lt + mass_eq;
    let left_end = targets.partition_point(|t| t.1 <= cut_lt);
    let eq_end = targets.partition_point(|t| t.1 <= cut_eq);
    let (left, rest) = targets.split_at(left_end);
    let (mid, right) = rest.split_at(eq_end - left_end);
    let (lo, tail) = items.split_at_mut(lt);
    let (_, hi) = tail.split_at_mut(gt - lt);
    if lo.is_empty() {
        for &(k, _) in left {
            out[k] = pivot;
        }
    } else {
        select(lo, left, below, out);
    }
    for &(k, _) in mid {
        out[k] = pivot;
    }
    if hi.is_empty() {
        for &(k, _) in right {
            out[k] = pivot;
        }
    } else {
        select(hi, right, cut_eq, out);
    }
}

fn median_of_three(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

/// Dutch-flag partition; returns `(lt, gt)` with `[..lt] < pivot`,
/// `[lt..gt] == pivot`, `[gt..] > pivot`.
fn partition3(items: &mut [(f64, f64)], pivot: f64) -> (usize, usize) {
    let (mut lt, mut i, mut gt) = (0, 0, items.len());
    while i < gt {
        let v = items[i].0;
        if v < pivot {
            items.swap(lt, i);
            lt += 1;
            i += 1;
        } else if v > pivot {
            gt -= 1;
            items.swap(i, gt);
        } else {
            i += 1;
        }
    }
    (lt, gt)
}
