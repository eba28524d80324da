//! Execution backend: a sequential loop or a fixed pool of worker lanes.
//!
//! Each parallel call partitions the index space into contiguous lane ranges
//! and returns only after every lane has finished, so a call boundary is a
//! phase barrier. Work items write disjoint slices; nothing is shared mutably.

use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sequential,
    Parallel,
}

#[derive(Clone)]
pub struct Backend {
    mode: Mode,
    lanes: usize,
    pool: Option<Arc<ThreadPool>>,
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Backend")
            .field("mode", &self.mode)
            .field("lanes", &self.lanes)
            .finish()
    }
}

impl Default for Backend {
    fn default() -> Self {
        Self::sequential()
    }
}

impl Backend {
    pub fn sequential() -> Self {
        Self {
            mode: Mode::Sequential,
            lanes: 1,
            pool: None,
        }
    }

    /// A pool of `lanes` worker threads.
    pub fn parallel(lanes: usize) -> Result<Self> {
        if lanes == 0 {
            return Err(Error::Config("lane count must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(lanes)
            .thread_name(|i| format!("parsmc-lane-{i}"))
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            mode: Mode::Parallel,
            lanes,
            pool: Some(Arc::new(pool)),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    /// Splits `0..n` into at most `lanes` contiguous, nonempty ranges.
    pub fn lane_ranges(&self, n: usize) -> Vec<Range<usize>> {
        split_ranges(n, self.lanes)
    }

    /// Runs `f` on every work item and waits for all of them.
    pub fn run<W, F>(&self, work: Vec<W>, f: F)
    where
        W: Send,
        F: Fn(W) + Sync + Send,
    {
        match &self.pool {
            Some(pool) if work.len() > 1 => pool.install(|| work.into_par_iter().for_each(f)),
            _ => work.into_iter().for_each(f),
        }
    }

    /// Calls `f(offset, chunk)` for each lane's slice of `data`.
    pub fn for_each_chunk_mut<A, F>(&self, data: &mut [A], f: F)
    where
        A: Send,
        F: Fn(usize, &mut [A]) + Sync + Send,
    {
        let ranges = self.lane_ranges(data.len());
        let chunks = split_slice_mut(data, &ranges);
        self.run(chunks.into_iter().zip(ranges).collect(), |(chunk, r)| {
            f(r.start, chunk)
        });
    }

    /// `out[i] = f(i)` for every index.
    pub fn map_into<A, F>(&self, out: &mut [A], f: F)
    where
        A: Send,
        F: Fn(usize) -> A + Sync + Send,
    {
        self.for_each_chunk_mut(out, |offset, chunk| {
            for (k, slot) in chunk.iter_mut().enumerate() {
                *slot = f(offset + k);
            }
        });
    }

    /// Deterministic sum of `f(i)` over `0..n`.
    ///
    /// Partial sums cover fixed blocks of [`REDUCE_BLOCK`] indices regardless of
    /// lane count and are combined left to right, so the result is bit-identical
    /// across modes and lane counts.
    pub fn sum_f64<F>(&self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let blocks = n.div_ceil(REDUCE_BLOCK);
        let mut partial = vec![0.0f64; blocks];
        self.map_into(&mut partial, |b| {
            let start = b * REDUCE_BLOCK;
            let end = (start + REDUCE_BLOCK).min(n);
            (start..end).map(&f).sum()
        });
        partial.iter().sum()
    }
}

pub const REDUCE_BLOCK: usize = 4096;

pub(crate) fn split_ranges(n: usize, parts: usize) -> Vec<Range<usize>> {
    let parts = parts.max(1).min(n.max(1));
    let base = n / parts;
    let extra = n % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Cuts `data` into consecutive mutable pieces matching `ranges`
/// (which must tile `0..data.len()` in order).
pub(crate) fn split_slice_mut<'a, A>(
    mut data: &'a mut [A],
    ranges: &[Range<usize>],
) -> Vec<&'a mut [A]> {
    let mut out = Vec::with_capacity(ranges.len());
    for r in ranges {
        let (head, tail) = std::mem::take(&mut data).split_at_mut(r.len());
        out.push(head);
        data = tail;
    }
    out
}
