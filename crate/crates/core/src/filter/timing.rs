use std::time::{Duration, Instant};

/// Elapsed time per pipeline phase, accumulated over all time steps.
///
/// `resample_sort_only` is the part of `resample` spent sorting uniforms; it
/// is already contained in `resample` and is not part of [`phase_sum`](Self::phase_sum).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseTimings {
    pub initialize: Duration,
    pub cdf: Duration,
    pub resample: Duration,
    pub resample_sort_only: Duration,
    pub propagate: Duration,
    pub store: Duration,
    pub other: Duration,
    /// Wall time of the whole run, measured independently of the phases.
    pub total: Duration,
}

impl PhaseTimings {
    pub fn phase_sum(&self) -> Duration {
        self.initialize + self.cdf + self.resample + self.propagate + self.store + self.other
    }

    /// Resample time with the sort removed.
    pub fn resample_excluding_sort(&self) -> Duration {
        self.resample.saturating_sub(self.resample_sort_only)
    }

    /// `|total - phase_sum| / total`.
    pub fn accounting_gap(&self) -> f64 {
        let total = self.total.as_secs_f64();
        if total == 0.0 {
            return 0.0;
        }
        (total - self.phase_sum().as_secs_f64()).abs() / total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Phase {
    Initialize,
    Cdf,
    Resample,
    Propagate,
    Store,
    Other,
}

/// Lap timer: each lap charges the time since the previous lap to one phase,
/// so consecutive phases leave no unattributed gaps.
pub(crate) struct PhaseClock {
    wall: Instant,
    last: Instant,
    timings: PhaseTimings,
}

impl PhaseClock {
    pub(crate) fn start() -> Self {
        let now = Instant::now();
        Self {
            wall: now,
            last: now,
            timings: PhaseTimings::default(),
        }
    }

    pub(crate) fn lap(&mut self, phase: Phase) {
        let now = Instant::now();
        let d = now - self.last;
        self.last = now;
        let slot = match phase {
            Phase::Initialize => &mut self.timings.initialize,
            Phase::Cdf => &mut self.timings.cdf,
            Phase::Resample => &mut self.timings.resample,
            Phase::Propagate => &mut self.timings.propagate,
            Phase::Store => &mut self.timings.store,
            Phase::Other => &mut self.timings.other,
        };
        *slot += d;
    }

    pub(crate) fn add_sort(&mut self, d: Duration) {
        self.timings.resample_sort_only += d;
    }

    pub(crate) fn finish(mut self) -> PhaseTimings {
        self.timings.total = self.wall.elapsed();
        self.timings
    }
}
