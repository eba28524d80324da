//! Particle filtering and particle learning drivers.
//!
//! Each time step runs propagate, weight + CDF, summaries, resample and
//! (optionally) store. Per-particle phases are parallel maps over lanes;
//! the time loop itself is sequential.

mod summary;
mod timing;

pub use summary::{weighted_quantiles, PosteriorSummary, QUANTILE_PROBS};
pub use timing::PhaseTimings;

use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::models::{LearnableModel, StateSpaceModel};
use crate::particles::{ParamDraw, ParticleSystem, SuffStat};
use crate::prefix_sum::{parallel_cdf_with_total, sequential_cdf_with_total};
use crate::real::Real;
use crate::resampling::{resample, Resampler};
use crate::rng::{stream_base, Phase as StreamPhase, RngStream, StreamFamily};
use summary::summarize;
use timing::{Phase, PhaseClock};

/// How the resampling CDF is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfMethod {
    /// Left-to-right running sum.
    Sequential,
    /// Forward/backward adder tree over the backend's lanes.
    AdderTree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub n: usize,
    pub seed: u64,
    pub resampler: Resampler,
    pub cdf: CdfMethod,
    /// Pad a non-power-of-two particle count with zero weights for the adder tree.
    pub pad_to_pow2: bool,
    /// Copy the particle arrays into the output after every step.
    pub store_particles: bool,
    /// Keep every step's resampled indices in the output.
    pub record_indices: bool,
    /// Fold every step's resampled indices into a running digest without keeping them.
    pub digest_indices: bool,
}

impl FilterConfig {
    /// Cut-point resampling on an adder-tree CDF.
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            resampler: Resampler::CutPoint,
            cdf: CdfMethod::AdderTree,
            pad_to_pow2: false,
            store_particles: false,
            record_indices: false,
            digest_indices: false,
        }
    }

    pub fn with_resampler(mut self, resampler: Resampler, cdf: CdfMethod) -> Self {
        self.resampler = resampler;
        self.cdf = cdf;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("particle count must be at least 1".into()));
        }
        if self.n > u32::MAX as usize {
            return Err(Error::Config("particle count exceeds 2^32".into()));
        }
        if self.cdf == CdfMethod::AdderTree && !self.pad_to_pow2 && !self.n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo { n: self.n });
        }
        Ok(())
    }
}

/// Posterior summaries of both variances at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamSummary {
    pub sigma2: PosteriorSummary,
    pub tau2: PosteriorSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput<T> {
    /// Filtering distribution of `x_t` for each `t`, from the weighted particles.
    pub state: Vec<PosteriorSummary>,
    /// Parameter posteriors for each `t` (particle learning only).
    pub params: Option<Vec<ParamSummary>>,
    pub timings: PhaseTimings,
    /// Particles after the last step, when storing was requested.
    pub final_particles: Option<ParticleSystem<T>>,
    /// Resampled indices of every step, when recording was requested.
    pub resample_trace: Option<Vec<Vec<usize>>>,
    indices_digest: Option<u64>,
}

impl<T> FilterOutput<T> {
    pub fn filtered_mean(&self) -> Vec<f64> {
        self.state.iter().map(|s| s.mean).collect()
    }

    pub fn filtered_quantiles(&self) -> Vec<(f64, f64, f64)> {
        self.state.iter().map(|s| (s.q05, s.q50, s.q95)).collect()
    }

    /// FNV-1a digest of every resampled index, available when indices were
    /// recorded or digested.
    pub fn index_digest(&self) -> Option<u64> {
        self.indices_digest.or_else(|| {
            self.resample_trace.as_ref().map(|trace| {
                let mut h = FNV_OFFSET;
                for step in trace {
                    fnv_indices(&mut h, step);
                }
                h
            })
        })
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

fn fnv_indices(h: &mut u64, idx: &[usize]) {
    for &i in idx {
        for b in (i as u64).to_le_bytes() {
            *h ^= b as u64;
            *h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
}

/// Runs the bootstrap particle filter with known model parameters.
pub fn run_particle_filter<T, M>(
    model: &M,
    y: &[T],
    config: &FilterConfig,
    backend: &Backend,
) -> Result<FilterOutput<T>>
where
    T: Real,
    M: StateSpaceModel<T>,
{
    run(&Known(model), y, config, backend)
}

/// Runs particle learning: particles carry state, parameter draw and
/// sufficient statistics, and are resampled as whole tuples.
pub fn run_particle_learning<T, M>(
    model: &M,
    y: &[T],
    config: &FilterConfig,
    backend: &Backend,
) -> Result<FilterOutput<T>>
where
    T: Real,
    M: LearnableModel<T>,
{
    run(&Learning(model), y, config, backend)
}

/// Per-particle operations the driver needs; `theta` and `stats` are `None`
/// for plain filtering.
trait Kernel<T: Real>: Sync {
    fn learning(&self) -> bool;
    fn init(
        &self,
        rng: &mut RngStream,
        x: &mut T,
        theta: Option<&mut ParamDraw<T>>,
        stats: Option<&mut SuffStat<T>>,
    );
    fn step(
        &self,
        rng: &mut RngStream,
        x: &mut T,
        theta: Option<&mut ParamDraw<T>>,
        stats: Option<&mut SuffStat<T>>,
        y: T,
    );
    fn log_weight(&self, y: T, x: T, theta: Option<&ParamDraw<T>>) -> T;
}

struct Known<'m, M>(&'m M);
struct Learning<'m, M>(&'m M);

impl<T: Real, M: StateSpaceModel<T>> Kernel<T> for Known<'_, M> {
    fn learning(&self) -> bool {
        false
    }

    fn init(
        &self,
        rng: &mut RngStream,
        x: &mut T,
        _: Option<&mut ParamDraw<T>>,
        _: Option<&mut SuffStat<T>>,
    ) {
        *x = self.0.sample_initial(rng);
    }

    #[inline]
    fn step(
        &self,
        rng: &mut RngStream,
        x: &mut T,
        _: Option<&mut ParamDraw<T>>,
        _: Option<&mut SuffStat<T>>,
        _: T,
    ) {
        *x = self.0.propagate(*x, rng);
    }

    #[inline]
    fn log_weight(&self, y: T, x: T, _: Option<&ParamDraw<T>>) -> T {
        self.0.log_likelihood(y, x)
    }
}

impl<T: Real, M: LearnableModel<T>> Kernel<T> for Learning<'_, M> {
    fn learning(&self) -> bool {
        true
    }

    fn init(
        &self,
        rng: &mut RngStream,
        x: &mut T,
        theta: Option<&mut ParamDraw<T>>,
        stats: Option<&mut SuffStat<T>>,
    ) {
        let (x0, th, st) = self.0.sample_initial(rng);
        *x = x0;
        *theta.expect("learning particle has parameters") = th;
        *stats.expect("learning particle has statistics") = st;
    }

    #[inline]
    fn step(
        &self,
        rng: &mut RngStream,
        x: &mut T,
        theta: Option<&mut ParamDraw<T>>,
        stats: Option<&mut SuffStat<T>>,
        y: T,
    ) {
        let theta = theta.expect("learning particle has parameters");
        let stats = stats.expect("learning particle has statistics");
        self.0.propagate(x, theta, stats, y, rng);
    }

    #[inline]
    fn log_weight(&self, y: T, x: T, theta: Option<&ParamDraw<T>>) -> T {
        self.0
            .log_likelihood(y, x, theta.expect("learning particle has parameters"))
    }
}

/// Applies `f(global_index, rng, x, theta, stats)` to every particle, one
/// stream per particle drawn from `family`.
fn for_each_particle<T, F>(
    particles: &mut ParticleSystem<T>,
    backend: &Backend,
    family: StreamFamily,
    f: F,
) where
    T: Real,
    F: Fn(&mut RngStream, &mut T, Option<&mut ParamDraw<T>>, Option<&mut SuffStat<T>>)
        + Sync
        + Send,
{
    let ranges = backend.lane_ranges(particles.len());
    let lanes = particles.lanes(&ranges);
    backend.run(lanes, |lane| {
        let learning = !lane.params.is_empty();
        for k in 0..lane.states.len() {
            let mut rng = family.stream(lane.offset + k);
            if learning {
                f(
                    &mut rng,
                    &mut lane.states[k],
                    Some(&mut lane.params[k]),
                    Some(&mut lane.suffstats[k]),
                );
            } else {
                f(&mut rng, &mut lane.states[k], None, None);
            }
        }
    });
}

/// Fills `weights` with `exp(log_weight - max)`.
fn compute_weights<T: Real, K: Kernel<T>>(
    kernel: &K,
    particles: &mut ParticleSystem<T>,
    y: T,
    backend: &Backend,
) -> Result<()> {
    let ranges = backend.lane_ranges(particles.len());
    let mut lane_max: Vec<std::result::Result<T, usize>> =
        vec![Ok(T::neg_infinity()); ranges.len()];
    {
        let lanes = particles.lanes(&ranges);
        let slots = crate::backend::split_slice_mut(&mut lane_max, &unit_ranges(ranges.len()));
        backend.run(lanes.into_iter().zip(slots).collect(), |(lane, slot)| {
            let mut max = T::neg_infinity();
            for k in 0..lane.states.len() {
                let lw = kernel.log_weight(y, lane.states[k], lane.params.get(k));
                if lw.is_nan() || lw == T::infinity() {
                    slot[0] = Err(lane.offset + k);
                    return;
                }
                lane.weights[k] = lw;
                if lw > max {
                    max = lw;
                }
            }
            slot[0] = Ok(max);
        });
    }
    let mut max = T::neg_infinity();
    for m in lane_max {
        match m {
            Ok(v) => max = max.max(v),
            Err(index) => return Err(Error::NonFiniteWeight { index }),
        }
    }
    if max == T::neg_infinity() {
        return Err(Error::AllWeightsZero);
    }
    backend.for_each_chunk_mut(&mut particles.weights, |_, chunk| {
        for w in chunk {
            *w = (*w - max).exp();
        }
    });
    Ok(())
}

fn unit_ranges(k: usize) -> Vec<std::ops::Range<usize>> {
    (0..k).map(|i| i..i + 1).collect()
}

fn run<T: Real, K: Kernel<T>>(
    kernel: &K,
    y: &[T],
    config: &FilterConfig,
    backend: &Backend,
) -> Result<FilterOutput<T>> {
    config.validate()?;
    if y.len() >= (1 << 24) {
        return Err(Error::Config("series longer than 2^24 steps".into()));
    }
    if let Some(t) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::Config(format!("observation {t} is not finite")));
    }
    let n = config.n;
    let learning = kernel.learning();
    let mut clock = PhaseClock::start();

    let mut current = ParticleSystem::<T>::new(n, learning);
    let mut spare = ParticleSystem::<T>::new(n, learning);
    let init_family = StreamFamily::new(config.seed, stream_base(StreamPhase::Initialize, 0));
    for_each_particle(
        &mut current,
        backend,
        init_family,
        |rng, x, theta, stats| kernel.init(rng, x, theta, stats),
    );
    #[cfg(debug_assertions)]
    current.seal(backend);
    let mut record = if config.store_particles {
        Some(ParticleSystem::<T>::new(n, learning))
    } else {
        None
    };
    clock.lap(Phase::Initialize);

    if y.is_empty() {
        if let Some(rec) = record.as_mut() {
            current.copy_into(rec);
        }
        clock.lap(Phase::Store);
    }

    let mut state = Vec::with_capacity(y.len());
    let mut params = if learning {
        Some(Vec::with_capacity(y.len()))
    } else {
        None
    };
    let mut trace = if config.record_indices {
        Some(Vec::with_capacity(y.len()))
    } else {
        None
    };
    let mut digest = if config.digest_indices {
        Some(FNV_OFFSET)
    } else {
        None
    };
    let mut scratch = Vec::new();
    clock.lap(Phase::Other);

    for (t, &yt) in y.iter().enumerate() {
        let family = StreamFamily::new(config.seed, stream_base(StreamPhase::Propagate, t));
        for_each_particle(&mut current, backend, family, |rng, x, theta, stats| {
            kernel.step(rng, x, theta, stats, yt)
        });
        #[cfg(debug_assertions)]
        current.seal(backend);
        clock.lap(Phase::Propagate);

        let degenerate = |e: Error| Error::Degenerate {
            step: t + 1,
            source: Box::new(e),
        };
        compute_weights(kernel, &mut current, yt, backend).map_err(degenerate)?;
        let (cdf, _total) = match config.cdf {
            CdfMethod::Sequential => sequential_cdf_with_total(&current.weights),
            CdfMethod::AdderTree => {
                parallel_cdf_with_total(&current.weights, backend, config.pad_to_pow2)
            }
        }
        .map_err(degenerate)?;
        clock.lap(Phase::Cdf);

        state.push(summarize(
            n,
            |i| current.states[i],
            &current.weights,
            backend,
            &mut scratch,
        ));
        if let Some(p) = params.as_mut() {
            p.push(ParamSummary {
                sigma2: summarize(
                    n,
                    |i| current.params[i].sigma2,
                    &current.weights,
                    backend,
                    &mut scratch,
                ),
                tau2: summarize(
                    n,
                    |i| current.params[i].tau2,
                    &current.weights,
                    backend,
                    &mut scratch,
                ),
            });
        }
        clock.lap(Phase::Other);

        let source = StreamFamily::new(config.seed, stream_base(StreamPhase::Resample, t));
        let outcome = resample(config.resampler, &cdf, &source, n, backend);
        clock.add_sort(outcome.sort_time);
        spare.gather_from(&current, &outcome.indices.idx, backend);
        std::mem::swap(&mut current, &mut spare);
        #[cfg(debug_assertions)]
        debug_assert!(
            current.tuples_intact(),
            "resampling mixed particle components at step {}",
            t + 1
        );
        clock.lap(Phase::Resample);

        if let Some(rec) = record.as_mut() {
            current.copy_into(rec);
            clock.lap(Phase::Store);
        }

        if let Some(h) = digest.as_mut() {
            fnv_indices(h, &outcome.indices.idx);
        }
        if let Some(tr) = trace.as_mut() {
            tr.push(outcome.indices.idx);
        }
        clock.lap(Phase::Other);
    }

    let timings = clock.finish();
    Ok(FilterOutput {
        state,
        params,
        timings,
        final_particles: record,
        resample_trace: trace,
        indices_digest: digest,
    })
}
