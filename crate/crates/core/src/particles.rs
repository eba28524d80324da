//! Particle storage (struct of arrays) and lane views over it.

use std::ops::Range;

use crate::backend::{split_slice_mut, Backend};
use crate::real::Real;

/// Per-particle parameter draw for the trend-plus-noise model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamDraw<T> {
    /// Observation variance.
    pub sigma2: T,
    /// State-innovation variance.
    pub tau2: T,
}

/// Inverse-gamma hyperparameters (shape, scale) for both variances.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SuffStat<T> {
    pub a_sigma: T,
    pub b_sigma: T,
    pub a_tau: T,
    pub b_tau: T,
}

impl<T: Real> ParamDraw<T> {
    pub fn is_valid(&self) -> bool {
        self.sigma2 > T::zero()
            && self.sigma2.is_finite()
            && self.tau2 > T::zero()
            && self.tau2.is_finite()
    }
}

impl<T: Real> SuffStat<T> {
    pub fn is_valid(&self) -> bool {
        [self.a_sigma, self.b_sigma, self.a_tau, self.b_tau]
            .iter()
            .all(|v| *v > T::zero() && v.is_finite())
    }
}

/// `N` particles at one time step.
///
/// `params` and `suffstats` are empty for plain filtering and have length `N`
/// for particle learning.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem<T> {
    pub states: Vec<T>,
    pub params: Vec<ParamDraw<T>>,
    pub suffstats: Vec<SuffStat<T>>,
    pub weights: Vec<T>,
    /// Tuple fingerprints used to detect components copied from different particles.
    #[cfg(debug_assertions)]
    pub(crate) fingerprints: Vec<u64>,
}

/// Mutable view over one lane's contiguous particle range.
pub struct ParticleLane<'a, T> {
    pub offset: usize,
    pub states: &'a mut [T],
    pub params: &'a mut [ParamDraw<T>],
    pub suffstats: &'a mut [SuffStat<T>],
    pub weights: &'a mut [T],
    #[cfg(debug_assertions)]
    pub(crate) fingerprints: &'a mut [u64],
}

impl<T: Real> ParticleSystem<T> {
    pub fn new(n: usize, learning: bool) -> Self {
        let m = if learning { n } else { 0 };
        Self {
            states: vec![T::zero(); n],
            params: vec![ParamDraw::default(); m],
            suffstats: vec![SuffStat::default(); m],
            weights: vec![T::one(); n],
            #[cfg(debug_assertions)]
            fingerprints: vec![0; n],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn is_learning(&self) -> bool {
        !self.params.is_empty()
    }

    /// Checks the length and weight invariants.
    pub fn check_invariants(&self) -> bool {
        let n = self.len();
        n >= 1
            && self.weights.len() == n
            && (self.params.is_empty() || self.params.len() == n)
            && self.params.len() == self.suffstats.len()
            && self
                .weights
                .iter()
                .all(|w| w.is_finite() && *w >= T::zero())
    }

    pub(crate) fn lanes(&mut self, ranges: &[Range<usize>]) -> Vec<ParticleLane<'_, T>> {
        let learning = self.is_learning();
        let empty: Vec<Range<usize>> = ranges.iter().map(|_| 0..0).collect();
        let param_ranges = if learning { ranges } else { &empty[..] };
        let states = split_slice_mut(&mut self.states, ranges);
        let params = split_slice_mut(&mut self.params, param_ranges);
        let stats = split_slice_mut(&mut self.suffstats, param_ranges);
        let weights = split_slice_mut(&mut self.weights, ranges);
        #[cfg(debug_assertions)]
        let mut prints = split_slice_mut(&mut self.fingerprints, ranges).into_iter();
        ranges
            .iter()
            .zip(states)
            .zip(params)
            .zip(stats)
            .zip(weights)
            .map(
                |((((r, states), params), suffstats), weights)| ParticleLane {
                    offset: r.start,
                    states,
                    params,
                    suffstats,
                    weights,
                    #[cfg(debug_assertions)]
                    fingerprints: prints.next().expect("one fingerprint slice per lane"),
                },
            )
            .collect()
    }

    /// `self[j] = src[idx[j]]` for every slot, copying whole tuples.
    pub fn gather_from(&mut self, src: &ParticleSystem<T>, idx: &[usize], backend: &Backend) {
        assert_eq!(idx.len(), self.len());
        let ranges = backend.lane_ranges(self.len());
        let lanes = self.lanes(&ranges);
        backend.run(lanes, |lane| {
            let learning = !lane.params.is_empty();
            for k in 0..lane.states.len() {
                let from = idx[lane.offset + k];
                lane.states[k] = src.states[from];
                if learning {
                    lane.params[k] = src.params[from];
                    lane.suffstats[k] = src.suffstats[from];
                }
                lane.weights[k] = T::one();
                #[cfg(debug_assertions)]
                {
                    lane.fingerprints[k] = src.fingerprints[from];
                }
            }
        });
    }

    /// Copies every array into `dest`, reusing its allocations.
    pub fn copy_into(&self, dest: &mut ParticleSystem<T>) {
        dest.states.clone_from(&self.states);
        dest.params.clone_from(&self.params);
        dest.suffstats.clone_from(&self.suffstats);
        dest.weights.clone_from(&self.weights);
        #[cfg(debug_assertions)]
        dest.fingerprints.clone_from(&self.fingerprints);
    }

    /// Recomputes every tuple fingerprint from the current components.
    #[cfg(debug_assertions)]
    pub(crate) fn seal(&mut self, backend: &Backend) {
        let ranges = backend.lane_ranges(self.len());
        let lanes = self.lanes(&ranges);
        backend.run(lanes, |lane| {
            for k in 0..lane.states.len() {
                lane.fingerprints[k] = fingerprint(
                    lane.states[k],
                    lane.params.get(k).copied(),
                    lane.suffstats.get(k).copied(),
                );
            }
        });
    }

    /// True when every particle's components still belong together.
    ///
    /// Only available in debug builds, where fingerprints are maintained.
    #[cfg(debug_assertions)]
    pub fn tuples_intact(&self) -> bool {
        (0..self.len()).all(|i| {
            self.fingerprints[i]
                == fingerprint(
                    self.states[i],
                    self.params.get(i).copied(),
                    self.suffstats.get(i).copied(),
                )
        })
    }
}

#[cfg(debug_assertions)]
fn fingerprint<T: Real>(x: T, theta: Option<ParamDraw<T>>, stats: Option<SuffStat<T>>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut mix = |v: T| {
        h ^= v.to_f64_lossy().to_bits();
        h = h.wrapping_mul(0x0100_0000_01b3).rotate_left(17);
    };
    mix(x);
    if let Some(t) = theta {
        mix(t.sigma2);
        mix(t.tau2);
    }
    if let Some(s) = stats {
        mix(s.a_sigma);
        mix(s.b_sigma);
        mix(s.a_tau);
        mix(s.b_tau);
    }
    h
}
