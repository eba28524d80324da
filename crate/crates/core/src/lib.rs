//! Data-parallel particle filtering and particle learning.
//!
//! The full filtering cycle (likelihood weights, CDF construction, resampling,
//! propagation) runs as parallel maps over worker lanes with barriers between
//! phases. The CDF is built with a forward/backward adder tree and resampling
//! is exact, using a cut-point table that is itself searched in parallel.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! name the common instantiations.

pub mod backend;
pub mod error;
pub mod filter;
pub mod models;
pub mod particles;
pub mod prefix_sum;
pub mod real;
pub mod resampling;
pub mod rng;
pub mod weights;

pub use backend::{Backend, Mode};
pub use error::{Error, Result};
pub use filter::{
    run_particle_filter, run_particle_learning, CdfMethod, FilterConfig, FilterOutput,
    ParamSummary, PhaseTimings, PosteriorSummary,
};
pub use models::{
    kalman_filter, simulate, LearnableModel, Priors, StateSpaceModel, TrendNoiseLearner,
    TrendNoiseModel,
};
pub use particles::{ParamDraw, ParticleSystem, SuffStat};
pub use prefix_sum::{
    backward_adder, forward_adder, parallel_cdf, sequential_cdf, sequential_cumsum, AdderTree,
};
pub use real::{Precision, Real};
pub use resampling::{ResampleIndices, Resampler};
pub use rng::{RngStream, StreamFamily, UniformSource};
pub use weights::{normalize_weights, CutPointTable, NormalizedCdf};

pub type CdfF32 = NormalizedCdf<f32>;
pub type CdfF64 = NormalizedCdf<f64>;
pub type ParticlesF32 = ParticleSystem<f32>;
pub type ParticlesF64 = ParticleSystem<f64>;
pub type TrendNoiseModelF32 = TrendNoiseModel<f32>;
pub type TrendNoiseModelF64 = TrendNoiseModel<f64>;
pub type FilterOutputF32 = FilterOutput<f32>;
pub type FilterOutputF64 = FilterOutput<f64>;
