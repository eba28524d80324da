use std::fmt;
use std::str::FromStr;

use parsmc::{Backend, CdfMethod, Precision, Resampler};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// A complete filtering pipeline: resampler, CDF construction and backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    CpuNaive,
    CpuSorted,
    CpuStratified,
    CpuSystematic,
    ParCutpoint,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::CpuNaive,
        Algorithm::CpuSorted,
        Algorithm::CpuStratified,
        Algorithm::CpuSystematic,
        Algorithm::ParCutpoint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::CpuNaive => "cpu_naive",
            Algorithm::CpuSorted => "cpu_sorted",
            Algorithm::CpuStratified => "cpu_stratified",
            Algorithm::CpuSystematic => "cpu_systematic",
            Algorithm::ParCutpoint => "par_cutpoint",
        }
    }

    pub fn resampler(self) -> Resampler {
        match self {
            Algorithm::CpuNaive => Resampler::Naive,
            Algorithm::CpuSorted => Resampler::Sorted,
            Algorithm::CpuStratified => Resampler::Stratified,
            Algorithm::CpuSystematic => Resampler::Systematic,
            Algorithm::ParCutpoint => Resampler::CutPoint,
        }
    }

    pub fn cdf(self) -> CdfMethod {
        match self {
            Algorithm::ParCutpoint => CdfMethod::AdderTree,
            _ => CdfMethod::Sequential,
        }
    }

    pub fn is_parallel(self) -> bool {
        self == Algorithm::ParCutpoint
    }

    /// The `cpu_*` pipelines always run on one thread; `lanes` only applies to parallel ones.
    pub fn backend(self, lanes: usize) -> Result<Backend> {
        if self.is_parallel() {
            Backend::parallel(lanes).map_err(|e| BenchError::Config(e.to_string()))
        } else {
            Ok(Backend::sequential())
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.as_str()).collect();
                format!(
                    "unknown algorithm `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub ns: Vec<usize>,
    /// Number of observations in the simulated series.
    pub t: usize,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub precision: Precision,
    pub seed: u64,
    pub lanes: usize,
    pub store_particles: bool,
    /// Add a digest of each trial's resampled index stream to the records.
    pub digest_indices: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            ns: vec![1 << 10],
            t: 100,
            trials: 10,
            algorithms: Algorithm::ALL.to_vec(),
            precision: Precision::Single,
            seed: 1,
            lanes: default_lanes(),
            store_particles: false,
            digest_indices: false,
        }
    }
}

pub fn default_lanes() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(BenchError::Config(m));
        if self.ns.is_empty() {
            return fail("no particle counts given".into());
        }
        if self.algorithms.is_empty() {
            return fail("no algorithms given".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.t == 0 {
            return fail("series length must be at least 1".into());
        }
        if self.lanes == 0 {
            return fail("lanes must be at least 1".into());
        }
        for &n in &self.ns {
            if n == 0 {
                return fail("particle count must be at least 1".into());
            }
            if !n.is_power_of_two()
                && self
                    .algorithms
                    .iter()
                    .any(|a| a.cdf() == CdfMethod::AdderTree)
            {
                return fail(format!("particle count {n} is not a power of two"));
            }
        }
        Ok(())
    }
}
