//! Benchmark driver: trials, per-trial records and trimmed-mean aggregates.

use std::time::Duration;

use parsmc::rng::{stream_base, Phase};
use parsmc::{
    run_particle_filter, run_particle_learning, simulate, FilterConfig, FilterOutput, ParamSummary,
    PhaseTimings, PosteriorSummary, Precision, Real, RngStream, TrendNoiseLearner, TrendNoiseModel,
};
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, BenchConfig};
use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Trial,
    Aggregate,
}

/// One CSV row. Timing fields are nanoseconds; aggregates hold the trimmed
/// mean of each field taken independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub kind: RecordKind,
    pub algorithm: Algorithm,
    pub n: usize,
    #[serde(with = "precision_name")]
    pub precision: Precision,
    pub trial: Option<usize>,
    pub initialize_ns: f64,
    pub cdf_ns: f64,
    pub resample_ns: f64,
    pub resample_sort_ns: f64,
    pub resample_excl_sort_ns: f64,
    pub propagate_ns: f64,
    pub store_ns: f64,
    pub other_ns: f64,
    pub total_ns: f64,
    /// Filtered mean of the state at the last time step.
    pub x_mean: f64,
    pub sigma2_mean: f64,
    pub tau2_mean: f64,
    /// Hex FNV-1a digest of every posterior summary in the run (trials only).
    pub summary_digest: Option<String>,
    /// Hex FNV-1a digest of the resampled index stream, when requested.
    pub index_digest: Option<String>,
}

impl BenchRecord {
    pub fn phase_sum_ns(&self) -> f64 {
        self.initialize_ns
            + self.cdf_ns
            + self.resample_ns
            + self.propagate_ns
            + self.store_ns
            + self.other_ns
    }
}

mod precision_name {
    use parsmc::Precision;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &Precision, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(p.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Precision, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Mean of the middle `max(1, len / 2)` order statistics.
pub fn trimmed_mean(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "trimmed mean of no values");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let keep = (v.len() / 2).max(1);
    let start = (v.len() - keep) / 2;
    v[start..start + keep].iter().sum::<f64>() / keep as f64
}

/// Result of one filtering run, independent of the scalar type.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleRun {
    pub state: Vec<PosteriorSummary>,
    pub params: Option<Vec<ParamSummary>>,
    pub timings: PhaseTimings,
    pub index_digest: Option<u64>,
    pub summary_digest: u64,
}

/// Observations from the benchmark model (`x_0 = 0`, `sigma2 = 1`, `tau2 = 0.1`).
pub fn simulate_data(t: usize, seed: u64) -> Vec<f64> {
    let truth = TrendNoiseModel::<f64>::new(1.0, 0.1, 0.0, 0.0).expect("valid model");
    simulate(
        &truth,
        t,
        RngStream::new(seed, stream_base(Phase::Simulate, 0)),
    )
    .1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub store_particles: bool,
    /// Digest the resampled index stream (costs time in the `other` phase).
    pub digest_indices: bool,
    /// Filter with the true parameters instead of learning them.
    pub known_params: bool,
}

pub fn run_single(
    algorithm: Algorithm,
    n: usize,
    y: &[f64],
    precision: Precision,
    seed: u64,
    lanes: usize,
    opts: RunOptions,
) -> std::result::Result<SingleRun, parsmc::Error> {
    match precision {
        Precision::Single => run_typed::<f32>(algorithm, n, y, seed, lanes, opts),
        Precision::Double => run_typed::<f64>(algorithm, n, y, seed, lanes, opts),
    }
}

fn run_typed<T: Real>(
    algorithm: Algorithm,
    n: usize,
    y: &[f64],
    seed: u64,
    lanes: usize,
    opts: RunOptions,
) -> std::result::Result<SingleRun, parsmc::Error> {
    let backend = algorithm
        .backend(lanes)
        .map_err(|e| parsmc::Error::Config(e.to_string()))?;
    let y: Vec<T> = y.iter().map(|&v| T::lit(v)).collect();
    let mut config =
        FilterConfig::new(n, seed).with_resampler(algorithm.resampler(), algorithm.cdf());
    config.store_particles = opts.store_particles;
    config.digest_indices = opts.digest_indices;
    let out: FilterOutput<T> = if opts.known_params {
        run_particle_filter(&TrendNoiseModel::<T>::benchmark(), &y, &config, &backend)?
    } else {
        run_particle_learning(&TrendNoiseLearner::<T>::default(), &y, &config, &backend)?
    };
    let summary_digest = digest_summaries(&out.state, out.params.as_deref());
    Ok(SingleRun {
        index_digest: out.index_digest(),
        state: out.state,
        params: out.params,
        timings: out.timings,
        summary_digest,
    })
}

fn digest_summaries(state: &[PosteriorSummary], params: Option<&[ParamSummary]>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |s: &PosteriorSummary| {
        for v in [s.mean, s.sd, s.q005, s.q05, s.q50, s.q95, s.q995] {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    };
    state.iter().for_each(&mut eat);
    for p in params.unwrap_or(&[]) {
        eat(&p.sigma2);
        eat(&p.tau2);
    }
    h
}

fn ns(d: Duration) -> f64 {
    d.as_nanos() as f64
}

fn trial_record(
    algorithm: Algorithm,
    n: usize,
    precision: Precision,
    trial: usize,
    run: &SingleRun,
) -> BenchRecord {
    let t = &run.timings;
    let last = run.state.last().map_or(f64::NAN, |s| s.mean);
    let (sigma2, tau2) = run
        .params
        .as_ref()
        .and_then(|p| p.last())
        .map_or((f64::NAN, f64::NAN), |p| (p.sigma2.mean, p.tau2.mean));
    BenchRecord {
        kind: RecordKind::Trial,
        algorithm,
        n,
        precision,
        trial: Some(trial),
        initialize_ns: ns(t.initialize),
        cdf_ns: ns(t.cdf),
        resample_ns: ns(t.resample),
        resample_sort_ns: ns(t.resample_sort_only),
        resample_excl_sort_ns: ns(t.resample_excluding_sort()),
        propagate_ns: ns(t.propagate),
        store_ns: ns(t.store),
        other_ns: ns(t.other),
        total_ns: ns(t.total),
        x_mean: last,
        sigma2_mean: sigma2,
        tau2_mean: tau2,
        summary_digest: Some(format!("{:016x}", run.summary_digest)),
        index_digest: run.index_digest.map(|d| format!("{d:016x}")),
    }
}

/// Trimmed-mean aggregate over trial records of one (algorithm, n).
pub fn aggregate(trials: &[BenchRecord]) -> BenchRecord {
    let field =
        |f: fn(&BenchRecord) -> f64| trimmed_mean(&trials.iter().map(f).collect::<Vec<_>>());
    let first = &trials[0];
    BenchRecord {
        kind: RecordKind::Aggregate,
        algorithm: first.algorithm,
        n: first.n,
        precision: first.precision,
        trial: None,
        initialize_ns: field(|r| r.initialize_ns),
        cdf_ns: field(|r| r.cdf_ns),
        resample_ns: field(|r| r.resample_ns),
        resample_sort_ns: field(|r| r.resample_sort_ns),
        resample_excl_sort_ns: field(|r| r.resample_excl_sort_ns),
        propagate_ns: field(|r| r.propagate_ns),
        store_ns: field(|r| r.store_ns),
        other_ns: field(|r| r.other_ns),
        total_ns: field(|r| r.total_ns),
        x_mean: field(|r| r.x_mean),
        sigma2_mean: field(|r| r.sigma2_mean),
        tau2_mean: field(|r| r.tau2_mean),
        summary_digest: None,
        index_digest: None,
    }
}

/// Runs every (algorithm, n) pair for `config.trials` trials on one shared
/// simulated series. `on_record` sees each record as it is produced.
pub fn run_benchmark_with(
    config: &BenchConfig,
    mut on_record: impl FnMut(&BenchRecord),
) -> Result<Vec<BenchRecord>> {
    config.validate()?;
    let y = simulate_data(config.t, config.seed);
    let opts = RunOptions {
        store_particles: config.store_particles,
        digest_indices: config.digest_indices,
        known_params: false,
    };
    let mut records = Vec::new();
    for &algorithm in &config.algorithms {
        for &n in &config.ns {
            let mut trials = Vec::with_capacity(config.trials);
            for trial in 0..config.trials {
                let seed = config.seed.wrapping_add(trial as u64);
                let run = run_single(algorithm, n, &y, config.precision, seed, config.lanes, opts)
                    .map_err(|source| BenchError::Filter {
                        algorithm,
                        n,
                        trial,
                        source,
                    })?;
                let rec = trial_record(algorithm, n, config.precision, trial, &run);
                on_record(&rec);
                trials.push(rec);
            }
            let agg = aggregate(&trials);
            on_record(&agg);
            records.extend(trials);
            records.push(agg);
        }
    }
    Ok(records)
}

pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    run_benchmark_with(config, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trimmed_mean_keeps_middle_five_of_ten() {
        let v: Vec<f64> = (1..=10).rev().map(|x| x as f64).collect();
        assert_eq!(trimmed_mean(&v), 5.0);
    }

    #[test]
    fn trimmed_mean_small_samples() {
        assert_eq!(trimmed_mean(&[4.5]), 4.5);
        assert_eq!(trimmed_mean(&[9.0, 1.0, 5.0]), 5.0);
        assert_eq!(trimmed_mean(&[1.0, 2.0, 100.0, 3.0]), 2.5);
    }

    #[test]
    fn aggregate_trims_each_field_independently() {
        let run = |total: f64, cdf: f64| BenchRecord {
            kind: RecordKind::Trial,
            algorithm: Algorithm::CpuNaive,
            n: 8,
            precision: Precision::Double,
            trial: Some(0),
            initialize_ns: 0.0,
            cdf_ns: cdf,
            resample_ns: 0.0,
            resample_sort_ns: 0.0,
            resample_excl_sort_ns: 0.0,
            propagate_ns: 0.0,
            store_ns: 0.0,
            other_ns: 0.0,
            total_ns: total,
            x_mean: 0.0,
            sigma2_mean: 1.0,
            tau2_mean: 0.1,
            summary_digest: None,
            index_digest: None,
        };
        let trials = [run(1.0, 30.0), run(2.0, 10.0), run(3.0, 20.0)];
        let agg = aggregate(&trials);
        assert_eq!(agg.total_ns, 2.0);
        assert_eq!(agg.cdf_ns, 20.0);
        assert_eq!(agg.kind, RecordKind::Aggregate);
        assert_eq!(agg.trial, None);
    }
}
