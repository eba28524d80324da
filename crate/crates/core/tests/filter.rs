use parsmc::rng::{stream_base, Phase};
use parsmc::{
    kalman_filter, run_particle_filter, simulate, Backend, CdfMethod, Error, FilterConfig,
    Resampler, RngStream, StateSpaceModel, StreamFamily, TrendNoiseModel,
};

fn data(t_len: usize, seed: u64) -> Vec<f64> {
    let model = TrendNoiseModel::<f64>::new(1.0, 0.1, 0.0, 0.0).unwrap();
    simulate(
        &model,
        t_len,
        RngStream::new(seed, stream_base(Phase::Simulate, 0)),
    )
    .1
}

fn model() -> TrendNoiseModel<f64> {
    TrendNoiseModel::benchmark()
}

#[test]
fn single_particle_mean_is_the_propagated_particle() {
    let m = model();
    let y = [0.7];
    let out =
        run_particle_filter(&m, &y, &FilterConfig::new(1, 42), &Backend::sequential()).unwrap();
    let mut init = StreamFamily::new(42, stream_base(Phase::Initialize, 0)).stream(0);
    let mut prop = StreamFamily::new(42, stream_base(Phase::Propagate, 0)).stream(0);
    let x1 = m.propagate(m.sample_initial(&mut init), &mut prop);
    assert_eq!(out.state[0].mean, x1);
    assert_eq!(out.state[0].sd, 0.0);
    assert_eq!(out.state[0].q50, x1);
}

#[test]
fn summary_is_weighted_mean_before_resampling() {
    let m = model();
    let y = [1.5];
    let n = 64;
    let out = run_particle_filter(
        &m,
        &y,
        &FilterConfig::new(n, 9),
        &Backend::parallel(3).unwrap(),
    )
    .unwrap();
    let init = StreamFamily::new(9, stream_base(Phase::Initialize, 0));
    let prop = StreamFamily::new(9, stream_base(Phase::Propagate, 0));
    let xs: Vec<f64> = (0..n)
        .map(|i| m.propagate(m.sample_initial(&mut init.stream(i)), &mut prop.stream(i)))
        .collect();
    let lw: Vec<f64> = xs.iter().map(|&x| -0.5 * (y[0] - x).powi(2)).collect();
    let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    let mean: f64 = w.iter().zip(&xs).map(|(w, x)| w * x).sum::<f64>() / total;
    assert!(
        (out.state[0].mean - mean).abs() < 1e-12,
        "{} vs {mean}",
        out.state[0].mean
    );
}

#[test]
fn static_state_tracks_kalman() {
    let m = TrendNoiseModel::new(1.0, 0.0, 0.0, 10.0).unwrap();
    let truth = TrendNoiseModel::new(1.0, 0.0, 0.8, 0.0).unwrap();
    let y = simulate(&truth, 50, RngStream::new(3, 0)).1;
    let out = run_particle_filter(
        &m,
        &y,
        &FilterConfig::new(1 << 16, 5),
        &Backend::parallel(4).unwrap(),
    )
    .unwrap();
    let (kalman, _) = kalman_filter(&y, 1.0, 0.0, 0.0, 10.0);
    for (t, (pf, k)) in out.filtered_mean().iter().zip(&kalman).enumerate() {
        assert!((pf - k).abs() < 0.05, "t={t}: {pf} vs {k}");
    }
}

#[test]
fn rmse_against_kalman_is_within_monte_carlo_bound() {
    let y = data(100, 17);
    let n = 1 << 14;
    let out = run_particle_filter(
        &model(),
        &y,
        &FilterConfig::new(n, 1),
        &Backend::parallel(4).unwrap(),
    )
    .unwrap();
    let (kalman, _) = kalman_filter(&y, 1.0, 0.1, 0.0, 10.0);
    let mse = out
        .filtered_mean()
        .iter()
        .zip(&kalman)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / y.len() as f64;
    assert!(mse.sqrt() < 3.0 / (n as f64).sqrt(), "rmse {}", mse.sqrt());
}

#[test]
fn single_precision_tracks_kalman() {
    let y = data(100, 18);
    let y32: Vec<f32> = y.iter().map(|&v| v as f32).collect();
    let m = TrendNoiseModel::<f32>::benchmark();
    let out = run_particle_filter(
        &m,
        &y32,
        &FilterConfig::new(1 << 14, 2),
        &Backend::parallel(2).unwrap(),
    )
    .unwrap();
    let (kalman, _) = kalman_filter(&y, 1.0, 0.1, 0.0, 10.0);
    let mae = out
        .filtered_mean()
        .iter()
        .zip(&kalman)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / y.len() as f64;
    assert!(mae < 3.0 / 128.0, "mae {mae}");
}

#[test]
fn naive_and_cutpoint_are_interchangeable_in_distribution() {
    let y = data(25, 19);
    let n = 1 << 10;
    let seeds = 200;
    let run = |resampler, seed| {
        let cfg = FilterConfig::new(n, seed).with_resampler(resampler, CdfMethod::Sequential);
        run_particle_filter(&model(), &y, &cfg, &Backend::sequential())
            .unwrap()
            .filtered_mean()
    };
    let a: Vec<Vec<f64>> = (0..seeds).map(|s| run(Resampler::Naive, s)).collect();
    let b: Vec<Vec<f64>> = (0..seeds).map(|s| run(Resampler::CutPoint, s)).collect();
    let moments = |e: &[Vec<f64>], t: usize| {
        let k = e.len() as f64;
        let mean = e.iter().map(|r| r[t]).sum::<f64>() / k;
        let var = e.iter().map(|r| (r[t] - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (mean, var / k)
    };
    for t in 0..y.len() {
        let (ma, va) = moments(&a, t);
        let (mb, vb) = moments(&b, t);
        let z = (ma - mb).abs() / (va + vb).sqrt();
        assert!(z < 4.0, "t={t}: z={z}");
    }
}

#[test]
fn every_resampler_runs_and_reports() {
    let y = data(10, 20);
    for r in Resampler::ALL {
        for cdf in [CdfMethod::Sequential, CdfMethod::AdderTree] {
            let cfg = FilterConfig::new(256, 3).with_resampler(r, cdf);
            let out =
                run_particle_filter(&model(), &y, &cfg, &Backend::parallel(2).unwrap()).unwrap();
            assert_eq!(out.state.len(), 10);
            assert!(out
                .state
                .iter()
                .all(|s| s.q005 <= s.q05 && s.q05 <= s.q50 && s.q50 <= s.q95 && s.q95 <= s.q995));
        }
    }
}

#[test]
fn results_identical_across_modes_and_lanes() {
    let y = data(30, 21);
    let mut cfg = FilterConfig::new(1 << 11, 77);
    cfg.record_indices = true;
    let reference = run_particle_filter(&model(), &y, &cfg, &Backend::sequential()).unwrap();
    for lanes in [1, 2, 8] {
        let out =
            run_particle_filter(&model(), &y, &cfg, &Backend::parallel(lanes).unwrap()).unwrap();
        assert_eq!(out.state, reference.state, "lanes {lanes}");
        assert_eq!(
            out.resample_trace, reference.resample_trace,
            "lanes {lanes}"
        );
        assert_eq!(out.index_digest(), reference.index_digest());
    }
}

#[test]
fn padded_tree_never_selects_padding() {
    let y = data(20, 22);
    let mut cfg = FilterConfig::new(3, 4);
    cfg.record_indices = true;
    assert!(matches!(
        run_particle_filter(&model(), &y, &cfg, &Backend::sequential()),
        Err(Error::NotPowerOfTwo { n: 3 })
    ));
    cfg.pad_to_pow2 = true;
    let out = run_particle_filter(&model(), &y, &cfg, &Backend::parallel(2).unwrap()).unwrap();
    let trace = out.resample_trace.unwrap();
    assert!(trace
        .iter()
        .all(|step| step.len() == 3 && step.iter().all(|&i| i < 3)));
}

#[test]
fn store_switch_controls_particle_output() {
    let y = data(10, 23);
    let mut cfg = FilterConfig::new(512, 5);
    let out = run_particle_filter(&model(), &y, &cfg, &Backend::sequential()).unwrap();
    assert!(out.timings.store.is_zero());
    assert!(out.final_particles.is_none());
    assert_eq!(out.state.len(), 10);
    assert!(out.resample_trace.is_none());

    cfg.store_particles = true;
    let stored = run_particle_filter(&model(), &y, &cfg, &Backend::sequential()).unwrap();
    assert!(!stored.timings.store.is_zero());
    let p = stored.final_particles.unwrap();
    assert_eq!(p.len(), 512);
    assert!(p.params.is_empty());
    assert_eq!(stored.state, out.state);
}

#[test]
fn phase_timings_account_for_total() {
    let y = data(50, 24);
    let mut cfg =
        FilterConfig::new(1 << 12, 6).with_resampler(Resampler::Sorted, CdfMethod::Sequential);
    cfg.store_particles = true;
    let t = run_particle_filter(&model(), &y, &cfg, &Backend::sequential())
        .unwrap()
        .timings;
    assert!(t.resample_sort_only <= t.resample);
    assert!(!t.resample_sort_only.is_zero());
    let gap = t.accounting_gap();
    assert!(gap <= 0.01, "relative gap {gap}");
}

struct Blackout {
    at: f64,
}

impl StateSpaceModel<f64> for Blackout {
    fn sample_initial(&self, _: &mut RngStream) -> f64 {
        0.0
    }
    fn propagate(&self, x: f64, rng: &mut RngStream) -> f64 {
        x + rng.normal()
    }
    fn log_likelihood(&self, y: f64, _: f64) -> f64 {
        if y == self.at {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    }
}

#[test]
fn degeneracy_reports_the_step() {
    let y = [0.0, 1.0, 2.0, 3.0];
    let err = run_particle_filter(
        &Blackout { at: 2.0 },
        &y,
        &FilterConfig::new(16, 1),
        &Backend::sequential(),
    )
    .unwrap_err();
    match err {
        Error::Degenerate { step, source } => {
            assert_eq!(step, 3);
            assert!(matches!(*source, Error::AllWeightsZero));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let y = data(5, 25);
    assert!(matches!(
        run_particle_filter(
            &model(),
            &y,
            &FilterConfig::new(0, 1),
            &Backend::sequential()
        ),
        Err(Error::Config(_))
    ));
    let bad = [0.0, f64::NAN];
    assert!(run_particle_filter(
        &model(),
        &bad,
        &FilterConfig::new(8, 1),
        &Backend::sequential()
    )
    .is_err());
}

#[test]
fn streaming_digest_matches_recorded_trace() {
    let y = data(15, 26);
    let mut cfg = FilterConfig::new(256, 8);
    cfg.record_indices = true;
    let recorded = run_particle_filter(&model(), &y, &cfg, &Backend::sequential()).unwrap();
    cfg.record_indices = false;
    cfg.digest_indices = true;
    let streamed = run_particle_filter(&model(), &y, &cfg, &Backend::parallel(2).unwrap()).unwrap();
    assert!(streamed.resample_trace.is_none());
    assert_eq!(streamed.index_digest(), recorded.index_digest());
    assert!(streamed.index_digest().is_some());
}
