//! The stochastic trend plus noise (local level) model
//!
//! ```text
//! y_t = x_t + v_t,      v_t ~ N(0, sigma2)
//! x_t = x_{t-1} + e_t,  e_t ~ N(0, tau2)
//! ```
//!
//! with a data simulator, particle kernels for filtering and for learning
//! `(sigma2, tau2)`, and the exact Kalman filter used as a correctness oracle.

use crate::error::{Error, Result};
use crate::particles::{ParamDraw, SuffStat};
use crate::real::Real;
use crate::rng::RngStream;

/// Particle kernel with known parameters.
pub trait StateSpaceModel<T: Real>: Sync {
    fn sample_initial(&self, rng: &mut RngStream) -> T;
    /// Draws `x_t` given `x_{t-1}`.
    fn propagate(&self, x_prev: T, rng: &mut RngStream) -> T;
    fn log_likelihood(&self, y: T, x: T) -> T;
}

/// Particle kernel whose particles also carry parameter draws and
/// conjugate sufficient statistics.
pub trait LearnableModel<T: Real>: Sync {
    fn sample_initial(&self, rng: &mut RngStream) -> (T, ParamDraw<T>, SuffStat<T>);
    /// Advances one particle to time `t`: new state, updated statistics, fresh parameter draw.
    fn propagate(
        &self,
        x: &mut T,
        theta: &mut ParamDraw<T>,
        stats: &mut SuffStat<T>,
        y: T,
        rng: &mut RngStream,
    );
    fn log_likelihood(&self, y: T, x: T, theta: &ParamDraw<T>) -> T;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendNoiseModel<T> {
    pub sigma2: T,
    pub tau2: T,
    pub x0_mean: T,
    pub x0_var: T,
}

impl<T: Real> TrendNoiseModel<T> {
    pub fn new(sigma2: T, tau2: T, x0_mean: T, x0_var: T) -> Result<Self> {
        let m = Self {
            sigma2,
            tau2,
            x0_mean,
            x0_var,
        };
        m.validate()?;
        Ok(m)
    }

    /// `sigma2 = 1`, `tau2 = 0.1`, `x_0 ~ N(0, 10)`.
    pub fn benchmark() -> Self {
        Self {
            sigma2: T::one(),
            tau2: T::lit(0.1),
            x0_mean: T::zero(),
            x0_var: T::lit(10.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.sigma2, self.tau2, self.x0_var]
            .iter()
            .all(|v| v.is_finite() && *v >= T::zero())
            && self.x0_mean.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid trend-noise model {self:?}")))
        }
    }
}

#[inline]
fn normal_log_density<T: Real>(y: T, mean: T, var: T) -> T {
    let two_pi = T::lit(std::f64::consts::TAU);
    let r = y - mean;
    T::lit(-0.5) * (two_pi * var).ln() - r * r / (var + var)
}

/// Observation log density `log N(y; x, sigma2)`, checked for NaN inputs.
pub fn log_likelihood<T: Real>(model: &TrendNoiseModel<T>, y: T, x: T) -> Result<T> {
    if y.is_nan() || x.is_nan() || model.sigma2.is_nan() {
        return Err(Error::NonFinite("log_likelihood"));
    }
    Ok(normal_log_density(y, x, model.sigma2))
}

/// One state transition `x_prev + sqrt(tau2) z`.
pub fn propagate<T: Real>(model: &TrendNoiseModel<T>, x_prev: T, rng: &mut RngStream) -> T {
    <TrendNoiseModel<T> as StateSpaceModel<T>>::propagate(model, x_prev, rng)
}

impl<T: Real> StateSpaceModel<T> for TrendNoiseModel<T> {
    fn sample_initial(&self, rng: &mut RngStream) -> T {
        if self.x0_var == T::zero() {
            return self.x0_mean;
        }
        self.x0_mean + self.x0_var.sqrt() * T::lit(rng.normal())
    }

    #[inline]
    fn propagate(&self, x_prev: T, rng: &mut RngStream) -> T {
        if self.tau2 == T::zero() {
            return x_prev;
        }
        x_prev + self.tau2.sqrt() * T::lit(rng.normal())
    }

    #[inline]
    fn log_likelihood(&self, y: T, x: T) -> T {
        normal_log_density(y, x, self.sigma2)
    }
}

/// Simulates states and observations, drawing everything from one stream.
pub fn simulate<T: Real>(
    model: &TrendNoiseModel<T>,
    t_len: usize,
    mut stream: RngStream,
) -> (Vec<T>, Vec<T>) {
    let sd_obs = model.sigma2.sqrt();
    let mut x = model.sample_initial(&mut stream);
    let mut states = Vec::with_capacity(t_len);
    let mut obs = Vec::with_capacity(t_len);
    for _ in 0..t_len {
        x = model.propagate(x, &mut stream);
        let noise = T::lit(stream.normal());
        states.push(x);
        obs.push(x + sd_obs * noise);
    }
    (states, obs)
}

/// Local-level Kalman filter: filtered means and variances for each `t`.
pub fn kalman_filter<T: Real>(y: &[T], sigma2: T, tau2: T, m0: T, c0: T) -> (Vec<T>, Vec<T>) {
    let mut m = m0;
    let mut c = c0;
    let mut means = Vec::with_capacity(y.len());
    let mut vars = Vec::with_capacity(y.len());
    for &yt in y {
        let r = c + tau2;
        let gain = r / (r + sigma2);
        m = m + gain * (yt - m);
        c = (T::one() - gain) * r;
        means.push(m);
        vars.push(c);
    }
    (means, vars)
}

/// Normal prior on `x_0` and inverse-gamma priors (shape, scale) on both variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Priors<T> {
    pub x0_mean: T,
    pub x0_var: T,
    pub sigma2_shape: T,
    pub sigma2_scale: T,
    pub tau2_shape: T,
    pub tau2_scale: T,
}

impl<T: Real> Default for Priors<T> {
    /// `x_0 ~ N(0, 10)`, `sigma2 ~ IG(5, 4)`, `tau2 ~ IG(5, 0.4)`.
    fn default() -> Self {
        Self {
            x0_mean: T::zero(),
            x0_var: T::lit(10.0),
            sigma2_shape: T::lit(5.0),
            sigma2_scale: T::lit(4.0),
            tau2_shape: T::lit(5.0),
            tau2_scale: T::lit(0.4),
        }
    }
}

impl<T: Real> Priors<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.sigma2_shape,
            self.sigma2_scale,
            self.tau2_shape,
            self.tau2_scale,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > T::zero());
        if positive && self.x0_var >= T::zero() && self.x0_mean.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid priors {self:?}")))
        }
    }
}

/// Learns `(sigma2, tau2)` through per-particle conjugate statistics.
///
/// Each step a particle moves its state with its own `tau2`, adds half a
/// degree of freedom and half a squared residual to each inverse-gamma,
/// then redraws both variances from the updated inverse-gammas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendNoiseLearner<T> {
    pub priors: Priors<T>,
    /// When set, `tau2` stays at this value and only `sigma2` is learned.
    pub fixed_tau2: Option<T>,
}

impl<T: Real> Default for TrendNoiseLearner<T> {
    fn default() -> Self {
        Self {
            priors: Priors::default(),
            fixed_tau2: None,
        }
    }
}

impl<T: Real> TrendNoiseLearner<T> {
    pub fn new(priors: Priors<T>) -> Result<Self> {
        priors.validate()?;
        Ok(Self {
            priors,
            fixed_tau2: None,
        })
    }
}

impl<T: Real> LearnableModel<T> for TrendNoiseLearner<T> {
    fn sample_initial(&self, rng: &mut RngStream) -> (T, ParamDraw<T>, SuffStat<T>) {
        let p = &self.priors;
        let x = p.x0_mean + p.x0_var.sqrt() * T::lit(rng.normal());
        let sigma2 =
            T::lit(rng.inverse_gamma(p.sigma2_shape.to_f64_lossy(), p.sigma2_scale.to_f64_lossy()));
        let tau2 = match self.fixed_tau2 {
            Some(v) => v,
            None => {
                T::lit(rng.inverse_gamma(p.tau2_shape.to_f64_lossy(), p.tau2_scale.to_f64_lossy()))
            }
        };
        let stats = SuffStat {
            a_sigma: p.sigma2_shape,
            b_sigma: p.sigma2_scale,
            a_tau: p.tau2_shape,
            b_tau: p.tau2_scale,
        };
        (x, ParamDraw { sigma2, tau2 }, stats)
    }

    fn propagate(
        &self,
        x: &mut T,
        theta: &mut ParamDraw<T>,
        stats: &mut SuffStat<T>,
        y: T,
        rng: &mut RngStream,
    ) {
        let half = T::lit(0.5);
        let prev = *x;
        let next = prev + theta.tau2.sqrt() * T::lit(rng.normal());
        let obs_resid = y - next;
        let step = next - prev;
        stats.a_sigma = stats.a_sigma + half;
        stats.b_sigma = stats.b_sigma + half * obs_resid * obs_resid;
        stats.a_tau = stats.a_tau + half;
        stats.b_tau = stats.b_tau + half * step * step;
        theta.sigma2 =
            T::lit(rng.inverse_gamma(stats.a_sigma.to_f64_lossy(), stats.b_sigma.to_f64_lossy()));
        if self.fixed_tau2.is_none() {
            theta.tau2 =
                T::lit(rng.inverse_gamma(stats.a_tau.to_f64_lossy(), stats.b_tau.to_f64_lossy()));
        }
        *x = next;
    }

    #[inline]
    fn log_likelihood(&self, y: T, x: T, theta: &ParamDraw<T>) -> T {
        normal_log_density(y, x, theta.sigma2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn log_likelihood_closed_form() {
        let m = TrendNoiseModel::<f64>::benchmark();
        let base = -0.5 * TAU.ln();
        assert!((log_likelihood(&m, 0.3, 0.3).unwrap() - base).abs() < 1e-15);
        assert!((log_likelihood(&m, 1.3, 0.3).unwrap() - (base - 0.5)).abs() < 1e-15);
        assert!(log_likelihood(&m, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn single_precision_log_likelihood_matches_double() {
        let mut rng = RngStream::new(77, 0);
        for _ in 0..10_000 {
            let y = (rng.uniform::<f64>() - 0.5) * 20.0;
            let x = (rng.uniform::<f64>() - 0.5) * 20.0;
            let s2 = rng.uniform::<f64>() * 4.0 + 0.05;
            let (yf, xf, sf) = (y as f32, x as f32, s2 as f32);
            let single = normal_log_density(yf, xf, sf);
            let reference = normal_log_density(yf as f64, xf as f64, sf as f64);
            let ulp = (reference.abs() as f32 * f32::EPSILON).max(f32::MIN_POSITIVE) as f64;
            // Cancellation between the two terms can cost a few ulps of the larger term.
            let scale =
                (0.5 * (TAU * sf as f64).ln()).abs().max(reference.abs()) * f32::EPSILON as f64;
            assert!(
                (single as f64 - reference).abs() <= 8.0 * ulp.max(scale),
                "{y} {x} {s2}"
            );
        }
    }

    #[test]
    fn zero_variance_simulation_is_constant() {
        let m = TrendNoiseModel::new(0.0f64, 0.0, 3.5, 0.0).unwrap();
        let (x, y) = simulate(&m, 50, RngStream::new(1, 0));
        assert!(x.iter().chain(&y).all(|&v| v == 3.5));
    }

    #[test]
    fn simulation_moments() {
        let m = TrendNoiseModel::new(1.0f64, 0.1, 0.0, 0.0).unwrap();
        let t = 100_000;
        let (x, y) = simulate(&m, t, RngStream::new(2, 9));
        let var = |v: Vec<f64>| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        };
        let obs = var(y.iter().zip(&x).map(|(a, b)| a - b).collect());
        let mut incr = vec![x[0]];
        incr.extend(x.windows(2).map(|w| w[1] - w[0]));
        let inn = var(incr);
        assert!((obs - 1.0).abs() < 0.02, "obs var {obs}");
        assert!((inn - 0.1).abs() < 0.002, "innovation var {inn}");
        let again = simulate(&m, t, RngStream::new(2, 9));
        assert_eq!(again, (x, y));
    }

    #[test]
    fn propagate_moments_and_degenerate_case() {
        let still = TrendNoiseModel::new(1.0f64, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(propagate(&still, 2.25, &mut RngStream::new(1, 1)), 2.25);
        let m = TrendNoiseModel::new(1.0f64, 0.1, 0.0, 0.0).unwrap();
        let mut rng = RngStream::new(3, 3);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| propagate(&m, 0.0, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 0.1).abs() < 0.002, "var {var}");
        let mut a = RngStream::new(8, 8);
        let mut b = RngStream::new(8, 8);
        assert_eq!(propagate(&m, 1.0, &mut a), propagate(&m, 1.0, &mut b));
    }

    #[test]
    fn kalman_one_step_by_hand() {
        let (m, c) = kalman_filter(&[2.0f64], 1.0, 0.0, 0.0, 10.0);
        assert!((m[0] - 20.0 / 11.0).abs() < 1e-14);
        assert!((c[0] - 10.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn kalman_uninformative_observations() {
        let y: Vec<f64> = (0..100).map(|t| (t as f64).sin() * 5.0).collect();
        let (m, _) = kalman_filter(&y, 1e12, 0.1, 0.7, 10.0);
        assert!(m.iter().all(|v| (v - 0.7).abs() < 1e-6));
    }

    #[test]
    fn kalman_static_posterior_variance() {
        let (sigma2, c0) = (2.0f64, 10.0);
        let y = vec![1.5; 100];
        let (_, c) = kalman_filter(&y, sigma2, 0.0, 0.0, c0);
        let closed = c0 * sigma2 / (sigma2 + 100.0 * c0);
        assert!((c[99] - closed).abs() < 1e-9);
        assert!(c.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn learner_statistics_grow_by_half() {
        let learner = TrendNoiseLearner::<f64>::default();
        let mut rng = RngStream::new(4, 0);
        let (mut x, mut theta, mut stats) = learner.sample_initial(&mut rng);
        assert_eq!(stats.a_sigma, 5.0);
        assert_eq!(stats.b_tau, 0.4);
        let before = stats;
        learner.propagate(&mut x, &mut theta, &mut stats, 0.5, &mut rng);
        assert_eq!(stats.a_sigma, before.a_sigma + 0.5);
        assert_eq!(stats.a_tau, before.a_tau + 0.5);
        assert!(stats.b_sigma > before.b_sigma && stats.b_tau > before.b_tau);
        assert!(theta.is_valid() && stats.is_valid());
    }
}
