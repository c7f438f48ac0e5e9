//! Extended Kalman filter for the damped pendulum.
//!
//! State is `(phi, phi_dot)`, measurement is the lateral ball position
//! `l sin(phi)`. The transition is a second-order Taylor step of the
//! continuous dynamics; process noise is an angular acceleration shaped by
//! `G_d = (T^2/2, T)`, so `Q = G_d G_d^T sigma_q^2`.

use nalgebra::{Matrix2, RowVector2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pendulum::PendulumParams;

pub type StateVector = Vector2<f64>;

/// Covariance used when bootstrapping from a first measurement.
pub const INITIAL_COVARIANCE: [f64; 2] = [0.1, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EkfError {
    #[error("innovation covariance {0} is not positive")]
    InnovationCovarianceSingular(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateEstimate {
    pub x_hat: StateVector,
    pub p: Matrix2<f64>,
}

impl StateEstimate {
    pub fn new(x_hat: StateVector, p: Matrix2<f64>) -> Self {
        Self { x_hat, p }
    }

    /// Angle from the first measurement, zero velocity, wide covariance.
    pub fn from_measurement(z: f64, params: &PendulumParams) -> Self {
        let phi = (z / params.l).clamp(-1.0, 1.0).asin();
        Self {
            x_hat: Vector2::new(phi, 0.0),
            p: Matrix2::from_diagonal(&Vector2::from(INITIAL_COVARIANCE)),
        }
    }

    pub fn phi(&self) -> f64 {
        self.x_hat[0]
    }

    pub fn phi_dot(&self) -> f64 {
        self.x_hat[1]
    }

    pub fn trace(&self) -> f64 {
        self.p.trace()
    }

    /// Eigenvalues of the (symmetric part of the) covariance, ascending.
    pub fn covariance_eigenvalues(&self) -> [f64; 2] {
        let a = self.p[(0, 0)];
        let d = self.p[(1, 1)];
        let b = 0.5 * (self.p[(0, 1)] + self.p[(1, 0)]);
        let mean = 0.5 * (a + d);
        let spread = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - spread, mean + spread]
    }

    pub fn asymmetry(&self) -> f64 {
        (self.p[(0, 1)] - self.p[(1, 0)]).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Process-noise standard deviation on angular velocity, rad/s.
    pub sigma_q: f64,
    /// Measurement noise variance, m^2.
    pub r_meas: f64,
    /// Filter sample time, s.
    pub period: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_q: 0.05,
            r_meas: 1e-4,
            period: 0.01,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.sigma_q >= 0.0 && self.sigma_q.is_finite()) {
            return Err(format!(
                "filter.sigma_q must be non-negative, got {}",
                self.sigma_q
            ));
        }
        if !(self.r_meas > 0.0 && self.r_meas.is_finite()) {
            return Err(format!(
                "filter.r_meas must be positive, got {}",
                self.r_meas
            ));
        }
        if !(self.period > 0.0) {
            return Err(format!(
                "filter period must be positive, got {}",
                self.period
            ));
        }
        Ok(())
    }
}

/// Per-tick filter diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterStep {
    /// Kalman gain for this tick's prior. On dropout ticks this is the gain a
    /// measurement would have received; it is not applied.
    pub gain: Vector2<f64>,
    /// Innovation, m. Zero when no measurement was used.
    pub residual: f64,
    pub measurement_used: bool,
}

pub fn f_discrete(x: &StateVector, params: &PendulumParams, period: f64) -> StateVector {
    let (phi, phi_dot) = (x[0], x[1]);
    let acc = -params.alpha * phi_dot - (params.g / params.l) * phi.sin();
    Vector2::new(
        phi + period * phi_dot + 0.5 * period * period * acc,
        phi_dot + period * acc,
    )
}

pub fn jacobian_a(x: &StateVector, params: &PendulumParams, period: f64) -> Matrix2<f64> {
    let c = x[0].cos();
    let gl = params.g / params.l;
    let t = period;
    Matrix2::new(
        1.0 - 0.5 * t * t * gl * c,
        t - 0.5 * t * t * params.alpha,
        -t * gl * c,
        1.0 - params.alpha * t,
    )
}

/// Derivative of the measurement `l sin(phi)`.
pub fn jacobian_c(x: &StateVector, params: &PendulumParams) -> RowVector2<f64> {
    RowVector2::new(params.l * x[0].cos(), 0.0)
}

pub fn measurement(x: &StateVector, params: &PendulumParams) -> f64 {
    params.l * x[0].sin()
}

pub fn build_gd(period: f64) -> Vector2<f64> {
    Vector2::new(0.5 * period * period, period)
}

pub fn build_q(period: f64, sigma_q: f64) -> Matrix2<f64> {
    let gd = build_gd(period);
    gd * gd.transpose() * (sigma_q * sigma_q)
}

fn symmetrize(p: Matrix2<f64>) -> Matrix2<f64> {
    (p + p.transpose()) * 0.5
}

pub fn predict(est: &StateEstimate, params: &PendulumParams, noise: &NoiseConfig) -> StateEstimate {
    let a = jacobian_a(&est.x_hat, params, noise.period);
    let q = build_q(noise.period, noise.sigma_q);
    StateEstimate {
        x_hat: f_discrete(&est.x_hat, params, noise.period),
        p: symmetrize(a * est.p * a.transpose() + q),
    }
}

fn gain(
    est: &StateEstimate,
    params: &PendulumParams,
    noise: &NoiseConfig,
) -> Result<(Vector2<f64>, RowVector2<f64>), EkfError> {
    let c = jacobian_c(&est.x_hat, params);
    let pct = est.p * c.transpose();
    let s = (c * pct)[(0, 0)] + noise.r_meas;
    if !(s > 0.0) {
        return Err(EkfError::InnovationCovarianceSingular(s));
    }
    Ok((pct / s, c))
}

pub fn correct(
    est: &StateEstimate,
    z: f64,
    params: &PendulumParams,
    noise: &NoiseConfig,
) -> Result<(StateEstimate, FilterStep), EkfError> {
    let (k, c) = gain(est, params, noise)?;
    let residual = z - measurement(&est.x_hat, params);
    let updated = StateEstimate {
        x_hat: est.x_hat + k * residual,
        p: symmetrize((Matrix2::identity() - k * c) * est.p),
    };
    Ok((
        updated,
        FilterStep {
            gain: k,
            residual,
            measurement_used: true,
        },
    ))
}

/// Predict, then correct if a measurement arrived this tick.
pub fn update(
    est: &StateEstimate,
    z: Option<f64>,
    params: &PendulumParams,
    noise: &NoiseConfig,
) -> Result<(StateEstimate, FilterStep), EkfError> {
    let prior = predict(est, params, noise);
    match z {
        Some(z) => correct(&prior, z, params, noise),
        None => {
            let gain = gain(&prior, params, noise).map_or(Vector2::zeros(), |(k, _)| k);
            Ok((
                prior,
                FilterStep {
                    gain,
                    residual: 0.0,
                    measurement_used: false,
                },
            ))
        }
    }
}

/// Mean forecast: `n` iterated transitions starting from the estimate.
pub fn forecast(
    est: &StateEstimate,
    params: &PendulumParams,
    noise: &NoiseConfig,
    n: usize,
) -> Vec<StateVector> {
    let mut x = est.x_hat;
    (0..n)
        .map(|_| {
            x = f_discrete(&x, params, noise.period);
            x
        })
        .collect()
}

/// Forecast endpoint only, without allocating the path.
pub fn forecast_final(
    est: &StateEstimate,
    params: &PendulumParams,
    noise: &NoiseConfig,
    n: usize,
) -> StateVector {
    (0..n).fold(est.x_hat, |x, _| f_discrete(&x, params, noise.period))
}
