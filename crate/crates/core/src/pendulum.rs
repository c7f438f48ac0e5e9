//! Ground-truth damped pendulum and the synthetic lateral-position sensor.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::arm::CartesianPose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PendulumParams {
    /// Gravitational acceleration, m/s^2.
    pub g: f64,
    /// String length, m.
    pub l: f64,
    /// Viscous damping, 1/s.
    pub alpha: f64,
    /// Pivot height above the arm base plane, m.
    pub pivot_height: f64,
    /// Lateral offset `y` of the swing plane from the arm base, m.
    pub plane_offset: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            g: 9.81,
            l: 1.93,
            alpha: 0.1,
            pivot_height: 2.23,
            plane_offset: 0.65,
        }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(format!("pendulum.g must be positive, got {}", self.g));
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(format!("pendulum.l must be positive, got {}", self.l));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(format!(
                "pendulum.alpha must be non-negative, got {}",
                self.alpha
            ));
        }
        if !(self.pivot_height >= self.l && self.pivot_height.is_finite()) {
            return Err(format!(
                "pendulum.pivot_height {} must be at least the string length {}",
                self.pivot_height, self.l
            ));
        }
        if !self.plane_offset.is_finite() {
            return Err("pendulum.plane_offset must be finite".into());
        }
        Ok(())
    }

    /// Small-angle period `2 pi sqrt(l / g)`.
    pub fn small_angle_period(&self) -> f64 {
        std::f64::consts::TAU * (self.l / self.g).sqrt()
    }

    pub fn pivot(&self) -> CartesianPose {
        CartesianPose::new(0.0, self.plane_offset, self.pivot_height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumState {
    pub phi: f64,
    pub phi_dot: f64,
}

impl PendulumState {
    pub const fn new(phi: f64, phi_dot: f64) -> Self {
        Self { phi, phi_dot }
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.phi_dot.is_finite()
    }

    /// Mechanical energy per unit mass, zero at rest.
    pub fn energy(&self, p: &PendulumParams) -> f64 {
        0.5 * p.l * p.l * self.phi_dot * self.phi_dot + p.g * p.l * (1.0 - self.phi.cos())
    }

    /// Speed of the bob along its arc, m/s.
    pub fn ball_speed(&self, p: &PendulumParams) -> f64 {
        (p.l * self.phi_dot).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorModel {
    /// Lateral measurement noise standard deviation, m.
    pub sigma_v: f64,
    /// Per-tick probability of no measurement.
    pub dropout_prob: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            sigma_v: 0.01,
            dropout_prob: 0.02,
        }
    }
}

impl SensorModel {
    pub fn noiseless() -> Self {
        Self {
            sigma_v: 0.0,
            dropout_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.sigma_v >= 0.0 && self.sigma_v.is_finite()) {
            return Err(format!(
                "sensor.sigma_v must be non-negative, got {}",
                self.sigma_v
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return Err(format!(
                "sensor.dropout_prob must be in [0, 1), got {}",
                self.dropout_prob
            ));
        }
        Ok(())
    }
}

/// `(dphi/dt, d^2phi/dt^2)` of the damped pendulum.
pub fn derivative(state: &PendulumState, params: &PendulumParams) -> (f64, f64) {
    (
        state.phi_dot,
        -(params.g / params.l) * state.phi.sin() - params.alpha * state.phi_dot,
    )
}

/// One classical RK4 step.
pub fn step_truth(state: &PendulumState, params: &PendulumParams, dt: f64) -> PendulumState {
    let at =
        |k: (f64, f64), h: f64| PendulumState::new(state.phi + h * k.0, state.phi_dot + h * k.1);
    let k1 = derivative(state, params);
    let k2 = derivative(&at(k1, dt / 2.0), params);
    let k3 = derivative(&at(k2, dt / 2.0), params);
    let k4 = derivative(&at(k3, dt), params);
    PendulumState::new(
        state.phi + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        state.phi_dot + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// Advances `dt` using `substeps` equal RK4 steps.
pub fn advance_truth(
    state: &PendulumState,
    params: &PendulumParams,
    dt: f64,
    substeps: usize,
) -> PendulumState {
    let h = dt / substeps as f64;
    (0..substeps).fold(*state, |s, _| step_truth(&s, params, h))
}

/// Ball centre in the arm frame. The pendulum swings in the plane
/// `y = plane_offset`, pivot at `x = 0`.
pub fn ball_position(state: &PendulumState, params: &PendulumParams) -> CartesianPose {
    CartesianPose::new(
        params.l * state.phi.sin(),
        params.plane_offset,
        params.pivot_height - params.l * state.phi.cos(),
    )
}

/// Noise-free lateral measurement `l sin(phi)`.
pub fn lateral_position(state: &PendulumState, params: &PendulumParams) -> f64 {
    params.l * state.phi.sin()
}

/// Samples the lateral sensor. The dropout stream is always advanced by one
/// draw; the noise stream only when a measurement is produced.
pub fn measure<N: Rng + ?Sized, D: Rng + ?Sized>(
    state: &PendulumState,
    params: &PendulumParams,
    sensor: &SensorModel,
    noise: &mut N,
    dropout: &mut D,
) -> Option<f64> {
    let u: f64 = dropout.random();
    if u < sensor.dropout_prob {
        return None;
    }
    let v: f64 = noise.sample(StandardNormal);
    Some(lateral_position(state, params) + sensor.sigma_v * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn swing_params(alpha: f64) -> PendulumParams {
        PendulumParams {
            g: 9.81,
            l: 1.93,
            alpha,
            pivot_height: 2.0,
            plane_offset: 0.65,
        }
    }

    #[test]
    fn derivative_examples() {
        let p = swing_params(0.1);
        assert_eq!(derivative(&PendulumState::new(0.0, 0.0), &p), (0.0, 0.0));

        let (d0, d1) = derivative(&PendulumState::new(FRAC_PI_2, 0.0), &swing_params(0.0));
        assert_eq!(d0, 0.0);
        assert_abs_diff_eq!(d1, -5.082_902, epsilon = 1e-6);

        assert_eq!(derivative(&PendulumState::new(0.0, 1.0), &p), (1.0, -0.1));
    }

    #[test]
    fn derivative_matches_energy_gradient() {
        // For alpha = 0: l^2 * d^2phi/dt^2 = -dV/dphi with V = g l (1 - cos phi).
        let p = swing_params(0.0);
        let h = 1e-6;
        for phi in [-2.0, -0.4, 0.3, FRAC_PI_2, 2.5] {
            let v = |x: f64| p.g * p.l * (1.0 - f64::cos(x));
            let grad = (v(phi + h) - v(phi - h)) / (2.0 * h);
            let (_, acc) = derivative(&PendulumState::new(phi, 0.0), &p);
            assert_abs_diff_eq!(acc, -grad / (p.l * p.l), epsilon = 1e-8);
        }
    }

    #[test]
    fn equilibrium_is_fixed() {
        let p = swing_params(0.1);
        let s = PendulumState::default();
        assert_eq!(step_truth(&s, &p, 0.01), s);
    }

    #[test]
    fn damping_dissipates_energy_each_step() {
        let p = swing_params(0.1);
        for s in [
            PendulumState::new(0.3, 0.0),
            PendulumState::new(-1.0, 2.0),
            PendulumState::new(0.0, -0.5),
        ] {
            let next = step_truth(&s, &p, 0.01);
            assert!(next.energy(&p) < s.energy(&p));
        }
    }

    #[test]
    fn small_angle_period() {
        let p = swing_params(0.0);
        let dt = 1e-4;
        let mut s = PendulumState::new(0.05, 0.0);
        let mut t = 0.0;
        let mut crossings = Vec::new();
        while crossings.len() < 2 {
            let next = step_truth(&s, &p, dt);
            // Downward crossing: phi goes from positive to non-positive.
            if s.phi > 0.0 && next.phi <= 0.0 {
                crossings.push(t + dt * s.phi / (s.phi - next.phi));
            }
            s = next;
            t += dt;
        }
        let period = crossings[1] - crossings[0];
        assert_abs_diff_eq!(period, 2.7869, epsilon = 1e-3);
        assert_abs_diff_eq!(period, p.small_angle_period(), epsilon = 1e-3);
    }

    #[test]
    fn ball_position_examples() {
        let p = swing_params(0.1);
        let y0 = p.plane_offset;
        let rest = ball_position(&PendulumState::new(0.0, 0.0), &p);
        assert_abs_diff_eq!(rest.x, 0.0);
        assert_eq!(rest.y, y0);
        assert_abs_diff_eq!(rest.z, 0.07, epsilon = 1e-12);

        let side = ball_position(&PendulumState::new(FRAC_PI_2, 0.0), &p);
        assert_abs_diff_eq!(side.x, 1.93, epsilon = 1e-15);
        assert_abs_diff_eq!(side.z, 2.0, epsilon = 1e-15);

        let b = ball_position(&PendulumState::new(0.1, 0.0), &p);
        assert_abs_diff_eq!(b.x, 0.192_678_5, epsilon = 1e-7);
        assert_abs_diff_eq!(b.z, 2.0 - 1.93 * 0.1f64.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(b.distance(&p.pivot()), p.l, epsilon = 1e-12);
    }

    #[test]
    fn exact_measurements_without_noise() {
        let p = swing_params(0.1);
        let sensor = SensorModel::noiseless();
        let mut n = ChaCha8Rng::seed_from_u64(1);
        let mut d = ChaCha8Rng::seed_from_u64(2);
        let z = measure(&PendulumState::new(0.0, 0.3), &p, &sensor, &mut n, &mut d);
        assert_eq!(z, Some(0.0));
        let z = measure(
            &PendulumState::new(FRAC_PI_2, 0.0),
            &p,
            &sensor,
            &mut n,
            &mut d,
        );
        assert_eq!(z, Some(1.93));
    }

    #[test]
    fn measurement_noise_statistics() {
        let p = swing_params(0.1);
        let sensor = SensorModel {
            sigma_v: 0.01,
            dropout_prob: 0.0,
        };
        let state = PendulumState::new(0.2, 0.0);
        let truth = lateral_position(&state, &p);
        let mut n = ChaCha8Rng::seed_from_u64(7);
        let mut d = ChaCha8Rng::seed_from_u64(8);
        let count = 100_000;
        let draws: Vec<f64> = (0..count)
            .map(|_| measure(&state, &p, &sensor, &mut n, &mut d).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / count as f64;
        let var = draws.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        assert!((mean - truth).abs() < 3.0 * 0.01 / (count as f64).sqrt());
        assert!((var.sqrt() - 0.01).abs() < 0.02 * 0.01);
    }

    #[test]
    fn dropout_rate() {
        let p = swing_params(0.1);
        let sensor = SensorModel {
            sigma_v: 0.01,
            dropout_prob: 0.25,
        };
        let mut n = ChaCha8Rng::seed_from_u64(3);
        let mut d = ChaCha8Rng::seed_from_u64(4);
        let count = 40_000;
        let dropped = (0..count)
            .filter(|_| measure(&PendulumState::default(), &p, &sensor, &mut n, &mut d).is_none())
            .count();
        let rate = dropped as f64 / count as f64;
        // 5 sigma of a Binomial(40000, 0.25) proportion.
        assert!((rate - 0.25).abs() < 5.0 * (0.25f64 * 0.75 / count as f64).sqrt());
    }

    #[test]
    fn validation() {
        assert!(PendulumParams::default().validate().is_ok());
        let bad = PendulumParams {
            pivot_height: 1.0,
            ..PendulumParams::default()
        };
        assert!(bad.validate().is_err());
        assert!(SensorModel {
            sigma_v: 0.0,
            dropout_prob: 1.0
        }
        .validate()
        .is_err());
    }
}
