//! Experiment configuration.
//!
//! Stored as JSON. Every field has a default, so a file only needs the keys it
//! overrides; unknown keys are rejected. Schema with defaults:
//!
//! ```json
//! {
//!   "seed": 42,
//!   "tick": 0.01,                 // control period, s, within [0.001, 0.015]
//!   "duration_max": 20.0,         // give up if nothing triggered by then, s
//!   "truth_substeps": 4,          // RK4 substeps per tick for the true pendulum
//!   "latency_jitter_ticks": 0,    // uniform extra delay between trigger and motion start
//!   "pendulum": {
//!     "params": { "g": 9.81, "l": 1.93, "alpha": 0.1, "pivot_height": 2.23, "plane_offset": 0.65 },
//!     "initial": { "phi": ..., "phi_dot": ... }
//!   },
//!   "sensor": { "sigma_v": 0.01, "dropout_prob": 0.02 },
//!   "filter": { "sigma_q": 0.05, "r_meas": 0.0001 },
//!   "hopf": { "gamma": 2.25, "tau": 1.0, "c1": 5.0, "c2": 5.0, "alpha_tc": 0.0 },
//!   "intercept": { "t_move": 1.5, "catch_radius": 0.05, "max_ball_speed_at_catch": 0.8, "covariance_gate": 0.001 },
//!   "arm": {
//!     "geometry": { "base_height": 0.34, "l1": 0.4, "l2": 0.4,
//!                   "joint_limits": [{"min": -2.967, "max": 2.967}, ...], "max_joint_speed": 1.7 },
//!     "home": { "theta0": ..., "theta1": ..., "theta2": ... }
//!   }
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arm::{forward_kinematics, inverse_kinematics, ArmGeometry, JointAngles};
use crate::ekf::NoiseConfig;
use crate::hopf::HopfTuning;
use crate::pendulum::{PendulumParams, PendulumState, SensorModel};
use crate::planner::InterceptConfig;

pub const MIN_TICK: f64 = 0.001;
pub const MAX_TICK: f64 = 0.015;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PendulumConfig {
    pub params: PendulumParams,
    pub initial: PendulumState,
}

impl Default for PendulumConfig {
    fn default() -> Self {
        Self {
            params: PendulumParams::default(),
            initial: DEFAULT_INITIAL_STATE,
        }
    }
}

/// Released mid-swing so that, once the filter settles, the ball is forecast
/// to arrive near the far apex.
pub const DEFAULT_INITIAL_STATE: PendulumState = PendulumState::new(-0.19, -0.275);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub sigma_q: f64,
    pub r_meas: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let n = NoiseConfig::default();
        Self {
            sigma_q: n.sigma_q,
            r_meas: n.r_meas,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmConfig {
    pub geometry: ArmGeometry,
    pub home: JointAngles,
}

impl Default for ArmConfig {
    fn default() -> Self {
        Self {
            geometry: ArmGeometry::default(),
            home: DEFAULT_HOME,
        }
    }
}

/// Gripper 0.70 m from the default nominal intercept point, toward the swing
/// centre.
pub const DEFAULT_HOME: JointAngles =
    JointAngles::new(1.999795275817485, -0.4623219729125692, 0.9315726559805755);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub tick: f64,
    pub duration_max: f64,
    pub truth_substeps: usize,
    pub latency_jitter_ticks: u32,
    pub pendulum: PendulumConfig,
    pub sensor: SensorModel,
    pub filter: FilterConfig,
    pub hopf: HopfTuning,
    pub intercept: InterceptConfig,
    pub arm: ArmConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            tick: 0.01,
            duration_max: 20.0,
            truth_substeps: 4,
            latency_jitter_ticks: 0,
            pendulum: PendulumConfig::default(),
            sensor: SensorModel::default(),
            filter: FilterConfig::default(),
            hopf: HopfTuning::default(),
            intercept: InterceptConfig::default(),
            arm: ArmConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn noise(&self) -> NoiseConfig {
        NoiseConfig {
            sigma_q: self.filter.sigma_q,
            r_meas: self.filter.r_meas,
            period: self.tick,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = ConfigError::Invalid;
        if !(MIN_TICK..=MAX_TICK).contains(&self.tick) {
            return Err(invalid(format!(
                "tick {} s is outside [{MIN_TICK}, {MAX_TICK}] s",
                self.tick
            )));
        }
        if !(self.duration_max > 0.0 && self.duration_max.is_finite()) {
            return Err(invalid(format!(
                "duration_max must be positive, got {}",
                self.duration_max
            )));
        }
        if self.truth_substeps == 0 {
            return Err(invalid("truth_substeps must be at least 1".into()));
        }
        self.pendulum.params.validate().map_err(invalid)?;
        if !self.pendulum.initial.is_finite() {
            return Err(invalid("pendulum.initial must be finite".into()));
        }
        self.sensor.validate().map_err(invalid)?;
        self.noise().validate().map_err(invalid)?;
        self.hopf.validate().map_err(invalid)?;
        self.intercept.validate().map_err(invalid)?;
        self.arm.geometry.validate().map_err(invalid)?;
        let g = &self.arm.geometry;
        for (i, (angle, lim)) in self
            .arm
            .home
            .as_array()
            .into_iter()
            .zip(g.joint_limits.iter())
            .enumerate()
        {
            if !lim.contains(angle) {
                return Err(invalid(format!(
                    "arm.home joint {i} angle {angle} is outside its limits"
                )));
            }
        }
        let home = forward_kinematics(&self.arm.home, g);
        inverse_kinematics(&home, g).map_err(|e| invalid(format!("arm.home: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_json(&cfg.to_json_pretty()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg =
            ExperimentConfig::from_json(r#"{"seed": 7, "sensor": {"sigma_v": 0.02}}"#).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.sensor.sigma_v, 0.02);
        assert_eq!(cfg.sensor.dropout_prob, SensorModel::default().dropout_prob);
        assert_eq!(cfg.tick, 0.01);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_json(r#"{"sede": 7}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "{err}");
        let err = ExperimentConfig::from_json(r#"{"sensor": {"sigma": 0.1}}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "{err}");
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        for text in [
            r#"{"tick": 0.02}"#,
            r#"{"tick": 0.0005}"#,
            r#"{"sensor": {"dropout_prob": 1.0}}"#,
            r#"{"filter": {"r_meas": 0.0}}"#,
            r#"{"pendulum": {"params": {"l": -1.0}}}"#,
            r#"{"intercept": {"t_move": 0.0}}"#,
            r#"{"hopf": {"gamma": 0.0}}"#,
            r#"{"arm": {"home": {"theta0": 0.0, "theta1": 3.0, "theta2": 0.0}}}"#,
        ] {
            let err = ExperimentConfig::from_json(text).unwrap_err();
            assert!(matches!(err, ConfigError::Invalid(_)), "{text}: {err}");
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = ExperimentConfig::load("/nonexistent/config.json").unwrap_err();
        assert!(matches!(err, ConfigError::Io { .. }));
    }
}
