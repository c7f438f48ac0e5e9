//! Interception decision: where the ball will be after one movement
//! duration, and whether a timed motion to it may start now.
//!
//! The trigger condition is four gates, all required:
//! reachable intercept point, converged estimator, catchable ball speed at
//! arrival, and a plan that passes joint-speed validation.

use serde::{Deserialize, Serialize};

use crate::arm::{
    interval_count, inverse_kinematics, plan_trajectory_with, ArmGeometry, CartesianPose,
    Trajectory,
};
use crate::ekf::{forecast_final, NoiseConfig, StateEstimate};
use crate::hopf::HopfTuning;
use crate::pendulum::{ball_position, PendulumParams, PendulumState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterceptConfig {
    /// Commanded movement duration, s.
    pub t_move: f64,
    /// Catch succeeds if the gripper ends within this distance of the ball, m.
    pub catch_radius: f64,
    /// Highest ball speed at arrival that still counts as catchable, m/s.
    pub max_ball_speed_at_catch: f64,
    /// Trigger only once `trace(P)` is below this.
    pub covariance_gate: f64,
}

impl Default for InterceptConfig {
    fn default() -> Self {
        Self {
            t_move: 1.5,
            catch_radius: 0.05,
            max_ball_speed_at_catch: 0.8,
            covariance_gate: 1e-3,
        }
    }
}

impl InterceptConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("t_move", self.t_move),
            ("catch_radius", self.catch_radius),
            ("max_ball_speed_at_catch", self.max_ball_speed_at_catch),
            ("covariance_gate", self.covariance_gate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("intercept.{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GateReport {
    pub reachable: bool,
    pub converged: bool,
    pub catchable: bool,
    pub feasible: bool,
}

impl GateReport {
    pub fn all(&self) -> bool {
        self.reachable && self.converged && self.catchable && self.feasible
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterceptDecision {
    pub triggered: bool,
    pub intercept_point: CartesianPose,
    pub trigger_tick: u64,
    pub predicted_ball_state: PendulumState,
    pub gates: GateReport,
}

/// Forecast ticks covering one movement duration.
pub fn horizon_ticks(t_move: f64, period: f64) -> usize {
    interval_count(t_move, period)
}

/// Ball position and state one movement duration ahead.
pub fn propose_intercept(
    est: &StateEstimate,
    pend: &PendulumParams,
    cfg: &InterceptConfig,
    noise: &NoiseConfig,
) -> (CartesianPose, PendulumState) {
    let n = horizon_ticks(cfg.t_move, noise.period);
    let x = forecast_final(est, pend, noise, n);
    let state = PendulumState::new(x[0], x[1]);
    (ball_position(&state, pend), state)
}

/// Inputs shared by every gate evaluation in one run.
#[derive(Debug, Clone, Copy)]
pub struct GateContext<'a> {
    pub pendulum: &'a PendulumParams,
    pub intercept: &'a InterceptConfig,
    pub geometry: &'a ArmGeometry,
    pub tuning: &'a HopfTuning,
    /// Plan sample spacing, s.
    pub dt: f64,
}

/// Evaluates all gates and, when every one passes, returns the validated plan
/// from `start` to `point`. Plan validation runs only once the cheaper gates
/// pass; otherwise `feasible` reports false.
pub fn evaluate_gates(
    start: &CartesianPose,
    point: &CartesianPose,
    predicted: &PendulumState,
    est: &StateEstimate,
    ctx: &GateContext<'_>,
) -> (GateReport, Option<Trajectory>) {
    let mut gates = GateReport {
        reachable: inverse_kinematics(point, ctx.geometry).is_ok(),
        converged: est.trace() < ctx.intercept.covariance_gate,
        catchable: predicted.ball_speed(ctx.pendulum) <= ctx.intercept.max_ball_speed_at_catch,
        feasible: false,
    };
    if !(gates.reachable && gates.converged && gates.catchable) {
        return (gates, None);
    }
    match plan_trajectory_with(
        start,
        point,
        ctx.intercept.t_move,
        ctx.dt,
        ctx.geometry,
        ctx.tuning,
    ) {
        Ok(plan) => {
            gates.feasible = true;
            (gates, Some(plan))
        }
        Err(_) => (gates, None),
    }
}

pub fn check_condition(
    start: &CartesianPose,
    point: &CartesianPose,
    predicted: &PendulumState,
    est: &StateEstimate,
    ctx: &GateContext<'_>,
) -> bool {
    evaluate_gates(start, point, predicted, est, ctx).0.all()
}

/// Closed-ball success test.
pub fn judge_catch(ee: &CartesianPose, ball: &CartesianPose, cfg: &InterceptConfig) -> bool {
    ee.distance(ball) <= cfg.catch_radius
}
