//! Three-joint arm: base yaw, shoulder pitch, elbow pitch.
//!
//! The shoulder and elbow form a planar two-link chain in the vertical plane
//! selected by the base yaw. Inverse kinematics is closed-form (law of
//! cosines) and always returns the elbow-down branch, so `inverse_kinematics`
//! is a function rather than a relation.

use std::f64::consts::PI;
use std::io::Write;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hopf::{arc_length, HopfParams, HopfTuning};

/// Slack on the reachable shell, metres.
pub const REACH_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CartesianPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianPose {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &CartesianPose) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for CartesianPose {
    type Output = CartesianPose;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for CartesianPose {
    type Output = CartesianPose;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for CartesianPose {
    type Output = CartesianPose;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointLimit {
    pub min: f64,
    pub max: f64,
}

impl JointLimit {
    pub fn symmetric_degrees(deg: f64) -> Self {
        let rad = deg.to_radians();
        Self {
            min: -rad,
            max: rad,
        }
    }

    pub fn contains(&self, angle: f64) -> bool {
        angle >= self.min && angle <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointAngles {
    pub theta0: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl JointAngles {
    pub const fn new(theta0: f64, theta1: f64, theta2: f64) -> Self {
        Self {
            theta0,
            theta1,
            theta2,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.theta0, self.theta1, self.theta2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmGeometry {
    /// Shoulder height above the base plane.
    pub base_height: f64,
    /// Upper arm.
    pub l1: f64,
    /// Forearm plus gripper.
    pub l2: f64,
    pub joint_limits: [JointLimit; 3],
    /// Per-joint speed cap checked during plan validation, rad/s.
    pub max_joint_speed: f64,
}

impl Default for ArmGeometry {
    fn default() -> Self {
        Self {
            base_height: 0.34,
            l1: 0.4,
            l2: 0.4,
            joint_limits: [
                JointLimit::symmetric_degrees(170.0),
                JointLimit::symmetric_degrees(120.0),
                JointLimit::symmetric_degrees(120.0),
            ],
            max_joint_speed: 1.7,
        }
    }
}

impl ArmGeometry {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.l1 > 0.0 && self.l2 > 0.0) {
            return Err(format!(
                "link lengths must be positive (l1={}, l2={})",
                self.l1, self.l2
            ));
        }
        if !self.base_height.is_finite() {
            return Err("base_height must be finite".into());
        }
        for (i, lim) in self.joint_limits.iter().enumerate() {
            if !(lim.min < lim.max) {
                return Err(format!(
                    "joint {i} limit min {} must be below max {}",
                    lim.min, lim.max
                ));
            }
        }
        if !(self.max_joint_speed > 0.0) {
            return Err("max_joint_speed must be positive".into());
        }
        Ok(())
    }

    pub fn shoulder(&self) -> CartesianPose {
        CartesianPose::new(0.0, 0.0, self.base_height)
    }

    pub fn min_reach(&self) -> f64 {
        (self.l1 - self.l2).abs() + REACH_MARGIN
    }

    pub fn max_reach(&self) -> f64 {
        self.l1 + self.l2 - REACH_MARGIN
    }

    /// Shoulder-to-target distance, the quantity the reach check is made on.
    pub fn shoulder_distance(&self, p: &CartesianPose) -> f64 {
        p.distance(&self.shoulder())
    }

    pub fn is_reachable(&self, p: &CartesianPose) -> bool {
        inverse_kinematics(p, self).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArmError {
    #[error("target at shoulder distance {distance:.6} m is outside the reachable shell [{min:.6}, {max:.6}] m")]
    Unreachable { distance: f64, min: f64, max: f64 },
    #[error("joint {joint} angle {angle:.6} rad is outside [{min:.6}, {max:.6}]")]
    JointLimitViolation {
        joint: usize,
        angle: f64,
        min: f64,
        max: f64,
    },
    #[error("joint {joint} needs {speed:.4} rad/s at t={t:.3} s, cap is {limit:.4} rad/s")]
    JointSpeedExceeded {
        joint: usize,
        speed: f64,
        limit: f64,
        t: f64,
    },
    #[error("path sample at z={z:.6} m goes below the floor")]
    BelowFloor { z: f64 },
    #[error("invalid timing: {0}")]
    InvalidTiming(String),
}

pub fn forward_kinematics(q: &JointAngles, g: &ArmGeometry) -> CartesianPose {
    let s1 = q.theta1;
    let s12 = q.theta1 + q.theta2;
    let r = g.l1 * s1.cos() + g.l2 * s12.cos();
    let z = g.base_height + g.l1 * s1.sin() + g.l2 * s12.sin();
    CartesianPose::new(r * q.theta0.cos(), r * q.theta0.sin(), z)
}

pub fn inverse_kinematics(
    target: &CartesianPose,
    g: &ArmGeometry,
) -> Result<JointAngles, ArmError> {
    let r = target.x.hypot(target.y);
    let dz = target.z - g.base_height;
    let d = r.hypot(dz);
    let full = g.l1 + g.l2;
    let (min, max) = (g.min_reach(), g.max_reach());
    // Full extension is admitted only when hit exactly.
    if !(d >= min && (d <= max || d == full)) {
        return Err(ArmError::Unreachable {
            distance: d,
            min,
            max,
        });
    }

    let theta0 = target.y.atan2(target.x);
    let cos_elbow = ((d * d - g.l1 * g.l1 - g.l2 * g.l2) / (2.0 * g.l1 * g.l2)).clamp(-1.0, 1.0);
    // Elbow-down: the elbow sits below the shoulder-target line, theta2 >= 0.
    let theta2 = cos_elbow.acos();
    let theta1 = dz.atan2(r) - (g.l2 * theta2.sin()).atan2(g.l1 + g.l2 * theta2.cos());

    let q = JointAngles::new(theta0, theta1, theta2);
    check_limits(&q, g)?;
    Ok(q)
}

fn check_limits(q: &JointAngles, g: &ArmGeometry) -> Result<(), ArmError> {
    for (joint, (angle, lim)) in q
        .as_array()
        .into_iter()
        .zip(g.joint_limits.iter())
        .enumerate()
    {
        if !lim.contains(angle) {
            return Err(ArmError::JointLimitViolation {
                joint,
                angle,
                min: lim.min,
                max: lim.max,
            });
        }
    }
    Ok(())
}

pub fn linear_path(start: &CartesianPose, goal: &CartesianPose, fraction: f64) -> CartesianPose {
    *start + (*goal - *start) * fraction
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub joints: JointAngles,
    pub pose: CartesianPose,
}

/// A validated, time-stamped arm motion. Sample `k` is commanded `k` ticks
/// after the motion starts; the last sample sits exactly on the goal.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub distance: f64,
    pub dt: f64,
    /// Oscillator fitted to cover `distance` in one cycle; `None` when the
    /// start already equals the goal.
    pub hopf: Option<HopfParams>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time from the first to the last sample.
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn goal(&self) -> CartesianPose {
        self.samples.last().map(|s| s.pose).unwrap_or_default()
    }

    /// Writes `t,theta0,theta1,theta2,x,y,z` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "theta0", "theta1", "theta2", "x", "y", "z"])?;
        for s in &self.samples {
            let q = s.joints;
            w.write_record(
                [
                    s.t, q.theta0, q.theta1, q.theta2, s.pose.x, s.pose.y, s.pose.z,
                ]
                .iter()
                .map(|v| format!("{v:.16e}")),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Number of intervals needed to cover `duration` at step `dt`.
pub fn interval_count(duration: f64, dt: f64) -> usize {
    // Absorb representation error so 1.5 / 0.01 counts as 150.
    ((duration / dt) * (1.0 - 1e-12)).ceil().max(0.0) as usize
}

pub fn plan_trajectory(
    start: &CartesianPose,
    goal: &CartesianPose,
    t_move: f64,
    dt: f64,
    g: &ArmGeometry,
) -> Result<Trajectory, ArmError> {
    plan_trajectory_with(start, goal, t_move, dt, g, &HopfTuning::default())
}

/// Plans a straight Cartesian move whose speed follows one Hopf cycle, and
/// validates every sample (reach, joint limits, floor, joint speed) before
/// returning. Nothing is returned unless the whole plan is executable.
pub fn plan_trajectory_with(
    start: &CartesianPose,
    goal: &CartesianPose,
    t_move: f64,
    dt: f64,
    g: &ArmGeometry,
    tuning: &HopfTuning,
) -> Result<Trajectory, ArmError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ArmError::InvalidTiming(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(t_move > 0.0 && t_move.is_finite()) {
        return Err(ArmError::InvalidTiming(format!(
            "t_move must be positive, got {t_move}"
        )));
    }

    let distance = start.distance(goal);
    let start_q = inverse_kinematics(start, g)?;
    if distance == 0.0 {
        return Ok(Trajectory {
            samples: vec![TrajectorySample {
                t: 0.0,
                joints: start_q,
                pose: *start,
            }],
            distance,
            dt,
            hopf: None,
        });
    }
    inverse_kinematics(goal, g)?;

    let hopf = tuning
        .fit(distance, t_move)
        .map_err(|e| ArmError::InvalidTiming(e.to_string()))?;
    let (speed_radius, rate) = (hopf.radius(), hopf.cycle_rate());

    let intervals = interval_count(t_move, dt);
    let mut samples = Vec::with_capacity(intervals + 1);
    for k in 0..=intervals {
        let t = (k as f64 * dt).min(t_move);
        let fraction = (arc_length(t, speed_radius, rate) / distance).clamp(0.0, 1.0);
        let pose = if k == intervals {
            *goal
        } else {
            linear_path(start, goal, fraction)
        };
        if pose.z < 0.0 {
            return Err(ArmError::BelowFloor { z: pose.z });
        }
        let joints = inverse_kinematics(&pose, g)?;
        samples.push(TrajectorySample { t, joints, pose });
    }

    for pair in samples.windows(2) {
        let step = pair[1].t - pair[0].t;
        if step <= 0.0 {
            continue;
        }
        let (a, b) = (pair[0].joints.as_array(), pair[1].joints.as_array());
        for joint in 0..3 {
            let mut delta = b[joint] - a[joint];
            if joint == 0 {
                delta = wrap_angle(delta);
            }
            let speed = delta.abs() / step;
            if speed > g.max_joint_speed {
                return Err(ArmError::JointSpeedExceeded {
                    joint,
                    speed,
                    limit: g.max_joint_speed,
                    t: pair[1].t,
                });
            }
        }
    }

    Ok(Trajectory {
        samples,
        distance,
        dt,
        hopf: Some(hopf),
    })
}

/// Maps an angle difference into (-pi, pi].
fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}
