//! Pendulum interception with a predictive EKF and Hopf-timed arm motion.
//!
//! The pipeline per control tick: a noisy lateral sensor observes a damped
//! pendulum, an extended Kalman filter tracks `(phi, phi_dot)`, the planner
//! forecasts where the ball will be one movement duration ahead, and once the
//! interception condition holds a straight-line arm motion is executed whose
//! speed profile is one cycle of a Hopf oscillator. Because the oscillator is
//! fitted so one cycle covers the required distance, every motion takes the
//! same time regardless of how far the arm has to travel.

pub mod arm;
pub mod ekf;
pub mod harness;
pub mod hopf;
pub mod pendulum;
pub mod planner;

pub use arm::{
    forward_kinematics, inverse_kinematics, linear_path, plan_trajectory, ArmError, ArmGeometry,
    CartesianPose, JointAngles, JointLimit, Trajectory, TrajectorySample,
};
pub use ekf::{EkfError, FilterStep, NoiseConfig, StateEstimate};
pub use harness::config::{ConfigError, ExperimentConfig};
pub use harness::experiment::{run_experiment, Experiment, Mode, RunOutput, RunResult};
pub use harness::sweep::{run_sweep, Execution, SweepReport, SweepRow, SweepSummary};
pub use harness::trace::TickRecord;
pub use hopf::{
    fit_isochrone, HopfError, HopfParams, HopfTuning, Regime, RegimeNeurons, SpeedState,
};
pub use pendulum::{PendulumParams, PendulumState, SensorModel};
pub use planner::{GateReport, InterceptConfig, InterceptDecision};
