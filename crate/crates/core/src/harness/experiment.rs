//! The control loop.
//!
//! Each tick advances the true pendulum, samples the sensor and updates the
//! filter. While `MonitoringReady`, the planner is asked every tick whether the
//! interception condition holds; on trigger a validated plan is fixed and the
//! loop switches to `CommandActive`, which replays one plan sample per tick.
//! After the last sample the catch is judged and the run is `Done`.
//!
//! Work per tick is bounded: one filter update, one forecast over the motion
//! horizon and at most one plan validation of the same length.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arm::{forward_kinematics, interval_count, CartesianPose, Trajectory};
use crate::ekf::{self, EkfError, NoiseConfig, StateEstimate};
use crate::hopf::SpeedGenerator;
use crate::pendulum::{advance_truth, ball_position, measure, PendulumState};
use crate::planner::{
    evaluate_gates, judge_catch, propose_intercept, GateContext, GateReport, InterceptDecision,
};

use super::config::{ConfigError, ExperimentConfig};
use super::rng::NoiseStreams;
use super::trace::TickRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    MonitoringReady,
    CommandActive,
    Done,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::MonitoringReady => "MonitoringReady",
            Mode::CommandActive => "CommandActive",
            Mode::Done => "Done",
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("filter failure at tick {tick}: {source}")]
    Filter {
        tick: u64,
        #[source]
        source: EkfError,
    },
    #[error("cannot place arm: {0}")]
    Placement(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Caught,
    Missed,
    NeverTriggered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub outcome: Outcome,
    pub triggered: bool,
    pub trigger_tick: Option<u64>,
    /// Trigger tick to plan-complete tick, s.
    pub movement_time: Option<f64>,
    /// Straight-line length of the executed motion, m.
    pub movement_distance: Option<f64>,
    pub catch_success: bool,
    /// Gripper-to-ball distance when the plan completed, m.
    pub final_distance: Option<f64>,
    /// RMS of `phi_est - phi_true` over all ticks with an estimate, rad.
    pub rms_est_error: f64,
    pub ticks: u64,
}

/// Gate evaluations, logged whenever the gate vector changes and on trigger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionEvent {
    pub tick: u64,
    pub point: CartesianPose,
    pub gates: GateReport,
    pub triggered: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: RunResult,
    pub decision: Option<InterceptDecision>,
    /// The executed motion plan, if the run triggered.
    pub plan: Option<Trajectory>,
    pub trace: Vec<TickRecord>,
    pub events: Vec<DecisionEvent>,
}

struct Motion {
    decision: InterceptDecision,
    plan: Trajectory,
    start_tick: u64,
    speed: Option<SpeedGenerator>,
}

/// Tick-by-tick driver; [`run_experiment`] runs it to completion.
pub struct Experiment {
    cfg: ExperimentConfig,
    noise: NoiseConfig,
    streams: NoiseStreams,
    tick: u64,
    max_ticks: u64,
    truth: PendulumState,
    estimate: Option<StateEstimate>,
    mode: Mode,
    ee: CartesianPose,
    motion: Option<Motion>,
    events: Vec<DecisionEvent>,
    last_gates: Option<GateReport>,
    err_sq: f64,
    err_n: u64,
    result: Option<RunResult>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(Self {
            noise: cfg.noise(),
            streams: NoiseStreams::new(cfg.seed),
            tick: 0,
            max_ticks: interval_count(cfg.duration_max, cfg.tick) as u64,
            truth: cfg.pendulum.initial,
            estimate: None,
            mode: Mode::MonitoringReady,
            ee: forward_kinematics(&cfg.arm.home, &cfg.arm.geometry),
            motion: None,
            events: Vec::new(),
            last_gates: None,
            err_sq: 0.0,
            err_n: 0,
            result: None,
            cfg,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn result(&self) -> Option<&RunResult> {
        self.result.as_ref()
    }

    pub fn estimate(&self) -> Option<&StateEstimate> {
        self.estimate.as_ref()
    }

    pub fn decision(&self) -> Option<InterceptDecision> {
        self.motion.as_ref().map(|m| m.decision)
    }

    pub fn events(&self) -> &[DecisionEvent] {
        &self.events
    }

    /// Runs one control tick. Returns `None` once the run is finished.
    pub fn step(&mut self) -> Result<Option<TickRecord>, HarnessError> {
        if self.mode == Mode::Done {
            return Ok(None);
        }
        let k = self.tick;
        let cfg = &self.cfg;
        let pend = &cfg.pendulum.params;

        if k > 0 {
            self.truth = advance_truth(&self.truth, pend, cfg.tick, cfg.truth_substeps);
        }
        let z = measure(
            &self.truth,
            pend,
            &cfg.sensor,
            &mut self.streams.sensor_noise,
            &mut self.streams.sensor_dropout,
        );

        let mut gain_norm = None;
        self.estimate = match (self.estimate, z) {
            (None, None) => None,
            (None, Some(z)) => Some(StateEstimate::from_measurement(z, pend)),
            (Some(est), z) => {
                let (next, step) = ekf::update(&est, z, pend, &self.noise)
                    .map_err(|source| HarnessError::Filter { tick: k, source })?;
                gain_norm = Some(step.gain.norm());
                Some(next)
            }
        };
        if let Some(est) = &self.estimate {
            let e = est.phi() - self.truth.phi;
            self.err_sq += e * e;
            self.err_n += 1;
        }

        let ball = ball_position(&self.truth, pend);
        match self.mode {
            Mode::MonitoringReady => self.monitor(k, ball),
            Mode::CommandActive => self.command(k, ball),
            Mode::Done => unreachable!(),
        }

        let speed = self
            .motion
            .as_ref()
            .and_then(|m| m.speed.as_ref())
            .map_or(0.0, |g| g.state().a);
        let record = TickRecord {
            tick: k,
            t: k as f64 * self.cfg.tick,
            truth: self.truth,
            measurement: z,
            estimate: self
                .estimate
                .map(|e| PendulumState::new(e.phi(), e.phi_dot())),
            trace_p: self.estimate.map(|e| e.trace()),
            gain_norm,
            mode: self.mode,
            speed,
            ee: self.ee,
            ball,
        };
        self.tick += 1;
        Ok(Some(record))
    }

    fn monitor(&mut self, k: u64, ball: CartesianPose) {
        if let Some(est) = self.estimate {
            let cfg = &self.cfg;
            let (point, predicted) =
                propose_intercept(&est, &cfg.pendulum.params, &cfg.intercept, &self.noise);
            let ctx = GateContext {
                pendulum: &cfg.pendulum.params,
                intercept: &cfg.intercept,
                geometry: &cfg.arm.geometry,
                tuning: &cfg.hopf,
                dt: cfg.tick,
            };
            let (gates, plan) = evaluate_gates(&self.ee, &point, &predicted, &est, &ctx);
            let triggered = plan.is_some();
            if self.last_gates != Some(gates) || triggered {
                self.events.push(DecisionEvent {
                    tick: k,
                    point,
                    gates,
                    triggered,
                });
                self.last_gates = Some(gates);
            }
            if let Some(plan) = plan {
                let latency = match cfg.latency_jitter_ticks {
                    0 => 0,
                    j => self.streams.trigger_latency.random_range(0..=j) as u64,
                };
                let speed = plan
                    .hopf
                    .map(|p| SpeedGenerator::new(p, cfg.intercept.t_move));
                self.motion = Some(Motion {
                    decision: InterceptDecision {
                        triggered: true,
                        intercept_point: point,
                        trigger_tick: k,
                        predicted_ball_state: predicted,
                        gates,
                    },
                    plan,
                    start_tick: k + latency,
                    speed,
                });
                self.mode = Mode::CommandActive;
                if latency == 0 {
                    self.begin_motion(k, ball);
                }
                return;
            }
        }
        if k >= self.max_ticks {
            self.finish(k, None);
        }
    }

    fn begin_motion(&mut self, k: u64, ball: CartesianPose) {
        let motion = self.motion.as_mut().expect("motion planned");
        if let Some(g) = motion.speed.as_mut() {
            g.trigger();
        }
        self.ee = motion.plan.samples[0].pose;
        if motion.plan.len() == 1 {
            self.finish(k, Some(ball));
        }
    }

    fn command(&mut self, k: u64, ball: CartesianPose) {
        let motion = self.motion.as_mut().expect("motion planned");
        if k < motion.start_tick {
            return;
        }
        if k == motion.start_tick {
            self.begin_motion(k, ball);
            return;
        }
        let j = (k - motion.start_tick) as usize;
        if let Some(g) = motion.speed.as_mut() {
            g.step(self.cfg.tick);
        }
        self.ee = motion.plan.samples[j].pose;
        if j + 1 == motion.plan.len() {
            self.finish(k, Some(ball));
        }
    }

    fn finish(&mut self, k: u64, ball: Option<CartesianPose>) {
        let rms = if self.err_n > 0 {
            (self.err_sq / self.err_n as f64).sqrt()
        } else {
            0.0
        };
        let result = match (&self.motion, ball) {
            (Some(m), Some(ball)) => {
                let caught = judge_catch(&self.ee, &ball, &self.cfg.intercept);
                RunResult {
                    outcome: if caught {
                        Outcome::Caught
                    } else {
                        Outcome::Missed
                    },
                    triggered: true,
                    trigger_tick: Some(m.decision.trigger_tick),
                    movement_time: Some((k - m.decision.trigger_tick) as f64 * self.cfg.tick),
                    movement_distance: Some(m.plan.distance),
                    catch_success: caught,
                    final_distance: Some(self.ee.distance(&ball)),
                    rms_est_error: rms,
                    ticks: k + 1,
                }
            }
            _ => RunResult {
                outcome: Outcome::NeverTriggered,
                triggered: false,
                trigger_tick: None,
                movement_time: None,
                movement_distance: None,
                catch_success: false,
                final_distance: None,
                rms_est_error: rms,
                ticks: k + 1,
            },
        };
        self.result = Some(result);
        self.mode = Mode::Done;
    }

    pub fn into_output(self, trace: Vec<TickRecord>) -> Option<RunOutput> {
        let decision = self.decision();
        Some(RunOutput {
            result: self.result?,
            decision,
            plan: self.motion.map(|m| m.plan),
            trace,
            events: self.events,
        })
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let mut exp = Experiment::new(cfg.clone())?;
    let mut trace = Vec::new();
    while let Some(record) = exp.step()? {
        trace.push(record);
    }
    Ok(exp.into_output(trace).expect("finished run has a result"))
}
