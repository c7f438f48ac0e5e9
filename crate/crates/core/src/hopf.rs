//! Speed dynamics driven by a shifted Hopf oscillator.
//!
//! The speed variable `a` and an auxiliary `b` evolve on a limit cycle of
//! radius `R_h = sqrt(lambda / gamma)` centred at `(R_h, 0)`. Entered at the
//! origin, one revolution makes `a` rise from 0 to `2 R_h` and fall back to 0,
//! i.e. `a(t) = R_h (1 - cos(w t))`, and the distance covered in one period
//! `T` is exactly `R_h T`. Fitting `R_h = D / T` therefore makes the movement
//! time independent of the distance `D`.
//!
//! Three mutually exclusive regime neurons select which term of the speed
//! dynamics is active: rest (`init`), the oscillator (`hopf`), and a decay to
//! the final speed (`final`).

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum HopfError {
    #[error("movement distance must be positive, got {0}")]
    DegenerateDistance(f64),
    #[error("movement duration must be positive, got {0}")]
    InvalidDuration(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfParams {
    pub lambda: f64,
    pub gamma: f64,
    pub omega: f64,
    pub tau: f64,
    pub c1: f64,
    pub c2: f64,
    pub alpha_tc: f64,
}

impl HopfParams {
    /// Limit-cycle radius.
    pub fn radius(&self) -> f64 {
        radius(self.lambda, self.gamma)
    }

    /// Angular rate of the cycle in wall time, `omega / tau`.
    pub fn cycle_rate(&self) -> f64 {
        self.omega / self.tau
    }

    pub fn cycle_period(&self) -> f64 {
        TAU / self.cycle_rate()
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("lambda", self.lambda),
            ("gamma", self.gamma),
            ("omega", self.omega),
            ("tau", self.tau),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }
}

/// The parts of [`HopfParams`] that do not depend on the commanded motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HopfTuning {
    pub gamma: f64,
    pub tau: f64,
    pub c1: f64,
    pub c2: f64,
    pub alpha_tc: f64,
}

impl Default for HopfTuning {
    fn default() -> Self {
        Self {
            gamma: 2.25,
            tau: 1.0,
            c1: 5.0,
            c2: 5.0,
            alpha_tc: 0.0,
        }
    }
}

impl HopfTuning {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("gamma", self.gamma),
            ("tau", self.tau),
            ("c1", self.c1),
            ("c2", self.c2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("hopf.{name} must be positive and finite, got {v}"));
            }
        }
        if !self.alpha_tc.is_finite() {
            return Err("hopf.alpha_tc must be finite".into());
        }
        Ok(())
    }

    /// Oscillator parameters that cover `distance` in exactly one cycle of
    /// length `t_move`.
    pub fn fit(&self, distance: f64, t_move: f64) -> Result<HopfParams, HopfError> {
        if !(distance > 0.0) {
            return Err(HopfError::DegenerateDistance(distance));
        }
        if !(t_move > 0.0) {
            return Err(HopfError::InvalidDuration(t_move));
        }
        let r_h = distance / t_move;
        Ok(HopfParams {
            lambda: self.gamma * r_h * r_h,
            gamma: self.gamma,
            omega: TAU * self.tau / t_move,
            tau: self.tau,
            c1: self.c1,
            c2: self.c2,
            alpha_tc: self.alpha_tc,
        })
    }
}

/// [`HopfTuning::fit`] with unit time constant and default regime gains.
pub fn fit_isochrone(distance: f64, t_move: f64, gamma: f64) -> Result<HopfParams, HopfError> {
    HopfTuning {
        gamma,
        ..HopfTuning::default()
    }
    .fit(distance, t_move)
}

pub fn radius(lambda: f64, gamma: f64) -> f64 {
    (lambda / gamma).sqrt()
}

/// Distance covered after `t` seconds on the cycle entered at rest:
/// `R_h (t - sin(w t) / w)`.
pub fn arc_length(t: f64, speed_radius: f64, rate: f64) -> f64 {
    speed_radius * (t - (rate * t).sin() / rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpeedState {
    pub a: f64,
    pub b: f64,
}

impl SpeedState {
    pub const REST: SpeedState = SpeedState { a: 0.0, b: 0.0 };

    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }
}

/// Distance of the state from the cycle centre `(R_h, 0)`.
pub fn cycle_radius(s: &SpeedState, p: &HopfParams) -> f64 {
    (s.a - p.radius()).hypot(s.b)
}

pub fn hopf_derivative(s: &SpeedState, p: &HopfParams) -> (f64, f64) {
    let x = s.a - p.radius();
    let y = s.b;
    let sq = x * x + y * y;
    (
        p.lambda * x - p.omega * y - p.gamma * sq * x,
        p.omega * x + p.lambda * y - p.gamma * sq * y,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Init,
    Hopf,
    Final,
}

impl Regime {
    pub fn neurons(self) -> RegimeNeurons {
        let mut n = RegimeNeurons {
            u_init: 0.0,
            u_hopf: 0.0,
            u_final: 0.0,
        };
        match self {
            Regime::Init => n.u_init = 1.0,
            Regime::Hopf => n.u_hopf = 1.0,
            Regime::Final => n.u_final = 1.0,
        }
        n
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Init => "init",
            Regime::Hopf => "hopf",
            Regime::Final => "final",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeNeurons {
    pub u_init: f64,
    pub u_hopf: f64,
    pub u_final: f64,
}

impl RegimeNeurons {
    /// Exactly one neuron is 1 and the others are 0.
    pub fn is_exclusive(&self) -> bool {
        let v = [self.u_init, self.u_hopf, self.u_final];
        v.iter().all(|&u| u == 0.0 || u == 1.0) && v.iter().filter(|&&u| u == 1.0).count() == 1
    }
}

pub fn speed_dynamics_derivative(s: &SpeedState, n: &RegimeNeurons, p: &HopfParams) -> (f64, f64) {
    let (hx, hy) = hopf_derivative(s, p);
    let ui = n.u_init * n.u_init;
    let uh = n.u_hopf * n.u_hopf;
    let uf = n.u_final * n.u_final;
    let da = -p.c1 * ui * s.a + uh * hx - p.c2 * uf * (s.a * s.a - s.a * p.alpha_tc);
    let db = -p.c1 * ui * s.b + uh * hy - p.c2 * uf * s.b;
    (da / p.tau, db / p.tau)
}

/// One RK4 step. The neurons are held at their tick-start values.
pub fn step_speed(s: &SpeedState, n: &RegimeNeurons, p: &HopfParams, dt: f64) -> SpeedState {
    let f = |st: &SpeedState| speed_dynamics_derivative(st, n, p);
    let at = |k: (f64, f64), h: f64| SpeedState::new(s.a + h * k.0, s.b + h * k.1);
    let k1 = f(s);
    let k2 = f(&at(k1, dt / 2.0));
    let k3 = f(&at(k2, dt / 2.0));
    let k4 = f(&at(k3, dt));
    SpeedState::new(
        s.a + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        s.b + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// Regime FSM: `init -> hopf` on trigger, `hopf -> final` once a full cycle
/// has elapsed, `final` is absorbing.
pub fn regime_transition(regime: Regime, triggered: bool, elapsed: f64, t_move: f64) -> Regime {
    match regime {
        Regime::Init if triggered => Regime::Hopf,
        Regime::Hopf if elapsed >= t_move * (1.0 - 1e-12) => Regime::Final,
        r => r,
    }
}

/// Integrates the speed dynamics tick by tick for one commanded motion and
/// keeps the running distance.
#[derive(Debug, Clone)]
pub struct SpeedGenerator {
    params: HopfParams,
    t_move: f64,
    regime: Regime,
    state: SpeedState,
    elapsed: f64,
    ticks: u64,
    distance: f64,
}

impl SpeedGenerator {
    pub fn new(params: HopfParams, t_move: f64) -> Self {
        Self {
            params,
            t_move,
            regime: Regime::Init,
            state: SpeedState::REST,
            elapsed: 0.0,
            ticks: 0,
            distance: 0.0,
        }
    }

    pub fn trigger(&mut self) {
        self.regime = regime_transition(self.regime, true, self.elapsed, self.t_move);
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn state(&self) -> SpeedState {
        self.state
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    /// Distance integrated from the speed with the trapezoid rule.
    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn step(&mut self, dt: f64) -> SpeedState {
        let next = step_speed(&self.state, &self.regime.neurons(), &self.params, dt);
        self.distance += 0.5 * dt * (self.state.a + next.a);
        self.state = next;
        if self.regime == Regime::Hopf {
            self.ticks += 1;
            self.elapsed = self.ticks as f64 * dt;
        }
        self.regime = regime_transition(self.regime, false, self.elapsed, self.t_move);
        self.state
    }
}
