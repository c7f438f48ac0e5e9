//! Per-tick trace rows and their CSV form.

use std::io::Write;

use crate::arm::CartesianPose;
use crate::pendulum::PendulumState;

use super::experiment::Mode;

pub const TRACE_HEADER: [&str; 17] = [
    "tick",
    "t",
    "phi_true",
    "phidot_true",
    "z",
    "phi_est",
    "phidot_est",
    "traceP",
    "gain_norm",
    "mode",
    "a",
    "ee_x",
    "ee_y",
    "ee_z",
    "ball_x",
    "ball_y",
    "ball_z",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord {
    pub tick: u64,
    pub t: f64,
    pub truth: PendulumState,
    pub measurement: Option<f64>,
    /// `None` until the filter has been bootstrapped from a measurement.
    pub estimate: Option<PendulumState>,
    pub trace_p: Option<f64>,
    pub gain_norm: Option<f64>,
    pub mode: Mode,
    pub speed: f64,
    pub ee: CartesianPose,
    pub ball: CartesianPose,
}

/// 17 significant digits: enough to recover every `f64` bit for bit.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

impl TickRecord {
    pub fn fields(&self) -> [String; 17] {
        [
            self.tick.to_string(),
            fmt(self.t),
            fmt(self.truth.phi),
            fmt(self.truth.phi_dot),
            fmt_opt(self.measurement),
            fmt_opt(self.estimate.map(|e| e.phi)),
            fmt_opt(self.estimate.map(|e| e.phi_dot)),
            fmt_opt(self.trace_p),
            fmt_opt(self.gain_norm),
            self.mode.as_str().to_string(),
            fmt(self.speed),
            fmt(self.ee.x),
            fmt(self.ee.y),
            fmt(self.ee.z),
            fmt(self.ball.x),
            fmt(self.ball.y),
            fmt(self.ball.z),
        ]
    }
}

pub fn write_trace<W: Write>(records: &[TickRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}
