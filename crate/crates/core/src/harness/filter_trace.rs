//! Filter-only run: estimate the free swing for a number of ticks, then
//! forecast from the last estimate while the truth keeps running.

use std::io::Write;

use crate::ekf::{self, StateEstimate};
use crate::pendulum::{advance_truth, lateral_position, measure, PendulumState};

use super::config::ExperimentConfig;
use super::experiment::HarnessError;
use super::rng::NoiseStreams;

pub const FILTER_TRACE_HEADER: [&str; 12] = [
    "kind",
    "tick",
    "t",
    "phi_true",
    "phidot_true",
    "z",
    "phi_est",
    "phidot_est",
    "traceP",
    "gain_norm",
    "x_true",
    "x_est",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Filter,
    Forecast,
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Filter => "filter",
            RowKind::Forecast => "forecast",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterRecord {
    pub kind: RowKind,
    pub tick: u64,
    pub t: f64,
    pub truth: PendulumState,
    pub measurement: Option<f64>,
    pub estimate: Option<PendulumState>,
    pub trace_p: Option<f64>,
    pub gain_norm: Option<f64>,
    pub x_true: f64,
    pub x_est: Option<f64>,
}

/// `ticks` filter rows followed by `forecast` rows. Forecast rows carry the
/// mean forecast and its propagated covariance; they have no measurement.
pub fn run_filter_trace(
    cfg: &ExperimentConfig,
    ticks: u64,
    forecast: u64,
) -> Result<Vec<FilterRecord>, HarnessError> {
    cfg.validate()?;
    let pend = &cfg.pendulum.params;
    let noise = cfg.noise();
    let mut streams = NoiseStreams::new(cfg.seed);
    let mut truth = cfg.pendulum.initial;
    let mut est: Option<StateEstimate> = None;
    let mut rows = Vec::with_capacity((ticks + forecast) as usize);
    let row =
        |kind, k: u64, truth: PendulumState, z, est: Option<StateEstimate>, gain| FilterRecord {
            kind,
            tick: k,
            t: k as f64 * cfg.tick,
            truth,
            measurement: z,
            estimate: est.map(|e| PendulumState::new(e.phi(), e.phi_dot())),
            trace_p: est.map(|e| e.trace()),
            gain_norm: gain,
            x_true: lateral_position(&truth, pend),
            x_est: est.map(|e| pend.l * e.phi().sin()),
        };

    for k in 0..ticks {
        if k > 0 {
            truth = advance_truth(&truth, pend, cfg.tick, cfg.truth_substeps);
        }
        let z = measure(
            &truth,
            pend,
            &cfg.sensor,
            &mut streams.sensor_noise,
            &mut streams.sensor_dropout,
        );
        let mut gain = None;
        est = match (est, z) {
            (None, None) => None,
            (None, Some(z)) => Some(StateEstimate::from_measurement(z, pend)),
            (Some(e), z) => {
                let (next, step) = ekf::update(&e, z, pend, &noise)
                    .map_err(|source| HarnessError::Filter { tick: k, source })?;
                gain = Some(step.gain.norm());
                Some(next)
            }
        };
        rows.push(row(RowKind::Filter, k, truth, z, est, gain));
    }

    if let Some(mut e) = est {
        for k in ticks..ticks + forecast {
            truth = advance_truth(&truth, pend, cfg.tick, cfg.truth_substeps);
            e = ekf::predict(&e, pend, &noise);
            rows.push(row(RowKind::Forecast, k, truth, None, Some(e), None));
        }
    }
    Ok(rows)
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

pub fn write_filter_trace<W: Write>(rows: &[FilterRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FILTER_TRACE_HEADER)?;
    for r in rows {
        w.write_record([
            r.kind.as_str().to_string(),
            r.tick.to_string(),
            fmt(r.t),
            fmt(r.truth.phi),
            fmt(r.truth.phi_dot),
            fmt_opt(r.measurement),
            fmt_opt(r.estimate.map(|e| e.phi)),
            fmt_opt(r.estimate.map(|e| e.phi_dot)),
            fmt_opt(r.trace_p),
            fmt_opt(r.gain_norm),
            fmt(r.x_true),
            fmt_opt(r.x_est),
        ])?;
    }
    w.flush()?;
    Ok(())
}
