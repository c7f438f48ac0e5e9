//! Seeded batches over (seed, movement distance).
//!
//! A movement distance `D` is realized by parking the arm `D` metres from the
//! nominal intercept point, along the swing line toward its centre. The
//! nominal intercept point is the first swing apex of the noise-free
//! pendulum at or after one movement duration.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arm::{interval_count, inverse_kinematics, CartesianPose, JointAngles};
use crate::pendulum::{advance_truth, ball_position};

use super::config::ExperimentConfig;
use super::experiment::{run_experiment, HarnessError, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

/// Ball position at the first turning point of the true swing at or after
/// `t_move`. A ball at rest turns everywhere, so its rest position is used.
pub fn nominal_intercept(cfg: &ExperimentConfig) -> Result<CartesianPose, HarnessError> {
    let pend = &cfg.pendulum.params;
    let start = interval_count(cfg.intercept.t_move, cfg.tick);
    let limit = start.max(interval_count(cfg.duration_max, cfg.tick) + start);
    let mut state = cfg.pendulum.initial;
    for _ in 0..start {
        state = advance_truth(&state, pend, cfg.tick, cfg.truth_substeps);
    }
    for _ in start..=limit {
        let next = advance_truth(&state, pend, cfg.tick, cfg.truth_substeps);
        if state.phi_dot == 0.0 {
            return Ok(ball_position(&state, pend));
        }
        if state.phi_dot.signum() != next.phi_dot.signum() {
            let apex = if state.phi_dot.abs() <= next.phi_dot.abs() {
                state
            } else {
                next
            };
            return Ok(ball_position(&apex, pend));
        }
        state = next;
    }
    Err(HarnessError::Placement(
        "pendulum never turns within duration_max".into(),
    ))
}

/// Home joint angles placing the gripper `distance` from the nominal
/// intercept point.
pub fn home_for_distance(
    cfg: &ExperimentConfig,
    distance: f64,
) -> Result<JointAngles, HarnessError> {
    let target = nominal_intercept(cfg)?;
    let toward_centre = if target.x > 0.0 { -1.0 } else { 1.0 };
    let home = target + CartesianPose::new(toward_centre * distance, 0.0, 0.0);
    inverse_kinematics(&home, &cfg.arm.geometry)
        .map_err(|e| HarnessError::Placement(format!("home for distance {distance} m: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub distance: f64,
    pub result: Result<RunResult, String>,
}

impl SweepRow {
    pub fn caught(&self) -> bool {
        self.result.as_ref().is_ok_and(|r| r.catch_success)
    }
}

/// Aggregate written as the machine-readable sweep summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Over successful runs, s.
    pub movement_time_mean: f64,
    pub movement_time_std: f64,
    /// Over runs that completed, rad.
    pub rms_est_error_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

pub const ROWS_HEADER: [&str; 9] = [
    "seed",
    "distance",
    "outcome",
    "trigger_tick",
    "movement_time",
    "movement_distance",
    "final_distance",
    "rms_est_error",
    "error",
];

impl SweepReport {
    /// One CSV line per cell; fields that do not apply are empty.
    pub fn write_rows_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let f = |v: Option<f64>| v.map(|v| format!("{v:.16e}")).unwrap_or_default();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(ROWS_HEADER)?;
        for row in &self.rows {
            let mut rec = vec![row.seed.to_string(), format!("{:.16e}", row.distance)];
            match &row.result {
                Ok(r) => rec.extend([
                    format!("{:?}", r.outcome),
                    r.trigger_tick.map(|t| t.to_string()).unwrap_or_default(),
                    f(r.movement_time),
                    f(r.movement_distance),
                    f(r.final_distance),
                    f(Some(r.rms_est_error)),
                    String::new(),
                ]),
                Err(e) => rec.extend([
                    "Error".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.clone(),
                ]),
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(rows: &[SweepRow]) -> SweepSummary {
    let successes = rows.iter().filter(|r| r.caught()).count();
    let times: Vec<f64> = rows
        .iter()
        .filter(|r| r.caught())
        .filter_map(|r| r.result.as_ref().ok()?.movement_time)
        .collect();
    let errors: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok().map(|r| r.rms_est_error))
        .collect();
    let (movement_time_mean, movement_time_std) = mean_std(&times);
    SweepSummary {
        runs: rows.len(),
        successes,
        success_rate: if rows.is_empty() {
            0.0
        } else {
            successes as f64 / rows.len() as f64
        },
        movement_time_mean,
        movement_time_std,
        rms_est_error_mean: mean_std(&errors).0,
    }
}

fn run_cell(base: &ExperimentConfig, seed: u64, distance: f64) -> SweepRow {
    let result = (|| {
        let mut cfg = base.clone();
        cfg.seed = seed;
        cfg.arm.home = home_for_distance(&cfg, distance)?;
        run_experiment(&cfg).map(|out| out.result)
    })()
    .map_err(|e| e.to_string());
    SweepRow {
        seed,
        distance,
        result,
    }
}

/// Runs every (seed, distance) pair. Rows come back ordered by seed, then
/// distance, whichever execution mode is used; a failing cell becomes an
/// error row.
pub fn run_sweep(
    base: &ExperimentConfig,
    seeds: &[u64],
    distances: &[f64],
    execution: Execution,
) -> Result<SweepReport, HarnessError> {
    base.validate()?;
    if seeds.is_empty() || distances.is_empty() {
        return Err(HarnessError::Placement(
            "sweep needs at least one seed and one distance".into(),
        ));
    }
    let cells: Vec<(u64, f64)> = seeds
        .iter()
        .flat_map(|&s| distances.iter().map(move |&d| (s, d)))
        .collect();
    let rows: Vec<SweepRow> = match execution {
        Execution::Sequential => cells.iter().map(|&(s, d)| run_cell(base, s, d)).collect(),
        Execution::Parallel => cells
            .par_iter()
            .map(|&(s, d)| run_cell(base, s, d))
            .collect(),
    };
    let summary = summarize(&rows);
    Ok(SweepReport { rows, summary })
}
