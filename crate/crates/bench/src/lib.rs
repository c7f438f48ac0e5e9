//! Fixtures shared by the benchmarks.

use isochron_core::ekf::update;
use isochron_core::pendulum::{advance_truth, lateral_position};
use isochron_core::{CartesianPose, ExperimentConfig, StateEstimate};

/// Filter state after two seconds of noise-free tracking of the default swing.
pub fn settled_estimate(cfg: &ExperimentConfig) -> StateEstimate {
    let pend = &cfg.pendulum.params;
    let noise = cfg.noise();
    let mut truth = cfg.pendulum.initial;
    let mut est = StateEstimate::from_measurement(lateral_position(&truth, pend), pend);
    for _ in 0..200 {
        truth = advance_truth(&truth, pend, cfg.tick, cfg.truth_substeps);
        est = update(&est, Some(lateral_position(&truth, pend)), pend, &noise)
            .unwrap()
            .0;
    }
    est
}

/// A 0.7 m tangential chord in the default swing plane.
pub fn default_chord() -> (CartesianPose, CartesianPose) {
    (
        CartesianPose::new(-0.3, 0.65, 0.34),
        CartesianPose::new(0.4, 0.65, 0.34),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use isochron_core::plan_trajectory;

    #[test]
    fn fixtures_are_usable() {
        let cfg = ExperimentConfig::default();
        assert!(settled_estimate(&cfg).trace() < cfg.intercept.covariance_gate);
        let (a, b) = default_chord();
        plan_trajectory(&a, &b, 1.5, 0.01, &cfg.arm.geometry).unwrap();
    }
}
