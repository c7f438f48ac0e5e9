use isochron_core::hopf::{arc_length, cycle_radius, hopf_derivative, SpeedGenerator, SpeedState};
use isochron_core::{HopfParams, HopfTuning, Regime};
use proptest::prelude::*;
use std::f64::consts::PI;

fn rk4(s: &SpeedState, p: &HopfParams, dt: f64) -> SpeedState {
    let at = |k: (f64, f64), h: f64| SpeedState::new(s.a + h * k.0, s.b + h * k.1);
    let k1 = hopf_derivative(s, p);
    let k2 = hopf_derivative(&at(k1, dt / 2.0), p);
    let k3 = hopf_derivative(&at(k2, dt / 2.0), p);
    let k4 = hopf_derivative(&at(k3, dt), p);
    SpeedState::new(
        s.a + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        s.b + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

fn simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 50)
}

fn distances() -> Vec<f64> {
    (0..10).map(|i| 0.35 + 0.05 * i as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn cycle_attracts_and_holds_its_radius(
        distance in 0.35f64..0.80,
        rel in 0.01f64..3.0,
        angle in 0.0f64..(2.0 * PI),
    ) {
        let p = HopfTuning::default().fit(distance, 1.5).unwrap();
        let r = p.radius();
        let mut s = SpeedState::new(r + rel * r * angle.cos(), rel * r * angle.sin());
        let dt = 1e-3;
        let settle = (40.0 / p.lambda / dt) as usize;
        for _ in 0..settle {
            s = rk4(&s, &p, dt);
        }
        prop_assert!((cycle_radius(&s, &p) - r).abs() < 1e-6, "radius {}", cycle_radius(&s, &p));

        // Poincare section: upward crossings of b = 0 on the far side of the centre.
        let mut section = Vec::new();
        for _ in 0..(4.0 * p.cycle_period() / dt) as usize {
            let next = rk4(&s, &p, dt);
            if s.b < 0.0 && next.b >= 0.0 && next.a > r {
                section.push(cycle_radius(&next, &p));
            }
            s = next;
        }
        prop_assert!(section.len() >= 3);
        for w in section.windows(2) {
            prop_assert!((w[1] - w[0]).abs() < 1e-8, "section radii {:?}", section);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn arc_length_matches_quadrature(t in 0.01f64..5.0, rh in 0.05f64..2.0, w in 0.5f64..20.0) {
        let quad = adaptive_simpson(|u| rh * (1.0 - (w * u).cos()), 0.0, t, 1e-14);
        let closed = arc_length(t, rh, w);
        prop_assert!((closed - quad).abs() <= 1e-9 * closed.abs(), "closed {closed} quad {quad}");
    }

    #[test]
    fn full_cycle_covers_rh_times_period(rh in 0.05f64..2.0, w in 0.5f64..20.0) {
        let period = 2.0 * PI / w;
        let s = arc_length(period, rh, w);
        prop_assert!((s - rh * period).abs() <= 4.0 * f64::EPSILON * rh * period);
    }
}

#[test]
fn full_cycle_identity_is_exact_at_the_default_fit() {
    let p = HopfTuning::default().fit(0.7, 1.5).unwrap();
    let period = 2.0 * PI / p.cycle_rate();
    assert_eq!(
        arc_length(period, p.radius(), p.cycle_rate()),
        p.radius() * period
    );
}

struct Run {
    t: Vec<f64>,
    a: Vec<f64>,
    distance: Vec<f64>,
    regimes: Vec<Regime>,
}

fn generate(distance: f64, dt: f64) -> (HopfParams, Run) {
    let p = HopfTuning::default().fit(distance, 1.5).unwrap();
    let mut g = SpeedGenerator::new(p, 1.5);
    let mut run = Run {
        t: vec![0.0],
        a: vec![0.0],
        distance: vec![0.0],
        regimes: vec![g.regime()],
    };
    for _ in 0..5 {
        g.step(dt);
        run.regimes.push(g.regime());
    }
    g.trigger();
    run.regimes.push(g.regime());
    let ticks = (1.5 / dt).round() as usize;
    for k in 1..=ticks + 50 {
        let s = g.step(dt);
        run.t.push(k as f64 * dt);
        run.a.push(s.a);
        run.distance.push(g.distance());
        run.regimes.push(g.regime());
    }
    (p, run)
}

#[test]
fn integrated_distance_reaches_target_at_movement_time() {
    let dt = 0.01;
    for d in distances() {
        let (_, run) = generate(d, dt);
        let reach = run
            .distance
            .iter()
            .position(|&s| s >= d * (1.0 - 1e-5))
            .expect("reaches target");
        let t_reach = run.t[reach];
        assert!(
            (t_reach - 1.5).abs() <= dt + 1e-12,
            "D {d}: reached at {t_reach}"
        );
        let at_end = run.distance[150];
        assert!((at_end - d).abs() < 1e-5 * d, "D {d}: {at_end}");
    }
}

#[test]
fn on_cycle_profile_is_raised_cosine() {
    let eps = 1e-6;
    for d in distances() {
        let (p, run) = generate(d, 0.01);
        let (rh, w) = (p.radius(), p.cycle_rate());
        for k in 0..=150 {
            let expected = rh * (1.0 - (w * run.t[k]).cos());
            assert!(
                (run.a[k] - expected).abs() < 1e-5,
                "D {d} t {}: {} vs {expected}",
                run.t[k],
                run.a[k]
            );
            assert!(run.a[k] >= -eps && run.a[k] <= 2.0 * rh + eps);
        }
        assert!(run.a[150].abs() < 1e-4, "a(T) = {}", run.a[150]);
        // After the cycle the final regime holds the arm at rest.
        assert!(run.a[150..].iter().all(|a| a.abs() < 1e-4));
    }
}

#[test]
fn exactly_one_regime_neuron_is_active_every_tick() {
    let (_, run) = generate(0.7, 0.01);
    assert!(run.regimes.iter().all(|r| r.neurons().is_exclusive()));
    let first_final = run
        .regimes
        .iter()
        .position(|&r| r == Regime::Final)
        .unwrap();
    assert!(run.regimes[..first_final]
        .iter()
        .all(|&r| r != Regime::Final));
    assert!(run.regimes[first_final..]
        .iter()
        .all(|&r| r == Regime::Final));
    assert_eq!(run.regimes[0], Regime::Init);
}
