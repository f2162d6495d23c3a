use mane_core::ergopt::{EdgePotential, Weight};
use mane_core::orbitlab::*;
use mane_core::sft::{dynamic_ball_transitions, specification_from_coding, SampledSystem, Sft};
use mane_core::shadowing::model::grid_point;
use mane_core::shadowing::{HyperbolicModel, SpecificationNumeric};
use mane_core::TorusPoint;
use num::BigRational;
use proptest::prelude::*;

fn cat() -> HyperbolicModel {
    HyperbolicModel::cat_map()
}

fn grid_orbit(n: usize, i: usize, j: usize) -> Vec<TorusPoint> {
    let next = mane_core::shadowing::model::cat_grid_next(n);
    let start = i * n + j;
    let mut k = start;
    let mut out = Vec::new();
    loop {
        out.push(grid_point(n, k / n, k % n));
        k = next[k];
        if k == start {
            return out;
        }
    }
}

// Brute force over a long stretch of the orbit never beats the window
// representatives by more than their resolution.
#[test]
fn aubry_distance_against_long_orbit() {
    let a = SturmianAubry::golden();
    let pts = a.sample(20000).points;
    for i in 0..40 {
        let y = TorusPoint::new((0.123 + 0.371 * i as f64).fract(), (0.77 + 0.219 * i as f64).fract());
        let d = a.distance(y);
        let brute = pts.iter().map(|p| p.distance(&y)).fold(f64::INFINITY, f64::min);
        assert!(brute >= d - a.resolution, "{brute} < {d}");
        assert!(brute - d < 5e-3, "sample too sparse: {brute} vs {d}");
    }
}

#[test]
fn zero_jump_spec_returns_the_orbit() {
    let m = cat();
    let orbit = grid_orbit(7, 1, 3);
    let spec = SpecificationNumeric::from_pseudo_orbit(&m, &orbit, true).unwrap();
    let set = PointSet(orbit.clone());
    let (o, _) = spec_to_periodic_orbit(&m, &spec, &set).unwrap();
    assert_eq!(o.period, orbit.len());
    for (p, q) in o.points.iter().zip(&orbit) {
        assert!(p.distance(q) < 1e-12);
    }
    assert!(o.aubry_distance < 1e-12);
}

fn testbed_spec(t: usize) -> (SampledSystem<TorusPoint>, SpecificationNumeric, usize) {
    let a = SturmianAubry::golden();
    let sys = a.sample(4000);
    let coding = dynamic_ball_transitions(&sys, t, 0.05).unwrap();
    let sym = specification_from_coding(&sys, &coding);
    let spec = numeric_specification(&cat(), &sys, &sym).unwrap();
    (sys, spec, sym.jump_count())
}

#[test]
fn testbed_shadow_follows_spec() {
    let m = cat();
    let a = SturmianAubry::golden();
    let (_, spec, p_t) = testbed_spec(6);
    let (o, _) = spec_to_periodic_orbit(&m, &spec, &a).unwrap();
    let z = spec.expand(&m);
    let dev = z
        .iter()
        .enumerate()
        .map(|(i, p)| p.distance(&o.points[i % o.period]))
        .fold(0.0, f64::max);
    assert!(dev <= 1.7 * spec.delta(), "{dev} vs {}", spec.delta());
    assert!(spec.period() <= (5 * 6 * p_t) as f64);
    assert!(o.period <= 5 * 6 * p_t);
    assert!(o.closure < 1e-9);
}

fn brute_pair(points: &[TorusPoint]) -> (f64, (usize, usize)) {
    let n = points.len();
    let mut best = (f64::INFINITY, (0, 0));
    for i in 0..n {
        for j in 0..n {
            if i < j && points[i].distance(&points[j]) < best.0 {
                best = (points[i].distance(&points[j]), (i, j));
            }
        }
    }
    best
}

#[test]
fn near_return_fails_with_witness() {
    let m = cat();
    let a = SturmianAubry::golden();
    let (_, spec, _) = testbed_spec(8);
    let (o, _) = spec_to_periodic_orbit(&m, &spec, &a).unwrap();
    let v = alga_check(&o, 0.1);
    assert!(!v.holds);
    let (d, (i, j)) = brute_pair(&o.points);
    assert_eq!(d, o.gap);
    let (r1, r2) = v.witness.unwrap();
    assert!(r2 - r1 >= 1 && r2 - r1 <= o.period / 2);
    assert_eq!([r1 % o.period, r2 % o.period].iter().min(), [i, j].iter().min());
}

#[test]
fn orbit_inside_aubry_passes() {
    let m = cat();
    let orbit = grid_orbit(5, 1, 2);
    let o = PeriodicOrbitNumeric::from_points(&m, orbit.clone(), vec![0], &PointSet(orbit)).unwrap();
    assert_eq!(o.action, 0.0);
    assert!(alga_check(&o, 1e-3).holds);
}

#[test]
fn cutting_a_double_traversal() {
    let m = cat();
    let base = grid_orbit(7, 2, 5);
    let p = base.len();
    let points = [base.clone(), base.clone()].concat();
    let doubled = PeriodicOrbitNumeric {
        period: 2 * p,
        action: 0.0,
        gap: 0.0,
        gap_pair: Some((0, p)),
        aubry_distance: 0.0,
        jump_times: vec![0],
        closure: 0.0,
        points,
    };
    let v = alga_check(&doubled, 0.1);
    assert_eq!(v.witness, Some((0, p)));
    let cut = cut_and_shadow(&m, &doubled, (0, p), &PointSet(base.clone()), REDUCTION).unwrap();
    assert!(cut.terminal.is_none());
    assert_eq!(cut.orbit.period, p);
    for (x, y) in cut.orbit.points.iter().zip(&base) {
        assert!(x.distance(y) < 1e-12);
    }
}

#[test]
fn pipeline_on_testbed() {
    let m = cat();
    let a = SturmianAubry::golden();
    let sys = a.sample(4000);
    let run = palga_pipeline(&m, &sys, &a, &PalgaOptions { horizon: 8, ..Default::default() }).unwrap();
    assert!(run.terminal.is_none());
    assert!(run.alga.holds);
    assert!(run.cut_count() >= 1);
    assert!(run.cut_count() as f64 <= (run.initial_period as f64).ln() / 1.25f64.ln());
    assert!(run.trend_ok);
    // Independent metric pass.
    let o = &run.orbit;
    let c = o.points.iter().map(|&p| a.distance(p)).fold(0.0, f64::max);
    let act: f64 = o.points.iter().map(|&p| a.distance(p).powi(2)).sum();
    let gap = if o.period == 1 { FIXED_POINT_GAP } else { brute_pair(&o.points).0 };
    assert!(c < 0.1 * gap && act < 0.01 * gap * gap);
    assert!(c <= run.distance_budget * (1.0 + 1e-9));
    for w in run.rounds.windows(2) {
        assert!(w[1].period as f64 * REDUCTION <= w[0].period as f64);
        assert!(w[1].profile_constant <= run.ledger.d0);
    }
}

#[test]
fn fixed_point_aubry_takes_no_rounds() {
    let m = cat();
    let zero = TorusPoint::new(0.0, 0.0);
    let sys = SampledSystem::new(vec![zero], vec![Some(0)]).unwrap();
    let run = palga_pipeline(&m, &sys, &PointSet(vec![zero]), &PalgaOptions::default()).unwrap();
    assert_eq!(run.cut_count(), 0);
    assert_eq!(run.orbit.period, 1);
    assert!(run.alga.holds);
}

#[test]
fn golden_mean_discrete_loop() {
    let s = Sft::golden_mean();
    let f = EdgePotential::from_fn(&s, 2, |w| <BigRational as Weight>::from_ratio((w[0] + w[1]) as i64, 1)).unwrap();
    let r = palga_discrete(&f, &<BigRational as Weight>::from_ratio(1, 10)).unwrap();
    assert_eq!(r.orbit.word(), &[0]);
    assert!(r.satisfied);
    // Direct check: fixed point inside the Aubry set, zero reduced action, gap 2.
    assert_eq!(r.metrics.aubry_distance, 0.0);
    assert_eq!(r.metrics.gap, 2.0);
    assert!(r.rounds as f64 <= (r.periods[0] as f64).ln() / 1.25f64.ln());
}

#[test]
fn ledger_formulas() {
    let eps = 0.1;
    let l = ConstantLedger::derive(3.0, 1.5, 1.2, 2.618, 0.7, eps).unwrap();
    let lam = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    let d0 = 2.618 * 1.5 * 1.2;
    let b2: f64 = (0..200).map(|n| (-2.0 * lam * n as f64).exp()).sum();
    let b3 = 2.0 * 2.0 * d0 * d0 * (1.0 / lam + 2.0 * b2) / (eps * eps);
    assert!((l.d0 - d0).abs() < 1e-12);
    assert!((l.b2 - b2).abs() < 1e-12);
    assert!((l.b3 - b3).abs() < 1e-9 * b3);
    assert!((l.b4 - (b3 + 4.0).max(2.0 * d0 / eps)).abs() < 1e-9 * l.b4);
    assert!((l.a1(5, 6) - 0.7 * 5.0 * (-12.0 * lam).exp()).abs() < 1e-18);
}

// Final action and distance never grow as the horizon increases.
#[test]
fn horizon_sweep_trend() {
    let m = cat();
    let a = SturmianAubry::golden();
    let sys = a.sample(4000);
    let runs: Vec<PalgaRun> = [4, 6, 8, 10]
        .iter()
        .map(|&t| palga_pipeline(&m, &sys, &a, &PalgaOptions { horizon: t, ..Default::default() }).unwrap())
        .collect();
    // Distances are known to the window resolution, actions to the matching first order.
    for w in runs.windows(2) {
        let (o0, o1) = (&w[0].orbit, &w[1].orbit);
        assert!(o1.aubry_distance <= o0.aubry_distance + a.resolution);
        assert!(o1.action <= o0.action + 2.0 * a.resolution * o0.aubry_distance * o0.period as f64);
    }
}

proptest! {
    #[test]
    fn witness_is_the_closest_pair(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..30)) {
        let m = cat();
        let points: Vec<TorusPoint> = pts.iter().map(|&(x, y)| TorusPoint::new(x, y)).collect();
        let far = PointSet(vec![TorusPoint::new(0.5, 0.5)]);
        let mut o = PeriodicOrbitNumeric::from_points(&m, points.clone(), vec![], &far).unwrap();
        o.aubry_distance = 1.0;
        let (d, (i, j)) = brute_pair(&o.points);
        prop_assert_eq!(o.gap, d);
        let (r1, r2) = alga_check(&o, 0.5).witness.unwrap();
        let per = o.period;
        prop_assert!(r2 > r1 && r2 - r1 <= per / 2);
        let mut got = [r1 % per, r2 % per];
        got.sort();
        prop_assert_eq!(got, [i, j]);
    }

    #[test]
    fn primitive_period_of_repeats(len in 1usize..8, reps in 1usize..5, seed in 0u64..1000) {
        let base: Vec<TorusPoint> = (0..len)
            .map(|k| TorusPoint::new(((seed + 7 * k as u64) as f64 * 0.6180339887).fract(), (k as f64 * 0.3819660113 + 0.1).fract()))
            .collect();
        let rep: Vec<TorusPoint> = (0..reps).flat_map(|_| base.clone()).collect();
        let p = primitive_period(&rep, 1e-12);
        prop_assert!(p <= len && len % p == 0);
    }
}
