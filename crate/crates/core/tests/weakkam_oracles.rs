use std::f64::consts::PI;

use mane_core::lagrangian::*;
use mane_core::stats::loglog_fit;
use mane_core::weakkam::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph(model: &LagrangianModel, n: usize) -> ActionGraph {
    ActionGraph::new(model, &GraphOptions { n, stencil: n / 8, menu: DEFAULT_MENU.to_vec() }).unwrap()
}

fn pendulum() -> (ActionGraph, CriticalValue, ValueField) {
    let g = graph(&LagrangianModel::pendulum(), 200);
    let cv = critical_value(&g).unwrap();
    let u = lax_oleinik(&g, cv.c, cv.base).unwrap();
    (g, cv, u)
}

fn finite(p: PotentialValue) -> f64 {
    match p {
        PotentialValue::Finite(v) => v,
        other => panic!("expected finite potential, got {other:?}"),
    }
}

/// min over T > 0 of kT + d²/(2T), by golden-section search.
fn free_oracle(k: f64, d: f64) -> f64 {
    let f = |t: f64| k * t + d * d / (2.0 * t);
    let (mut a, mut b) = (1e-6, 1e3);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let e = a + g * (b - a);
        if f(c) < f(e) {
            b = e;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b))
}

#[test]
fn free_particle_potential_matches_geodesic_oracle() {
    let g = graph(&LagrangianModel::free(1), 200);
    for k in [0.125, 0.5, 2.0] {
        for (x, y) in [(0, 100), (10, 70), (150, 20)] {
            let d = {
                let raw = (g.position(y)[0] - g.position(x)[0]).abs();
                raw.min(1.0 - raw)
            };
            let phi = finite(mane_potential(&g, k, x, y));
            let oracle = free_oracle(k, d);
            assert!((phi - oracle).abs() <= 0.02 * oracle, "k={k} d={d}: {phi} vs {oracle}");
        }
    }
}

#[test]
fn pendulum_potential_from_the_fixed_point() {
    let g = graph(&LagrangianModel::pendulum(), 200);
    for y in [1.0, 2.0, 3.0, -2.5] {
        let v = g.node_at([y, 0.0]);
        let x = g.position(v)[0];
        let x = if x > PI { x - 2.0 * PI } else { x };
        let exact = 4.0 * (1.0 - (x / 2.0).cos());
        let phi = finite(mane_potential(&g, 1.0, 0, v));
        assert!((phi - exact).abs() <= 0.02 * exact, "y={y}: {phi} vs {exact}");
    }
    // Constant loops at or above the critical level.
    for v in [0, 37, 150] {
        let phi = finite(mane_potential(&g, 1.0, v, v));
        assert!(phi >= -1e-12 && phi < 0.3, "{phi}");
    }
}

#[test]
fn pendulum_critical_value_and_certificate() {
    let (g, cv, _) = pendulum();
    assert!((cv.c - 1.0).abs() <= 0.02);
    assert!(cv.discretization < 0.02);
    let cert = cv.certificate.expect("certificate below c");
    assert!(cert.weight < 0.0 && cert.k < cv.c);
    assert_eq!(g.position(cv.base)[0], 0.0);
}

/// Mean speed of the rotation at energy E: (1/2π)∫ √(2(E − cos x)) dx.
fn rotation_speed(e: f64) -> f64 {
    let m = 20000;
    (0..m).map(|i| (2.0 * (e - ((i as f64 + 0.5) * 2.0 * PI / m as f64).cos())).sqrt()).sum::<f64>() / m as f64
}

#[test]
fn magnetic_pendulum_follows_alpha_function() {
    // A closed form ω·dx shifts the critical value to the alpha function.
    for w in [0.5, 2.0, 3.0] {
        let mut m = LagrangianModel::pendulum();
        m.magnetic = Some([w, 0.0]);
        let g = graph(&m, 200);
        let cv = critical_value(&g).unwrap();
        let oracle = if w <= 4.0 / PI {
            1.0
        } else {
            let (mut lo, mut hi) = (1.0, 20.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if rotation_speed(mid) < w {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        assert!((cv.c - oracle).abs() <= cv.discretization, "ω={w}: {} vs {oracle}", cv.c);
    }
}

#[test]
fn lax_oleinik_fields() {
    let (g, cv, u) = pendulum();
    assert!(u.residual <= 1e-9);
    assert!(u.sweeps <= g.node_count() * g.menu.len());
    assert_eq!(u.domination_violations(&g, 1e-9), 0);
    for v in 0..g.node_count() {
        let x = g.position(v)[0];
        let x = if x > PI { x - 2.0 * PI } else { x };
        assert!((u.value(v) - 4.0 * (1.0 - (x / 2.0).cos())).abs() <= 0.02);
    }
    let _ = cv;

    let f = graph(&LagrangianModel::free(1), 200);
    let cf = critical_value(&f).unwrap();
    let uf = lax_oleinik(&f, cf.c, cf.base).unwrap();
    let (lo, hi) = uf.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    // Constant up to the grid floor of one slow hop per cell.
    assert!(hi - lo <= f.n as f64 * f.action_resolution());
}

#[test]
fn pendulum_invariant_sets() {
    let (g, cv, u) = pendulum();
    let sets = classify_and_extract_sets(&g, &u).unwrap();
    assert!(sets.mather.is_subset(&sets.aubry));
    assert!(sets.aubry.is_subset(&sets.mane));
    assert!(sets.mather.cells.contains(&[0, 0, 0, 0]));
    let n = g.n as i32;
    for c in &sets.aubry.cells {
        let dx = c[0].min(n - c[0]);
        assert!(dx <= 2 && c[2].abs() <= 3, "{c:?}");
    }
    for c in &sets.mane.cells {
        let s = sets.mane.cell_state(c);
        assert!(energy_level_cells(&g.model, cv.c, &s, g.h, sets.mane.dv) <= 2.0, "{c:?}");
    }
    assert!(aubry_flow_drift(&g.model, &sets.aubry, 0.5).unwrap() <= 2.0);
}

#[test]
fn free_particle_sets_are_the_zero_section() {
    let g = graph(&LagrangianModel::free(1), 100);
    let cv = critical_value(&g).unwrap();
    let u = lax_oleinik(&g, cv.c, cv.base).unwrap();
    let sets = classify_and_extract_sets(&g, &u).unwrap();
    assert_eq!(sets.aubry.nodes.len(), g.node_count());
    assert!(sets.mather.is_subset(&sets.aubry) && sets.aubry.is_subset(&sets.mane));
    // Zero section up to the two slowest grid speeds.
    let floor = 2.0 * g.h / 0.4;
    for c in &sets.mane.cells {
        assert!((c[2] as f64 * sets.mane.dv).abs() <= floor + 1e-12, "{c:?}");
    }
}

#[test]
fn calibration_along_static_cycles() {
    let (g, _, u) = pendulum();
    let sets = classify_and_extract_sets(&g, &u).unwrap();
    for e in 0..g.edge_count() {
        let (a, b) = (g.tail(e), g.head(e));
        if a == 0 && b == 0 && g.displacement(e) == [0.0, 0.0] {
            assert!(u.reduced(&g, e).abs() <= 1e-6);
        }
    }
    for &(_, defect) in &sets.static_defect {
        assert!(defect <= sets.aubry.tolerance);
    }
}

#[test]
fn random_closed_curves_have_nonnegative_action() {
    let (g, cv, _) = pendulum();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let r = g.stencil as i64;
    let n = g.n as i64;
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let start = rng.gen_range(0..g.node_count());
        let mut v = start;
        let mut total = 0.0;
        let mut lift = 0i64;
        for _ in 0..rng.gen_range(1..40) {
            let es: Vec<usize> = g.out_edges(v).collect();
            let e = es[rng.gen_range(0..es.len())];
            total += g.weight(e, cv.c);
            lift += (g.displacement(e)[0] / g.h).round() as i64;
            v = g.head(e);
        }
        // Close up, possibly after extra windings.
        let mut need = -lift + n * rng.gen_range(-1..=1);
        while need != 0 || v != start {
            let step = need.clamp(-r, r);
            let es: Vec<usize> = g
                .out_edges(v)
                .filter(|&e| (g.displacement(e)[0] / g.h).round() as i64 == step)
                .collect();
            let e = es[rng.gen_range(0..es.len())];
            total += g.weight(e, cv.c);
            need -= step;
            v = g.head(e);
        }
        worst = worst.min(total);
    }
    assert!(worst >= -1e-3, "{worst}");
}

#[test]
fn triangle_inequality_at_critical_level() {
    let g = graph(&LagrangianModel::pendulum(), 80);
    let c = critical_value(&g).unwrap().c;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let (x, y, z) = (rng.gen_range(0..80), rng.gen_range(0..80), rng.gen_range(0..80));
        let xy = finite(mane_potential(&g, c, x, y));
        let yz = finite(mane_potential(&g, c, y, z));
        let xz = finite(mane_potential(&g, c, x, z));
        assert!(xz <= xy + yz + 1e-9);
    }
}

#[test]
fn quadratic_bound_at_the_static_point() {
    let (g, _, u) = pendulum();
    let z = PhaseState::line(0.0, 0.0);
    let k = quadratic_bound_check(&g, &u, &z, 1.0, 3.0 * g.h).unwrap();
    assert!((0.4..=0.7).contains(&k), "{k}");
    let g2 = graph(&LagrangianModel::pendulum(), 400);
    let c2 = critical_value(&g2).unwrap();
    let u2 = lax_oleinik(&g2, c2.c, c2.base).unwrap();
    let k2 = quadratic_bound_check(&g2, &u2, &z, 1.0, 3.0 * g2.h).unwrap();
    assert!((k2 - k).abs() < 0.2 * k, "{k} vs {k2}");
    assert!(matches!(
        quadratic_bound_check(&g, &u, &z, 0.5 * g.h, 0.0),
        Err(mane_core::Error::RadiusTooSmall { .. })
    ));

    let f = graph(&LagrangianModel::free(1), 100);
    let flat = ValueField { dim: 1, n: 100, h: f.h, c: 0.0, base: 0, values: vec![0.25; 100], sweeps: 0, residual: 0.0 };
    assert_eq!(quadratic_bound_check(&f, &flat, &PhaseState::line(0.3, 0.0), 0.3, 3.0 * f.h).unwrap(), 0.0);
}

fn separatrix_pair(s: f64) -> (Curve, Curve) {
    let m = LagrangianModel::pendulum();
    let v = pendulum_separatrix_speed(s);
    let branch = |vel: f64| {
        let back = el_flow(&m, &PhaseState::line(s, vel), -1.0, 1e-3).unwrap();
        let fwd = el_flow(&m, &PhaseState::line(s, vel), 1.0, 1e-3).unwrap();
        let mut times = back.times.clone();
        let mut points = back.points.clone();
        let mut vels = back.velocities.clone().unwrap();
        times.pop();
        points.pop();
        vels.pop();
        times.extend(&fwd.times);
        points.extend(&fwd.points);
        vels.extend(fwd.velocities.as_ref().unwrap());
        Curve::new(times, points, Some(vels)).unwrap()
    };
    (branch(v), branch(-v))
}

#[test]
fn separatrix_crossing_gains_quadratically() {
    let m = LagrangianModel::pendulum();
    let consts = CrossingConstants { eps: 0.1, delta: 0.05, eta: 0.01, zeta: 1e-3, c: 2.0 };
    let (a, b) = separatrix_pair(PI);
    let r = crossing_gain(&m, &a, &b, 0.0, &consts).unwrap();
    assert!(r.gain > 0.0 && r.satisfies_eta);
    assert!((r.angle - 4.0).abs() < 1e-9);
    let mut etas = Vec::new();
    for s in [0.8, 1.4, 2.0, 2.6, PI] {
        let (a, b) = separatrix_pair(s);
        etas.push(crossing_gain(&m, &a, &b, 0.0, &consts).unwrap().eta_measured);
    }
    let (lo, hi) = etas.iter().fold((f64::INFINITY, 0.0f64), |(l, h), e| (l.min(*e), h.max(*e)));
    assert!(hi <= 2.0 * lo, "{etas:?}");

    // Parallel curves at positive distance fail the angle condition.
    let shifted = Curve::new(a.times.clone(), a.points.iter().map(|p| [p[0] + 0.01, 0.0]).collect(), a.velocities.clone())
        .unwrap();
    let loose = CrossingConstants { zeta: 0.1, ..consts.clone() };
    let e = crossing_gain(&m, &a, &shifted, 0.0, &loose).unwrap_err();
    assert!(e.to_string().contains("crossing-angle"));
}

#[test]
fn second_order_bound_is_quadratic() {
    let m = LagrangianModel::pendulum();
    let x = el_flow(&m, &PhaseState::line(0.4, 1.1), 2.0, 1e-3).unwrap();
    let t = x.duration();
    let perturb = |rho: f64| {
        let pts = x.times.iter().zip(&x.points).map(|(s, p)| [p[0] + rho * (PI * s / t).sin(), 0.0]).collect();
        Curve::new(x.times.clone(), pts, None).unwrap()
    };
    let same = second_order_action_bound(&m, &x, &[x.clone()], 0.1).unwrap();
    assert!(same.residuals[0].abs() < 1e-12 && same.holds);
    let rhos = [0.1, 0.05, 0.025, 0.0125];
    let mut res = Vec::new();
    for rho in rhos {
        let r = second_order_action_bound(&m, &x, &[perturb(rho)], rho).unwrap();
        assert!(r.holds, "{r:?}");
        res.push(r.residuals[0]);
    }
    let (_, slope) = loglog_fit(&rhos, &res);
    assert!((slope - 2.0).abs() <= 0.2, "{slope}");
    assert!(second_order_action_bound(&m, &x, &[perturb(0.5)], 0.05).is_err());

    // Exchange quadruple: z a shifted copy, w₁/w₂ ramps between them.
    let rho = 0.02;
    let z = Curve::new(x.times.clone(), x.points.iter().map(|p| [p[0] + rho, 0.0]).collect(), None).unwrap();
    let ramp = |from: &Curve, to: &Curve| {
        let pts = (0..x.len())
            .map(|i| {
                let s = x.times[i] / t;
                [from.points[i][0] + s * (to.points[i][0] - from.points[i][0]), 0.0]
            })
            .collect();
        Curve::new(x.times.clone(), pts, None).unwrap()
    };
    let (w1, w2) = (ramp(&x, &z), ramp(&z, &x));
    let (lhs, bound) = exchange_quadruple_bound(&m, &x, &z, &w1, &w2, rho).unwrap();
    assert!(lhs <= bound, "{lhs} > {bound}");
}

#[test]
fn continuous_channel_shape_and_smoothness() {
    let l = 2.0 * PI;
    let orbit: Vec<[f64; 2]> = (0..400)
        .map(|i| {
            let s = l * i as f64 / 400.0;
            [s, PI + 0.5 * s.sin()]
        })
        .collect();
    let (eps, rho, gb) = (0.1, 0.2, 1.0);
    let ch = build_channel_continuous(&orbit, l, eps, rho, gb, 400).unwrap();
    assert!(ch.values.iter().all(|v| *v >= 0.0));
    assert!(ch.c2_norm < 10.0 * eps, "{}", ch.c2_norm);
    let h = l / 400.0;
    for i in 0..400 {
        for j in 0..400 {
            let d = polyline_distance(&orbit, l, [i as f64 * h, j as f64 * h]);
            let v = ch.value(i, j);
            if d >= rho {
                assert!(v >= 0.25 * eps * rho * rho);
            }
            if d >= gb / 4.0 {
                assert!((v - eps * gb * gb / 32.0).abs() < 1e-15);
            }
        }
    }
    // Exactly zero on the orbit's vertices at grid points.
    let flat: Vec<[f64; 2]> = (0..100).map(|i| [l * i as f64 / 100.0, PI]).collect();
    let ch = build_channel_continuous(&flat, l, eps, rho, gb, 200).unwrap();
    assert_eq!(ch.value(37, 100), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn constant_shift_lowers_critical_value(
        samples in proptest::collection::vec(-1.0f64..1.0, 8),
        b in -0.5f64..0.5,
    ) {
        let spec = |s: Vec<f64>| ModelSpec {
            dim: 1, potential: "table".into(), samples: s, amplitude: None, period: Some(1.0), magnetic: None,
        };
        let m0 = LagrangianModel::from_spec(&spec(samples.clone())).unwrap();
        let m1 = LagrangianModel::from_spec(&spec(samples.iter().map(|v| v - b).collect())).unwrap();
        let opts = GraphOptions { n: 40, stencil: 5, menu: DEFAULT_MENU.to_vec() };
        let c0 = critical_value(&ActionGraph::new(&m0, &opts).unwrap()).unwrap().c;
        let c1 = critical_value(&ActionGraph::new(&m1, &opts).unwrap()).unwrap().c;
        prop_assert!((c1 - (c0 - b)).abs() < 1e-8);
    }

    #[test]
    fn lax_oleinik_dominates_on_random_tables(samples in proptest::collection::vec(-1.0f64..1.0, 6)) {
        let m = LagrangianModel::from_spec(&ModelSpec {
            dim: 1, potential: "table".into(), samples, amplitude: None, period: Some(1.0), magnetic: None,
        }).unwrap();
        let g = ActionGraph::new(&m, &GraphOptions { n: 40, stencil: 5, menu: DEFAULT_MENU.to_vec() }).unwrap();
        let cv = critical_value(&g).unwrap();
        let u = lax_oleinik(&g, cv.c, cv.base).unwrap();
        prop_assert_eq!(u.domination_violations(&g, 1e-9), 0);
        prop_assert!(u.residual <= 1e-9);
        let sets = classify_and_extract_sets(&g, &u).unwrap();
        prop_assert!(sets.mather.is_subset(&sets.aubry) && sets.aubry.is_subset(&sets.mane));
        prop_assert!(!sets.mather.cells.is_empty());
    }
}

#[test]
fn two_dimensional_cosine_grid() {
    let m = LagrangianModel::cos2d(1.0);
    let g = ActionGraph::new(&m, &GraphOptions::for_dim(2)).unwrap();
    let cv = critical_value(&g).unwrap();
    assert!((cv.c - 2.0).abs() <= cv.discretization);
    let u = lax_oleinik(&g, cv.c, cv.base).unwrap();
    assert_eq!(u.domination_violations(&g, 1e-9), 0);
    let sets = classify_and_extract_sets(&g, &u).unwrap();
    assert!(sets.aubry.nodes.contains(&0));
    assert!(sets.mather.is_subset(&sets.aubry) && sets.aubry.is_subset(&sets.mane));
}
