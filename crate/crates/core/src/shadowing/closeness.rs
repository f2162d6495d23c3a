//! Canonical coordinates, exponential closeness of nearby orbits and a
//! sampled expansivity constant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{lift_diff, stable_dir, HyperbolicModel, ModelKind, SuspPoint};
use super::shadow::{shadow_specification, SpecificationNumeric};
use crate::error::{Error, Result};
use crate::stats::linear_fit;
use crate::torus::TorusPoint;

/// Radius of the local product structure.
pub const ETA0: f64 = 0.25;
/// Largest orbit separation accepted by [`exponential_closeness`].
pub const BETA0: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    /// ⟨x, y⟩: on the strong stable set of ψ_v(x) and the strong unstable set of y.
    pub point: SuspPoint,
    pub v: f64,
    /// max(|v|, d(x, ψ_v x), d(⟨x,y⟩, y)) / d(x, y); 0 when x = y.
    pub ratio: f64,
}

fn distance(model: &HyperbolicModel, x: &SuspPoint, y: &SuspPoint) -> f64 {
    if model.is_flow() {
        model.susp_distance(x, y)
    } else {
        x.base.distance(&y.base)
    }
}

fn torus_bracket(model: &HyperbolicModel, x: TorusPoint, y: TorusPoint) -> Result<TorusPoint> {
    match model.kind {
        ModelKind::PerturbedCatMap { .. } => {
            // Two-sided pseudo-orbit: backward orbit of y, forward orbit of x.
            let k = 30;
            let mut pts = Vec::with_capacity(2 * k + 1);
            let mut back = Vec::with_capacity(k);
            let mut q = y;
            for _ in 0..k {
                q = model.step_inverse(q);
                back.push(q);
            }
            back.reverse();
            pts.extend(back);
            let mut p = x;
            for _ in 0..=k {
                pts.push(p);
                p = model.step(p);
            }
            let spec = SpecificationNumeric::from_pseudo_orbit(model, &pts, false)?;
            Ok(shadow_specification(model, &spec)?.orbit[k])
        }
        _ => {
            let d = lift_diff(x.0, y.0);
            let s = stable_dir();
            let a = d[0] * s[0] + d[1] * s[1];
            Ok(x.translate([a * s[0], a * s[1]]))
        }
    }
}

/// Canonical coordinates ⟨x, y⟩ and the time shift v.
pub fn canonical_coordinates(model: &HyperbolicModel, x: SuspPoint, y: SuspPoint) -> Result<Bracket> {
    let d = distance(model, &x, &y);
    if d > ETA0 {
        return Err(Error::TooFar { distance: d, limit: ETA0 });
    }
    if d == 0.0 {
        return Ok(Bracket { point: x, v: 0.0, ratio: 0.0 });
    }
    let (v, xv) = if model.is_flow() {
        let r = model.roof();
        let raw = y.level - x.level;
        let v = [raw - r, raw, raw + r]
            .into_iter()
            .min_by(|a, b| {
                let da = distance(model, &model.flow(x, *a), &y);
                let db = distance(model, &model.flow(x, *b), &y);
                da.total_cmp(&db).then(a.abs().total_cmp(&b.abs()))
            })
            .expect("three candidates");
        (v, model.flow(x, v))
    } else {
        (0.0, x)
    };
    let base = torus_bracket(model, xv.base, y.base)?;
    let point = SuspPoint { base, level: if model.is_flow() { y.level } else { 0.0 } };
    let ratio = v
        .abs()
        .max(distance(model, &x, &xv))
        .max(distance(model, &point, &y))
        / d;
    Ok(Bracket { point, v, ratio })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosenessProfile {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub v: f64,
    /// ln((d(−L) + d(L)) / d(0)) / L.
    pub rate: f64,
    /// Slope of ln d against |s| over the half of the window nearest the ends.
    pub fitted_rate: f64,
    /// max_s d(s) / (e^{−λ(L−|s|)} (d(−L) + d(L))) with λ the model rate.
    pub constant: f64,
    pub max_at_endpoint: bool,
}

/// Distance profile s ↦ d(ψ_{s+v}(x), ψ_s(y)) over [−L, L].
pub fn exponential_closeness(
    model: &HyperbolicModel,
    x: SuspPoint,
    y: SuspPoint,
    window: f64,
) -> Result<ClosenessProfile> {
    let (v, x0) = if model.is_flow() {
        let b = canonical_coordinates(model, x, y)?;
        (b.v, model.flow(x, b.v))
    } else {
        (0.0, x)
    };
    let (times, distances): (Vec<f64>, Vec<f64>) = if model.is_flow() {
        let h = model.roof() / 8.0;
        let m = (window / h).round() as i64;
        (-m..=m)
            .map(|k| {
                let s = k as f64 * h;
                (s, model.susp_distance(&model.flow(x0, s), &model.flow(y, s)))
            })
            .unzip()
    } else {
        let l = window.round() as i64;
        let mut fx = vec![x0.base; (2 * l + 1) as usize];
        let mut fy = vec![y.base; (2 * l + 1) as usize];
        for k in 1..=l as usize {
            let c = l as usize;
            fx[c + k] = model.step(fx[c + k - 1]);
            fy[c + k] = model.step(fy[c + k - 1]);
            fx[c - k] = model.step_inverse(fx[c - k + 1]);
            fy[c - k] = model.step_inverse(fy[c - k + 1]);
        }
        (-l..=l)
            .map(|k| k as f64)
            .zip(fx.iter().zip(&fy).map(|(a, b)| a.distance(b)))
            .unzip()
    };
    let max = distances.iter().copied().fold(0.0, f64::max);
    if max > BETA0 {
        return Err(Error::Precondition(format!(
            "orbits separate to {max} > β₀ = {BETA0} within the window"
        )));
    }
    let n = distances.len();
    let (first, mid, last) = (distances[0], distances[n / 2], distances[n - 1]);
    let ends = first + last;
    let l = times[n - 1];
    if mid == 0.0 {
        return Ok(ClosenessProfile {
            times,
            distances,
            v,
            rate: f64::INFINITY,
            fitted_rate: f64::INFINITY,
            constant: 0.0,
            max_at_endpoint: true,
        });
    }
    let rate = (ends / mid).ln() / l;
    let (abs_t, log_d): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&distances)
        .filter(|(t, d)| t.abs() >= l / 2.0 && **d > 0.0)
        .map(|(t, d)| (t.abs(), d.ln()))
        .unzip();
    let fitted_rate = if abs_t.len() >= 2 { linear_fit(&abs_t, &log_d).1 } else { rate };
    let lam = model.expansion;
    let constant = times
        .iter()
        .zip(&distances)
        .map(|(t, d)| d / ((-lam * (l - t.abs())).exp() * ends))
        .fold(0.0, f64::max);
    let tol = 1e-12 * max;
    let max_at_endpoint = first >= max - tol || last >= max - tol;
    Ok(ClosenessProfile { times, distances, v, rate, fitted_rate, constant, max_at_endpoint })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansivityReport {
    pub eta: f64,
    pub window: f64,
    /// Smallest window separation among sampled pairs not identified at scale η.
    pub alpha: f64,
    pub pairs: usize,
    pub separated_pairs: usize,
}

/// Shift |v| ≤ η carrying x onto y along the flow, if any.
pub fn same_orbit_shift(model: &HyperbolicModel, x: SuspPoint, y: SuspPoint, eta: f64) -> Option<f64> {
    if !model.is_flow() {
        return (x.base.distance(&y.base) == 0.0).then_some(0.0);
    }
    let b = canonical_coordinates(model, x, y).ok()?;
    (b.v.abs() <= eta && model.susp_distance(&model.flow(x, b.v), &y) < 1e-9).then_some(b.v)
}

/// max over |s| ≤ L of d(ψ_{s+v}x, ψ_s y), v from canonical coordinates when defined.
pub fn window_separation(model: &HyperbolicModel, x: SuspPoint, y: SuspPoint, window: f64) -> f64 {
    let v = if model.is_flow() {
        canonical_coordinates(model, x, y).map(|b| b.v).unwrap_or(0.0)
    } else {
        0.0
    };
    let (step, m) = if model.is_flow() {
        let h = model.roof() / 8.0;
        (h, (window / h).round() as i64)
    } else {
        (1.0, window.round() as i64)
    };
    let x0 = if model.is_flow() { model.flow(x, v) } else { x };
    let mut best = 0.0f64;
    for k in -m..=m {
        let s = k as f64 * step;
        let d = if model.is_flow() {
            model.susp_distance(&model.flow(x0, s), &model.flow(y, s))
        } else {
            model.iterate(x0.base, k).distance(&model.iterate(y.base, k))
        };
        best = best.max(d);
    }
    best
}

/// Sampled expansivity constant ᾱ(η): pairs at distance in [1e−4, 0.4]
/// (log-uniform) around seeded points; for maps a pair is identified at
/// scale η when d(x, y) ≤ η, for the flow when it lies on one orbit with
/// shift ≤ η.
pub fn expansivity_estimate(
    model: &HyperbolicModel,
    eta: f64,
    window: f64,
    samples: usize,
    seed: u64,
) -> ExpansivityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alpha = f64::INFINITY;
    let mut separated = 0;
    for _ in 0..samples {
        let x = SuspPoint {
            base: TorusPoint::new(rng.gen(), rng.gen()),
            level: if model.is_flow() { rng.gen::<f64>() * model.roof() } else { 0.0 },
        };
        let r = 10f64.powf(rng.gen_range(-4.0..0.4f64.log10()));
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let y = SuspPoint { base: x.base.translate([r * th.cos(), r * th.sin()]), level: x.level };
        let identified = if model.is_flow() {
            same_orbit_shift(model, x, y, eta).is_some()
        } else {
            r <= eta
        };
        if identified {
            continue;
        }
        separated += 1;
        alpha = alpha.min(window_separation(model, x, y, window));
    }
    ExpansivityReport { eta, window, alpha, pairs: samples, separated_pairs: separated }
}
