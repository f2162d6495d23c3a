//! Shadowing of δ-possible specifications.
//!
//! On the cat map the correction solving y_{n+1} = A y_n is a pair of
//! geometric sums in the eigenbasis. The perturbed map is solved by Newton
//! iteration seeded with that linear solve; the suspension reduces to its
//! base map plus a per-segment constant time shift.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::{cat_lambda, from_eigen, lift_diff, to_eigen, HyperbolicModel, ModelKind, SuspPoint};
use crate::error::{Error, Result};
use crate::torus::TorusPoint;

/// Jumps at or above this are rejected.
pub const DELTA0: f64 = 0.1;
/// Minimal segment length for maps.
pub const MIN_SEGMENT: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericSegment {
    pub start: TorusPoint,
    /// Flow level of the start; 0 for maps.
    pub level: f64,
    /// Number of steps (maps) or flow time (suspension).
    pub duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecificationNumeric {
    pub segments: Vec<NumericSegment>,
    /// jumps[i]: gap between the end of segment i and the start of segment i+1.
    pub jumps: Vec<f64>,
    pub periodic: bool,
}

impl SpecificationNumeric {
    pub fn new(model: &HyperbolicModel, segments: Vec<NumericSegment>, periodic: bool) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Parameter("specification has no segments".into()));
        }
        let min = if model.is_flow() { model.roof() } else { MIN_SEGMENT };
        for s in &segments {
            if s.duration < min - 1e-12 {
                return Err(Error::Parameter(format!("segment duration {} below {min}", s.duration)));
            }
            if !model.is_flow() && s.duration.fract() != 0.0 {
                return Err(Error::Parameter("map segments need integer durations".into()));
            }
        }
        let n = segments.len();
        let count = if periodic { n } else { n - 1 };
        let jumps = (0..count)
            .map(|i| {
                let s = &segments[i];
                let t = &segments[(i + 1) % n];
                if model.is_flow() {
                    let end = model.flow(SuspPoint { base: s.start, level: s.level }, s.duration);
                    model.susp_distance(&end, &SuspPoint { base: t.start, level: t.level })
                } else {
                    model.iterate(s.start, s.duration as i64).distance(&t.start)
                }
            })
            .collect();
        Ok(SpecificationNumeric { segments, jumps, periodic })
    }

    /// Each point a segment of length 1.
    pub fn from_pseudo_orbit(model: &HyperbolicModel, points: &[TorusPoint], periodic: bool) -> Result<Self> {
        let segs = points
            .iter()
            .map(|&p| NumericSegment { start: p, level: 0.0, duration: 1.0 })
            .collect();
        Self::new(model, segs, periodic)
    }

    pub fn delta(&self) -> f64 {
        self.jumps.iter().copied().fold(0.0, f64::max)
    }

    pub fn period(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Pseudo-orbit of a map specification, one point per time step.
    pub fn expand(&self, model: &HyperbolicModel) -> Vec<TorusPoint> {
        let mut out = Vec::new();
        for s in &self.segments {
            let mut p = s.start;
            for _ in 0..s.duration as usize {
                out.push(p);
                p = model.step(p);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowResult {
    pub shadow_point: TorusPoint,
    pub shadow_level: f64,
    /// Shadow orbit sampled once per base step.
    pub orbit: Vec<TorusPoint>,
    /// σ(t) − t on each segment.
    pub time_shifts: Vec<f64>,
    pub segment_starts: Vec<f64>,
    pub sup_error: f64,
    /// sup_error / δ, 0 when δ = 0.
    pub e_measured: f64,
    pub periodic: bool,
    /// Largest one-step residual |f(y_n) − y_{n+1}|, including the wrap when periodic.
    pub closure_residual: f64,
    /// Shadow period (flow time or steps) when periodic.
    pub period: f64,
}

impl ShadowResult {
    /// Reparametrization σ, piecewise linear with σ(t) − t constant per segment.
    pub fn sigma(&self, t: f64) -> f64 {
        let i = self.segment_starts.iter().rposition(|&s| s <= t).unwrap_or(0);
        t + self.time_shifts[i]
    }
}

/// Shadows a δ-possible specification by a true orbit.
pub fn shadow_specification(model: &HyperbolicModel, spec: &SpecificationNumeric) -> Result<ShadowResult> {
    let delta = spec.delta();
    if delta >= DELTA0 {
        return Err(Error::Precondition(format!("jump size {delta} ≥ δ₀ = {DELTA0}")));
    }
    match model.kind {
        ModelKind::Suspension { .. } => shadow_suspension(model, spec, delta),
        _ => {
            let z = spec.expand(model);
            let corr = map_corrections(model, &z, spec.periodic)?;
            let mut starts = Vec::new();
            let mut t = 0.0;
            for s in &spec.segments {
                starts.push(t);
                t += s.duration;
            }
            Ok(assemble(model, &z, &corr, spec.periodic, delta, vec![0.0; starts.len()], starts, 0.0))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    model: &HyperbolicModel,
    z: &[TorusPoint],
    corr: &[[f64; 2]],
    periodic: bool,
    delta: f64,
    time_shifts: Vec<f64>,
    segment_starts: Vec<f64>,
    level: f64,
) -> ShadowResult {
    let orbit: Vec<TorusPoint> = z.iter().zip(corr).map(|(p, e)| p.translate(*e)).collect();
    let sup_error = corr.iter().map(|e| e[0].hypot(e[1])).fold(0.0, f64::max);
    let n = orbit.len();
    let steps = if periodic { n } else { n - 1 };
    let closure_residual = (0..steps)
        .map(|i| model.step(orbit[i]).distance(&orbit[(i + 1) % n]))
        .fold(0.0, f64::max);
    let period = if model.is_flow() {
        n as f64 * model.roof() + time_shifts.last().copied().unwrap_or(0.0)
    } else {
        n as f64
    };
    ShadowResult {
        shadow_point: orbit[0],
        shadow_level: level,
        orbit,
        time_shifts,
        segment_starts,
        sup_error,
        e_measured: if delta > 0.0 { sup_error / delta } else { 0.0 },
        periodic,
        closure_residual,
        period,
    }
}

/// Lifted jumps j_n = z_{n+1} − f(z_n).
fn jumps(model: &HyperbolicModel, z: &[TorusPoint], periodic: bool) -> Vec<[f64; 2]> {
    let n = z.len();
    let count = if periodic { n } else { n.saturating_sub(1) };
    (0..count)
        .map(|i| lift_diff(model.step(z[i]).0, z[(i + 1) % n].0))
        .collect()
}

/// Corrections e_n with z_n + e_n a true orbit of the cat map, solving
/// e_{n+1} = A e_n − j_n in the eigenbasis.
pub fn linear_corrections(z_len: usize, jumps: &[[f64; 2]], periodic: bool) -> Vec<[f64; 2]> {
    let n = z_len;
    let l = cat_lambda();
    let (ju, js): (Vec<f64>, Vec<f64>) = jumps.iter().map(|&j| to_eigen(j)).unzip();
    let mut eu = vec![0.0; n];
    let mut es = vec![0.0; n];
    if n == 0 {
        return Vec::new();
    }
    if periodic {
        let wrap = 1.0 / (1.0 - l.powi(-(n as i32)));
        // e^u_{n-1} = Σ_{k≥0} λ^{-(k+1)} j^u_{n-1+k}, periodic in k.
        let mut s = 0.0;
        for k in (0..n).rev() {
            s = (s + ju[(n - 1 + k) % n]) / l;
        }
        eu[n - 1] = s * wrap;
        for i in (0..n - 1).rev() {
            eu[i] = (eu[i + 1] + ju[i]) / l;
        }
        // e^s_0 = −Σ_{k≥1} λ^{-(k-1)} j^s_{-k}.
        let mut s = 0.0;
        for k in (1..=n).rev() {
            s = s / l + js[(n * 2 - k) % n];
        }
        es[0] = -s * wrap;
        for i in 0..n - 1 {
            es[i + 1] = es[i] / l - js[i];
        }
    } else {
        for i in (0..n - 1).rev() {
            eu[i] = (eu[i + 1] + ju[i]) / l;
        }
        for i in 0..n - 1 {
            es[i + 1] = es[i] / l - js[i];
        }
    }
    eu.iter().zip(&es).map(|(&a, &b)| from_eigen(a, b)).collect()
}

fn map_corrections(model: &HyperbolicModel, z: &[TorusPoint], periodic: bool) -> Result<Vec<[f64; 2]>> {
    let j = jumps(model, z, periodic);
    let mut e = linear_corrections(z.len(), &j, periodic);
    if matches!(model.kind, ModelKind::PerturbedCatMap { .. }) {
        e = newton_corrections(model, z, e, periodic)?;
    }
    Ok(e)
}

/// Newton iteration on F_n(e) = f(z_n + e_n) − z_{n+1} − e_{n+1} (mod Z²),
/// closed cyclically when periodic and by E^u/E^s end conditions otherwise.
fn newton_corrections(
    model: &HyperbolicModel,
    z: &[TorusPoint],
    mut e: Vec<[f64; 2]>,
    periodic: bool,
) -> Result<Vec<[f64; 2]>> {
    let n = z.len();
    let eqs = if periodic { n } else { n - 1 };
    let dim = 2 * n;
    let mut residual = f64::INFINITY;
    for _ in 0..30 {
        let mut r = DVector::zeros(dim);
        let mut jac = DMatrix::zeros(dim, dim);
        for i in 0..eqs {
            let k = (i + 1) % n;
            let y = [z[i].0[0] + e[i][0], z[i].0[1] + e[i][1]];
            let fy = model.lift_step(y);
            let d = lift_diff([z[k].0[0] + e[k][0], z[k].0[1] + e[k][1]], fy);
            r[2 * i] = d[0];
            r[2 * i + 1] = d[1];
            let a = model.jacobian(y);
            for p in 0..2 {
                for q in 0..2 {
                    jac[(2 * i + p, 2 * i + q)] += a[(p, q)];
                }
                jac[(2 * i + p, 2 * k + p)] -= 1.0;
            }
        }
        if !periodic {
            // e_{n-1} has no unstable part, e_0 no stable part.
            let u = super::model::unstable_dir();
            let s = super::model::stable_dir();
            let last = n - 1;
            r[2 * eqs] = e[last][0] * u[0] + e[last][1] * u[1];
            jac[(2 * eqs, 2 * last)] = u[0];
            jac[(2 * eqs, 2 * last + 1)] = u[1];
            r[2 * eqs + 1] = e[0][0] * s[0] + e[0][1] * s[1];
            jac[(2 * eqs + 1, 0)] = s[0];
            jac[(2 * eqs + 1, 1)] = s[1];
        }
        residual = r.amax();
        if residual < 1e-14 {
            return Ok(e);
        }
        let step = jac
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::NoConvergence { iterations: 0, residual })?;
        for i in 0..n {
            e[i][0] -= step[2 * i];
            e[i][1] -= step[2 * i + 1];
        }
    }
    if residual < 1e-12 {
        Ok(e)
    } else {
        Err(Error::NoConvergence { iterations: 30, residual })
    }
}

fn shadow_suspension(model: &HyperbolicModel, spec: &SpecificationNumeric, delta: f64) -> Result<ShadowResult> {
    let r = model.roof();
    let n = spec.segments.len();
    let mut base = Vec::new();
    let mut shifts = Vec::with_capacity(n);
    let mut starts = Vec::with_capacity(n);
    let mut shift = 0.0;
    let mut t = 0.0;
    let level0 = spec.segments[0].level;
    for (i, s) in spec.segments.iter().enumerate() {
        starts.push(t);
        shifts.push(shift);
        t += s.duration;
        let end = model.flow(SuspPoint { base: s.start, level: s.level }, s.duration);
        // Base steps taken by the segment: crossings of the roof.
        let steps = ((s.level + s.duration) / r).floor() as i64;
        let mut p = s.start;
        for _ in 0..steps {
            base.push(p);
            p = model.step(p);
        }
        if i + 1 < n || spec.periodic {
            let next = &spec.segments[(i + 1) % n];
            let gap = next.level - end.level;
            if gap.abs() > r / 4.0 {
                return Err(Error::Precondition("segment levels too far apart to compare".into()));
            }
            shift += gap;
        } else {
            base.push(p);
        }
    }
    if base.is_empty() {
        return Err(Error::Parameter("specification shorter than one return".into()));
    }
    let corr = map_corrections(&HyperbolicModel::cat_map(), &base, spec.periodic)?;
    let mut res = assemble(model, &base, &corr, spec.periodic, delta, shifts, starts, level0);
    res.period = if spec.periodic { spec.period() + shift } else { spec.period() };
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shadowing::model::golden;

    fn true_orbit(model: &HyperbolicModel, p: TorusPoint, n: usize) -> Vec<TorusPoint> {
        let mut v = vec![p];
        for _ in 1..n {
            v.push(model.step(*v.last().unwrap()));
        }
        v
    }

    #[test]
    fn true_orbit_shadows_itself() {
        let m = HyperbolicModel::cat_map();
        let z = true_orbit(&m, TorusPoint::new(0.31, 0.72), 30);
        let spec = SpecificationNumeric::from_pseudo_orbit(&m, &z, false).unwrap();
        let r = shadow_specification(&m, &spec).unwrap();
        assert!(r.sup_error < 1e-9);
        assert_eq!(r.e_measured, 0.0);
        assert_eq!(r.sigma(7.5), 7.5);
    }

    // One jump of size δ along a fixed direction on a periodic pseudo-orbit:
    // each eigen-component of the error is at most δ·φ.
    #[test]
    fn single_jump_bound() {
        let delta = 1e-3;
        for &angle in &[0.0, 0.7, 1.9, 3.0] {
            let n = 40;
            let mut j = vec![[0.0; 2]; n];
            j[5] = [delta * f64::cos(angle), delta * f64::sin(angle)];
            let e = linear_corrections(n, &j, true);
            for k in 0..n {
                let (a, b) = to_eigen(e[k]);
                assert!(a.abs() <= delta * golden() + 1e-15);
                assert!(b.abs() <= delta * golden() + 1e-15);
                let next = crate::shadowing::model::cat_lift(e[k]);
                let want = [next[0] - j[k][0], next[1] - j[k][1]];
                let got = e[(k + 1) % n];
                assert!((want[0] - got[0]).abs() < 1e-15 && (want[1] - got[1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn periodic_pseudo_orbit_gives_periodic_shadow() {
        let m = HyperbolicModel::cat_map();
        let mut z = true_orbit(&m, TorusPoint::new(0.1, 0.2), 12);
        z[4] = z[4].translate([3e-3, -2e-3]);
        let spec = SpecificationNumeric::from_pseudo_orbit(&m, &z, true).unwrap();
        let r = shadow_specification(&m, &spec).unwrap();
        assert!(r.closure_residual < 1e-10);
        assert!(r.sup_error <= 1.7 * spec.delta());
    }

    #[test]
    fn perturbed_newton_converges() {
        let m = HyperbolicModel::perturbed(0.05).unwrap();
        let mut z = true_orbit(&m, TorusPoint::new(0.4, 0.9), 25);
        z[10] = z[10].translate([2e-3, 1e-3]);
        z[17] = z[17].translate([-1e-3, 1e-3]);
        let spec = SpecificationNumeric::from_pseudo_orbit(&m, &z, false).unwrap();
        let r = shadow_specification(&m, &spec).unwrap();
        assert!(r.closure_residual < 1e-10, "residual {}", r.closure_residual);
        assert!(r.e_measured < 3.0, "E = {}", r.e_measured);

        // A periodic cat-map orbit is a periodic pseudo-orbit of the perturbed map.
        let cat = HyperbolicModel::cat_map();
        let start = TorusPoint::new(0.2, 0.4);
        let mut cyc = vec![start];
        loop {
            let q = cat.step(*cyc.last().unwrap());
            if q.distance(&start) < 1e-12 {
                break;
            }
            cyc.push(q);
        }
        let spec = SpecificationNumeric::from_pseudo_orbit(&m, &cyc, true).unwrap();
        let r = shadow_specification(&m, &spec).unwrap();
        assert!(r.closure_residual < 1e-10);
        assert!(r.period == cyc.len() as f64);
        assert!(r.e_measured < 3.0, "E = {}", r.e_measured);
    }

    #[test]
    fn large_jump_rejected() {
        let m = HyperbolicModel::cat_map();
        let z = vec![TorusPoint::new(0.0, 0.0), TorusPoint::new(0.3, 0.3)];
        let spec = SpecificationNumeric::from_pseudo_orbit(&m, &z, true).unwrap();
        assert!(shadow_specification(&m, &spec).is_err());
    }

    #[test]
    fn suspension_time_shift_is_per_segment() {
        let m = HyperbolicModel::suspension(1.0).unwrap();
        let x = TorusPoint::new(0.3, 0.6);
        let y = m.iterate(x, 3);
        let segs = vec![
            NumericSegment { start: x, level: 0.2, duration: 3.0 },
            NumericSegment { start: y.translate([1e-4, 0.0]), level: 0.25, duration: 4.0 },
        ];
        let spec = SpecificationNumeric::new(&m, segs, false).unwrap();
        let r = shadow_specification(&m, &spec).unwrap();
        assert!((r.time_shifts[1] - 0.05).abs() < 1e-12);
        assert!((r.sigma(5.0) - 5.05).abs() < 1e-12);
        assert!(r.closure_residual < 1e-10);
        assert!(r.sup_error < 2e-4);
    }
}
