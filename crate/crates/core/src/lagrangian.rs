//! Mechanical Lagrangians L(x, v) = ½|v|² + ω·v − U(x) on flat tori of
//! dimension 1 or 2, with coordinates in [0, ℓ)^d.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default energy drift tolerance per unit time for [`el_flow`].
pub const ENERGY_TOL: f64 = 1e-8;
/// Stationarity tolerance for [`tonelli_minimizer`].
pub const STATIONARITY_TOL: f64 = 1e-6;

/// Periodic samples on an n (or n×n) grid, interpolated by Catmull–Rom cubics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub n: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    Zero,
    /// U = a·cos x, or a·(cos x + cos y) in two dimensions.
    Cos { amplitude: f64 },
    Table(Table),
}

/// Catmull–Rom basis weights and their first two derivatives at t ∈ [0, 1].
fn cr_basis(t: f64) -> [[f64; 4]; 3] {
    let (t2, t3) = (t * t, t * t * t);
    [
        [
            0.5 * (-t + 2.0 * t2 - t3),
            0.5 * (2.0 - 5.0 * t2 + 3.0 * t3),
            0.5 * (t + 4.0 * t2 - 3.0 * t3),
            0.5 * (-t2 + t3),
        ],
        [
            0.5 * (-1.0 + 4.0 * t - 3.0 * t2),
            0.5 * (-10.0 * t + 9.0 * t2),
            0.5 * (1.0 + 8.0 * t - 9.0 * t2),
            0.5 * (-2.0 * t + 3.0 * t2),
        ],
        [
            0.5 * (4.0 - 6.0 * t),
            0.5 * (-10.0 + 18.0 * t),
            0.5 * (8.0 - 18.0 * t),
            0.5 * (-2.0 + 6.0 * t),
        ],
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangianModel {
    pub dim: usize,
    /// Coordinate period ℓ.
    pub period: f64,
    pub potential: Potential,
    /// Constant covector ω; closed, so it changes actions but not orbits.
    pub magnetic: Option<[f64; 2]>,
}

/// JSON model description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub dim: usize,
    pub potential: String,
    #[serde(default)]
    pub samples: Vec<f64>,
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub period: Option<f64>,
    #[serde(default)]
    pub magnetic: Option<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub pos: [f64; 2],
    pub vel: [f64; 2],
}

impl PhaseState {
    pub fn new(pos: [f64; 2], vel: [f64; 2]) -> Self {
        PhaseState { pos, vel }
    }

    pub fn line(x: f64, v: f64) -> Self {
        PhaseState { pos: [x, 0.0], vel: [v, 0.0] }
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl LagrangianModel {
    pub fn free(dim: usize) -> Self {
        LagrangianModel { dim, period: 1.0, potential: Potential::Zero, magnetic: None }
    }

    /// U = cos x on ℝ/2πℤ; critical value max U = 1.
    pub fn pendulum() -> Self {
        LagrangianModel { dim: 1, period: 2.0 * PI, potential: Potential::Cos { amplitude: 1.0 }, magnetic: None }
    }

    pub fn cos2d(amplitude: f64) -> Self {
        LagrangianModel { dim: 2, period: 2.0 * PI, potential: Potential::Cos { amplitude }, magnetic: None }
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        if !(spec.dim == 1 || spec.dim == 2) {
            return Err(Error::Parameter(format!("dim must be 1 or 2, got {}", spec.dim)));
        }
        let (potential, period) = match spec.potential.as_str() {
            "cos" => (Potential::Cos { amplitude: spec.amplitude.unwrap_or(1.0) }, spec.period.unwrap_or(2.0 * PI)),
            "zero" | "free" => (Potential::Zero, spec.period.unwrap_or(1.0)),
            "table" => {
                let len = spec.samples.len();
                let n = if spec.dim == 1 { len } else { (len as f64).sqrt().round() as usize };
                if n < 4 || (spec.dim == 2 && n * n != len) {
                    return Err(Error::Parameter(format!(
                        "samples: need n ≥ 4 values per axis (n^{} in total), got {len}",
                        spec.dim
                    )));
                }
                (Potential::Table(Table { n, values: spec.samples.clone() }), spec.period.unwrap_or(1.0))
            }
            other => return Err(Error::Parameter(format!("potential: unknown kind {other:?}"))),
        };
        if !(period > 0.0) {
            return Err(Error::Parameter("period must be positive".into()));
        }
        Ok(LagrangianModel { dim: spec.dim, period, potential, magnetic: spec.magnetic })
    }

    pub fn wrap(&self, x: [f64; 2]) -> [f64; 2] {
        let l = self.period;
        [x[0].rem_euclid(l), if self.dim == 2 { x[1].rem_euclid(l) } else { 0.0 }]
    }

    /// U, ∇U and the Hessian of U.
    pub fn potential_jet(&self, x: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let k = 2.0 * PI / self.period;
        match &self.potential {
            Potential::Zero => (0.0, [0.0; 2], [[0.0; 2]; 2]),
            Potential::Cos { amplitude: a } => {
                let (s0, c0) = (k * x[0]).sin_cos();
                if self.dim == 1 {
                    (a * c0, [-a * k * s0, 0.0], [[-a * k * k * c0, 0.0], [0.0, 0.0]])
                } else {
                    let (s1, c1) = (k * x[1]).sin_cos();
                    (
                        a * (c0 + c1),
                        [-a * k * s0, -a * k * s1],
                        [[-a * k * k * c0, 0.0], [0.0, -a * k * k * c1]],
                    )
                }
            }
            Potential::Table(t) => self.table_jet(t, x),
        }
    }

    fn table_jet(&self, t: &Table, x: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let n = t.n;
        let h = self.period / n as f64;
        let cell = |c: f64| {
            let s = c.rem_euclid(self.period) / h;
            let i = (s.floor() as usize).min(n - 1);
            (i, s - i as f64)
        };
        let idx = |i: usize, d: isize| ((i as isize + d).rem_euclid(n as isize)) as usize;
        let (i, tx) = cell(x[0]);
        let bx = cr_basis(tx);
        if self.dim == 1 {
            let p: Vec<f64> = (-1..=2).map(|d| t.values[idx(i, d)]).collect();
            let ev = |b: &[f64; 4]| (0..4).map(|k| b[k] * p[k]).sum::<f64>();
            return (ev(&bx[0]), [ev(&bx[1]) / h, 0.0], [[ev(&bx[2]) / (h * h), 0.0], [0.0, 0.0]]);
        }
        let (j, ty) = cell(x[1]);
        let by = cr_basis(ty);
        let p = |a: usize, b: usize| t.values[idx(i, a as isize - 1) * n + idx(j, b as isize - 1)];
        let ev = |da: usize, db: usize| {
            let mut s = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    s += bx[da][a] * by[db][b] * p(a, b);
                }
            }
            s
        };
        (
            ev(0, 0),
            [ev(1, 0) / h, ev(0, 1) / h],
            [[ev(2, 0) / (h * h), ev(1, 1) / (h * h)], [ev(1, 1) / (h * h), ev(0, 2) / (h * h)]],
        )
    }

    pub fn u(&self, x: [f64; 2]) -> f64 {
        self.potential_jet(x).0
    }

    /// (min U, max U); tables are scanned at four points per cell.
    pub fn potential_range(&self) -> (f64, f64) {
        match &self.potential {
            Potential::Zero => (0.0, 0.0),
            Potential::Cos { amplitude } => {
                let s = amplitude.abs() * self.dim as f64;
                (-s, s)
            }
            Potential::Table(t) => {
                let m = 4 * t.n;
                let h = self.period / m as f64;
                let pts: Vec<[f64; 2]> = if self.dim == 1 {
                    (0..m).map(|i| [i as f64 * h, 0.0]).collect()
                } else {
                    (0..m * m).map(|k| [(k / m) as f64 * h, (k % m) as f64 * h]).collect()
                };
                pts.iter().map(|&p| self.u(p)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                })
            }
        }
    }

    /// Largest |∂²U| entry bound, used for step limits.
    pub fn curvature_bound(&self) -> f64 {
        match &self.potential {
            Potential::Zero => 0.0,
            Potential::Cos { amplitude } => amplitude.abs() * (2.0 * PI / self.period).powi(2),
            Potential::Table(t) => {
                let h = self.period / t.n as f64;
                let d2 = (0..t.values.len())
                    .map(|k| {
                        let x = if self.dim == 1 { [k as f64 * h, 0.0] } else { [(k / t.n) as f64 * h, (k % t.n) as f64 * h] };
                        let (_, _, hs) = self.potential_jet(x);
                        hs[0][0].abs().max(hs[1][1].abs()) + hs[0][1].abs()
                    })
                    .fold(0.0, f64::max);
                d2
            }
        }
    }

    fn omega(&self) -> [f64; 2] {
        self.magnetic.unwrap_or([0.0; 2])
    }

    pub fn lagrangian(&self, s: &PhaseState) -> f64 {
        0.5 * dot(s.vel, s.vel) + dot(self.omega(), s.vel) - self.u(s.pos)
    }

    /// E = v·∂_vL − L = ½|v|² + U.
    pub fn energy(&self, s: &PhaseState) -> f64 {
        0.5 * dot(s.vel, s.vel) + self.u(s.pos)
    }

    /// ∂L/∂v = v + ω.
    pub fn momentum(&self, s: &PhaseState) -> [f64; 2] {
        let w = self.omega();
        [s.vel[0] + w[0], s.vel[1] + w[1]]
    }

    fn accel(&self, x: [f64; 2]) -> [f64; 2] {
        let g = self.potential_jet(x).1;
        [-g[0], -g[1]]
    }
}

/// Time samples of a lifted curve, linear between samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub times: Vec<f64>,
    /// Positions in the universal cover (not wrapped).
    pub points: Vec<[f64; 2]>,
    pub velocities: Option<Vec<[f64; 2]>>,
}

impl Curve {
    pub fn new(times: Vec<f64>, points: Vec<[f64; 2]>, velocities: Option<Vec<[f64; 2]>>) -> Result<Self> {
        if times.len() != points.len() || times.len() < 2 {
            return Err(Error::Parameter("curve needs ≥ 2 samples with matching times".into()));
        }
        if velocities.as_ref().is_some_and(|v| v.len() != times.len()) {
            return Err(Error::Parameter("velocity count differs from sample count".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("curve times must increase strictly".into()));
        }
        Ok(Curve { times, points, velocities })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.times[self.len() - 1] - self.times[0]
    }

    /// Samples i..=j.
    pub fn restrict(&self, i: usize, j: usize) -> Result<Curve> {
        Curve::new(
            self.times[i..=j].to_vec(),
            self.points[i..=j].to_vec(),
            self.velocities.as_ref().map(|v| v[i..=j].to_vec()),
        )
    }

    /// Σ |Δx|²/(2Δt) + ω·Δx − Δt·(U(x_i) + U(x_{i+1}))/2 + k·Δt.
    pub fn action(&self, model: &LagrangianModel, k: f64) -> f64 {
        let w = model.omega();
        let us: Vec<f64> = self.points.iter().map(|&p| model.u(p)).collect();
        (0..self.len() - 1)
            .map(|i| {
                let dt = self.times[i + 1] - self.times[i];
                let dx = [self.points[i + 1][0] - self.points[i][0], self.points[i + 1][1] - self.points[i][1]];
                dot(dx, dx) / (2.0 * dt) + dot(w, dx) - 0.5 * dt * (us[i] + us[i + 1]) + k * dt
            })
            .sum()
    }

    /// Largest speed: recorded velocities, else difference quotients.
    pub fn sup_speed(&self) -> f64 {
        match &self.velocities {
            Some(v) => v.iter().map(|v| dot(*v, *v).sqrt()).fold(0.0, f64::max),
            None => (0..self.len() - 1)
                .map(|i| {
                    let dt = self.times[i + 1] - self.times[i];
                    let dx = [self.points[i + 1][0] - self.points[i][0], self.points[i + 1][1] - self.points[i][1]];
                    dot(dx, dx).sqrt() / dt
                })
                .fold(0.0, f64::max),
        }
    }

    /// Position at time t by linear interpolation.
    pub fn at(&self, t: f64) -> [f64; 2] {
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.len() - 1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let (a, b) = (self.points[k - 1], self.points[k]);
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }
}

// Fourth-order composition of leapfrog steps.
const YOSHIDA_W1: f64 = 1.351_207_191_959_657_8;
const YOSHIDA_W0: f64 = -1.702_414_383_919_315_3;

fn yoshida_step(model: &LagrangianModel, x: &mut [f64; 2], v: &mut [f64; 2], h: f64) {
    let c = [YOSHIDA_W1 / 2.0, (YOSHIDA_W0 + YOSHIDA_W1) / 2.0, (YOSHIDA_W0 + YOSHIDA_W1) / 2.0, YOSHIDA_W1 / 2.0];
    let d = [YOSHIDA_W1, YOSHIDA_W0, YOSHIDA_W1];
    for i in 0..4 {
        x[0] += c[i] * h * v[0];
        x[1] += c[i] * h * v[1];
        if i < 3 {
            let a = model.accel(*x);
            v[0] += d[i] * h * a[0];
            v[1] += d[i] * h * a[1];
        }
    }
}

/// Integrates the Euler–Lagrange flow with a fourth-order symplectic
/// scheme; negative durations integrate backwards.
pub fn el_flow_unchecked(model: &LagrangianModel, state: &PhaseState, duration: f64, step: f64) -> Result<Curve> {
    if !(step > 0.0) || !duration.is_finite() {
        return Err(Error::Parameter(format!("step {step} must be positive")));
    }
    let n = ((duration.abs() / step).ceil() as usize).max(1);
    let h = duration / n as f64;
    let (mut x, mut v) = (state.pos, state.vel);
    if model.dim == 1 {
        x[1] = 0.0;
        v[1] = 0.0;
    }
    let mut times = Vec::with_capacity(n + 1);
    let mut points = Vec::with_capacity(n + 1);
    let mut vels = Vec::with_capacity(n + 1);
    times.push(0.0);
    points.push(x);
    vels.push(v);
    for i in 1..=n {
        yoshida_step(model, &mut x, &mut v, h);
        times.push(i as f64 * h);
        points.push(x);
        vels.push(v);
    }
    if duration < 0.0 {
        times.reverse();
        points.reverse();
        vels.reverse();
    }
    Curve::new(times, points, Some(vels))
}

/// Energy drift max |E(t) − E(0)| / (1 + |t|).
pub fn energy_drift(model: &LagrangianModel, curve: &Curve) -> f64 {
    let v = curve.velocities.as_ref().expect("flow curves carry velocities");
    let i0 = if curve.times[0] == 0.0 { 0 } else { curve.len() - 1 };
    let e0 = model.energy(&PhaseState::new(curve.points[i0], v[i0]));
    (0..curve.len())
        .map(|i| (model.energy(&PhaseState::new(curve.points[i], v[i])) - e0).abs() / (1.0 + curve.times[i].abs()))
        .fold(0.0, f64::max)
}

/// [`el_flow_unchecked`] with the energy contract |E(t) − E(0)| ≤ tol·(1+|t|).
pub fn el_flow_with_tol(
    model: &LagrangianModel,
    state: &PhaseState,
    duration: f64,
    step: f64,
    tol: f64,
) -> Result<Curve> {
    let c = el_flow_unchecked(model, state, duration, step)?;
    let drift = energy_drift(model, &c);
    if drift > tol {
        // Error of a fourth-order scheme scales like h⁴.
        let max_step = step * (tol / drift).powf(0.25) * 0.9;
        return Err(Error::StepTooLarge { step, max_step });
    }
    Ok(c)
}

pub fn el_flow(model: &LagrangianModel, state: &PhaseState, duration: f64, step: f64) -> Result<Curve> {
    el_flow_with_tol(model, state, duration, step, ENERGY_TOL)
}

/// Distance between the start and the result of flowing forward, flipping
/// the velocity, and flowing forward again.
pub fn reversibility_error(model: &LagrangianModel, state: &PhaseState, duration: f64, step: f64) -> Result<f64> {
    let c = el_flow_unchecked(model, state, duration, step)?;
    let last = c.len() - 1;
    let v = c.velocities.as_ref().unwrap()[last];
    let back = PhaseState::new(c.points[last], [-v[0], -v[1]]);
    let d = el_flow_unchecked(model, &back, duration, step)?;
    let end = d.points[d.len() - 1];
    let ve = d.velocities.as_ref().unwrap()[d.len() - 1];
    Ok(((end[0] - state.pos[0]).powi(2)
        + (end[1] - state.pos[1]).powi(2)
        + (ve[0] + state.vel[0]).powi(2)
        + (ve[1] + state.vel[1]).powi(2))
    .sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TonelliOptions {
    pub segments: usize,
    pub max_winding: i32,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TonelliOptions {
    fn default() -> Self {
        TonelliOptions { segments: 100, max_winding: 3, tol: STATIONARITY_TOL, max_iter: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TonelliResult {
    pub curve: Curve,
    pub action: f64,
    /// Straight-line action in the same lift.
    pub straight_action: f64,
    /// max |(x_{i+1} − 2x_i + x_{i−1})/Δt² + ∇U(x_i)|.
    pub residual: f64,
    pub winding: [i32; 2],
    pub iterations: usize,
}

impl TonelliResult {
    /// Initial velocity of the matching Störmer–Verlet step.
    pub fn initial_velocity(&self, model: &LagrangianModel) -> [f64; 2] {
        let (p0, p1) = (self.curve.points[0], self.curve.points[1]);
        let h = self.curve.times[1] - self.curve.times[0];
        let a = model.accel(p0);
        [(p1[0] - p0[0]) / h - 0.5 * h * a[0], (p1[1] - p0[1]) / h - 0.5 * h * a[1]]
    }
}

/// Discrete action with fixed endpoints and its gradient/Hessian in the
/// interior unknowns.
fn discrete_action(model: &LagrangianModel, pts: &[[f64; 2]], h: f64) -> f64 {
    let times: Vec<f64> = (0..pts.len()).map(|i| i as f64 * h).collect();
    Curve { times, points: pts.to_vec(), velocities: None }.action(model, 0.0)
}

fn gradient(model: &LagrangianModel, pts: &[[f64; 2]], h: f64) -> Vec<[f64; 2]> {
    let n = pts.len();
    (1..n - 1)
        .map(|i| {
            let g = model.potential_jet(pts[i]).1;
            let f = |c: usize| (2.0 * pts[i][c] - pts[i - 1][c] - pts[i + 1][c]) / h - h * g[c];
            [f(0), f(1)]
        })
        .collect()
}

fn minimize_lift(
    model: &LagrangianModel,
    x: [f64; 2],
    y: [f64; 2],
    t: f64,
    opts: &TonelliOptions,
) -> std::result::Result<(Vec<[f64; 2]>, f64, usize), (Vec<[f64; 2]>, f64, usize)> {
    let n = opts.segments;
    let h = t / n as f64;
    let d = model.dim;
    let mut pts: Vec<[f64; 2]> = (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            [x[0] + s * (y[0] - x[0]), x[1] + s * (y[1] - x[1])]
        })
        .collect();
    let unknowns = (n - 1) * d;
    let residual = |g: &[[f64; 2]]| g.iter().flat_map(|v| v[..d].iter()).map(|c| c.abs() / h).fold(0.0, f64::max);
    let mut s = discrete_action(model, &pts, h);
    let mut mu = 0.0;
    for it in 0..opts.max_iter {
        let g = gradient(model, &pts, h);
        let r = residual(&g);
        if r <= opts.tol {
            return Ok((pts, r, it));
        }
        let mut hess = DMatrix::<f64>::zeros(unknowns, unknowns);
        let mut rhs = DVector::<f64>::zeros(unknowns);
        for i in 1..n {
            let hs = model.potential_jet(pts[i]).2;
            for a in 0..d {
                let row = (i - 1) * d + a;
                rhs[row] = -g[i - 1][a];
                for b in 0..d {
                    hess[(row, (i - 1) * d + b)] = -h * hs[a][b] + if a == b { 2.0 / h } else { 0.0 };
                }
                if i > 1 {
                    hess[(row, (i - 2) * d + a)] = -1.0 / h;
                }
                if i < n - 1 {
                    hess[(row, i * d + a)] = -1.0 / h;
                }
            }
        }
        // Levenberg shift until the model step decreases the action.
        let mut accepted = false;
        for _ in 0..40 {
            let mut m = hess.clone();
            for k in 0..unknowns {
                m[(k, k)] += mu;
            }
            if let Some(ch) = m.clone().cholesky() {
                let step = ch.solve(&rhs);
                let mut trial = pts.clone();
                for i in 1..n {
                    for a in 0..d {
                        trial[i][a] += step[(i - 1) * d + a];
                    }
                }
                let st = discrete_action(model, &trial, h);
                if st <= s + 1e-14 * s.abs().max(1.0) {
                    pts = trial;
                    s = st;
                    mu *= 0.25;
                    if mu < 1e-12 {
                        mu = 0.0;
                    }
                    accepted = true;
                    break;
                }
            }
            mu = if mu == 0.0 { 1e-6 / h } else { mu * 8.0 };
        }
        if !accepted {
            let r = residual(&gradient(model, &pts, h));
            return if r <= opts.tol { Ok((pts, r, it)) } else { Err((pts, r, it)) };
        }
    }
    let r = residual(&gradient(model, &pts, h));
    if r <= opts.tol {
        Ok((pts, r, opts.max_iter))
    } else {
        Err((pts, r, opts.max_iter))
    }
}

/// Least discrete action from x to y in time T over lifts with bounded
/// winding; starts each lift from the straight line.
pub fn tonelli_minimizer(
    model: &LagrangianModel,
    x: [f64; 2],
    y: [f64; 2],
    t: f64,
    opts: &TonelliOptions,
) -> Result<TonelliResult> {
    if !(t > 0.0) {
        return Err(Error::Parameter(format!("T = {t} must be positive")));
    }
    if opts.segments < 2 {
        return Err(Error::Parameter("need at least 2 segments".into()));
    }
    let l = model.period;
    let (x, y) = (model.wrap(x), model.wrap(y));
    let w = opts.max_winding;
    let mut lifts: Vec<[i32; 2]> = Vec::new();
    for a in -w..=w {
        if model.dim == 1 {
            lifts.push([a, 0]);
        } else {
            for b in -w..=w {
                lifts.push([a, b]);
            }
        }
    }
    let target = |k: [i32; 2]| [y[0] + k[0] as f64 * l, y[1] + k[1] as f64 * l];
    let len2 = |k: [i32; 2]| {
        let z = target(k);
        (z[0] - x[0]).powi(2) + (z[1] - x[1]).powi(2)
    };
    lifts.sort_by(|a, b| len2(*a).total_cmp(&len2(*b)));
    let (_, umax) = model.potential_range();
    let om = model.omega();
    let mut best: Option<TonelliResult> = None;
    let mut failure: Option<Error> = None;
    for k in lifts {
        let z = target(k);
        let dx = [z[0] - x[0], z[1] - x[1]];
        // Action of any curve in this lift is at least this.
        let lower = len2(k) / (2.0 * t) + dot(om, dx) - t * umax;
        if best.as_ref().is_some_and(|b| lower > b.action) {
            continue;
        }
        let h = t / opts.segments as f64;
        let times: Vec<f64> = (0..=opts.segments).map(|i| i as f64 * h).collect();
        let straight: Vec<[f64; 2]> = (0..=opts.segments)
            .map(|i| {
                let s = i as f64 / opts.segments as f64;
                [x[0] + s * dx[0], x[1] + s * dx[1]]
            })
            .collect();
        let straight_action = discrete_action(model, &straight, h);
        match minimize_lift(model, x, z, t, opts) {
            Ok((pts, residual, iterations)) => {
                let curve = Curve::new(times, pts, None)?;
                let action = curve.action(model, 0.0);
                if best.as_ref().map_or(true, |b| action < b.action) {
                    best = Some(TonelliResult { curve, action, straight_action, residual, winding: k, iterations });
                }
            }
            Err((pts, residual, iterations)) => {
                failure.get_or_insert(Error::MinimizerNotConverged { iterations, residual, best: pts });
            }
        }
    }
    match (best, failure) {
        (Some(b), _) => Ok(b),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::Precondition("no lift examined".into())),
    }
}

/// Speed bound for Euler–Lagrange curves of mean action ≤ C: energy is
/// conserved and E ≤ C + 2 max U + |ω|·s, while ½s² ≤ E − min U.
pub fn apriori_speed_bound(model: &LagrangianModel, c: f64) -> f64 {
    let (umin, umax) = model.potential_range();
    let w = dot(model.omega(), model.omega()).sqrt();
    let base = (c + 2.0 * umax - umin).max(0.0);
    w + (w * w + 2.0 * base).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriCheck {
    pub holds: bool,
    pub sup_speed: f64,
    pub bound: f64,
    pub mean_action: f64,
}

pub fn apriori_bound_check(model: &LagrangianModel, curve: &Curve, c: f64) -> Result<AprioriCheck> {
    let mean_action = curve.action(model, 0.0) / curve.duration();
    if mean_action > c {
        return Err(Error::Precondition(format!("mean action {mean_action} exceeds C = {c}")));
    }
    let sup_speed = curve.sup_speed();
    let bound = apriori_speed_bound(model, c);
    Ok(AprioriCheck { holds: sup_speed <= bound, sup_speed, bound, mean_action })
}

/// Velocity along the upper separatrix of the pendulum U = cos x: 2 sin(x/2).
pub fn pendulum_separatrix_speed(x: f64) -> f64 {
    2.0 * (x / 2.0).sin()
}
