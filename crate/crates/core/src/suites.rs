//! Quantitative suites over the testbeds, one per acceptance criterion.
//!
//! Each suite is deterministic for its parameters and seed, and returns the
//! measured numbers next to the verdict so callers can tabulate them.

use std::f64::consts::PI;
use std::time::Instant;

use num::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ergopt::locking::default_scales;
use crate::ergopt::search::orbit_gap;
use crate::ergopt::{build_channel_discrete, class_one_search, verify_locking, EdgePotential, Weight};
use crate::lagrangian::{LagrangianModel, PhaseState};
use crate::orbitlab::{palga_pipeline, PalgaOptions, SturmianAubry};
use crate::sft::{entropy, girth_bound, shortest_periodic_orbit, word_count_entropy, Sft};
use crate::shadowing::model::{cat_grid_next, from_eigen, grid_point};
use crate::shadowing::shadow::linear_corrections;
use crate::shadowing::{
    cat_lambda, claim_violations, escape_segmentation, exponential_closeness, golden, shadow_specification,
    EscapeThresholds, HyperbolicModel, Profile, SpecificationNumeric, SuspPoint,
};
use crate::stats::loglog_fit;
use crate::torus::TorusPoint;
use crate::weakkam::{
    aubry_flow_drift, classify_and_extract_sets, critical_value, energy_level_cells, lax_oleinik, mane_potential,
    quadratic_bound_check, ActionGraph, GraphOptions, PotentialValue, DEFAULT_MENU,
};

/// A curve for plotting, usually a decay profile or a regression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub log_x: bool,
    pub log_y: bool,
    /// Fitted slope or rate shown next to the curve.
    pub fit: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub criterion: u8,
    pub name: String,
    pub pass: bool,
    /// Named measurements, in a fixed order.
    pub metrics: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub series: Vec<Series>,
    /// Wall time; excluded from deterministic tables.
    pub seconds: f64,
}

impl SuiteOutcome {
    fn new(criterion: u8, name: &str) -> Self {
        SuiteOutcome {
            criterion,
            name: name.into(),
            pass: true,
            metrics: Vec::new(),
            notes: Vec::new(),
            series: Vec::new(),
            seconds: 0.0,
        }
    }

    fn metric(&mut self, name: &str, v: f64) {
        self.metrics.push((name.into(), v));
    }

    fn require(&mut self, ok: bool, what: String) {
        if !ok {
            self.pass = false;
            self.notes.push(what);
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let ms: Vec<String> = self.metrics.iter().map(|(n, v)| format!("{n}={v:.6e}")).collect();
        let mut s = format!("{verdict} [{:>2}] {}: {}", self.criterion, self.name, ms.join(" "));
        if !self.notes.is_empty() {
            s += &format!(" | {}", self.notes.join("; "));
        }
        s
    }
}

fn timed(mut out: SuiteOutcome, start: Instant, limit: Option<f64>) -> SuiteOutcome {
    out.seconds = start.elapsed().as_secs_f64();
    if let Some(l) = limit {
        let s = out.seconds;
        out.require(s < l, format!("runtime {s:.2} s ≥ {l} s"));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GirthParams {
    pub instances: usize,
    pub max_alphabet: usize,
    pub seed: u64,
}

impl Default for GirthParams {
    fn default() -> Self {
        GirthParams { instances: 200, max_alphabet: 10, seed: 1 }
    }
}

pub fn girth_suite(p: &GirthParams) -> SuiteOutcome {
    let start = Instant::now();
    let mut out = SuiteOutcome::new(1, "shortest periodic orbit within 1 + M e^{1-h}");
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..p.instances {
        let m = rng.gen_range(1..=p.max_alphabet);
        let density = rng.gen_range(0.1..0.9);
        let s = Sft::random(&mut rng, m, density);
        let h = entropy(&s).value;
        let per = shortest_periodic_orbit(&s).period() as f64;
        let bound = girth_bound(m, h);
        worst = worst.max(per / bound);
        if per > bound + 1e-9 {
            violations += 1;
        }
    }
    out.metric("violations", violations as f64);
    out.metric("worst_ratio", worst);
    out.require(violations == 0, format!("{violations} violations"));
    timed(out, start, Some(10.0))
}

pub fn golden_entropy_suite() -> SuiteOutcome {
    let start = Instant::now();
    let mut out = SuiteOutcome::new(2, "golden mean entropy");
    let s = Sft::golden_mean();
    let exact = golden().ln();
    let spectral = entropy(&s).value;
    let words = word_count_entropy(&s, 24);
    out.metric("spectral_error", (spectral - exact).abs());
    out.metric("word_count_error", (words - exact).abs());
    out.require((spectral - exact).abs() <= 1e-9, "spectral estimate off".into());
    out.require((words - exact).abs() <= 0.02, "word count estimate off".into());
    timed(out, start, None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShadowParams {
    pub deltas: Vec<f64>,
    pub per_delta: usize,
    pub length: usize,
    pub seed: u64,
}

impl Default for ShadowParams {
    fn default() -> Self {
        ShadowParams { deltas: vec![1e-2, 1e-3, 1e-4], per_delta: 50, length: 200, seed: 3 }
    }
}

/// Order of the cat map on (1/25)Z².
pub const GRID_ORDER: usize = 50;

/// Periodic δ-pseudo-orbit: an exact periodic orbit on (1/25)Z² repeated
/// to `length`, displaced so that every jump has size δ in a random direction.
/// `length` must be a multiple of [`GRID_ORDER`].
pub fn periodic_pseudo_orbit<R: Rng + ?Sized>(rng: &mut R, length: usize, delta: f64) -> Vec<TorusPoint> {
    assert!(length % GRID_ORDER == 0, "length {length} is not a multiple of {GRID_ORDER}");
    let n = 25;
    let next = cat_grid_next(n);
    let mut k = rng.gen_range(0..n * n);
    let base: Vec<TorusPoint> = (0..length)
        .map(|_| {
            let p = grid_point(n, k / n, k % n);
            k = next[k];
            p
        })
        .collect();
    let jumps: Vec<[f64; 2]> = (0..length)
        .map(|_| {
            let a = rng.gen_range(0.0..2.0 * PI);
            [delta * a.cos(), delta * a.sin()]
        })
        .collect();
    let e = linear_corrections(length, &jumps, true);
    base.iter().zip(&e).map(|(p, c)| p.translate([-c[0], -c[1]])).collect()
}

pub fn shadowing_suite(p: &ShadowParams) -> SuiteOutcome {
    let start = Instant::now();
    let mut out = SuiteOutcome::new(3, "cat-map shadowing of periodic pseudo-orbits");
    if p.length == 0 || p.length % GRID_ORDER != 0 {
        out.require(false, format!("length must be a positive multiple of {GRID_ORDER}"));
        return timed(out, start, None);
    }
    let m = HyperbolicModel::cat_map();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut means = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for &delta in &p.deltas {
        let mut total = 0.0;
        for _ in 0..p.per_delta {
            let z = periodic_pseudo_orbit(&mut rng, p.length, delta);
            let r = SpecificationNumeric::from_pseudo_orbit(&m, &z, true).and_then(|s| {
                let d = s.delta();
                shadow_specification(&m, &s).map(|r| (r, d))
            });
            match r {
                Ok((r, d)) => {
                    out.require(r.periodic && r.closure_residual < 1e-9, format!("δ={delta}: shadow not periodic"));
                    worst_ratio = worst_ratio.max(r.sup_error / d);
                    total += r.sup_error;
                }
                Err(e) => out.require(false, format!("δ={delta}: {e}")),
            }
        }
        means.push(total / p.per_delta as f64);
    }
    out.metric("worst_error_over_delta", worst_ratio);
    out.require(worst_ratio <= 1.7, format!("sup error reaches {worst_ratio:.3}·δ"));
    if p.deltas.len() >= 2 {
        let (_, slope) = loglog_fit(&p.deltas, &means);
        out.metric("loglog_slope", slope);
        out.require((slope - 1.0).abs() <= 0.05, format!("slope {slope}"));
        out.series.push(Series {
            name: "mean sup error vs delta".into(),
            x: p.deltas.clone(),
            y: means,
            log_x: true,
            log_y: true,
            fit: Some(slope),
        });
    }
    timed(out, start, Some(30.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClosenessParams {
    pub windows: Vec<f64>,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for ClosenessParams {
    fn default() -> Self {
        ClosenessParams { windows: vec![5.0, 10.0, 20.0], pairs: 20, seed: 4 }
    }
}

pub fn closeness_suite(p: &ClosenessParams) -> SuiteOutcome {
    let start = Instant::now();
    let mut out = SuiteOutcome::new(4, "exponential closeness rate");
    let m = HyperbolicModel::cat_map();
    let target = 0.9 * cat_lambda().ln();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut overall = f64::INFINITY;
    for &l in &p.windows {
        let scale = 0.05 * cat_lambda().powf(-l);
        let mut min_rate = f64::INFINITY;
        for k in 0..p.pairs {
            let x = TorusPoint::new(rng.gen(), rng.gen());
            let sign = |r: &mut ChaCha8Rng| if r.gen_bool(0.5) { 1.0 } else { -1.0 };
            let (a, b) = (sign(&mut rng) * rng.gen_range(0.2..1.0), sign(&mut rng) * rng.gen_range(0.2..1.0));
            let y = x.translate(from_eigen(a * scale, b * scale));
            let lift = |q| SuspPoint { base: q, level: 0.0 };
            match exponential_closeness(&m, lift(x), lift(y), l) {
                Ok(prof) => {
                    min_rate = min_rate.min(prof.fitted_rate);
                    if k == 0 {
                        out.series.push(Series {
                            name: format!("closeness profile L={l}"),
                            x: prof.times.clone(),
                            y: prof.distances.clone(),
                            log_x: false,
                            log_y: true,
                            fit: Some(prof.fitted_rate),
                        });
                    }
                }
                Err(e) => out.require(false, format!("L={l}: {e}")),
            }
        }
        out.metric(&format!("min_rate_L{l}"), min_rate);
        overall = overall.min(min_rate);
    }
    out.require(overall >= target, format!("rate {overall} < {target}"));
    timed(out, start, None)
}

/// Grid with the documented time menu and a stencil of n/8 cells.
pub fn model_graph(model: &LagrangianModel, n: usize) -> crate::Result<ActionGraph> {
    ActionGraph::new(model, &GraphOptions { n, stencil: n / 8, menu: DEFAULT_MENU.to_vec() })
}

fn pendulum_graph(n: usize) -> crate::Result<ActionGraph> {
    model_graph(&LagrangianModel::pendulum(), n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumParams {
    pub n: usize,
    pub refined_n: usize,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams { n: 200, refined_n: 400 }
    }
}

fn finite(p: PotentialValue) -> Option<f64> {
    match p {
        PotentialValue::Finite(v) => Some(v),
        PotentialValue::NegInfinity { .. } => None,
    }
}

pub fn critical_value_suite(p: &PendulumParams) -> SuiteOutcome {
    let start = Instant::now();
    let mut out = SuiteOutcome::new(5, "pendulum critical value and free-particle potential");
    let mut run = || -> crate::Result<()> {
        let g = pendulum_graph(p.n)?;
        let cv = critical_value(&g)?;
        out.metric("c", cv.c);
        out.metric("discretization", cv.discretization);
        out.require((cv.c - 1.0).abs() <= 0.02, format!("c = {}", cv.c));
        let free = LagrangianModel::free(1);
        let f = ActionGraph::new(&free, &GraphOptions { n: p.n, stencil: p.n / 8, menu: DEFAULT_MENU.to_vec() })?;
        let mut worst: f64 = 0.0;
        for k in [0.125f64, 0.5, 2.0] {
            for (x, y) in [(0, p.n / 2), (p.n / 20, 7 * p.n / 20), (3 * p.n / 4, p.n / 10)] {
                let raw = (f.position(y)[0] - f.position(x)[0]).abs();
                let d = raw.min(1.0 - raw);
                let exact = d * (2.0 * k).sqrt();
                match finite(mane_potential(&f, k, x, y)) {
                    Some(phi) => worst = worst.max((phi - exact).abs() / exact),
                    None => out.require(false, format!("Φ_{k} unbounded below")),
                }
            }
        }
        out.metric("free_rel_error", worst);
        out.require(worst <= 0.02, format!("free-particle error {worst}"));
        Ok(())
    };
    if let Err(e) = run() {
        out.require(false, e.to_string());
    }
    timed(out, start, Some(60.0))
}

pub fn weak_kam_suite(p: &PendulumParams) -> SuiteOutcome {
    let start = Instant::now();
    let mut out = SuiteOutcome::new(6, "pendulum weak KAM solution");
    let mut run = || -> crate::Result<()> {
        let g = pendulum_graph(p.n)?;
        let cv = critical_value(&g)?;
        let u = lax_oleinik(&g, cv.c, cv.base)?;
        let err = (0..g.node_count())
            .map(|v| {
                let x = g.position(v)[0];
                let x = if x > PI { x - 2.0 * PI } else { x };
                (u.value(v) - 4.0 * (1.0 - (x / 2.0).cos())).abs()
            })
            .fold(0.0, f64::max);
        let bad = u.domination_violations(&g, 1e-9);
        let z = PhaseState::line(0.0, 0.0);
        let k = quadratic_bound_check(&g, &u, &z, 1.0, 3.0 * g.h)?;
        let g2 = pendulum_graph(p.refined_n)?;
        let c2 = critical_value(&g2)?;
        let u2 = lax_oleinik(&g2, c2.c, c2.base)?;
        let k2 = quadratic_bound_check(&g2, &u2, &z, 1.0, 3.0 * g2.h)?;
        out.metric("u_sup_error", err);
        out.metric("domination_violations", bad as f64);
        out.metric("edges", g.edge_count() as f64);
        out.metric("K", k);
        out.metric("K_refined", k2);
        out.require(err <= 0.02, format!("u error {err}"));
        out.require(bad == 0, format!("{bad} dominated edges violated"));
        out.require((0.4..=0.7).contains(&k), format!("K = {k}"));
        out.require((k2 - k).abs() <= 0.2 * k, format!("K moves from {k} to {k2}"));
        let xs: Vec<f64> = (0..g.node_count()).map(|v| g.position(v)[0]).collect();
        out.series.push(Series {
            name: "weak KAM solution".into(),
            x: xs,
            y: u.values.clone(),
            log_x: false,
            log_y: false,
            fit: None,
        });
        Ok(())
    };
    if let Err(e) = run() {
        out.require(false, e.to_string());
    }
    timed(out, start, None)
}

pub fn invariant_sets_suite(p: &PendulumParams) -> SuiteOutcome {
    let start = Instant::now();
    let mut out = SuiteOutcome::new(7, "pendulum Mather, Aubry and Mañé sets");
    let mut run = || -> crate::Result<()> {
        let g = pendulum_graph(p.n)?;
        let cv = critical_value(&g)?;
        let u = lax_oleinik(&g, cv.c, cv.base)?;
        let sets = classify_and_extract_sets(&g, &u)?;
        let n = g.n as i32;
        let aubry_spread = sets
            .aubry
            .cells
            .iter()
            .map(|c| c[0].min(n - c[0]).max(c[2].abs()))
            .max()
            .unwrap_or(i32::MAX);
        let mane_off = sets
            .mane
            .cells
            .iter()
            .map(|c| energy_level_cells(&g.model, cv.c, &sets.mane.cell_state(c), g.h, sets.mane.dv))
            .fold(0.0, f64::max);
        let chain = sets.mather.is_subset(&sets.aubry) && sets.aubry.is_subset(&sets.mane);
        let drift = aubry_flow_drift(&g.model, &sets.aubry, 0.5)?;
        out.metric("aubry_cells", sets.aubry.cells.len() as f64);
        out.metric("aubry_spread_cells", aubry_spread as f64);
        out.metric("mane_energy_cells", mane_off);
        out.metric("inclusion_chain", chain as u8 as f64);
        out.metric("aubry_flow_drift", drift);
        out.require(sets.mather.cells.contains(&[0, 0, 0, 0]), "(0,0) missing from Mather set".into());
        out.require(aubry_spread <= 3, format!("Aubry set spreads {aubry_spread} cells"));
        out.require(mane_off <= 2.0, format!("Mañé set {mane_off} cells off the energy level"));
        out.require(chain, "inclusion chain broken".into());
        out.require(drift <= 2.0, format!("Aubry drift {drift} cells"));
        Ok(())
    };
    if let Err(e) = run() {
        out.require(false, e.to_string());
    }
    timed(out, start, None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveParams {
    pub curves: usize,
    pub n: usize,
    pub seed: u64,
}

impl Default for CurveParams {
    fn default() -> Self {
        CurveParams { curves: 1000, n: 200, seed: 8 }
    }
}

pub fn closed_curves_suite(p: &CurveParams) -> SuiteOutcome {
    closed_curves_on(&LagrangianModel::pendulum(), p)
}

/// Random closed curves on the grid of `model`, with action at its critical value.
pub fn closed_curves_on(model: &LagrangianModel, p: &CurveParams) -> SuiteOutcome {
    let start = Instant::now();
    let mut out = SuiteOutcome::new(8, "closed grid curves have nonnegative critical action");
    let mut run = || -> crate::Result<()> {
        if model.dim != 1 {
            return Err(crate::Error::Parameter("closed curve sampler needs a one-dimensional model".into()));
        }
        let g = model_graph(model, p.n)?;
        let c = critical_value(&g)?.c;
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let (r, n) = (g.stencil as i64, g.n as i64);
        let mut worst = f64::INFINITY;
        let mut violations = 0;
        for _ in 0..p.curves {
            let start = rng.gen_range(0..g.node_count());
            let (mut v, mut total, mut lift) = (start, 0.0, 0i64);
            for _ in 0..rng.gen_range(1..40) {
                let es: Vec<usize> = g.out_edges(v).collect();
                let e = es[rng.gen_range(0..es.len())];
                total += g.weight(e, c);
                lift += (g.displacement(e)[0] / g.h).round() as i64;
                v = g.head(e);
            }
            let mut need = -lift + n * rng.gen_range(-1..=1);
            while need != 0 || v != start {
                let step = need.clamp(-r, r);
                let es: Vec<usize> = g
                    .out_edges(v)
                    .filter(|&e| (g.displacement(e)[0] / g.h).round() as i64 == step)
                    .collect();
                let e = es[rng.gen_range(0..es.len())];
                total += g.weight(e, c);
                need -= step;
                v = g.head(e);
            }
            worst = worst.min(total);
            if total < -1e-3 {
                violations += 1;
            }
        }
        out.metric("min_action", worst);
        out.metric("violations", violations as f64);
        out.require(violations == 0, format!("{violations} curves below −1e−3"));
        Ok(())
    };
    if let Err(e) = run() {
        out.require(false, e.to_string());
    }
    timed(out, start, None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LockingParams {
    pub instances: usize,
    pub max_alphabet: usize,
    /// ε as a fraction num/den.
    pub eps: (i64, i64),
    pub seed: u64,
}

impl Default for LockingParams {
    fn default() -> Self {
        LockingParams { instances: 100, max_alphabet: 6, eps: (1, 10), seed: 9 }
    }
}

/// One instance of the locking suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockingRow {
    pub instance: usize,
    pub alphabet: usize,
    pub period: usize,
    pub rounds: usize,
    pub alga: bool,
    pub locked: bool,
    /// Competing cycle and its mean, when not locked.
    pub certificate: Option<(Vec<usize>, String)>,
    pub error: Option<String>,
}

pub fn random_window_potential(seed: u64, max_m: usize) -> EdgePotential<BigRational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(2..=max_m);
    let sft = Sft::random(&mut rng, m, 0.5);
    let costs: Vec<i64> = (0..m * m).map(|_| rng.gen_range(0..20)).collect();
    EdgePotential::from_fn(&sft, 2, |w| <BigRational as Weight>::from_ratio(costs[w[0] * m + w[1]], 5))
        .expect("window-2 potential on allowed words")
}

pub fn locking_instance(p: &LockingParams, i: usize) -> LockingRow {
    let f = random_window_potential(p.seed.wrapping_mul(100_000).wrapping_add(i as u64), p.max_alphabet);
    let eps = <BigRational as Weight>::from_ratio(p.eps.0, p.eps.1);
    let mut row = LockingRow {
        instance: i,
        alphabet: f.sft().alphabet_size(),
        period: 0,
        rounds: 0,
        alga: false,
        locked: false,
        certificate: None,
        error: None,
    };
    let res = class_one_search(&f, &eps).and_then(|r| {
        row.period = r.orbit.period();
        row.rounds = r.rounds;
        row.alga = r.satisfied;
        let (gap, _) = orbit_gap(r.orbit.word());
        let (rho, gb) = default_scales(gap);
        let ch = build_channel_discrete(&r.orbit, eps.clone(), rho, gb)?;
        verify_locking(&f, &ch)
    });
    match res {
        Ok(v) => {
            row.locked = v.locked;
            row.certificate = v.competitors.first().map(|(o, m)| (o.word().to_vec(), m.to_string()));
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

pub fn locking_summary(rows: &[LockingRow]) -> SuiteOutcome {
    let mut out = SuiteOutcome::new(9, "class-one search and channel locking");
    let alga = rows.iter().filter(|r| r.alga).count();
    let locked = rows.iter().filter(|r| r.locked).count();
    let certified = rows.iter().filter(|r| !r.locked && r.certificate.is_some()).count();
    let unexplained = rows.len() - locked - certified;
    out.metric("instances", rows.len() as f64);
    out.metric("alga_pass", alga as f64);
    out.metric("locked", locked as f64);
    out.metric("certified_failures", certified as f64);
    out.metric("unexplained_failures", unexplained as f64);
    out.require(alga == rows.len(), format!("{} orbits fail the two inequalities", rows.len() - alga));
    out.require(unexplained == 0, format!("{unexplained} failures without certificate"));
    for r in rows.iter().filter(|r| r.error.is_some()) {
        out.notes.push(format!("instance {}: {}", r.instance, r.error.as_ref().unwrap()));
    }
    out
}

pub fn locking_suite(p: &LockingParams) -> SuiteOutcome {
    let start = Instant::now();
    let rows: Vec<LockingRow> = (0..p.instances).map(|i| locking_instance(p, i)).collect();
    timed(locking_summary(&rows), start, None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PalgaSweepParams {
    pub horizons: Vec<usize>,
    pub radius: f64,
    pub eps: f64,
    pub samples: usize,
}

impl Default for PalgaSweepParams {
    fn default() -> Self {
        PalgaSweepParams { horizons: vec![4, 6, 8, 10], radius: 0.05, eps: 0.1, samples: 4000 }
    }
}

pub fn palga_sweep_suite(p: &PalgaSweepParams) -> SuiteOutcome {
    let start = Instant::now();
    let mut out = SuiteOutcome::new(10, "palga trend over the horizon");
    let m = HyperbolicModel::cat_map();
    let a = SturmianAubry::golden();
    let sys = a.sample(p.samples);
    let mut runs = Vec::new();
    for &t in &p.horizons {
        let opts = PalgaOptions { eps: p.eps, horizon: t, radius: p.radius, samples: p.samples, ..Default::default() };
        match palga_pipeline(&m, &sys, &a, &opts) {
            Ok(r) => {
                out.require(r.alga.holds, format!("T={t}: final orbit fails the two inequalities"));
                out.require(r.trend_ok, format!("T={t}: action exceeds B4^(2n) A1(T)"));
                runs.push((t, r));
            }
            Err(e) => out.require(false, format!("T={t}: {e}")),
        }
    }
    for (t, r) in &runs {
        out.metric(&format!("action_T{t}"), r.orbit.action);
        out.metric(&format!("distance_T{t}"), r.orbit.aubry_distance);
        out.metric(&format!("P_T{t}"), r.p_t as f64);
        out.metric(&format!("K_T{t}"), r.spanning_size as f64);
    }
    for w in runs.windows(2) {
        let ((t0, r0), (t1, r1)) = (&w[0], &w[1]);
        let (o0, o1) = (&r0.orbit, &r1.orbit);
        out.require(
            o1.aubry_distance <= o0.aubry_distance + a.resolution,
            format!("distance grows from T={t0} to T={t1}"),
        );
        out.require(
            o1.action <= o0.action + 2.0 * a.resolution * o0.aubry_distance * o0.period as f64,
            format!("action grows from T={t0} to T={t1}"),
        );
        let (g0, g1) = ((r0.p_t as f64).ln() / *t0 as f64, (r1.p_t as f64).ln() / *t1 as f64);
        out.require(g1 < g0, format!("log P_T/T not decreasing: {g0:.4} at T={t0}, {g1:.4} at T={t1}"));
    }
    let xs: Vec<f64> = runs.iter().map(|(t, _)| *t as f64).collect();
    out.series.push(Series {
        name: "final c(Γ, A) vs T".into(),
        x: xs.clone(),
        y: runs.iter().map(|(_, r)| r.orbit.aubry_distance).collect(),
        log_x: false,
        log_y: true,
        fit: None,
    });
    out.series.push(Series {
        name: "log K_T / T vs T".into(),
        x: xs,
        y: runs.iter().map(|(t, r)| (r.spanning_size as f64).ln() / *t as f64).collect(),
        log_x: false,
        log_y: false,
        fit: None,
    });
    timed(out, start, None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EscapeParams {
    pub profiles: usize,
    pub seed: u64,
}

impl Default for EscapeParams {
    fn default() -> Self {
        EscapeParams { profiles: 500, seed: 11 }
    }
}

/// Distance profiles f ≤ g on [−20, 0]: a floor plus random tent bumps.
pub fn synthetic_profiles<R: Rng + ?Sized>(rng: &mut R, gap: f64) -> (Profile, Profile) {
    let n = 401;
    let times: Vec<f64> = (0..n).map(|i| -20.0 + 0.05 * i as f64).collect();
    let floor = rng.gen_range(0.0..0.05) * gap;
    let bumps: Vec<(f64, f64, f64)> = (0..rng.gen_range(0..6))
        .map(|_| (rng.gen_range(-20.0..0.0), rng.gen_range(0.2..3.0), rng.gen_range(0.0..gap)))
        .collect();
    let f: Vec<f64> = times
        .iter()
        .map(|&t| {
            bumps
                .iter()
                .map(|&(c, w, h)| h * (1.0 - (t - c).abs() / w).max(0.0))
                .fold(floor, f64::max)
        })
        .collect();
    let g: Vec<f64> = f.iter().map(|&v| v + rng.gen_range(0.0..0.1) * gap).collect();
    (Profile::new(times.clone(), f).expect("grid"), Profile::new(times, g).expect("grid"))
}

pub fn escape_suite(p: &EscapeParams) -> SuiteOutcome {
    let start = Instant::now();
    let mut out = SuiteOutcome::new(11, "escape-time segmentation order relations");
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (mut violations, mut escapes) = (0usize, 0usize);
    for i in 0..p.profiles {
        let gap = rng.gen_range(0.5..1.5);
        let near = rng.gen_range(0.01..0.24) * gap;
        let th = EscapeThresholds::from_gap(gap, near).expect("near below γ/4");
        let (f, g) = synthetic_profiles(&mut rng, gap);
        match escape_segmentation(&f, &g, th) {
            Ok(seg) => {
                escapes += seg.escapes();
                let v = claim_violations(&seg, &f, th);
                if let Some(first) = v.first() {
                    out.notes.push(format!("profile {i}: {first}"));
                }
                violations += v.len();
            }
            Err(e) => out.require(false, format!("profile {i}: {e}")),
        }
    }
    out.metric("escapes", escapes as f64);
    out.metric("violations", violations as f64);
    out.require(violations == 0, format!("{violations} violations"));
    timed(out, start, None)
}

/// Every suite with default parameters, in criterion order.
pub fn all_suites() -> Vec<SuiteOutcome> {
    let pendulum = PendulumParams::default();
    vec![
        girth_suite(&GirthParams::default()),
        golden_entropy_suite(),
        shadowing_suite(&ShadowParams::default()),
        closeness_suite(&ClosenessParams::default()),
        critical_value_suite(&pendulum),
        weak_kam_suite(&pendulum),
        invariant_sets_suite(&pendulum),
        closed_curves_suite(&CurveParams::default()),
        locking_suite(&LockingParams::default()),
        palga_sweep_suite(&PalgaSweepParams::default()),
        escape_suite(&EscapeParams::default()),
    ]
}
