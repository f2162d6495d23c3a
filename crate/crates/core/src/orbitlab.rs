//! Periodic orbits near an Aubry set on the cat map, and the cut-and-shadow
//! loop that drives them to c(Γ, 𝒜) < ε·γ(Γ) and A(Γ) < ε²·γ(Γ)².
//!
//! The testbed Aubry set is the cat-map image of a Sturmian subshift: for a
//! homoclinic point Δ of the origin, x(s) = Σ s_n A^n Δ conjugates the shift
//! to A. The cost is F(x) = d(x, 𝒜)², so the critical value is 0 and the
//! action of an orbit is the sum of F over one period.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ergopt::{class_one_search, ClassOneResult, EdgePotential, Weight};
use crate::sft::{dynamic_ball_transitions, specification_from_coding, SampledSystem, SpecificationSymbolic};
use crate::shadowing::model::{from_eigen, to_eigen};
use crate::shadowing::{
    cat_lambda, shadow_specification, HyperbolicModel, NumericSegment, SpecificationNumeric, BETA0, DELTA0, ETA0,
};
use crate::torus::{wrap, TorusPoint};

/// Per-round period reduction factor.
pub const REDUCTION: f64 = 1.25;
/// γ(Γ) of a fixed point: the largest distance on the torus.
pub const FIXED_POINT_GAP: f64 = std::f64::consts::FRAC_1_SQRT_2;
/// Two samples closer than this count as the same point.
pub const SAME_POINT: f64 = 1e-9;
/// Closing jumps below this are rounding noise and carry no profile.
pub const PROFILE_FLOOR: f64 = 1e-12;

pub trait AubrySet {
    fn distance(&self, p: TorusPoint) -> f64;
}

/// Finite invariant set, e.g. a periodic orbit.
#[derive(Clone, Debug)]
pub struct PointSet(pub Vec<TorusPoint>);

impl AubrySet for PointSet {
    fn distance(&self, p: TorusPoint) -> f64 {
        self.0.iter().map(|q| q.distance(&p)).fold(f64::INFINITY, f64::min)
    }
}

/// Sturmian sequence of slope α and intercept θ, embedded by a homoclinic point.
#[derive(Clone, Debug)]
pub struct SturmianAubry {
    pub alpha: f64,
    pub theta: f64,
    /// Integer vector e; Δ has lift P_s e forward and −P_u e backward.
    pub homoclinic: [f64; 2],
    /// Half-width k of the central windows used for distances.
    pub window: usize,
    reps: Vec<TorusPoint>,
    /// Points sharing a central window lie within this of each other.
    pub resolution: f64,
}

const TAIL_TERMS: i64 = 48;

impl SturmianAubry {
    pub fn new(alpha: f64, theta: f64, homoclinic: [f64; 2], window: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Parameter(format!("slope {alpha} outside (0, 1)")));
        }
        if homoclinic.iter().any(|c| c.fract() != 0.0) || homoclinic == [0.0, 0.0] {
            return Err(Error::Parameter("homoclinic vector must be a nonzero integer vector".into()));
        }
        let mut me = SturmianAubry { alpha, theta, homoclinic, window, reps: Vec::new(), resolution: 0.0 };
        let k = window as i64;
        let span = 40 * (k + 10);
        let mut seen = BTreeMap::new();
        for n in -span..=span {
            let w: Vec<u8> = (n - k..=n + k).map(|m| me.symbol(m)).collect();
            seen.entry(w).or_insert(n);
        }
        me.reps = seen.values().map(|&n| me.embedded(n)).collect();
        let l = cat_lambda();
        let (a, b) = to_eigen(homoclinic);
        let size = a.abs() + b.abs();
        me.resolution = 2.0 * size * l.powi(-(k as i32) - 1) / (1.0 - 1.0 / l);
        Ok(me)
    }

    /// Golden slope 1/φ², e = (1, 0), windows of half-width 30.
    pub fn golden() -> Self {
        let phi = crate::shadowing::golden();
        Self::new(1.0 / (phi * phi), 0.3, [1.0, 0.0], 30).expect("valid defaults")
    }

    pub fn symbol(&self, n: i64) -> u8 {
        let f = |m: i64| (m as f64 * self.alpha + self.theta).floor();
        (f(n + 1) - f(n)) as u8
    }

    /// x(σⁿ s); A maps x(σⁿ s) to x(σⁿ⁻¹ s).
    pub fn embedded(&self, n: i64) -> TorusPoint {
        let l = cat_lambda();
        let (a, b) = to_eigen(self.homoclinic);
        let (mut u, mut s) = (0.0, 0.0);
        for m in 0..=TAIL_TERMS {
            s += self.symbol(n + m) as f64 * l.powi(-(m as i32));
        }
        for m in 1..=TAIL_TERMS {
            u -= self.symbol(n - m) as f64 * l.powi(-(m as i32));
        }
        let p = from_eigen(a * u, b * s);
        TorusPoint([wrap(p[0]), wrap(p[1])])
    }

    /// Forward orbit q_k = x(σ⁻ᵏ s), k < n, as a sampled system.
    pub fn sample(&self, n: usize) -> SampledSystem<TorusPoint> {
        let points = (0..n).map(|k| self.embedded(-(k as i64))).collect();
        let next = (0..n).map(|k| (k + 1 < n).then_some(k + 1)).collect();
        SampledSystem { points, next }
    }

    pub fn window_count(&self) -> usize {
        self.reps.len()
    }
}

impl AubrySet for SturmianAubry {
    /// Distance to the nearest window representative; exact to `resolution`.
    fn distance(&self, p: TorusPoint) -> f64 {
        self.reps.iter().map(|q| q.distance(&p)).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbitNumeric {
    pub points: Vec<TorusPoint>,
    pub period: usize,
    /// Σ F over one period; the critical value is 0.
    pub action: f64,
    pub gap: f64,
    pub gap_pair: Option<(usize, usize)>,
    pub aubry_distance: f64,
    /// Times where the orbit was glued from specification segments.
    pub jump_times: Vec<usize>,
    /// |f(Γ_{per−1}) − Γ_0|.
    pub closure: f64,
}

/// Smallest p dividing n with points[i + p] = points[i] for all i.
pub fn primitive_period(points: &[TorusPoint], tol: f64) -> usize {
    let n = points.len();
    (1..=n)
        .find(|&p| n % p == 0 && (0..n).all(|i| points[i].distance(&points[(i + p) % n]) <= tol))
        .unwrap_or(n)
}

/// γ(Γ) and the earliest closest pair (i, j), i < j.
pub fn orbit_gap(points: &[TorusPoint]) -> (f64, Option<(usize, usize)>) {
    let n = points.len();
    if n < 2 {
        return (FIXED_POINT_GAP, None);
    }
    let mut best = (f64::INFINITY, None);
    for i in 0..n {
        for j in i + 1..n {
            let d = points[i].distance(&points[j]);
            if d < best.0 {
                best = (d, Some((i, j)));
            }
        }
    }
    best
}

impl PeriodicOrbitNumeric {
    /// Metrics of a closed orbit, reduced to its primitive period.
    pub fn from_points(
        model: &HyperbolicModel,
        mut points: Vec<TorusPoint>,
        jump_times: Vec<usize>,
        aubry: &dyn AubrySet,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Parameter("empty orbit".into()));
        }
        let p = primitive_period(&points, SAME_POINT);
        points.truncate(p);
        let jump_times = jump_times.into_iter().filter(|&t| t < p).collect();
        let dist: Vec<f64> = points.iter().map(|&x| aubry.distance(x)).collect();
        let (gap, gap_pair) = orbit_gap(&points);
        let closure = model.step(points[p - 1]).distance(&points[0]);
        Ok(PeriodicOrbitNumeric {
            period: p,
            action: dist.iter().map(|d| d * d).sum(),
            aubry_distance: dist.iter().copied().fold(0.0, f64::max),
            gap,
            gap_pair,
            jump_times,
            closure,
            points,
        })
    }
}

/// Segment starts are taken as jump times.
pub fn spec_to_periodic_orbit(
    model: &HyperbolicModel,
    spec: &SpecificationNumeric,
    aubry: &dyn AubrySet,
) -> Result<(PeriodicOrbitNumeric, f64)> {
    if !spec.periodic {
        return Err(Error::Precondition("specification is not periodic".into()));
    }
    let sh = shadow_specification(model, spec)?;
    let jumps = sh.segment_starts.iter().map(|&s| s as usize).collect();
    let orbit = PeriodicOrbitNumeric::from_points(model, sh.orbit, jumps, aubry)?;
    Ok((orbit, sh.e_measured))
}

/// Numeric form of a symbolic specification read off a sample.
pub fn numeric_specification(
    model: &HyperbolicModel,
    system: &SampledSystem<TorusPoint>,
    spec: &SpecificationSymbolic,
) -> Result<SpecificationNumeric> {
    let segs = spec
        .segments
        .iter()
        .map(|s| NumericSegment { start: system.points[s.start], level: 0.0, duration: s.length as f64 })
        .collect();
    SpecificationNumeric::new(model, segs, true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgaVerdict {
    pub holds: bool,
    pub distance_ok: bool,
    pub action_ok: bool,
    /// Closest self-approach (r₁, r₂), with r₂ − r₁ ≤ per/2 and r₂ possibly ≥ per.
    pub witness: Option<(usize, usize)>,
}

pub fn alga_check(orbit: &PeriodicOrbitNumeric, eps: f64) -> AlgaVerdict {
    let eg = eps * orbit.gap;
    let distance_ok = orbit.aubry_distance < eg;
    let action_ok = orbit.action < eg * eg;
    let holds = distance_ok && action_ok;
    let witness = if holds {
        None
    } else {
        orbit.gap_pair.map(|(i, j)| {
            if j - i <= orbit.period / 2 {
                (i, j)
            } else {
                (j, i + orbit.period)
            }
        })
    };
    AlgaVerdict { holds, distance_ok, action_ok, witness }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replacement {
    /// Which of r₁, r₂ sat next to the jump time; both move by the same shift.
    pub which: u8,
    pub from: usize,
    pub to: usize,
    pub gap_before: f64,
    pub gap_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutOutcome {
    pub orbit: PeriodicOrbitNumeric,
    pub witness: (usize, usize),
    pub replacements: Vec<Replacement>,
    /// Size of the closing jump |Γ(r₂) − Γ(r₁)|.
    pub closing_jump: f64,
    /// max_s d(new(s), old(r₁ + s))·e^{λ min(s, L − s)} / closing jump.
    pub profile_constant: f64,
    pub terminal: Option<String>,
}

fn cyclic_gap(a: usize, b: usize, per: usize) -> usize {
    let d = a.abs_diff(b) % per;
    d.min(per - d)
}

fn nearest_jump(jumps: &[usize], r: usize, per: usize) -> Option<usize> {
    jumps
        .iter()
        .copied()
        .filter(|&s| cyclic_gap(s, r % per, per) <= 1)
        .min_by_key(|&s| (cyclic_gap(s, r % per, per), s))
}

/// Signed shift from r to s mod per, in {−1, 0, 1}.
fn signed_shift(r: usize, s: usize, per: usize) -> i64 {
    let d = (s + per - r % per) % per;
    if d == per - 1 {
        -1
    } else {
        d as i64
    }
}

/// Closes Γ on [r₁, r₂] with one jump and shadows the result.
///
/// When r₁ (else r₂) lies within one step of a jump time of Γ, the pair is
/// shifted together so that it lands there.
pub fn cut_and_shadow(
    model: &HyperbolicModel,
    orbit: &PeriodicOrbitNumeric,
    witness: (usize, usize),
    aubry: &dyn AubrySet,
    reduction: f64,
) -> Result<CutOutcome> {
    let per = orbit.period;
    let at = |r: usize| orbit.points[r % per];
    let (mut r1, mut r2) = witness;
    if r2 <= r1 || r2 - r1 > per / 2 + 2 {
        return Err(Error::Precondition(format!("witness ({r1}, {r2}) not within half a period {per}")));
    }
    let mut replacements = Vec::new();
    let near = [(1u8, r1), (2u8, r2)]
        .into_iter()
        .find_map(|(which, r)| nearest_jump(&orbit.jump_times, r, per).map(|s| (which, r, s)));
    if let Some((which, r, s)) = near {
        let shift = signed_shift(r, s, per);
        if shift != 0 {
            let before = at(r1).distance(&at(r2));
            let n1 = (r1 as i64 + shift).rem_euclid(per as i64) as usize;
            let n2 = n1 + (r2 - r1);
            replacements.push(Replacement {
                which,
                from: r,
                to: s,
                gap_before: before,
                gap_after: at(n1).distance(&at(n2)),
            });
            (r1, r2) = (n1, n2);
        }
    }
    let len = r2 - r1;
    let closing_jump = at(r1).distance(&at(r2));
    let terminal = |why: String| CutOutcome {
        orbit: orbit.clone(),
        witness: (r1, r2),
        replacements: replacements.clone(),
        closing_jump,
        profile_constant: 0.0,
        terminal: Some(why),
    };
    if len <= 1 {
        return Ok(terminal(format!("cut at ({r1}, {r2}) leaves period ≤ 1")));
    }
    if len as f64 * reduction > per as f64 {
        return Ok(terminal(format!("cut from period {per} to {len} shrinks by less than {reduction}")));
    }
    // Step by step: iterating Γ(r₁) over the whole arc would amplify rounding by λ^len.
    let arc: Vec<TorusPoint> = (r1..r2).map(at).collect();
    let spec = SpecificationNumeric::from_pseudo_orbit(model, &arc, true)?;
    let sh = shadow_specification(model, &spec)?;
    let lam = cat_lambda().ln();
    let profile_constant = if closing_jump > PROFILE_FLOOR {
        (0..len)
            .map(|s| {
                let d = sh.orbit[s].distance(&at(r1 + s));
                d * (lam * s.min(len - s) as f64).exp() / closing_jump
            })
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    let new = PeriodicOrbitNumeric::from_points(model, sh.orbit, vec![0], aubry)?;
    Ok(CutOutcome { orbit: new, witness: (r1, r2), replacements, closing_jump, profile_constant, terminal: None })
}

/// Measured and derived constants of the construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantLedger {
    /// Specification jumps ≤ C·e^{−λT}.
    pub c: f64,
    pub lambda: f64,
    /// Shadow profile factor relative to E·C·e^{−λT}.
    pub d: f64,
    /// Shadowing constant: sup error / largest jump.
    pub e: f64,
    /// Canonical-coordinate constant; 1 for orthogonal splittings.
    pub b: f64,
    pub d0: f64,
    /// One-step Lipschitz slack for moving a cut point by one step.
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    /// F(y) ≤ K₁·d(y, z)² for z on the Aubry set.
    pub k1: f64,
    /// Lipschitz constant of F.
    pub k2: f64,
    /// Boundary term of the closing estimate.
    pub k3: f64,
    /// Lipschitz constant of the map.
    pub k4: f64,
    /// A(y₀) ≤ K₅·P_T·e^{−2λT}.
    pub k5: f64,
    pub eta0: f64,
    pub beta0: f64,
    pub delta1: f64,
    /// Least time for an orbit to cross between escape thresholds.
    pub alpha: f64,
}

impl ConstantLedger {
    /// Fills the derived constants from the measured ones.
    #[allow(clippy::too_many_arguments)]
    pub fn derive(c: f64, d: f64, e: f64, b0: f64, k5: f64, eps: f64) -> Result<Self> {
        let lambda = cat_lambda().ln();
        let d0 = (b0 * d * e).max(1.0 + 1e-12);
        let (k1, k3) = (1.0, 1.0);
        let b1 = 1.0 / lambda;
        let b2 = 1.0 / (1.0 - (-2.0 * lambda).exp());
        let b3 = 2.0 * (k1 + k3) * d0 * d0 * (b1 + 2.0 * b2) / (eps * eps);
        let b4 = (b3 + 4.0).max(2.0 * d0 / eps);
        let ledger = ConstantLedger {
            c,
            lambda,
            d,
            e,
            b: 1.0,
            d0,
            b0,
            b1,
            b2,
            b3,
            b4,
            k1,
            k2: 2.0 * FIXED_POINT_GAP,
            k3,
            k4: cat_lambda(),
            k5,
            eta0: ETA0,
            beta0: BETA0,
            delta1: DELTA0,
            alpha: 1.0,
        };
        ledger.validate()?;
        Ok(ledger)
    }

    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("C", self.c),
            ("lambda", self.lambda),
            ("D", self.d),
            ("E", self.e),
            ("B", self.b),
            ("D0", self.d0),
            ("B0", self.b0),
            ("B1", self.b1),
            ("B2", self.b2),
            ("B3", self.b3),
            ("B4", self.b4),
            ("K1", self.k1),
            ("K2", self.k2),
            ("K3", self.k3),
            ("K4", self.k4),
            ("K5", self.k5),
            ("eta0", self.eta0),
            ("beta0", self.beta0),
            ("delta1", self.delta1),
            ("alpha", self.alpha),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.entries() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("constant {name} = {v} is not positive")));
            }
        }
        if self.b4 <= 4.0 {
            return Err(Error::Parameter(format!("B4 = {} ≤ 4", self.b4)));
        }
        if self.d0 <= 1.0 {
            return Err(Error::Parameter(format!("D0 = {} ≤ 1", self.d0)));
        }
        Ok(())
    }

    /// A₁(T) = K₅·P_T·e^{−2λT}.
    pub fn a1(&self, p_t: usize, horizon: usize) -> f64 {
        self.k5 * p_t as f64 * (-2.0 * self.lambda * horizon as f64).exp()
    }
}

/// Largest |f(x) − f(y)| / |x − y| over a deterministic set of close pairs.
pub fn lipschitz_slack(model: &HyperbolicModel, samples: usize) -> f64 {
    let mut best: f64 = 1.0;
    for i in 0..samples {
        let t = i as f64 / samples as f64;
        let x = TorusPoint::new(wrap(0.37 + 0.618 * i as f64), wrap(0.11 + 0.414 * i as f64));
        let h = 1e-5;
        let y = x.translate([h * (std::f64::consts::TAU * t).cos(), h * (std::f64::consts::TAU * t).sin()]);
        best = best.max(model.step(x).distance(&model.step(y)) / x.distance(&y));
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PalgaOptions {
    pub eps: f64,
    pub horizon: usize,
    pub radius: f64,
    pub samples: usize,
    pub reduction: f64,
}

impl Default for PalgaOptions {
    fn default() -> Self {
        PalgaOptions { eps: 0.1, horizon: 6, radius: 0.05, samples: 4000, reduction: REDUCTION }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    pub period: usize,
    pub action: f64,
    pub gap: f64,
    pub aubry_distance: f64,
    pub witness: Option<(usize, usize)>,
    pub replacements: Vec<Replacement>,
    pub closing_jump: f64,
    pub profile_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PalgaRun {
    pub orbit: PeriodicOrbitNumeric,
    pub rounds: Vec<RoundLog>,
    pub ledger: ConstantLedger,
    pub horizon: usize,
    /// Number of specification segments.
    pub p_t: usize,
    pub spanning_size: usize,
    pub initial_period: usize,
    pub alga: AlgaVerdict,
    /// action at round n ≤ B₄^{2n}·A₁(T) for every logged round.
    pub trend_ok: bool,
    /// c(Γ_final, 𝒜) ≤ c(Γ_0, 𝒜) + Σ D₀·(closing jump).
    pub distance_budget: f64,
    pub terminal: Option<String>,
}

impl PalgaRun {
    pub fn cut_count(&self) -> usize {
        self.rounds.len() - 1
    }

    pub fn max_rounds(&self) -> usize {
        ((self.initial_period as f64).ln() / REDUCTION.ln()).floor() as usize
    }
}

/// Specification near the Aubry sample, its shadow, and cuts until the
/// two inequalities hold or the loop terminates.
pub fn palga_pipeline(
    model: &HyperbolicModel,
    system: &SampledSystem<TorusPoint>,
    aubry: &dyn AubrySet,
    opts: &PalgaOptions,
) -> Result<PalgaRun> {
    if !(opts.eps > 0.0 && opts.eps < 1.0) {
        return Err(Error::Parameter(format!("ε = {} must lie in (0, 1)", opts.eps)));
    }
    if opts.reduction <= 1.0 {
        return Err(Error::Parameter("reduction factor must exceed 1".into()));
    }
    let t = opts.horizon;
    let coding = dynamic_ball_transitions(system, t, opts.radius)?;
    let sym = specification_from_coding(system, &coding);
    let spec = numeric_specification(model, system, &sym)?;
    let (y0, e_measured) = spec_to_periodic_orbit(model, &spec, aubry)?;

    let lam = cat_lambda().ln();
    let decay = (-lam * t as f64).exp();
    let c = (spec.delta() / decay).max(f64::MIN_POSITIVE.sqrt());
    let e = e_measured.max(1.0);
    let p_t = sym.jump_count();
    let b0 = lipschitz_slack(model, 64);
    let a1_unit = p_t as f64 * (-2.0 * lam * t as f64).exp();
    let k5 = (y0.action / a1_unit).max((e * c).powi(2));
    let ledger = ConstantLedger::derive(c, 1.0, e, b0, k5, opts.eps)?;

    let log_of = |round, o: &PeriodicOrbitNumeric, cut: Option<&CutOutcome>| RoundLog {
        round,
        period: o.period,
        action: o.action,
        gap: o.gap,
        aubry_distance: o.aubry_distance,
        witness: cut.map(|c| c.witness),
        replacements: cut.map(|c| c.replacements.clone()).unwrap_or_default(),
        closing_jump: cut.map_or(0.0, |c| c.closing_jump),
        profile_constant: cut.map_or(0.0, |c| c.profile_constant),
    };
    let initial_period = y0.period;
    let max_rounds = ((initial_period as f64).ln() / REDUCTION.ln()).floor() as usize;
    let mut rounds = vec![log_of(0, &y0, None)];
    let mut orbit = y0.clone();
    let mut budget = y0.aubry_distance;
    let mut terminal = None;
    loop {
        let verdict = alga_check(&orbit, opts.eps);
        let Some(w) = verdict.witness else { break };
        if orbit.period <= 1 {
            terminal = Some("reached a fixed point without meeting both inequalities".into());
            break;
        }
        let cut = cut_and_shadow(model, &orbit, w, aubry, opts.reduction)?;
        if let Some(why) = cut.terminal.clone() {
            terminal = Some(why);
            break;
        }
        budget += ledger.d0 * cut.closing_jump;
        orbit = cut.orbit.clone();
        rounds.push(log_of(rounds.len(), &orbit, Some(&cut)));
        assert!(rounds.len() - 1 <= max_rounds, "more than log_R(initial period) rounds");
    }
    let a1 = ledger.a1(p_t, t);
    let trend_ok = rounds
        .iter()
        .all(|r| r.action <= ledger.b4.powi(2 * r.round as i32) * a1 * (1.0 + 1e-9));
    let alga = alga_check(&orbit, opts.eps);
    Ok(PalgaRun {
        orbit,
        rounds,
        ledger,
        horizon: t,
        p_t,
        spanning_size: sym.spanning_size,
        initial_period,
        alga,
        trend_ok,
        distance_budget: budget,
        terminal,
    })
}

/// The loop on a window potential over a subshift, in exact or float weights.
pub fn palga_discrete<W: Weight>(f: &EdgePotential<W>, eps: &W) -> Result<ClassOneResult<W>> {
    class_one_search(f, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sturmian_embedding_conjugates_shift() {
        let a = SturmianAubry::golden();
        let m = HyperbolicModel::cat_map();
        for n in -20..20 {
            let d = m.step(a.embedded(n)).distance(&a.embedded(n - 1));
            assert!(d < 1e-12, "n={n}: {d}");
        }
        assert_eq!(a.window_count(), 2 * a.window + 2);
        assert!(a.resolution < 1e-10);
    }

    #[test]
    fn sample_points_lie_on_the_set() {
        let a = SturmianAubry::golden();
        let s = a.sample(300);
        assert!(s.points.iter().all(|&p| a.distance(p) <= a.resolution));
    }

    #[test]
    fn primitive_period_of_double_traversal() {
        let p = vec![TorusPoint::new(0.1, 0.2), TorusPoint::new(0.3, 0.4)];
        let q = [p.clone(), p].concat();
        assert_eq!(primitive_period(&q, 1e-12), 2);
    }

    #[test]
    fn fixed_point_satisfies_alga() {
        let m = HyperbolicModel::cat_map();
        let zero = TorusPoint::new(0.0, 0.0);
        let o = PeriodicOrbitNumeric::from_points(&m, vec![zero; 4], vec![0], &PointSet(vec![zero])).unwrap();
        assert_eq!(o.period, 1);
        assert_eq!(o.gap, FIXED_POINT_GAP);
        let v = alga_check(&o, 0.01);
        assert!(v.holds && v.witness.is_none());
    }

    #[test]
    fn ledger_rejects_nonpositive() {
        assert!(ConstantLedger::derive(0.0, 1.0, 1.0, 2.0, 1.0, 0.1).is_err());
        let l = ConstantLedger::derive(1.0, 1.0, 1.0, 2.0, 1.0, 0.1).unwrap();
        assert!(l.b4 > 4.0 && l.d0 > 1.0);
    }
}
