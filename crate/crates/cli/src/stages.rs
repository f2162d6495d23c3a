//! Pipeline stages: validated parameters per (module, op) and their execution.

use std::path::PathBuf;
use std::str::FromStr;

use mane_core::ergopt::locking::default_scales;
use mane_core::ergopt::search::orbit_gap;
use mane_core::ergopt::{build_channel_discrete, class_one_search, verify_locking, EdgePotential, Weight};
use mane_core::lagrangian::LagrangianModel;
use mane_core::orbitlab::{palga_pipeline, PalgaOptions, SturmianAubry};
use mane_core::sft::{entropy, word_count_entropy, Sft};
use mane_core::shadowing::HyperbolicModel;
use mane_core::suites::{self, *};
use mane_core::weakkam::{
    build_channel_continuous, classify_and_extract_sets, critical_value, lax_oleinik, mane_potential, PotentialValue,
};
use num::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{decode_params, stage_seed, ConfigError, ExperimentConfig};

/// Floats in tables carry 17 significant digits.
pub fn fx(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Default)]
pub struct StageOutput {
    pub tables: Vec<Table>,
    pub json: Vec<(String, Value)>,
    pub outcome: Option<SuiteOutcome>,
    /// Invariant failure found after the artifacts were produced.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropyParams {
    /// 0/1 transition matrix; the golden mean shift when absent.
    pub matrix: Option<Vec<Vec<u8>>>,
    pub word_length: usize,
}

impl Default for EntropyParams {
    fn default() -> Self {
        EntropyParams { matrix: None, word_length: 24 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomPotentialParams {
    pub max_alphabet: usize,
    pub seed: u64,
}

impl Default for RandomPotentialParams {
    fn default() -> Self {
        RandomPotentialParams { max_alphabet: 6, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchParams {
    /// JSON file holding an EdgePotential with rational values.
    pub potential: PathBuf,
    #[serde(default = "default_eps")]
    pub eps: String,
}

fn default_eps() -> String {
    "1/10".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub n: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { n: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialParams {
    pub n: usize,
    /// Energy level; the critical value when absent.
    pub k: Option<f64>,
    /// Endpoint pairs in configuration coordinates.
    pub pairs: Vec<([f64; 2], [f64; 2])>,
}

impl Default for PotentialParams {
    fn default() -> Self {
        PotentialParams { n: 200, k: None, pairs: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub eps: f64,
    /// Fractions of the coordinate period.
    pub rho: f64,
    pub gamma_bar: f64,
    /// Height of the closed horizontal orbit, as a fraction of the period.
    pub level: f64,
    pub n: usize,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams { eps: 0.1, rho: 1.0 / 32.0, gamma_bar: 0.25, level: 0.5, n: 64 }
    }
}

#[derive(Clone, Debug)]
pub enum Job {
    Girth(GirthParams),
    Entropy(EntropyParams),
    LockSuite(LockingParams),
    RandomPotential(RandomPotentialParams),
    Search(SearchParams),
    Shadow(ShadowParams),
    Closeness(ClosenessParams),
    Escape(EscapeParams),
    Critical(LagrangianModel, GridParams),
    Potential(LagrangianModel, PotentialParams),
    Sets(LagrangianModel, GridParams),
    Checks(LagrangianModel, GridParams),
    Curves(LagrangianModel, CurveParams),
    Channel(LagrangianModel, ChannelParams),
    Palga(PalgaOptions),
    PalgaSweep(PalgaSweepParams),
}

pub const OPS: &[(&str, &[&str])] = &[
    ("sft", &["girth", "entropy"]),
    ("ergopt", &["lock-suite", "random", "search"]),
    ("shadowing", &["shadow-suite", "closeness", "escape"]),
    ("weakkam", &["potential", "critical", "sets", "channel", "checks", "curves"]),
    ("orbitlab", &["palga", "palga-sweep"]),
];

#[derive(Clone, Debug)]
pub struct Stage {
    pub index: usize,
    pub module: String,
    pub op: String,
    pub job: Job,
}

/// Parameters with a `seed` field take the stage seed unless given explicitly.
fn seeded(params: &Value, seed: u64) -> Value {
    let mut p = params.clone();
    if let Value::Object(m) = &mut p {
        m.entry("seed").or_insert(json!(seed));
    }
    p
}

/// Validate every stage before anything runs.
pub fn plan(cfg: &ExperimentConfig) -> Result<Vec<Stage>, ConfigError> {
    let model = || -> Result<LagrangianModel, ConfigError> {
        match &cfg.system {
            None => Ok(LagrangianModel::pendulum()),
            Some(s) => match s.lagrangian() {
                Some(m) => m.map_err(|e| ConfigError::field("system", e.to_string())),
                None => Err(ConfigError::field("system", "weakkam stages need a lagrangian system")),
            },
        }
    };
    let mut stages = Vec::new();
    for (i, st) in cfg.pipeline.iter().enumerate() {
        if !st.params.is_object() {
            return Err(ConfigError::field(format!("pipeline[{i}].params"), "expected an object"));
        }
        let seed = stage_seed(cfg.seed, i);
        let p = &st.params;
        let job = match (st.module.as_str(), st.op.as_str()) {
            ("sft", "girth") => Job::Girth(decode_params(i, &seeded(p, seed))?),
            ("sft", "entropy") => Job::Entropy(decode_params(i, p)?),
            ("ergopt", "lock-suite") => Job::LockSuite(decode_params(i, &seeded(p, seed))?),
            ("ergopt", "random") => Job::RandomPotential(decode_params(i, &seeded(p, seed))?),
            ("ergopt", "search") => {
                let sp: SearchParams = decode_params(i, p)?;
                BigRational::from_str(&sp.eps)
                    .map_err(|e| ConfigError::field(format!("pipeline[{i}].params.eps"), e.to_string()))?;
                Job::Search(sp)
            }
            ("shadowing", "shadow-suite") => Job::Shadow(decode_params(i, &seeded(p, seed))?),
            ("shadowing", "closeness") => Job::Closeness(decode_params(i, &seeded(p, seed))?),
            ("shadowing", "escape") => Job::Escape(decode_params(i, &seeded(p, seed))?),
            ("weakkam", "critical") => Job::Critical(model()?, decode_params(i, p)?),
            ("weakkam", "potential") => Job::Potential(model()?, decode_params(i, p)?),
            ("weakkam", "sets") => Job::Sets(model()?, decode_params(i, p)?),
            ("weakkam", "checks") => Job::Checks(model()?, decode_params(i, p)?),
            ("weakkam", "curves") => Job::Curves(model()?, decode_params(i, &seeded(p, seed))?),
            ("weakkam", "channel") => Job::Channel(model()?, decode_params(i, p)?),
            ("orbitlab", "palga") => Job::Palga(decode_params(i, p)?),
            ("orbitlab", "palga-sweep") => Job::PalgaSweep(decode_params(i, p)?),
            (m, o) => {
                let known = OPS.iter().find(|(name, _)| *name == m);
                let msg = match known {
                    None => format!("unknown module {m:?}"),
                    Some((_, ops)) => format!("unknown op {o:?} for {m}, expected one of {}", ops.join(", ")),
                };
                return Err(ConfigError::field(format!("pipeline[{i}]"), msg));
            }
        };
        stages.push(Stage { index: i, module: st.module.clone(), op: st.op.clone(), job });
    }
    Ok(stages)
}

fn is_pendulum(m: &LagrangianModel) -> bool {
    *m == LagrangianModel::pendulum()
}

fn pendulum_params(n: usize) -> PendulumParams {
    PendulumParams { n, refined_n: 2 * n }
}

pub fn execute(job: &Job) -> anyhow::Result<StageOutput> {
    let mut out = StageOutput::default();
    match job {
        Job::Girth(p) => out.outcome = Some(girth_suite(p)),
        Job::Entropy(p) => {
            let s = match &p.matrix {
                Some(m) => Sft::new(m.clone())?,
                None => Sft::golden_mean(),
            };
            let e = entropy(&s);
            let mut t = Table::new("entropy", &["alphabet", "spectral", "word_count", "word_length", "component"]);
            let comp: Vec<String> = e.component.iter().map(|c| c.to_string()).collect();
            t.push(vec![
                s.alphabet_size().to_string(),
                fx(e.value),
                fx(word_count_entropy(&s, p.word_length)),
                p.word_length.to_string(),
                comp.join(" "),
            ]);
            out.tables.push(t);
            if p.matrix.is_none() {
                out.outcome = Some(golden_entropy_suite());
            }
        }
        Job::LockSuite(p) => {
            let rows: Vec<LockingRow> = (0..p.instances).into_par_iter().map(|i| locking_instance(p, i)).collect();
            let mut t = Table::new(
                "verdicts",
                &["instance", "alphabet", "period", "rounds", "alga", "locked", "certificate", "certificate_mean", "error"],
            );
            for r in &rows {
                let (word, mean) = match &r.certificate {
                    Some((w, m)) => (w.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "), m.clone()),
                    None => (String::new(), String::new()),
                };
                t.push(vec![
                    r.instance.to_string(),
                    r.alphabet.to_string(),
                    r.period.to_string(),
                    r.rounds.to_string(),
                    r.alga.to_string(),
                    r.locked.to_string(),
                    word,
                    mean,
                    r.error.clone().unwrap_or_default(),
                ]);
            }
            out.tables.push(t);
            out.outcome = Some(locking_summary(&rows));
        }
        Job::RandomPotential(p) => {
            let f = random_window_potential(p.seed, p.max_alphabet);
            out.json.push(("potential".into(), serde_json::to_value(&f)?));
        }
        Job::Search(p) => {
            let text = std::fs::read_to_string(&p.potential)
                .map_err(|e| anyhow::anyhow!("{}: {e}", p.potential.display()))?;
            let f: EdgePotential<BigRational> = serde_json::from_str(&text)?;
            let eps = BigRational::from_str(&p.eps).map_err(|e| anyhow::anyhow!("eps: {e}"))?;
            let r = class_one_search(&f, &eps)?;
            let (gap, _) = orbit_gap(r.orbit.word());
            let (rho, gb) = default_scales(gap);
            let ch = build_channel_discrete(&r.orbit, eps.clone(), rho, gb)?;
            let v = verify_locking(&f, &ch)?;
            let competitors: Vec<Value> =
                v.competitors.iter().map(|(o, m)| json!({"word": o.word(), "mean": m.to_string()})).collect();
            out.json.push((
                "search".into(),
                json!({
                    "orbit": r.orbit.word(),
                    "periods": r.periods,
                    "witnesses": r.witnesses,
                    "rounds": r.rounds,
                    "satisfied": r.satisfied,
                    "gap": r.metrics.gap,
                    "aubry_distance": r.metrics.aubry_distance,
                    "action": r.metrics.action.to_string(),
                    "diagnostic": r.diagnostic,
                    "rho": rho,
                    "gamma_bar": gb,
                    "locked": v.locked,
                    "orbit_mean": v.orbit_mean.to_string(),
                    "competitors": competitors,
                }),
            ));
            let mut t = Table::new("search", &["period", "rounds", "satisfied", "gap", "aubry_distance", "action", "locked"]);
            t.push(vec![
                r.orbit.period().to_string(),
                r.rounds.to_string(),
                r.satisfied.to_string(),
                fx(r.metrics.gap),
                fx(r.metrics.aubry_distance),
                fx(r.metrics.action.to_f64()),
                v.locked.to_string(),
            ]);
            out.tables.push(t);
        }
        Job::Shadow(p) => out.outcome = Some(shadowing_suite(p)),
        Job::Closeness(p) => out.outcome = Some(closeness_suite(p)),
        Job::Escape(p) => out.outcome = Some(escape_suite(p)),
        Job::Critical(m, p) => {
            let g = model_graph(m, p.n)?;
            let cv = critical_value(&g)?;
            let mut t = Table::new("critical", &["n", "c", "discretization", "base", "bisection_steps", "certificate_weight"]);
            t.push(vec![
                p.n.to_string(),
                fx(cv.c),
                fx(cv.discretization),
                cv.base.to_string(),
                cv.bisection_steps.to_string(),
                cv.certificate.as_ref().map(|c| fx(c.weight)).unwrap_or_default(),
            ]);
            out.tables.push(t);
            if is_pendulum(m) {
                out.outcome = Some(critical_value_suite(&pendulum_params(p.n)));
            }
        }
        Job::Potential(m, p) => {
            let g = model_graph(m, p.n)?;
            let k = match p.k {
                Some(k) => k,
                None => critical_value(&g)?.c,
            };
            let pairs =
                if p.pairs.is_empty() { vec![([0.0, 0.0], [m.period / 2.0, 0.0])] } else { p.pairs.clone() };
            let mut t = Table::new("potential", &["k", "x0", "x1", "y0", "y1", "value", "finite"]);
            for (x, y) in pairs {
                let v = mane_potential(&g, k, g.node_at(x), g.node_at(y));
                let (val, fin) = match v {
                    PotentialValue::Finite(v) => (v, true),
                    PotentialValue::NegInfinity { .. } => (f64::NEG_INFINITY, false),
                };
                t.push(vec![fx(k), fx(x[0]), fx(x[1]), fx(y[0]), fx(y[1]), fx(val), fin.to_string()]);
            }
            out.tables.push(t);
        }
        Job::Sets(m, p) => {
            let g = model_graph(m, p.n)?;
            let cv = critical_value(&g)?;
            let u = lax_oleinik(&g, cv.c, cv.base)?;
            let sets = classify_and_extract_sets(&g, &u)?;
            let mut t = Table::new("cells", &["set", "ix", "iy", "iv_x", "iv_y", "x", "y", "v_x", "v_y"]);
            for (name, s) in [("mather", &sets.mather), ("aubry", &sets.aubry), ("mane", &sets.mane)] {
                for c in &s.cells {
                    let st = s.cell_state(c);
                    t.push(vec![
                        name.into(),
                        c[0].to_string(),
                        c[1].to_string(),
                        c[2].to_string(),
                        c[3].to_string(),
                        fx(st.pos[0]),
                        fx(st.pos[1]),
                        fx(st.vel[0]),
                        fx(st.vel[1]),
                    ]);
                }
            }
            out.tables.push(t);
            if is_pendulum(m) {
                out.outcome = Some(invariant_sets_suite(&pendulum_params(p.n)));
            }
        }
        Job::Checks(m, p) => {
            let g = model_graph(m, p.n)?;
            let cv = critical_value(&g)?;
            let u = lax_oleinik(&g, cv.c, cv.base)?;
            let mut f = Table::new("field", &["node", "x", "y", "u"]);
            for v in 0..g.node_count() {
                let x = g.position(v);
                f.push(vec![v.to_string(), fx(x[0]), fx(x[1]), fx(u.value(v))]);
            }
            let mut c = Table::new("checks", &["c", "domination_violations", "sweeps", "residual"]);
            c.push(vec![
                fx(cv.c),
                u.domination_violations(&g, 1e-9).to_string(),
                u.sweeps.to_string(),
                fx(u.residual),
            ]);
            out.tables.push(f);
            out.tables.push(c);
            if is_pendulum(m) {
                out.outcome = Some(weak_kam_suite(&pendulum_params(p.n)));
            }
        }
        Job::Curves(m, p) => out.outcome = Some(suites::closed_curves_on(m, p)),
        Job::Channel(m, p) => {
            let l = m.period;
            let orbit: Vec<[f64; 2]> = (0..64).map(|i| [l * i as f64 / 64.0, l * p.level]).collect();
            let ch = build_channel_continuous(&orbit, l, p.eps, p.rho * l, p.gamma_bar * l, p.n)?;
            let mut t = Table::new("channel", &["i", "j", "x", "y", "phi"]);
            let h = l / p.n as f64;
            for i in 0..p.n {
                for j in 0..p.n {
                    t.push(vec![i.to_string(), j.to_string(), fx(i as f64 * h), fx(j as f64 * h), fx(ch.value(i, j))]);
                }
            }
            out.tables.push(t);
            let mut s = Table::new("channel_summary", &["eps", "rho", "gamma_bar", "c2_norm", "plateau"]);
            s.push(vec![fx(ch.eps), fx(ch.rho), fx(ch.gamma_bar), fx(ch.c2_norm), fx(ch.eps * ch.gamma_bar.powi(2) / 32.0)]);
            out.tables.push(s);
        }
        Job::Palga(opts) => {
            let a = SturmianAubry::golden();
            let sys = a.sample(opts.samples);
            let run = palga_pipeline(&HyperbolicModel::cat_map(), &sys, &a, opts)?;
            let mut t = Table::new(
                "rounds",
                &["round", "period", "action", "gap", "aubry_distance", "r1", "r2", "replacements", "closing_jump", "profile_constant"],
            );
            for r in &run.rounds {
                let (r1, r2) = r.witness.map(|(a, b)| (a.to_string(), b.to_string())).unwrap_or_default();
                t.push(vec![
                    r.round.to_string(),
                    r.period.to_string(),
                    fx(r.action),
                    fx(r.gap),
                    fx(r.aubry_distance),
                    r1,
                    r2,
                    r.replacements.len().to_string(),
                    fx(r.closing_jump),
                    fx(r.profile_constant),
                ]);
            }
            let mut l = Table::new("ledger", &["constant", "value"]);
            for (name, v) in run.ledger.entries() {
                l.push(vec![name.into(), fx(v)]);
            }
            let mut s = Table::new("summary", &["horizon", "p_t", "spanning_size", "initial_period", "final_period", "alga", "trend_ok"]);
            s.push(vec![
                run.horizon.to_string(),
                run.p_t.to_string(),
                run.spanning_size.to_string(),
                run.initial_period.to_string(),
                run.orbit.period.to_string(),
                run.alga.holds.to_string(),
                run.trend_ok.to_string(),
            ]);
            out.tables.extend([t, l, s]);
            out.json.push(("run_log".into(), serde_json::to_value(&run)?));
            if let Some(why) = &run.terminal {
                out.failure = Some(format!("pipeline stopped early: {why}"));
            } else if !run.trend_ok {
                out.failure = Some("action exceeded its round bound".into());
            }
        }
        Job::PalgaSweep(p) => out.outcome = Some(palga_sweep_suite(p)),
    }
    Ok(out)
}
