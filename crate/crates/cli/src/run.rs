use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::stages::{execute, fx, Stage, StageOutput};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Artifacts written, but a criterion or invariant failed.
    Failed,
    /// The op returned an error; no artifacts.
    Error,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageRecord {
    pub index: usize,
    pub module: String,
    pub op: String,
    pub status: Status,
    pub criterion: Option<u8>,
    pub message: Option<String>,
    pub artifacts: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
    /// Run-level files, each stage's own files are listed with the stage.
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn all_artifacts(&self) -> Vec<String> {
        let mut v = self.artifacts.clone();
        for s in &self.stages {
            v.extend(s.artifacts.iter().cloned());
        }
        v
    }

    pub fn failures(&self) -> usize {
        self.stages.iter().filter(|s| s.status != Status::Ok).count()
    }
}

fn stage_file(stage: &Stage, name: &str, ext: &str) -> String {
    format!("s{:02}_{}_{}_{}.{}", stage.index, stage.module, stage.op, name, ext).replace('-', "_")
}

fn writer(dir: &Path, name: &str) -> anyhow::Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(dir.join(name)).with_context(|| format!("creating {name}"))
}

fn write_json(dir: &Path, name: &str, v: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    std::fs::write(dir.join(name), text + "\n").with_context(|| format!("writing {name}"))
}

/// Run every stage concurrently and write artifacts in stage order.
/// An empty pipeline leaves an empty directory.
pub fn run(cfg: &ExperimentConfig, stages: &[Stage], dir: &Path) -> anyhow::Result<Manifest> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut manifest = Manifest { schema_version: SCHEMA_VERSION, seed: cfg.seed, stages: Vec::new(), artifacts: Vec::new() };
    if stages.is_empty() {
        return Ok(manifest);
    }
    let results: Vec<(anyhow::Result<StageOutput>, f64)> = stages
        .par_iter()
        .map(|s| {
            let t = Instant::now();
            let r = std::panic::catch_unwind(|| execute(&s.job)).unwrap_or_else(|p| {
                let what = p
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| p.downcast_ref::<String>().cloned())
                    .unwrap_or_default();
                Err(anyhow::anyhow!("op panicked: {what}"))
            });
            (r, t.elapsed().as_secs_f64())
        })
        .collect();

    let mut criteria = writer(dir, "criteria.csv")?;
    criteria.write_record(["module", "op", "criterion", "name", "pass"])?;
    let mut metrics = writer(dir, "metrics.csv")?;
    metrics.write_record(["module", "op", "criterion", "metric", "value"])?;
    let mut series = writer(dir, "series.csv")?;
    series.write_record(["module", "op", "criterion", "series", "log_x", "log_y", "fit", "index", "x", "y"])?;
    let mut errors = writer(dir, "errors.csv")?;
    errors.write_record(["module", "op", "kind", "message"])?;
    let mut timings = Vec::new();

    for (stage, (result, secs)) in stages.iter().zip(results) {
        let (m, o) = (stage.module.as_str(), stage.op.as_str());
        timings.push(serde_json::json!({"module": m, "op": o, "seconds": secs}));
        let mut rec = StageRecord {
            index: stage.index,
            module: m.into(),
            op: o.into(),
            status: Status::Ok,
            criterion: None,
            message: None,
            artifacts: Vec::new(),
        };
        let out = match result {
            Ok(out) => out,
            Err(e) => {
                let msg = format!("{e:#}");
                errors.write_record([m, o, "error", &msg])?;
                rec.status = Status::Error;
                rec.message = Some(msg);
                manifest.stages.push(rec);
                continue;
            }
        };
        for t in &out.tables {
            let name = stage_file(stage, &t.name, "csv");
            let mut w = writer(dir, &name)?;
            w.write_record(["module", "op"].iter().copied().chain(t.header.iter().map(String::as_str)))?;
            for row in &t.rows {
                w.write_record([m, o].iter().copied().chain(row.iter().map(String::as_str)))?;
            }
            w.flush()?;
            rec.artifacts.push(name);
        }
        for (key, v) in &out.json {
            let name = stage_file(stage, key, "json");
            write_json(dir, &name, v)?;
            rec.artifacts.push(name);
        }
        if let Some(oc) = &out.outcome {
            let c = oc.criterion.to_string();
            rec.criterion = Some(oc.criterion);
            criteria.write_record([m, o, &c, &oc.name, &oc.pass.to_string()])?;
            for (k, v) in &oc.metrics {
                metrics.write_record([m, o, &c, k, &fx(*v)])?;
            }
            for s in &oc.series {
                let fit = s.fit.map(fx).unwrap_or_default();
                for (i, (x, y)) in s.x.iter().zip(&s.y).enumerate() {
                    series.write_record([
                        m,
                        o,
                        &c,
                        &s.name,
                        &s.log_x.to_string(),
                        &s.log_y.to_string(),
                        &fit,
                        &i.to_string(),
                        &fx(*x),
                        &fx(*y),
                    ])?;
                }
            }
            if !oc.pass {
                let msg = oc.notes.join("; ");
                errors.write_record([m, o, "criterion", &msg])?;
                rec.status = Status::Failed;
                rec.message = Some(msg);
            }
        }
        if let Some(f) = &out.failure {
            errors.write_record([m, o, "invariant", f])?;
            rec.status = Status::Failed;
            rec.message = Some(f.clone());
        }
        manifest.stages.push(rec);
    }
    for w in [&mut criteria, &mut metrics, &mut series, &mut errors] {
        w.flush()?;
    }
    write_json(dir, "config.json", cfg)?;
    write_json(dir, "timings.json", &timings)?;
    manifest.artifacts = ["config.json", "criteria.csv", "metrics.csv", "series.csv", "errors.csv", "timings.json"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    write_json(dir, MANIFEST, &manifest)?;
    Ok(manifest)
}

pub fn output_dir(cfg: &ExperimentConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("mane-run"))
}
