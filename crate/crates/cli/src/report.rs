use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;

use crate::run::{Manifest, MANIFEST};

pub struct ReportSummary {
    pub missing: Vec<String>,
    pub empty: bool,
    pub plots: usize,
}

#[derive(Default)]
struct Curve {
    criterion: String,
    log_x: bool,
    log_y: bool,
    fit: Option<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
}

fn read_rows(path: &Path) -> anyhow::Result<Vec<BTreeMap<String, String>>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = r.headers()?.clone();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(header.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect());
    }
    Ok(rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

/// Write report.md and one SVG per series into the run directory.
pub fn report(dir: &Path) -> anyhow::Result<ReportSummary> {
    if !dir.is_dir() {
        anyhow::bail!("{} is not a run directory", dir.display());
    }
    let entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    let is_report = |n: &str| n == "report.md" || (n.starts_with("plot_") && n.ends_with(".svg"));
    let content = entries.iter().filter(|e| !is_report(&e.file_name().to_string_lossy())).count();
    if content == 0 {
        std::fs::write(dir.join("report.md"), "# Run report\n\nEmpty run: no stages.\n")?;
        return Ok(ReportSummary { missing: Vec::new(), empty: true, plots: 0 });
    }
    let manifest_path = dir.join(MANIFEST);
    if !manifest_path.exists() {
        return Ok(ReportSummary { missing: vec![MANIFEST.into()], empty: false, plots: 0 });
    }
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)
        .with_context(|| format!("parsing {MANIFEST}"))?;
    let missing: Vec<String> = manifest.all_artifacts().into_iter().filter(|a| !dir.join(a).exists()).collect();
    let load = |name: &str| -> anyhow::Result<Vec<BTreeMap<String, String>>> {
        if dir.join(name).exists() {
            read_rows(&dir.join(name))
        } else {
            Ok(Vec::new())
        }
    };

    let mut md = String::new();
    writeln!(md, "# Run report\n")?;
    writeln!(md, "Seed {}, {} stages, {} not ok.\n", manifest.seed, manifest.stages.len(), manifest.failures())?;

    let criteria = load("criteria.csv")?;
    let metrics = load("metrics.csv")?;
    if !criteria.is_empty() {
        writeln!(md, "## Criteria\n")?;
        writeln!(md, "| criterion | module | op | name | verdict | metrics |")?;
        writeln!(md, "|---|---|---|---|---|---|")?;
        for c in &criteria {
            let ms: Vec<String> = metrics
                .iter()
                .filter(|m| m["module"] == c["module"] && m["op"] == c["op"] && m["criterion"] == c["criterion"])
                .map(|m| format!("{} = {:.6e}", m["metric"], num(&m["value"])))
                .collect();
            let verdict = if c["pass"] == "true" { "PASS" } else { "FAIL" };
            writeln!(md, "| {} | {} | {} | {} | {} | {} |", c["criterion"], c["module"], c["op"], c["name"], verdict, ms.join(", "))?;
        }
        writeln!(md)?;
    }

    writeln!(md, "## Stages\n")?;
    writeln!(md, "| # | module | op | status | message |")?;
    writeln!(md, "|---|---|---|---|---|")?;
    for s in &manifest.stages {
        let msg = s.message.clone().unwrap_or_default().replace('|', "/");
        writeln!(md, "| {} | {} | {} | {:?} | {} |", s.index, s.module, s.op, s.status, msg)?;
    }
    writeln!(md)?;

    for s in manifest.stages.iter().filter(|s| s.module == "ergopt" && s.op == "lock-suite") {
        let Some(file) = s.artifacts.iter().find(|a| a.ends_with("_verdicts.csv")) else { continue };
        if !dir.join(file).exists() {
            continue;
        }
        let rows = read_rows(&dir.join(file))?;
        let locked = rows.iter().filter(|r| r["locked"] == "true").count();
        let alga = rows.iter().filter(|r| r["alga"] == "true").count();
        writeln!(md, "## Locking (stage {})\n", s.index)?;
        writeln!(md, "Locked {locked} of {} ({:.1}%), orbit inequalities hold for {alga}.\n", rows.len(), 100.0 * locked as f64 / rows.len().max(1) as f64)?;
        let failed: Vec<_> = rows.iter().filter(|r| r["locked"] != "true").collect();
        if failed.is_empty() {
            writeln!(md, "No failure certificates.\n")?;
        } else {
            writeln!(md, "| instance | alphabet | period | competing cycle | mean | error |")?;
            writeln!(md, "|---|---|---|---|---|---|")?;
            for r in failed {
                writeln!(md, "| {} | {} | {} | {} | {} | {} |", r["instance"], r["alphabet"], r["period"], r["certificate"], r["certificate_mean"], r["error"])?;
            }
            writeln!(md)?;
        }
    }

    let mut curves: BTreeMap<(u32, String, String, String), Curve> = BTreeMap::new();
    for r in load("series.csv")? {
        let crit = r["criterion"].parse().unwrap_or(u32::MAX);
        let c = curves.entry((crit, r["module"].clone(), r["op"].clone(), r["series"].clone())).or_default();
        c.criterion = r["criterion"].clone();
        c.log_x = r["log_x"] == "true";
        c.log_y = r["log_y"] == "true";
        c.fit = r["fit"].parse().ok();
        c.x.push(num(&r["x"]));
        c.y.push(num(&r["y"]));
    }
    if !curves.is_empty() {
        writeln!(md, "## Plots\n")?;
    }
    for (k, ((_, module, op, name), c)) in curves.iter().enumerate() {
        let file = format!("plot_{k:02}.svg");
        std::fs::write(dir.join(&file), svg_plot(name, c))?;
        let fit = c.fit.map(|f| format!(", {} {f:.4}", fit_label(c))).unwrap_or_default();
        writeln!(md, "- criterion {} ({module}/{op}) {name}{fit}: ![{name}]({file})", c.criterion)?;
    }
    if !missing.is_empty() {
        writeln!(md, "\n## Missing artifacts\n")?;
        for m in &missing {
            writeln!(md, "- {m}")?;
        }
    }
    std::fs::write(dir.join("report.md"), md)?;
    Ok(ReportSummary { missing, empty: false, plots: curves.len() })
}

fn fit_label(c: &Curve) -> &'static str {
    if c.log_x && c.log_y {
        "slope"
    } else {
        "rate"
    }
}

fn svg_plot(title: &str, c: &Curve) -> String {
    let (w, h, pad) = (520.0, 340.0, 56.0);
    let tx = |v: f64| if c.log_x { v.log10() } else { v };
    let ty = |v: f64| if c.log_y { v.max(1e-300).log10() } else { v };
    let pts: Vec<(f64, f64)> =
        c.x.iter().zip(&c.y).map(|(&x, &y)| (tx(x), ty(y))).filter(|(a, b)| a.is_finite() && b.is_finite()).collect();
    let range = |vals: Vec<f64>| {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = range(pts.iter().map(|p| p.0).collect());
    let (y0, y1) = range(pts.iter().map(|p| p.1).collect());
    let sx = |v: f64| pad + (v - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |v: f64| h - pad - (v - y0) / (y1 - y0) * (h - 2.0 * pad);
    let label = |v: f64, log: bool| if log { format!("1e{v:.1}") } else { format!("{v:.3}") };

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{pad},{} L{pad},{} L{},{}" fill="none" stroke="black"/>"#,
        pad - 10.0,
        h - pad,
        w - pad + 10.0,
        h - pad
    );
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="{anchor}">{}</text>"#, sx(v), h - pad + 16.0, label(v, c.log_x));
    }
    for v in [y0, y1] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, pad - 4.0, sy(v) + 4.0, label(v, c.log_y));
    }
    let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f5fa8" stroke-width="1.5"/>"##, path.join(" "));
    for &(x, y) in &pts {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#1f5fa8"/>"##, sx(x), sy(y));
    }
    if let Some(f) = c.fit {
        if c.log_x && c.log_y && !pts.is_empty() {
            // Line of the fitted slope through the centroid.
            let n = pts.len() as f64;
            let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
            let (ya, yb) = (my + f * (x0 - mx), my + f * (x1 - mx));
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c0392b" stroke-dasharray="5,4"/>"##,
                sx(x0),
                sy(ya),
                sx(x1),
                sy(yb)
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="40" text-anchor="end">{} = {f:.4}</text>"#, w - pad, fit_label(c));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
