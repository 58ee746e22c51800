//! CSV tables, a markdown summary and SVG line plots for a finished run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::detect::{EvalResult, Transition};
use crate::error::{Error, Result};
use crate::pipeline::{Method, RunOutput};

pub fn scores_csv(out: &RunOutput) -> String {
    let mut s = String::from("t,method,value\n");
    for r in &out.records {
        for &m in &out.methods {
            let _ = writeln!(s, "{},{},{}", r.t, m, r.score(m));
        }
    }
    s
}

pub fn posteriors_csv(out: &RunOutput) -> String {
    let mut s = String::from("t,k,prob\n");
    for r in &out.records {
        for (k, p) in r.posterior.iter() {
            let _ = writeln!(s, "{},{k},{p}", r.t);
        }
    }
    s
}

pub fn alarms_csv(out: &RunOutput) -> String {
    let mut s = String::from("t,method,direction\n");
    let mut rows: Vec<(usize, Method)> = out
        .alarms
        .iter()
        .flat_map(|(&m, ts)| ts.iter().map(move |&t| (t, m)))
        .collect();
    rows.sort();
    for (i, m) in rows {
        // Alarms are recorded by position; report the panel's own time label.
        let _ = writeln!(s, "{},{m},{}", out.records[i - 1].t, out.detector.direction.as_str());
    }
    s
}

pub(crate) fn eval_fields(e: &EvalResult) -> String {
    let delay = e.delay.map(|d| d.to_string()).unwrap_or_default();
    format!("{},{delay},{},{}", e.auc, e.benefit, e.far)
}

pub fn eval_csv(out: &RunOutput) -> String {
    let mut s = String::from("method,auc,delay,benefit,far\n");
    for (m, e) in &out.eval {
        let _ = writeln!(s, "{m},{}", eval_fields(e));
    }
    s
}

pub fn report_md(out: &RunOutput, plots: &[String]) -> String {
    let mut s = String::from("# Change-sign run\n\n");
    let _ = writeln!(s, "- time steps: {}", out.len());
    if let Some(r) = out.records.first() {
        let _ = writeln!(s, "- points per step (first): {}", r.n);
        let _ = writeln!(s, "- candidate counts: {}..={}", r.posterior.support()[0], r.posterior.support().last().unwrap());
    }
    let _ = writeln!(
        s,
        "- detector: window {}, threshold {}, direction {}",
        out.detector.window,
        out.detector.delta,
        out.detector.direction.as_str()
    );
    if let Some(tr) = out.transition {
        let _ = writeln!(s, "- transition: {}..={}", tr.start, tr.end);
    }
    s.push_str("\n## Alarms\n\n| method | alarms | first |\n|---|---|---|\n");
    for (m, ts) in &out.alarms {
        let first = ts.first().map(|t| out.records[t - 1].t.to_string()).unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "| {m} | {} | {first} |", ts.len());
    }
    if !out.eval.is_empty() {
        s.push_str("\n## Evaluation\n\n| method | AUC | delay | benefit | FAR |\n|---|---|---|---|---|\n");
        for (m, e) in &out.eval {
            let delay = e.delay.map_or("-".to_string(), |d| d.to_string());
            let _ = writeln!(s, "| {m} | {:.3} | {delay} | {:.3} | {:.3} |", e.auc, e.benefit, e.far);
        }
    }
    if !plots.is_empty() {
        s.push_str("\n## Plots\n\n");
        for p in plots {
            let _ = writeln!(s, "![{p}]({p})");
        }
    }
    s
}

pub struct Line<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub values: Vec<f64>,
    /// Positions (1-based) to mark with a dot.
    pub markers: Vec<usize>,
}

/// A self-contained SVG line chart with the transition period shaded.
pub fn line_plot_svg(title: &str, lines: &[Line<'_>], transition: Option<Transition>) -> String {
    const W: f64 = 640.0;
    const H: f64 = 320.0;
    const L: f64 = 56.0;
    const R: f64 = 16.0;
    const TOP: f64 = 32.0;
    const B: f64 = 40.0;
    let len = lines.iter().map(|l| l.values.len()).max().unwrap_or(0).max(2);
    let (mut lo, mut hi) = lines
        .iter()
        .flat_map(|l| l.values.iter().copied())
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        (lo, hi) = (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let x = |t: f64| L + (t - 1.0) / (len as f64 - 1.0) * (W - L - R);
    let y = |v: f64| TOP + (hi - v) / (hi - lo) * (H - TOP - B);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    if let Some(tr) = transition {
        let (x0, x1) = (x(tr.start as f64), x(tr.end as f64));
        let _ = writeln!(
            s,
            r##"<rect x="{x0:.2}" y="{TOP}" width="{:.2}" height="{:.2}" fill="#cfe8f7"/>"##,
            x1 - x0,
            H - TOP - B
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{L}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        W - L - R,
        H - TOP - B
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="20" font-size="14" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{v:.3}</text>"#,
            L - 4.0,
            y(v) + 3.0
        );
    }
    let step = (len / 10).max(1);
    for t in (1..=len).filter(|t| t % step == 0 || *t == 1) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{t}</text>"#,
            x(t as f64),
            H - B + 14.0
        );
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">t</text>"#, W / 2.0, H - 8.0);
    for (i, line) in lines.iter().enumerate() {
        let pts: Vec<String> = line
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(j, &v)| format!("{:.2},{:.2}", x((j + 1) as f64), y(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            escape(line.color),
            pts.join(" ")
        );
        for &t in &line.markers {
            if let Some(&v) = line.values.get(t.wrapping_sub(1)).filter(|v| v.is_finite()) {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#, x(t as f64), y(v), escape(line.color));
            }
        }
        let ly = TOP + 14.0 + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" font-size="11" fill="{}">{}</text>"#,
            L + 8.0,
            escape(line.color),
            escape(line.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// The standard plot set: `(file name, svg)`.
pub fn plots(out: &RunOutput) -> Vec<(String, String)> {
    let has = |m| out.methods.contains(&m);
    let markers = |m| out.alarms.get(&m).cloned().unwrap_or_default();
    let mut files = Vec::new();
    let mut single = |file: &str, title: &str, m: Method, color: &'static str, f: fn(f64) -> f64| {
        if has(m) {
            let line = Line { label: title, color, values: out.series(m).into_iter().map(f).collect(), markers: markers(m) };
            files.push((file.to_string(), line_plot_svg(title, &[line], out.transition)));
        }
    };
    single("exp_mc.svg", "exp(MC)", Method::Mc, "#1f77b4", f64::exp);
    single("exp_mc_fusion.svg", "exp(MC fusion)", Method::McFusion, "#d62728", f64::exp);
    single("ddim.svg", "Ddim", Method::Ddim, "#2ca02c", |v| v);
    let mut ks = Vec::new();
    if has(Method::Sdms) {
        ks.push(Line { label: "k (SDMS)", color: "#9467bd", values: out.series(Method::Sdms), markers: markers(Method::Sdms) });
    }
    if has(Method::Fs) {
        ks.push(Line { label: "k (Fixed Share)", color: "#ff7f0e", values: out.series(Method::Fs), markers: markers(Method::Fs) });
    }
    if !ks.is_empty() {
        files.push(("k.svg".to_string(), line_plot_svg("selected k", &ks, out.transition)));
    }
    files
}

fn write(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Write every table, plot and the summary into `dir`, creating it if needed.
pub fn emit_report(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![
        write(dir, "scores.csv", &scores_csv(out))?,
        write(dir, "posteriors.csv", &posteriors_csv(out))?,
        write(dir, "alarms.csv", &alarms_csv(out))?,
    ];
    if !out.eval.is_empty() {
        written.push(write(dir, "eval.csv", &eval_csv(out))?);
    }
    let plots = plots(out);
    for (name, svg) in &plots {
        written.push(write(dir, name, svg)?);
    }
    let names: Vec<String> = plots.into_iter().map(|p| p.0).collect();
    written.push(write(dir, "report.md", &report_md(out, &names))?);
    Ok(written)
}
