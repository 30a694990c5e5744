//! CSV and SVG writers for rate curves.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::SimError;

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// One metric of one experiment over the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    pub name: String,
    pub metric: String,
    pub sweep_variable: String,
    pub sweep_values: Vec<f64>,
    pub columns: Vec<Column>,
    pub trials: usize,
    pub master_seed: u64,
    pub config_digest: String,
    pub metadata: Vec<(String, String)>,
}

impl RateCurve {
    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn file_name(&self) -> String {
        format!("{}_{}.csv", self.name, self.metric)
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        format!("{v}")
    }
}

/// Header, one row per sweep value and trailing `# key=value` lines.
pub fn to_csv(curve: &RateCurve) -> String {
    let mut s = String::new();
    s.push_str(&curve.sweep_variable);
    for c in &curve.columns {
        let _ = write!(s, ",{0}_mean,{0}_stderr", c.name);
    }
    s.push('\n');
    for (i, v) in curve.sweep_values.iter().enumerate() {
        s.push_str(&num(*v));
        for c in &curve.columns {
            let _ = write!(s, ",{},{}", num(c.mean[i]), num(c.stderr[i]));
        }
        s.push('\n');
    }
    let _ = writeln!(s, "# preset={}", curve.name);
    let _ = writeln!(s, "# metric={}", curve.metric);
    let _ = writeln!(s, "# master_seed={}", curve.master_seed);
    let _ = writeln!(s, "# trials={}", curve.trials);
    let _ = writeln!(s, "# config_digest={}", curve.config_digest);
    for (k, v) in &curve.metadata {
        let _ = writeln!(s, "# {k}={}", v.replace('\n', " "));
    }
    s
}

/// Inverse of [`to_csv`]; unknown metadata keys land in `metadata`.
pub fn parse_csv(text: &str) -> Result<RateCurve, SimError> {
    let bad = |m: String| SimError::Invalid(format!("csv: {m}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty input".into()))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() % 2 != 1 {
        return Err(bad(format!("header has {} fields", fields.len())));
    }
    let mut columns = Vec::new();
    for pair in fields[1..].chunks(2) {
        let name = pair[0]
            .strip_suffix("_mean")
            .ok_or_else(|| bad(format!("expected *_mean, got {}", pair[0])))?;
        if pair[1] != format!("{name}_stderr") {
            return Err(bad(format!("expected {name}_stderr, got {}", pair[1])));
        }
        columns.push(Column {
            name: name.to_string(),
            mean: Vec::new(),
            stderr: Vec::new(),
        });
    }
    let mut curve = RateCurve {
        name: String::new(),
        metric: String::new(),
        sweep_variable: fields[0].to_string(),
        sweep_values: Vec::new(),
        columns,
        trials: 0,
        master_seed: 0,
        config_digest: String::new(),
        metadata: Vec::new(),
    };
    for line in lines {
        if let Some(meta) = line.strip_prefix("# ") {
            let (k, v) = meta
                .split_once('=')
                .ok_or_else(|| bad(format!("metadata line {line}")))?;
            let parse_err = |e: std::num::ParseIntError| bad(format!("{k}: {e}"));
            match k {
                "preset" => curve.name = v.to_string(),
                "metric" => curve.metric = v.to_string(),
                "master_seed" => curve.master_seed = v.parse().map_err(parse_err)?,
                "trials" => curve.trials = v.parse().map_err(parse_err)?,
                "config_digest" => curve.config_digest = v.to_string(),
                _ => curve.metadata.push((k.to_string(), v.to_string())),
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|f| f.parse::<f64>().map_err(|e| bad(format!("{f}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != fields.len() {
            return Err(bad(format!(
                "row has {} fields, header {}",
                vals.len(),
                fields.len()
            )));
        }
        curve.sweep_values.push(vals[0]);
        for (c, pair) in curve.columns.iter_mut().zip(vals[1..].chunks(2)) {
            c.mean.push(pair[0]);
            c.stderr.push(pair[1]);
        }
    }
    Ok(curve)
}

pub fn write_csv(curve: &RateCurve, dir: &Path) -> Result<PathBuf, SimError> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let path = dir.join(curve.file_name());
    std::fs::write(&path, to_csv(curve)).map_err(|e| SimError::io(&path, e))?;
    Ok(path)
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Line chart of every column of every curve; all curves must share a sweep.
pub fn render_svg(title: &str, curves: &[RateCurve]) -> Result<String, SimError> {
    let first = curves
        .first()
        .ok_or_else(|| SimError::Invalid("svg: no curves".into()))?;
    if curves
        .iter()
        .any(|c| c.sweep_variable != first.sweep_variable)
    {
        return Err(SimError::Invalid(
            "svg: curves sweep different variables".into(),
        ));
    }
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (70.0, 190.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;

    let finite = |v: &f64| v.is_finite();
    let xs: Vec<f64> = curves
        .iter()
        .flat_map(|c| c.sweep_values.iter().copied())
        .filter(finite)
        .collect();
    let ys: Vec<f64> = curves
        .iter()
        .flat_map(|c| c.columns.iter().flat_map(|col| col.mean.iter().copied()))
        .filter(finite)
        .collect();
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = range(&xs);
    let (y0, y1) = range(&ys);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" font-size="14">{}</text>"#,
        left,
        esc(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(xv),
            top + ph + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 6.0,
            sy(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 12.0,
        esc(&first.sweep_variable)
    );
    let mut k = 0;
    for c in curves {
        for col in &c.columns {
            let color = PALETTE[k % PALETTE.len()];
            let dash = if k >= PALETTE.len() {
                r#" stroke-dasharray="5,3""#
            } else {
                ""
            };
            let pts: Vec<String> = c
                .sweep_values
                .iter()
                .zip(&col.mean)
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                pts.join(" ")
            );
            let ly = top + 12.0 + 16.0 * k as f64;
            let lx = w - right + 10.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                lx + 20.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}">{} ({})</text>"#,
                lx + 26.0,
                ly + 4.0,
                esc(&col.name),
                esc(&c.metric)
            );
            k += 1;
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

pub fn write_svg(name: &str, curves: &[RateCurve], dir: &Path) -> Result<PathBuf, SimError> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let path = dir.join(format!("{name}.svg"));
    std::fs::write(&path, render_svg(name, curves)?).map_err(|e| SimError::io(&path, e))?;
    Ok(path)
}
