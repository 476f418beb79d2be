//! Static SVG figures from benchmark CSVs.
//!
//! The left panel plots the mean MSE of each method against the grid
//! dimension (one polyline per method, log-scaled MSE axis). The right panel
//! traces the mean per-step error over time (one path per method and
//! dimension).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::bench::{read_csv, BenchRow};
use crate::error::{Error, Result};

const W: f64 = 960.0;
const H: f64 = 420.0;
const PANEL_W: f64 = 380.0;
const PANEL_H: f64 = 300.0;
const TOP: f64 = 50.0;
const LEFTS: [f64; 2] = [80.0, 560.0];
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Axis over `[lo, hi]`, optionally in log10 units.
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn linear(values: impl Iterator<Item = f64>) -> Self {
        let (lo, hi) = bounds(values);
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            (lo - 1.0, hi + 1.0)
        };
        Self { lo, hi, log: false }
    }

    fn log(values: impl Iterator<Item = f64>) -> Self {
        let (lo, hi) = bounds(values.filter(|v| *v > 0.0).map(f64::log10));
        let (lo, hi) = (lo.floor(), hi.ceil());
        let hi = if hi > lo { hi } else { lo + 1.0 };
        Self { lo, hi, log: true }
    }

    /// Position of `v` in `[0, 1]`.
    fn frac(&self, v: f64) -> f64 {
        let v = if self.log {
            v.max(f64::MIN_POSITIVE).log10()
        } else {
            v
        };
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    })
}

struct Panel {
    left: f64,
    x: Axis,
    y: Axis,
}

impl Panel {
    fn px(&self, v: f64) -> f64 {
        self.left + self.x.frac(v) * PANEL_W
    }

    fn py(&self, v: f64) -> f64 {
        TOP + (1.0 - self.y.frac(v)) * PANEL_H
    }

    fn frame(&self, svg: &mut String, title: &str, xlabel: &str, xticks: &[f64]) {
        let (l, b) = (self.left, TOP + PANEL_H);
        let _ = writeln!(
            svg,
            r#"<rect x="{l}" y="{TOP}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="15">{}</text>"#,
            l + PANEL_W / 2.0,
            TOP - 15.0,
            escape(title)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{xlabel}</text>"#,
            l + PANEL_W / 2.0,
            b + 40.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 {} {})">MSE</text>"#,
            l - 55.0,
            TOP + PANEL_H / 2.0,
            l - 55.0,
            TOP + PANEL_H / 2.0
        );
        for &t in xticks {
            let x = self.px(t);
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle" font-size="11">{t}</text>"#,
                b + 5.0,
                b + 18.0
            );
        }
        let mut e = self.y.lo;
        while e <= self.y.hi + 1e-9 {
            let y = TOP + (1.0 - (e - self.y.lo) / (self.y.hi - self.y.lo)) * PANEL_H;
            let _ = writeln!(
                svg,
                r#"<line x1="{}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end" font-size="11">1e{e}</text>"#,
                l - 5.0,
                l - 8.0,
                y + 4.0
            );
            e += 1.0;
        }
    }
}

fn points(pts: &[(f64, f64)], panel: &Panel) -> Vec<(f64, f64)> {
    pts.iter()
        .map(|&(x, y)| (panel.px(x), panel.py(y)))
        .collect()
}

/// Render the two-panel figure from the mean rows of a benchmark.
pub fn render_svg(rows: &[BenchRow]) -> Result<String> {
    // method -> d -> mean row; later rows replace earlier ones
    let mut by_method: BTreeMap<&str, BTreeMap<usize, &BenchRow>> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    for r in rows.iter().filter(|r| r.is_aggregate() && r.mse.is_some()) {
        if !order.contains(&r.method.as_str()) {
            order.push(&r.method);
        }
        by_method.entry(&r.method).or_default().insert(r.d, r);
    }
    if order.is_empty() {
        return Err(Error::Report("no mean rows with an MSE to plot".into()));
    }
    let all: Vec<&BenchRow> = by_method
        .values()
        .flat_map(|m| m.values().copied())
        .collect();
    let mut dims: Vec<usize> = all.iter().map(|r| r.d).collect();
    dims.sort_unstable();
    dims.dedup();
    let steps = all.iter().map(|r| r.mse_t.len()).max().unwrap_or(0).max(1);

    let vs_d = Panel {
        left: LEFTS[0],
        x: Axis::linear(dims.iter().map(|&d| d as f64)),
        y: Axis::log(all.iter().filter_map(|r| r.mse)),
    };
    let vs_t = Panel {
        left: LEFTS[1],
        x: Axis::linear([1.0, steps as f64].into_iter()),
        y: Axis::log(
            all.iter()
                .flat_map(|r| r.mse_t.iter().copied())
                .chain(all.iter().filter_map(|r| r.mse)),
        ),
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let dticks: Vec<f64> = dims.iter().map(|&d| d as f64).collect();
    vs_d.frame(&mut svg, "Mean MSE against dimension", "d", &dticks);
    let tstride = steps.div_ceil(10).max(1);
    let tticks: Vec<f64> = (1..=steps).step_by(tstride).map(|t| t as f64).collect();
    vs_t.frame(&mut svg, "Mean error over time", "t", &tticks);

    for (k, m) in order.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let name = escape(m);
        let series = &by_method[m];
        let pts: Vec<(f64, f64)> = series
            .values()
            .map(|r| (r.d as f64, r.mse.unwrap()))
            .collect();
        let coords: Vec<String> = points(&pts, &vs_d)
            .iter()
            .map(|(x, y)| format!("{x:.2},{y:.2}"))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline data-method="{name}" points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            coords.join(" ")
        );
        for (x, y) in points(&pts, &vs_d) {
            let _ = writeln!(
                svg,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{colour}"/>"#
            );
        }
        for r in series.values().filter(|r| !r.mse_t.is_empty()) {
            let pts: Vec<(f64, f64)> = r
                .mse_t
                .iter()
                .enumerate()
                .map(|(i, &v)| ((i + 1) as f64, v))
                .collect();
            let mut d = String::new();
            for (i, (x, y)) in points(&pts, &vs_t).into_iter().enumerate() {
                let _ = write!(d, "{}{x:.2} {y:.2} ", if i == 0 { "M" } else { "L" });
            }
            let _ = writeln!(
                svg,
                r#"<path data-method="{name}" data-d="{}" d="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
                r.d,
                d.trim_end()
            );
        }
        let ly = TOP + 14.0 + 16.0 * k as f64;
        let lx = LEFTS[0] + PANEL_W - 110.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}" font-size="12">{name}</text>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Read every CSV, render, and only then write `out`.
pub fn write_report(csvs: &[impl AsRef<Path>], out: &Path) -> Result<()> {
    let mut rows = Vec::new();
    for p in csvs {
        let p = p.as_ref();
        let f =
            std::fs::File::open(p).map_err(|e| Error::Report(format!("{}: {e}", p.display())))?;
        rows.extend(read_csv(f).map_err(|e| Error::Report(format!("{}: {e}", p.display())))?);
    }
    let svg = render_svg(&rows)?;
    std::fs::write(out, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, d: usize, mse: f64) -> BenchRow {
        BenchRow {
            trial: None,
            t: 2,
            method: method.into(),
            d,
            sigma_y2: Some(1.0),
            particles: None,
            mse: Some(mse),
            rho: None,
            wall_ms: None,
            seed: 1,
            status: "ok".into(),
            mse_t: vec![mse, mse * 2.0],
        }
    }

    #[test]
    fn one_method_two_dims() {
        let svg = render_svg(&[row("kf", 16, 0.3), row("kf", 64, 0.2)]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(pts.split(' ').count(), 2);
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains(">MSE</text>") && svg.contains(">d</text>"));
    }

    #[test]
    fn nothing_to_plot_is_an_error() {
        assert!(matches!(render_svg(&[]), Err(Error::Report(_))));
    }
}
