//! Self-contained SVG charts of suite results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::results::{ResultRow, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Mean composite against proposal budget, one line per planner.
    NpSweep,
    /// Mean composite per prediction modality, grouped by simulation mode.
    ModalityBars,
    /// Seconds per replan against proposal budget.
    Runtime,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str, x_label: &str, y_label: &str) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        HEIGHT - MARGIN,
        WIDTH - MARGIN,
        HEIGHT - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{}" stroke="black"/>"#,
        HEIGHT - MARGIN
    );
    svg
}

fn y_axis(svg: &mut String, max: f64) -> impl Fn(f64) -> f64 {
    let top = if max > 0.0 { max } else { 1.0 };
    let scale = move |v: f64| HEIGHT - MARGIN - v / top * (HEIGHT - 2.0 * MARGIN);
    for i in 0..=4 {
        let v = top * i as f64 / 4.0;
        let y = scale(v);
        let _ = writeln!(
            svg,
            r#"<g class="ytick"><line x1="{}" y1="{y:.1}" x2="{MARGIN}" y2="{y:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">{}</text></g>"#,
            MARGIN - 4.0,
            MARGIN - 6.0,
            y + 4.0,
            format_tick(v)
        );
    }
    scale
}

fn format_tick(v: f64) -> String {
    if v == 0.0 || v.abs() >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.4}")
    }
}

fn legend(svg: &mut String, names: &[String]) {
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            WIDTH - MARGIN - 110.0,
            y - 9.0,
            COLORS[i % COLORS.len()],
            WIDTH - MARGIN - 95.0,
            y,
            escape(name)
        );
    }
}

/// Line chart with categorical x positions.
fn line_chart(title: &str, x_label: &str, y_label: &str, xs: &[usize], series: &BTreeMap<String, BTreeMap<usize, f64>>) -> String {
    let mut svg = header(title, x_label, y_label);
    let max = series.values().flat_map(|s| s.values()).fold(0.0_f64, |m, v| m.max(*v));
    let y = y_axis(&mut svg, if title.contains("composite") { 100.0 } else { max * 1.1 });
    let step = (WIDTH - 2.0 * MARGIN) / (xs.len().max(1) as f64);
    let x_of = |i: usize| MARGIN + step * (i as f64 + 0.5);
    for (i, x) in xs.iter().enumerate() {
        let px = x_of(i);
        let _ = writeln!(
            svg,
            r#"<g class="xtick"><line x1="{px:.1}" y1="{}" x2="{px:.1}" y2="{}" stroke="black"/><text x="{px:.1}" y="{}" text-anchor="middle">{x}</text></g>"#,
            HEIGHT - MARGIN,
            HEIGHT - MARGIN + 4.0,
            HEIGHT - MARGIN + 18.0
        );
    }
    let names: Vec<String> = series.keys().cloned().collect();
    for (k, (_, points)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<String> = xs
            .iter()
            .enumerate()
            .filter_map(|(i, x)| points.get(x).map(|v| format!("{:.1},{:.1}", x_of(i), y(*v))))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        for c in &coords {
            let (cx, cy) = c.split_once(',').unwrap();
            let _ = writeln!(svg, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
    }
    legend(&mut svg, &names);
    svg.push_str("</svg>\n");
    svg
}

fn ok_rows(rows: &[ResultRow]) -> impl Iterator<Item = &ResultRow> {
    rows.iter().filter(|r| r.status == Status::Ok && r.composite.is_some())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn np_sweep_svg(rows: &[ResultRow]) -> String {
    let mut acc: BTreeMap<String, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in ok_rows(rows) {
        acc.entry(format!("{} {} {}", r.planner, r.mode, r.modality))
            .or_default()
            .entry(r.n_p)
            .or_default()
            .push(r.composite.unwrap());
    }
    let xs: Vec<usize> = rows.iter().map(|r| r.n_p).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let series = acc
        .into_iter()
        .map(|(k, m)| (k, m.into_iter().map(|(n, v)| (n, mean(&v))).collect()))
        .collect();
    line_chart("Mean composite vs proposals", "number of proposals N_p", "mean composite", &xs, &series)
}

pub fn modality_bars_svg(rows: &[ResultRow]) -> String {
    let mut acc: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let mut na: BTreeMap<(String, String), bool> = BTreeMap::new();
    for r in rows {
        let key = (r.mode.clone(), r.modality.clone());
        match (r.status, r.composite) {
            (Status::Ok, Some(c)) => acc.entry(key).or_default().push(c),
            (Status::Na, _) => {
                na.insert(key, true);
            }
            _ => {}
        }
    }
    let modes: Vec<String> = acc.keys().chain(na.keys()).map(|k| k.0.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let modalities: Vec<String> = acc.keys().chain(na.keys()).map(|k| k.1.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let mut svg = header("Mean composite by prediction modality", "simulation mode", "mean composite");
    let y = y_axis(&mut svg, 100.0);
    let group = (WIDTH - 2.0 * MARGIN) / modes.len().max(1) as f64;
    let bar = group * 0.8 / modalities.len().max(1) as f64;
    for (g, mode) in modes.iter().enumerate() {
        let gx = MARGIN + group * g as f64 + group * 0.1;
        let _ = writeln!(
            svg,
            r#"<g class="xtick"><text x="{:.1}" y="{}" text-anchor="middle">{}</text></g>"#,
            gx + group * 0.4,
            HEIGHT - MARGIN + 18.0,
            escape(mode)
        );
        for (m, modality) in modalities.iter().enumerate() {
            let x = gx + bar * m as f64;
            let key = (mode.clone(), modality.clone());
            if let Some(values) = acc.get(&key) {
                let v = mean(values);
                let top = y(v);
                let _ = writeln!(
                    svg,
                    r#"<rect class="bar" x="{x:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{}"><title>{} {}: {v:.2}</title></rect>"#,
                    bar * 0.9,
                    HEIGHT - MARGIN - top,
                    COLORS[m % COLORS.len()],
                    escape(mode),
                    escape(modality)
                );
            } else if na.contains_key(&key) {
                let _ = writeln!(
                    svg,
                    r#"<text x="{:.1}" y="{}" text-anchor="middle" font-size="10">N/A</text>"#,
                    x + bar * 0.45,
                    HEIGHT - MARGIN - 4.0
                );
            }
        }
    }
    legend(&mut svg, &modalities);
    svg.push_str("</svg>\n");
    svg
}

pub fn runtime_svg(points: &[(usize, f64)]) -> String {
    let xs: Vec<usize> = points.iter().map(|p| p.0).collect();
    let mut series = BTreeMap::new();
    series.insert("seconds per replan".to_string(), points.iter().copied().collect());
    line_chart("Planner runtime vs proposals", "number of proposals N_p", "seconds per replan", &xs, &series)
}

/// Writes one chart of `rows` to `path`.
pub fn emit_plot(rows: &[ResultRow], kind: PlotKind, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Validation("cannot plot an empty results table".into()));
    }
    let svg = match kind {
        PlotKind::NpSweep => np_sweep_svg(rows),
        PlotKind::ModalityBars => modality_bars_svg(rows),
        PlotKind::Runtime => {
            let points: Vec<(usize, f64)> = rows.iter().filter_map(|r| r.wall_time_s.map(|t| (r.n_p, t))).collect();
            runtime_svg(&points)
        }
    };
    std::fs::write(path, svg)?;
    Ok(())
}
