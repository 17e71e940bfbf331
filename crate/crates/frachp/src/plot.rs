//! SVG line plots rendered from trajectory tables.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::error::{CliError, CliResult};
use crate::table::Table;

const SIZE: (u32, u32) = (640, 480);
const PALETTE: [RGBColor; 4] = [BLUE, RED, GREEN, MAGENTA];

fn plot_err<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Plot(format!("{}: {e}", path.display()))
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

/// One chart with a line per series.
pub fn line_chart(path: &Path, title: &str, labels: (&str, &str), series: &[Vec<(f64, f64)>]) -> CliResult<()> {
    let err = plot_err(path);
    let (x_lo, x_hi) = padded_range(series.iter().flatten().map(|p| p.0));
    let (y_lo, y_hi) = padded_range(series.iter().flatten().map(|p| p.1));
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(&err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(56)
        .build_cartesian_2d(x_lo..x_hi, y_lo..y_hi)
        .map_err(&err)?;
    chart
        .configure_mesh()
        .x_desc(labels.0)
        .y_desc(labels.1)
        .draw()
        .map_err(&err)?;
    for (i, points) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(points.iter().copied(), &color))
            .map_err(&err)?;
    }
    root.present().map_err(&err)?;
    Ok(())
}

/// Writes `(n, q)`, `(n, p)` and `(q, p)` charts for `table`, named with `tag`.
pub fn run_charts(dir: &Path, tag: &str, table: &Table) -> CliResult<Vec<PathBuf>> {
    let dim = table.dim;
    let qs: Vec<Vec<f64>> = (0..dim).map(|i| table.q_component(i)).collect();
    let ps: Vec<Vec<f64>> = (0..dim).map(|i| table.p_component(i)).collect();
    let against_n = |cols: &[Vec<f64>]| -> Vec<Vec<(f64, f64)>> {
        cols.iter()
            .map(|c| c.iter().enumerate().map(|(n, &x)| (n as f64, x)).collect())
            .collect()
    };
    let phase: Vec<Vec<(f64, f64)>> = qs
        .iter()
        .zip(&ps)
        .map(|(q, p)| q.iter().copied().zip(p.iter().copied()).collect())
        .collect();

    let charts = [
        (format!("q_n_{tag}.svg"), format!("(n, q), {tag}"), ("n", "q"), against_n(&qs)),
        (format!("p_n_{tag}.svg"), format!("(n, p), {tag}"), ("n", "p"), against_n(&ps)),
        (format!("q_p_{tag}.svg"), format!("(q, p), {tag}"), ("q", "p"), phase),
    ];
    let mut written = Vec::with_capacity(charts.len());
    for (file, title, labels, series) in charts {
        let path = dir.join(file);
        line_chart(&path, &title, labels, &series)?;
        written.push(path);
    }
    Ok(written)
}
