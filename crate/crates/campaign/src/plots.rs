//! SVG figures built from a [`ResultSet`].

use std::fs;
use std::path::{Path, PathBuf};

use aurora_core::{summarize, MitigationCondition as C};
use plotters::prelude::*;
use thiserror::Error;

use crate::runner::ResultSet;

pub const AE_BARS_FILE: &str = "ae_baseline_vs_aurora.svg";
pub const IDEAL_OVERLAY_FILE: &str = "z_vs_ideal.svg";
pub const ZNE_LOG_FILE: &str = "ae_log_zne.svg";

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: drawing failed: {message}")]
    Draw { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotReport {
    pub written: Vec<PathBuf>,
    /// One line per figure that could not be drawn from the available groups.
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct Bar {
    mean: f64,
    std: f64,
}

const PALETTE: [RGBColor; 3] = [
    RGBColor(120, 120, 120),
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
];

fn ae_bars(rs: &ResultSet, condition: C) -> Option<Vec<Bar>> {
    rs.config
        .phi_set
        .iter()
        .map(|&phi| {
            rs.summary(phi, condition).map(|s| Bar {
                mean: s.ae.mean,
                std: s.ae.std,
            })
        })
        .collect()
}

fn z_points(rs: &ResultSet, condition: C) -> Option<Vec<(f64, Bar)>> {
    rs.config
        .phi_set
        .iter()
        .map(|&phi| {
            let z: Vec<f64> = rs
                .records_for(phi, condition)
                .filter(|r| !(rs.config.preliminary_trial && r.trial == 0))
                .map(|r| r.z_meas)
                .collect();
            let s = summarize(&z).ok()?;
            Some((
                phi,
                Bar {
                    mean: s.mean,
                    std: s.std,
                },
            ))
        })
        .collect()
}

fn draw_err(path: &Path) -> impl Fn(String) -> PlotError + '_ {
    move |message| PlotError::Draw {
        path: path.to_path_buf(),
        message,
    }
}

macro_rules! tri {
    ($e:expr, $path:expr) => {
        $e.map_err(|e| draw_err($path)(e.to_string()))?
    };
}

fn phi_label(rs: &ResultSet, x: f64) -> String {
    let i = x.round();
    if (x - i).abs() > 1e-9 || i < 0.0 {
        return String::new();
    }
    rs.config
        .phi_set
        .get(i as usize)
        .map(|p| format!("{p:.2}"))
        .unwrap_or_default()
}

fn grouped_bars(
    rs: &ResultSet,
    path: &Path,
    title: &str,
    series: &[(C, Vec<Bar>)],
    log_scale: bool,
) -> Result<(), PlotError> {
    let n = rs.config.phi_set.len() as f64;
    let top = series
        .iter()
        .flat_map(|(_, b)| b.iter().map(|b| b.mean + b.std))
        .fold(0.0_f64, f64::max)
        .max(1e-6)
        * 1.15;
    let floor = series
        .iter()
        .flat_map(|(_, b)| b.iter().map(|b| b.mean))
        .filter(|m| *m > 0.0)
        .fold(f64::INFINITY, f64::min)
        .min(top / 10.0)
        / 3.0;

    let root = SVGBackend::new(path, (900, 540)).into_drawing_area();
    tri!(root.fill(&WHITE), path);
    let mut builder = ChartBuilder::on(&root);
    builder
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(44)
        .y_label_area_size(70);
    let width = 0.8 / series.len() as f64;

    macro_rules! body {
        ($chart:expr, $base:expr, $y:expr) => {{
            let mut chart = $chart;
            tri!(
                chart
                    .configure_mesh()
                    .disable_x_mesh()
                    .x_labels(rs.config.phi_set.len() * 2 + 1)
                    .x_label_formatter(&|x| phi_label(rs, *x))
                    .x_desc("phi (rad)")
                    .y_desc("absolute error")
                    .draw(),
                path
            );
            for (k, (condition, bars)) in series.iter().enumerate() {
                let color = PALETTE[k % PALETTE.len()];
                let x0 = |i: usize| i as f64 - 0.4 + k as f64 * width;
                tri!(
                    chart.draw_series(bars.iter().enumerate().map(|(i, b)| {
                        Rectangle::new(
                            [(x0(i), $base), (x0(i) + width * 0.9, $y(b.mean))],
                            color.filled(),
                        )
                    })),
                    path
                )
                .label(condition.tag())
                .legend(move |(x, y)| {
                    Rectangle::new([(x, y - 5), (x + 10, y + 5)], color.filled())
                });
                tri!(
                    chart.draw_series(bars.iter().enumerate().map(|(i, b)| {
                        let xc = x0(i) + width * 0.45;
                        PathElement::new(
                            vec![(xc, $y(b.mean - b.std)), (xc, $y(b.mean + b.std))],
                            BLACK.stroke_width(2),
                        )
                    })),
                    path
                );
            }
            tri!(
                chart
                    .configure_series_labels()
                    .background_style(WHITE.mix(0.8))
                    .border_style(BLACK)
                    .draw(),
                path
            );
        }};
    }

    if log_scale {
        let chart = tri!(
            builder.build_cartesian_2d(-0.5..n - 0.5, (floor..top).log_scale()),
            path
        );
        body!(chart, floor, |v: f64| v.max(floor));
    } else {
        let chart = tri!(builder.build_cartesian_2d(-0.5..n - 0.5, 0.0..top), path);
        body!(chart, 0.0, |v: f64| v.max(0.0));
    }
    tri!(root.present(), path);
    Ok(())
}

fn ideal_overlay(
    rs: &ResultSet,
    path: &Path,
    series: &[(C, Vec<(f64, Bar)>)],
) -> Result<(), PlotError> {
    let lo = rs
        .config
        .phi_set
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        - 0.02;
    let hi = rs
        .config
        .phi_set
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        + 0.02;
    let ymin = series
        .iter()
        .flat_map(|(_, p)| p.iter().map(|(_, b)| b.mean - b.std))
        .fold(lo.cos().min(hi.cos()), f64::min);
    let ymax = series
        .iter()
        .flat_map(|(_, p)| p.iter().map(|(_, b)| b.mean + b.std))
        .fold(1.0_f64, f64::max);
    let pad = 0.05 * (ymax - ymin).max(1e-3);

    let root = SVGBackend::new(path, (900, 540)).into_drawing_area();
    tri!(root.fill(&WHITE), path);
    let mut chart = tri!(
        ChartBuilder::on(&root)
            .caption("measured <Z> against cos(phi)", ("sans-serif", 22))
            .margin(12)
            .x_label_area_size(44)
            .y_label_area_size(70)
            .build_cartesian_2d(lo..hi, (ymin - pad)..(ymax + pad)),
        path
    );
    tri!(
        chart
            .configure_mesh()
            .x_desc("phi (rad)")
            .y_desc("<Z>")
            .draw(),
        path
    );
    let steps = 200;
    tri!(
        chart.draw_series(LineSeries::new(
            (0..=steps).map(|i| {
                let x = lo + (hi - lo) * i as f64 / steps as f64;
                (x, x.cos())
            }),
            BLACK.stroke_width(2),
        )),
        path
    )
    .label("cos(phi)")
    .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], BLACK.stroke_width(2)));

    for (k, (condition, points)) in series.iter().enumerate() {
        let color = PALETTE[(k + 1) % PALETTE.len()];
        tri!(
            chart.draw_series(points.iter().map(|&(x, b)| {
                PathElement::new(
                    vec![(x, b.mean - b.std), (x, b.mean + b.std)],
                    color.stroke_width(2),
                )
            })),
            path
        );
        tri!(
            chart.draw_series(points.iter().map(|&(x, b)| Circle::new(
                (x, b.mean),
                5,
                color.filled()
            ))),
            path
        )
        .label(condition.tag())
        .legend(move |(x, y)| Circle::new((x + 8, y), 5, color.filled()));
    }
    tri!(
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .position(SeriesLabelPosition::LowerLeft)
            .draw(),
        path
    );
    tri!(root.present(), path);
    Ok(())
}

fn missing(figure: &str, needed: &[C]) -> String {
    let tags: Vec<&str> = needed.iter().map(|c| c.tag()).collect();
    format!("{figure}: skipped, needs groups {}", tags.join(", "))
}

/// Draws every figure the result set supports into `dir`.
pub fn emit_plots(rs: &ResultSet, dir: &Path) -> Result<PlotReport, PlotError> {
    fs::create_dir_all(dir).map_err(|source| PlotError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut report = PlotReport::default();

    match (ae_bars(rs, C::Baseline), ae_bars(rs, C::AuroraDd)) {
        (Some(b), Some(a)) => {
            let path = dir.join(AE_BARS_FILE);
            grouped_bars(
                rs,
                &path,
                "mean absolute error per phi",
                &[(C::Baseline, b), (C::AuroraDd, a)],
                false,
            )?;
            report.written.push(path);
        }
        _ => report
            .skipped
            .push(missing(AE_BARS_FILE, &[C::Baseline, C::AuroraDd])),
    }

    let overlay: Vec<(C, Vec<(f64, Bar)>)> = [C::Baseline, C::AuroraDd]
        .into_iter()
        .filter_map(|c| z_points(rs, c).map(|p| (c, p)))
        .collect();
    if overlay.is_empty() {
        report
            .skipped
            .push(missing(IDEAL_OVERLAY_FILE, &[C::Baseline, C::AuroraDd]));
    } else {
        let path = dir.join(IDEAL_OVERLAY_FILE);
        ideal_overlay(rs, &path, &overlay)?;
        report.written.push(path);
    }

    match ae_bars(rs, C::AuroraDdZne) {
        Some(zne) => {
            let mut series: Vec<(C, Vec<Bar>)> = [C::Baseline, C::AuroraDd]
                .into_iter()
                .filter_map(|c| ae_bars(rs, c).map(|b| (c, b)))
                .collect();
            series.push((C::AuroraDdZne, zne));
            let path = dir.join(ZNE_LOG_FILE);
            grouped_bars(rs, &path, "mean absolute error (log scale)", &series, true)?;
            report.written.push(path);
        }
        None => report
            .skipped
            .push(missing(ZNE_LOG_FILE, &[C::AuroraDdZne])),
    }
    Ok(report)
}
