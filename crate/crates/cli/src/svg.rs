//! Static SVG figures.

use std::path::Path;

use ambilearn_core::robot_sim::{Region, ZoneMap};
use ambilearn_core::{Error, Result};
use plotters::prelude::*;

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(255, 127, 14),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }
}

fn draw_err<E: std::fmt::Debug>(e: E) -> Error {
    Error::InvalidConfig(format!("svg output: {e:?}"))
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9 * hi.abs().max(1.0));
    (lo - pad, hi + pad)
}

/// Line chart. With `log_y`, values are plotted as `log10` and non-positive
/// points are dropped.
pub fn line_chart(path: &Path, title: &str, y_label: &str, series: &[Series], log_y: bool) -> Result<()> {
    let series: Vec<Series> = series
        .iter()
        .map(|s| {
            let pts = s
                .points
                .iter()
                .filter(|(_, y)| y.is_finite() && (!log_y || *y > 0.0))
                .map(|&(x, y)| (x, if log_y { y.log10() } else { y }))
                .collect();
            Series::new(s.name.clone(), pts)
        })
        .collect();
    let (x_lo, x_hi) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y_lo, y_hi) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let root = SVGBackend::new(path, (800, 450)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(64)
        .build_cartesian_2d(x_lo..x_hi, y_lo..y_hi)
        .map_err(draw_err)?;
    let y_desc = if log_y {
        format!("log10 {y_label}")
    } else {
        y_label.to_string()
    };
    chart
        .configure_mesh()
        .x_desc("t")
        .y_desc(y_desc)
        .draw()
        .map_err(draw_err)?;
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
            .map_err(draw_err)?
            .label(s.name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)
}

/// Planar path drawn over the zone regions.
pub fn trajectory_chart(path: &Path, zones: &ZoneMap, states: &[[f64; 3]]) -> Result<()> {
    let mut xs: Vec<f64> = states.iter().map(|s| s[0]).collect();
    let mut ys: Vec<f64> = states.iter().map(|s| s[1]).collect();
    for z in &zones.zones {
        match &z.region {
            Region::Rect { x_min, x_max, .. } => xs.extend([*x_min, *x_max].iter().filter(|v| v.is_finite())),
            Region::Polygon { vertices } => xs.extend(vertices.iter().map(|v| v[0])),
        }
    }
    let (x_lo, x_hi) = bounds(xs.into_iter());
    ys.push(0.0);
    let (y_lo, y_hi) = bounds(ys.into_iter());
    let half = ((y_hi - y_lo) / 2.0).max(0.5);
    let mid = (y_hi + y_lo) / 2.0;
    let (y_lo, y_hi) = (mid - half, mid + half);

    let root = SVGBackend::new(path, (800, 450)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("trajectory over road zones", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(56)
        .build_cartesian_2d(x_lo..x_hi, y_lo..y_hi)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc("x1")
        .y_desc("x2")
        .draw()
        .map_err(draw_err)?;
    for (i, z) in zones.zones.iter().enumerate() {
        let color = PALETTE[(i + 1) % PALETTE.len()];
        let style = color.mix(0.2).filled();
        let series = match &z.region {
            Region::Rect {
                x_min,
                x_max,
                y_min,
                y_max,
            } => {
                let clamp = |v: f64, lo: f64, hi: f64| v.clamp(lo, hi);
                vec![Polygon::new(
                    vec![
                        (clamp(*x_min, x_lo, x_hi), clamp(*y_min, y_lo, y_hi)),
                        (clamp(*x_max, x_lo, x_hi), clamp(*y_min, y_lo, y_hi)),
                        (clamp(*x_max, x_lo, x_hi), clamp(*y_max, y_lo, y_hi)),
                        (clamp(*x_min, x_lo, x_hi), clamp(*y_max, y_lo, y_hi)),
                    ],
                    style,
                )]
            }
            Region::Polygon { vertices } => {
                vec![Polygon::new(
                    vertices.iter().map(|v| (v[0], v[1])).collect::<Vec<_>>(),
                    style,
                )]
            }
        };
        chart
            .draw_series(series)
            .map_err(draw_err)?
            .label(z.name.as_str())
            .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 20, y + 5)], color.mix(0.4).filled()));
    }
    chart
        .draw_series(LineSeries::new(
            states.iter().map(|s| (s[0], s[1])),
            BLACK.stroke_width(2),
        ))
        .map_err(draw_err)?
        .label("path")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK.stroke_width(2)));
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)
}
