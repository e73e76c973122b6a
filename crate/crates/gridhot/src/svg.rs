//! Self-contained SVG charts: observed lines, dashed null-model medians, and
//! shaded 10-90% quantile bands. No external assets; a metadata comment
//! records the plot-area transform so tests can parse coordinates back.

use crate::error::{Error, Result};
use crate::patterns::NullBand;
use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 58.0;

const SERIES_COLORS: [&str; 6] = [
    "#1f77b4", "#ff7f00", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

/// A named band (10-90% fill plus dashed median).
pub struct BandSeries<'a> {
    pub label: &'a str,
    pub band: &'a NullBand,
}

/// A named line.
pub struct LineSeries<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
    pub dashed: bool,
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn from_extents(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> Frame {
        let mut x_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        for x in xs {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
        }
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for y in ys {
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        // Pad degenerate ranges so single points stay drawable.
        if x_max - x_min < 1e-12 {
            let pad = x_min.abs().max(1.0) * 0.5;
            x_min -= pad;
            x_max += pad;
        }
        if y_max - y_min < 1e-12 {
            let pad = y_min.abs().max(1.0) * 0.5;
            y_min -= pad;
            y_max += pad;
        }
        Frame {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT
            + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| span / s <= target as f64)
        .unwrap_or(mag * 10.0);
    let first = (lo / step).ceil() * step;
    let mut out = Vec::new();
    let mut t = first;
    while t <= hi + 1e-9 * span {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() >= 1000.0 || (v.fract() == 0.0 && v.abs() < 1e7) {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.3}")
    }
}

fn chart_header(out: &mut String, title: &str, x_label: &str, y_label: &str, frame: &Frame) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        out,
        "<!-- plot-area left={MARGIN_LEFT} top={MARGIN_TOP} right={:.1} bottom={:.1} xmin={} xmax={} ymin={} ymax={} -->",
        WIDTH - MARGIN_RIGHT,
        HEIGHT - MARGIN_BOTTOM,
        frame.x_min,
        frame.x_max,
        frame.y_min,
        frame.y_max
    );
    let _ = writeln!(
        out,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>",
        WIDTH / 2.0,
        xml_escape(title)
    );
    // Axes.
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let _ = writeln!(
        out,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\" stroke-width=\"1\"/>"
    );
    let _ = writeln!(
        out,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\" stroke-width=\"1\"/>"
    );
    for t in ticks(frame.x_min, frame.x_max, 8) {
        let px = frame.px(t);
        let _ = writeln!(
            out,
            "<line x1=\"{px:.2}\" y1=\"{y0}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"0.7\"/>",
            y0 + 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            y0 + 18.0,
            fmt_tick(t)
        );
    }
    for t in ticks(frame.y_min, frame.y_max, 6) {
        let py = frame.py(t);
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{x0}\" y2=\"{py:.2}\" stroke=\"black\" stroke-width=\"0.7\"/>",
            x0 - 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            x0 - 8.0,
            py + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 16.0,
        xml_escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {:.1})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        xml_escape(y_label)
    );
}

fn polyline(out: &mut String, frame: &Frame, pts: &[(f64, f64)], color: &str, dashed: bool) {
    if pts.len() == 1 {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"3\" fill=\"{color}\"/>",
            frame.px(pts[0].0),
            frame.py(pts[0].1)
        );
        return;
    }
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.6},{:.6}", frame.px(x), frame.py(y)))
        .collect();
    let dash = if dashed {
        " stroke-dasharray=\"6,4\""
    } else {
        ""
    };
    let _ = writeln!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash}/>",
        coords.join(" ")
    );
}

fn band_polygon(out: &mut String, frame: &Frame, band: &NullBand, color: &str) {
    let mut coords = Vec::with_capacity(band.xs.len() * 2);
    for (x, hi) in band.xs.iter().zip(&band.q90) {
        coords.push(format!("{:.6},{:.6}", frame.px(*x), frame.py(*hi)));
    }
    for (x, lo) in band.xs.iter().zip(&band.q10).rev() {
        coords.push(format!("{:.6},{:.6}", frame.px(*x), frame.py(*lo)));
    }
    let _ = writeln!(
        out,
        "<polygon class=\"band\" points=\"{}\" fill=\"{color}\" fill-opacity=\"0.25\" stroke=\"none\"/>",
        coords.join(" ")
    );
}

fn legend(out: &mut String, entries: &[(String, &str, bool)]) {
    let mut y = MARGIN_TOP + 14.0;
    for (label, color, dashed) in entries {
        let x0 = MARGIN_LEFT + 12.0;
        let dash = if *dashed {
            " stroke-dasharray=\"6,4\""
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{:.1}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>",
            x0 + 26.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            x0 + 32.0,
            y + 4.0,
            xml_escape(label)
        );
        y += 18.0;
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Observed curve (when given) against shaded null bands with dashed medians.
pub fn band_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    observed: Option<&[(f64, f64)]>,
    bands: &[BandSeries],
) -> Result<String> {
    if observed.map_or(false, |o| o.is_empty()) {
        return Err(Error::InvalidInput(format!(
            "chart {title:?}: observed curve is empty"
        )));
    }
    if observed.is_none() && bands.is_empty() {
        return Err(Error::InvalidInput(format!(
            "chart {title:?}: nothing to draw"
        )));
    }
    for b in bands {
        if b.band.xs.is_empty() {
            return Err(Error::InvalidInput(format!(
                "chart {title:?}: band {:?} is empty",
                b.label
            )));
        }
    }
    let obs = observed.unwrap_or(&[]);
    let xs = obs
        .iter()
        .map(|p| p.0)
        .chain(bands.iter().flat_map(|b| b.band.xs.iter().copied()));
    let ys = obs.iter().map(|p| p.1).chain(bands.iter().flat_map(|b| {
        b.band
            .q10
            .iter()
            .chain(b.band.q90.iter())
            .chain(b.band.q50.iter())
            .copied()
    }));
    let frame = Frame::from_extents(xs, ys);
    let mut out = String::new();
    chart_header(&mut out, title, x_label, y_label, &frame);
    let mut legend_entries: Vec<(String, &str, bool)> = Vec::new();
    for (i, b) in bands.iter().enumerate() {
        let color = SERIES_COLORS[(i + 1) % SERIES_COLORS.len()];
        band_polygon(&mut out, &frame, b.band, color);
        let median: Vec<(f64, f64)> = b
            .band
            .xs
            .iter()
            .zip(&b.band.q50)
            .map(|(&x, &y)| (x, y))
            .collect();
        polyline(&mut out, &frame, &median, color, true);
        legend_entries.push((format!("{} median (10-90%)", b.label), color, true));
    }
    if !obs.is_empty() {
        polyline(&mut out, &frame, obs, SERIES_COLORS[0], false);
        legend_entries.insert(0, ("observed".to_string(), SERIES_COLORS[0], false));
    }
    legend(&mut out, &legend_entries);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Plain multi-series line chart, with an optional y = x reference.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[LineSeries],
    diagonal: bool,
) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidInput(format!(
            "chart {title:?}: no series given"
        )));
    }
    for s in series {
        if s.points.is_empty() {
            return Err(Error::InvalidInput(format!(
                "chart {title:?}: series {:?} is empty",
                s.label
            )));
        }
    }
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let frame = Frame::from_extents(xs, ys);
    let mut out = String::new();
    chart_header(&mut out, title, x_label, y_label, &frame);
    if diagonal {
        let lo = frame.x_min.max(frame.y_min);
        let hi = frame.x_max.min(frame.y_max);
        if hi > lo {
            let _ = writeln!(
                out,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#999999\" stroke-width=\"1\" stroke-dasharray=\"3,3\"/>",
                frame.px(lo),
                frame.py(lo),
                frame.px(hi),
                frame.py(hi)
            );
        }
    }
    let mut legend_entries = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        polyline(&mut out, &frame, s.points, color, s.dashed);
        legend_entries.push((s.label.to_string(), color, s.dashed));
    }
    legend(&mut out, &legend_entries);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Parse helpers for round-trip tests: plot-area metadata and polygon points.
pub mod parse {
    /// (left, top, right, bottom, xmin, xmax, ymin, ymax) from the metadata comment.
    pub fn plot_area(svg: &str) -> Option<[f64; 8]> {
        let line = svg.lines().find(|l| l.contains("plot-area"))?;
        let mut vals = [0.0f64; 8];
        for (i, key) in [
            "left=", "top=", "right=", "bottom=", "xmin=", "xmax=", "ymin=", "ymax=",
        ]
        .iter()
        .enumerate()
        {
            let start = line.find(key)? + key.len();
            let rest = &line[start..];
            let end = rest.find(' ').unwrap_or(rest.len());
            vals[i] = rest[..end].parse().ok()?;
        }
        Some(vals)
    }

    /// Pixel vertices of the first band polygon.
    pub fn band_points(svg: &str) -> Option<Vec<(f64, f64)>> {
        let line = svg.lines().find(|l| l.contains("class=\"band\""))?;
        let start = line.find("points=\"")? + "points=\"".len();
        let end = line[start..].find('"')? + start;
        let mut out = Vec::new();
        for pair in line[start..end].split_whitespace() {
            let (x, y) = pair.split_once(',')?;
            out.push((x.parse().ok()?, y.parse().ok()?));
        }
        Some(out)
    }
}
