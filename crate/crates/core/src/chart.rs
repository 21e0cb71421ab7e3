//! Static, self-contained SVG charts: axes, data marks and optional fitted
//! curves. Output is deterministic for a given input.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::rayleigh::RayleighFit;
use crate::revision::RevisionTrajectory;
use crate::size::{LinearSizeModel, SizePoint, SqrtSizeModel};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 56.0;
const CURVE_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Marks,
    Line,
    Bars,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub kind: SeriesKind,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn label(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

struct Axis {
    min: f64,
    max: f64,
    step: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64) -> Self {
        let (lo, hi) = if (hi - lo).abs() < f64::EPSILON {
            (lo - 1.0, hi + 1.0)
        } else {
            (lo, hi)
        };
        let step = nice_step(hi - lo);
        Axis {
            min: (lo / step).floor() * step,
            max: (hi / step).ceil() * step,
            step,
        }
    }

    fn ticks(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step).round() as usize;
        (0..=n).map(|i| self.min + i as f64 * self.step).collect()
    }
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Chart {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn with(
        mut self,
        name: &str,
        kind: SeriesKind,
        color: &'static str,
        points: Vec<(f64, f64)>,
    ) -> Self {
        self.series.push(Series {
            name: name.into(),
            kind,
            color,
            points,
        });
        self
    }

    pub fn to_svg(&self) -> Result<String> {
        let all: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .collect();
        if all.is_empty() {
            return Err(Error::invalid("chart has no data"));
        }
        if all.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::invalid("chart data must be finite"));
        }
        let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&(f64, f64)) -> f64| {
            all.iter().map(pick).fold(init, f)
        };
        let has_bars = self.series.iter().any(|s| s.kind == SeriesKind::Bars);
        let mut x_lo = fold(f64::min, f64::INFINITY, |p| p.0);
        let mut x_hi = fold(f64::max, f64::NEG_INFINITY, |p| p.0);
        if has_bars {
            x_lo -= 0.5;
            x_hi += 0.5;
        }
        let x = Axis::new(x_lo.min(0.0), x_hi);
        let y = Axis::new(
            fold(f64::min, f64::INFINITY, |p| p.1).min(0.0),
            fold(f64::max, f64::NEG_INFINITY, |p| p.1),
        );

        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |v: f64| MARGIN_LEFT + (v - x.min) / (x.max - x.min) * plot_w;
        let sy = |v: f64| MARGIN_TOP + plot_h - (v - y.min) / (y.max - y.min) * plot_h;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, "<title>{}</title>", escape(&self.title));
        let _ = writeln!(
            out,
            r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        out.push_str("<g class=\"axes\" stroke=\"black\" fill=\"none\">\n");
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
            MARGIN_LEFT,
            MARGIN_TOP + plot_h,
            MARGIN_LEFT + plot_w,
            MARGIN_TOP + plot_h
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
            MARGIN_LEFT,
            MARGIN_TOP,
            MARGIN_LEFT,
            MARGIN_TOP + plot_h
        );
        out.push_str("</g>\n<g class=\"ticks\" fill=\"black\">\n");
        for t in x.ticks() {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                sx(t),
                MARGIN_TOP + plot_h + 16.0,
                label(t)
            );
        }
        for t in y.ticks() {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN_LEFT - 6.0,
                sy(t) + 4.0,
                label(t)
            );
        }
        out.push_str("</g>\n");
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        );

        for s in &self.series {
            let _ = writeln!(out, r#"<g class="series" data-name="{}">"#, escape(&s.name));
            match s.kind {
                SeriesKind::Marks => {
                    for &(px, py) in &s.points {
                        let _ = writeln!(
                            out,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                            sx(px),
                            sy(py),
                            s.color
                        );
                    }
                }
                SeriesKind::Line => {
                    let pts: Vec<String> = s
                        .points
                        .iter()
                        .map(|&(px, py)| format!("{:.2},{:.2}", sx(px), sy(py)))
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                        pts.join(" "),
                        s.color
                    );
                }
                SeriesKind::Bars => {
                    let bar_w = plot_w / (x.max - x.min) * 0.8;
                    for &(px, py) in &s.points {
                        let top = sy(py.max(0.0));
                        let _ = writeln!(
                            out,
                            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                            sx(px) - bar_w / 2.0,
                            top,
                            bar_w,
                            sy(0.0) - top,
                            s.color
                        );
                    }
                }
            }
            out.push_str("</g>\n");
        }
        out.push_str("</svg>\n");
        Ok(out)
    }
}

/// Expected defects per revision state, revision 1 being the build.
pub fn trajectory_chart(t: &RevisionTrajectory) -> Result<String> {
    let pts: Vec<(f64, f64)> = t
        .expected_defects
        .iter()
        .enumerate()
        .map(|(i, &d)| ((i + 1) as f64, d))
        .collect();
    Chart::new(
        "Expected defects by revision",
        "revision",
        "expected defects",
    )
    .with("expected defects", SeriesKind::Line, "#1f77b4", pts)
    .to_svg()
}

fn curve(max_x: f64, f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    (0..=CURVE_SAMPLES)
        .map(|i| {
            let x = max_x * i as f64 / CURVE_SAMPLES as f64;
            (x, f(x))
        })
        .collect()
}

/// Issues against unique formulas, with optional fitted curves.
pub fn scatter_chart(
    points: &[SizePoint],
    linear: Option<&LinearSizeModel>,
    sqrt: Option<&SqrtSizeModel>,
) -> Result<String> {
    if points.is_empty() {
        return Err(Error::invalid("scatter has no points"));
    }
    let max_uf = points.iter().map(|p| p.uf).max().unwrap_or(1) as f64;
    let mut chart = Chart::new("Issues vs unique formulas", "unique formulas", "issues").with(
        "observed",
        SeriesKind::Marks,
        "#d62728",
        points
            .iter()
            .map(|p| (p.uf as f64, p.issues as f64))
            .collect(),
    );
    if let Some(m) = linear {
        chart = chart.with(
            "linear fit",
            SeriesKind::Line,
            "#1f77b4",
            curve(max_uf, |x| m.intercept + m.slope * x),
        );
    }
    if let Some(m) = sqrt {
        chart = chart.with(
            "sqrt fit",
            SeriesKind::Line,
            "#2ca02c",
            curve(max_uf, |x| m.coefficient * x.sqrt()),
        );
    }
    chart.to_svg()
}

/// Cumulative arrivals at bucket right edges, with the fitted curve.
pub fn arrival_chart(
    counts: &[u64],
    bucket_days: f64,
    fit: Option<&RayleighFit>,
) -> Result<String> {
    if counts.is_empty() {
        return Err(Error::invalid("arrival series is empty"));
    }
    let mut total = 0u64;
    let observed: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            total += c;
            ((i + 1) as f64 * bucket_days, total as f64)
        })
        .collect();
    let mut chart = Chart::new("Cumulative defect arrivals", "days", "defects found").with(
        "observed",
        SeriesKind::Marks,
        "#d62728",
        observed,
    );
    if let Some(f) = fit {
        let horizon = (counts.len() as f64).max(2.5 * f.sigma);
        chart = chart.with(
            "rayleigh fit",
            SeriesKind::Line,
            "#1f77b4",
            curve(horizon * bucket_days, |d| f.cdf(d / bucket_days)),
        );
    }
    chart.to_svg()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(svg: &str, needle: &str) -> usize {
        svg.matches(needle).count()
    }

    #[test]
    fn single_point_scatter_has_one_mark() {
        let svg = scatter_chart(&[SizePoint::new(2182, 151).unwrap()], None, None).unwrap();
        assert_eq!(count(&svg, "<circle"), 1);
        assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn trajectory_polyline_has_one_vertex_per_state() {
        let t = RevisionTrajectory {
            revisions: 6,
            expected_defects: vec![400.0, 80.0, 16.0, 3.2, 0.64, 0.128],
        };
        let svg = trajectory_chart(&t).unwrap();
        assert_eq!(count(&svg, "<polyline"), 1);
        let start = svg.find("points=\"").unwrap() + 8;
        let end = start + svg[start..].find('"').unwrap();
        assert_eq!(svg[start..end].split(' ').count(), 6);
    }

    #[test]
    fn empty_data_is_rejected() {
        assert!(Chart::new("t", "x", "y").to_svg().is_err());
        assert!(scatter_chart(&[], None, None).is_err());
        assert!(arrival_chart(&[], 7.0, None).is_err());
    }

    #[test]
    fn text_is_escaped() {
        let svg = Chart::new("a < b & c", "x", "y")
            .with("s", SeriesKind::Bars, "#000", vec![(1.0, 2.0)])
            .to_svg()
            .unwrap();
        assert!(svg.contains("a &lt; b &amp; c"));
    }

    #[test]
    fn nice_ticks() {
        let a = Axis::new(0.0, 151.0);
        assert_eq!(a.step, 50.0);
        assert_eq!(a.ticks(), vec![0.0, 50.0, 100.0, 150.0, 200.0]);
    }
}
