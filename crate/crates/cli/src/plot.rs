//! Deterministic SVG scatter plots.
//!
//! Every plot uses the same viewBox and fixed decimal formatting, so two runs
//! on the same reports produce byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write;

use spinc_core::Report;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: [f64; 4] = [70.0, 20.0, 40.0, 50.0]; // left, right, top, bottom
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log10,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Joins consecutive points with a polyline.
    pub line: bool,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return None;
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return Some((lo - pad, hi + pad));
    }
    let pad = 0.05 * (hi - lo);
    Some((lo - pad, hi + pad))
}

fn transform(v: f64, s: Scale) -> Option<f64> {
    match s {
        Scale::Linear => v.is_finite().then_some(v),
        Scale::Log10 => (v.is_finite() && v > 0.0).then(|| v.log10()),
    }
}

impl Plot {
    /// Renders the plot; points that cannot be drawn on the chosen scale
    /// (non-finite, or non-positive on a log axis) are skipped.
    pub fn render(&self) -> String {
        let pts: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .filter_map(|&(x, y)| Some((transform(x, self.x_scale)?, transform(y, self.y_scale)?)))
                    .collect()
            })
            .collect();
        let xr = range(pts.iter().flatten().map(|p| p.0)).unwrap_or((0.0, 1.0));
        let yr = range(pts.iter().flatten().map(|p| p.1)).unwrap_or((0.0, 1.0));
        let [ml, mr, mt, mb] = MARGIN;
        let (pw, ph) = (WIDTH - ml - mr, HEIGHT - mt - mb);
        let sx = |x: f64| ml + (x - xr.0) / (xr.1 - xr.0) * pw;
        let sy = |y: f64| mt + ph - (y - yr.0) / (yr.1 - yr.0) * ph;
        let tick = |v: f64, s: Scale| match s {
            Scale::Linear => format!("{v:.4}"),
            Scale::Log10 => format!("1e{v:.2}"),
        };

        let mut o = String::new();
        let _ = writeln!(
            o,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH:.0} {HEIGHT:.0}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(o, r#"<rect x="0" y="0" width="{WIDTH:.0}" height="{HEIGHT:.0}" fill="white"/>"#);
        let _ = writeln!(o, r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        let _ = writeln!(o, r#"<rect x="{ml:.2}" y="{mt:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#);
        for i in 0..=4 {
            let fx = xr.0 + (xr.1 - xr.0) * i as f64 / 4.0;
            let fy = yr.0 + (yr.1 - yr.0) * i as f64 / 4.0;
            let _ = writeln!(
                o,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                sx(fx),
                mt + ph + 15.0,
                tick(fx, self.x_scale)
            );
            let _ = writeln!(o, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, ml - 4.0, sy(fy) + 4.0, tick(fy, self.y_scale));
        }
        let _ = writeln!(
            o,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            ml + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            o,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            mt + ph / 2.0,
            mt + ph / 2.0,
            escape(&self.y_label)
        );
        for (k, (s, p)) in self.series.iter().zip(&pts).enumerate() {
            let color = COLORS[k % COLORS.len()];
            if s.line && p.len() > 1 {
                let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(o, r#"<polyline fill="none" stroke="{color}" points="{}"/>"#, path.join(" "));
            }
            for &(x, y) in p {
                let _ = writeln!(o, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
            }
            let _ = writeln!(
                o,
                r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#,
                ml + 8.0,
                mt + 14.0 + 13.0 * k as f64,
                escape(&s.name)
            );
        }
        o.push_str("</svg>\n");
        o
    }
}

fn degree(r: &Report) -> Option<f64> {
    r.metadata.get("degree")?.parse().ok()
}

/// `λ²` against degree (or against index when only one degree is present,
/// which shows the multiplicity staircase).
pub fn spectrum_plot(reports: &[Report]) -> Option<Plot> {
    let pairs: Vec<(f64, f64, f64)> = reports
        .iter()
        .filter(|r| r.name == "eigenpair")
        .filter_map(|r| Some((degree(r)?, r.metadata.get("level")?.parse().ok()?, r.value("lambda_sq")?)))
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let one_degree = pairs.iter().all(|p| p.0 == pairs[0].0);
    let (x_label, points) = if one_degree {
        ("eigenvalue index", pairs.iter().map(|p| (p.1, p.2)).collect())
    } else {
        ("degree d", pairs.iter().map(|p| (p.0, p.2)).collect())
    };
    Some(Plot {
        title: "Spectrum of D²".into(),
        x_label: x_label.into(),
        y_label: "λ²".into(),
        x_scale: Scale::Linear,
        y_scale: Scale::Linear,
        series: vec![Series { name: "λ²".into(), points, line: false }],
    })
}

pub fn bar_slack_plot(reports: &[Report]) -> Option<Plot> {
    let points: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.name == "bar_bound")
        .filter_map(|r| Some((degree(r)?, r.value("slack")?)))
        .collect();
    (!points.is_empty()).then(|| Plot {
        title: "Bär-type bound slack".into(),
        x_label: "degree d".into(),
        y_label: "λ₁² − rhs".into(),
        x_scale: Scale::Linear,
        y_scale: Scale::Linear,
        series: vec![Series { name: "slack".into(), points, line: true }],
    })
}

/// Largest energy-momentum identity residual over the eigenvalue levels against lattice size,
/// one series per degree.
pub fn convergence_plot(reports: &[Report]) -> Option<Plot> {
    let mut worst: BTreeMap<(i64, u64), f64> = BTreeMap::new();
    for r in reports.iter().filter(|r| r.name == "thm31") {
        let n: Option<u64> = r.metadata.get("N").and_then(|v| v.parse().ok());
        if let (Some(n), Some(d), Some(v)) = (n, degree(r), r.value("residual_l2")) {
            let e = worst.entry((d as i64, n)).or_insert(0.0);
            *e = e.max(v);
        }
    }
    let mut by_degree: BTreeMap<i64, Vec<(f64, f64)>> = BTreeMap::new();
    for ((d, n), v) in worst {
        by_degree.entry(d).or_default().push((n as f64, v));
    }
    by_degree.retain(|_, v| v.len() > 1);
    if by_degree.is_empty() {
        return None;
    }
    let series = by_degree.into_iter().map(|(d, points)| Series { name: format!("d={d}"), points, line: true }).collect();
    Some(Plot {
        title: "Energy-momentum identity convergence".into(),
        x_label: "N".into(),
        y_label: "max L² residual".into(),
        x_scale: Scale::Log10,
        y_scale: Scale::Log10,
        series,
    })
}

/// All plots derivable from a report set, keyed by file name. Empty input
/// yields nothing.
pub fn plots(reports: &[Report]) -> Vec<(&'static str, String)> {
    [
        ("spectrum.svg", spectrum_plot(reports)),
        ("bar_slack.svg", bar_slack_plot(reports)),
        ("convergence.svg", convergence_plot(reports)),
    ]
    .into_iter()
    .filter_map(|(name, p)| Some((name, p?.render())))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eig(degree: i32, level: usize, v: f64) -> Report {
        let mut r = Report::new("eigenpair");
        r.meta("degree", degree).meta("level", level).scalar("lambda_sq", v);
        r
    }

    #[test]
    fn single_report_gives_one_point() {
        let svg = spectrum_plot(&[eig(0, 0, 1.0)]).unwrap().render();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains(r#"viewBox="0 0 640 400""#));
    }

    #[test]
    fn rendering_is_stable() {
        let r: Vec<Report> = (0..5).map(|i| eig(0, i, (i * i) as f64)).collect();
        assert_eq!(spectrum_plot(&r).unwrap().render(), spectrum_plot(&r).unwrap().render());
    }

    #[test]
    fn empty_set_yields_no_plots() {
        assert!(plots(&[]).is_empty());
    }

    #[test]
    fn log_axes_skip_nonpositive_points() {
        let p = Plot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            x_scale: Scale::Log10,
            y_scale: Scale::Log10,
            series: vec![Series { name: "s".into(), points: vec![(1.0, 1.0), (2.0, 0.0), (4.0, f64::NAN)], line: true }],
        };
        assert_eq!(p.render().matches("<circle").count(), 1);
    }
}
