//! SVG line charts of oneC and avgC against ε.
//!
//! Line styles follow the usual legend: M dashed, IP dash-dot and IP_M a
//! thin solid line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use confpred::evaluation::{mean_metrics, CellMeans, FoldResult, Metric, NcfId};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

struct LineStyle {
    color: &'static str,
    width: f64,
    dash: Option<&'static str>,
}

fn style(ncf: NcfId) -> LineStyle {
    match ncf {
        NcfId::M => LineStyle {
            color: "#1f77b4",
            width: 2.0,
            dash: Some("8,4"),
        },
        NcfId::Ip => LineStyle {
            color: "#d62728",
            width: 2.0,
            dash: Some("8,4,2,4"),
        },
        NcfId::IpM => LineStyle {
            color: "#000000",
            width: 1.0,
            dash: None,
        },
    }
}

/// One chart: a metric against ε with one series per nonconformity function.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub metric: Metric,
    /// `(ncf, points)` with points sorted by ε.
    pub series: Vec<(NcfId, Vec<(f64, f64)>)>,
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn extent(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

impl Chart {
    /// Renders the chart as a standalone SVG document.
    pub fn to_svg(&self) -> String {
        let points = || self.series.iter().flat_map(|(_, p)| p.iter());
        let (x_min, mut x_max) = extent(points().map(|p| p.0)).unwrap_or((0.0, 1.0));
        if x_max <= x_min {
            x_max = x_min + 1.0;
        }
        let y_min = 0.0;
        let y_max = match self.metric {
            Metric::OneC => 1.0,
            Metric::AvgC => extent(points().map(|p| p.1)).map_or(1.0, |(_, hi)| hi.ceil().max(1.0)),
        };
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
        let sy = |y: f64| TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(&self.title)
        );

        // Axes, ticks and grid.
        let _ = writeln!(
            s,
            r#"<path d="M {LEFT:.2} {TOP:.2} L {LEFT:.2} {:.2} L {:.2} {:.2}" stroke="black" fill="none"/>"#,
            TOP + plot_h,
            LEFT + plot_w,
            TOP + plot_h
        );
        let mut x_ticks: Vec<f64> = points().map(|p| p.0).collect();
        x_ticks.sort_by(f64::total_cmp);
        x_ticks.dedup();
        for x in x_ticks {
            let px = sx(x);
            let _ = writeln!(
                s,
                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#,
                TOP + plot_h,
                TOP + plot_h + 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#,
                TOP + plot_h + 18.0
            );
        }
        for i in 0..=5 {
            let y = y_min + (y_max - y_min) * i as f64 / 5.0;
            let py = sy(y);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/>"##,
                LEFT + plot_w
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                py + 4.0,
                format_tick(y)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">ε</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 15.0
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            self.metric.as_str()
        );

        // Series and legend.
        for (i, (ncf, pts)) in self.series.iter().enumerate() {
            let st = style(*ncf);
            let dash = st.dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
            if !pts.is_empty() {
                let mut d = String::new();
                for (j, &(x, y)) in pts.iter().enumerate() {
                    let _ = write!(d, "{}{:.2} {:.2}", if j == 0 { "M " } else { " L " }, sx(x), sy(y));
                }
                let _ = writeln!(
                    s,
                    r#"<path class="series" data-ncf="{ncf}" d="{d}" stroke="{}" stroke-width="{}" fill="none"{dash}/>"#,
                    st.color, st.width
                );
            }
            let ly = TOP + 10.0 + 20.0 * i as f64;
            let lx = WIDTH - RIGHT + 15.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="{}"{dash}/>"#,
                lx + 35.0,
                st.color,
                st.width
            );
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{ncf}</text>"#, lx + 42.0, ly + 4.0);
        }
        s.push_str("</svg>\n");
        s
    }
}

fn format_tick(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Charts for every `(dataset, classifier)` pair: oneC first, then avgC.
pub fn charts(results: &[FoldResult]) -> Vec<(String, String, Chart)> {
    let cells = mean_metrics(results);
    let mut pairs: Vec<(&str, &str)> = Vec::new();
    for c in &cells {
        if !pairs.contains(&(c.dataset.as_str(), c.classifier.as_str())) {
            pairs.push((&c.dataset, &c.classifier));
        }
    }
    let mut out = Vec::new();
    for (dataset, classifier) in pairs {
        let group: Vec<&CellMeans> = cells
            .iter()
            .filter(|c| c.dataset == dataset && c.classifier == classifier)
            .collect();
        for metric in [Metric::OneC, Metric::AvgC] {
            let series = NcfId::ALL
                .iter()
                .map(|&ncf| {
                    let mut pts: Vec<(f64, f64)> = group
                        .iter()
                        .filter(|c| c.ncf == ncf)
                        .map(|c| {
                            let y = match metric {
                                Metric::OneC => c.one_c,
                                Metric::AvgC => c.avg_c,
                            };
                            (c.epsilon, y)
                        })
                        .collect();
                    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                    (ncf, pts)
                })
                .collect();
            out.push((
                dataset.to_string(),
                classifier.to_string(),
                Chart {
                    title: format!("{dataset}, {classifier}: {}", metric.as_str()),
                    metric,
                    series,
                },
            ));
        }
    }
    out
}

/// Replaces anything outside `[A-Za-z0-9._-]` so the name is a safe path
/// component.
pub fn file_stem(part: &str) -> String {
    part.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect()
}

/// Writes every chart to `out_dir` and returns the written paths.
pub fn write_charts(results: &[FoldResult], out_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (dataset, classifier, chart) in charts(results) {
        let name = format!("{}__{}__{}.svg", file_stem(&dataset), file_stem(&classifier), chart.metric.as_str());
        let path = out_dir.join(name);
        std::fs::write(&path, chart.to_svg())?;
        written.push(path);
    }
    Ok(written)
}
