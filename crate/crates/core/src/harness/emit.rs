//! CSV tables and dependency-free SVG line plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::ladder::{ConvergenceReport, RenormReport};
use crate::energetics::{AuditReport, EnergyLedger};
use crate::error::Result;
use crate::noise::StochasticReport;

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Plot `log10 |y|` instead of `y`.
    pub log_y: bool,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn bounds(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

impl LinePlot {
    fn transformed(&self) -> Vec<(String, Vec<(f64, f64)>)> {
        self.series
            .iter()
            .map(|s| {
                let pts = s
                    .points
                    .iter()
                    .map(|&(x, y)| (x, if self.log_y { y.abs().log10() } else { y }))
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .collect();
                (s.name.clone(), pts)
            })
            .collect()
    }

    pub fn to_svg(&self) -> String {
        let data = self.transformed();
        let (x0, x1) = bounds(data.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)));
        let (y0, y1) = bounds(data.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        )
        .unwrap();
        writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        )
        .unwrap();
        let (bx, by) = (MARGIN, HEIGHT - MARGIN);
        writeln!(
            s,
            r#"<path d="M {bx} {MARGIN} L {bx} {by} L {} {by}" stroke="black" fill="none"/>"#,
            WIDTH - MARGIN
        )
        .unwrap();
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"#,
                sx(fx),
                by + 16.0,
                tick(fx)
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{}</text>"#,
                bx - 6.0,
                sy(fy) + 4.0,
                tick(fy)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        )
        .unwrap();
        let y_label = if self.log_y { format!("log10 {}", self.y_label) } else { self.y_label.clone() };
        writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&y_label)
        )
        .unwrap();
        for (i, (name, pts)) in data.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            if !pts.is_empty() {
                let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                writeln!(
                    s,
                    r#"<polyline points="{}" stroke="{color}" stroke-width="2" fill="none"/>"#,
                    path.join(" ")
                )
                .unwrap();
                for &(x, y) in pts {
                    writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y)).unwrap();
                }
            }
            let ly = MARGIN + 16.0 * i as f64;
            writeln!(
                s,
                r#"<text x="{}" y="{ly}" font-size="12" fill="{color}">{}</text>"#,
                WIDTH - MARGIN - 150.0,
                escape(name)
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Everything [`emit_results`] knows how to render.
#[derive(Debug, Clone)]
pub enum Report {
    Convergence(ConvergenceReport),
    Renormalization(RenormReport),
    Stochastic(StochasticReport),
    Ledger(EnergyLedger),
    Audit(AuditReport),
}

fn convergence_plot(title: &str, series: Vec<(&str, &ConvergenceReport)>) -> LinePlot {
    LinePlot {
        title: title.to_string(),
        x_label: "k = -log2 eps".into(),
        y_label: "log2 g_k".into(),
        log_y: false,
        series: series
            .into_iter()
            .map(|(name, r)| Series {
                name: name.to_string(),
                points: r.levels().into_iter().zip(r.gaps.iter().map(|g| g.log2())).collect(),
            })
            .collect(),
    }
}

fn put(dir: &Path, name: &str, body: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, body)?;
    out.push(path);
    Ok(())
}

/// Writes one CSV (or text) table and at most one SVG per report, returning
/// the written paths in order. An empty list writes nothing.
pub fn emit_results(reports: &[Report], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if reports.is_empty() {
        return Ok(out);
    }
    std::fs::create_dir_all(dir)?;
    for report in reports {
        match report {
            Report::Convergence(r) => {
                put(dir, "convergence.csv", &r.to_csv(), &mut out)?;
                let plot = convergence_plot("Cauchy gaps along the eps ladder", vec![("gap", r)]);
                put(dir, "convergence.svg", &plot.to_svg(), &mut out)?;
            }
            Report::Renormalization(r) => {
                let mut csv = String::from("k,corrected_gap,uncorrected_gap,corrected_final,uncorrected_final\n");
                let (cf, uf) = (r.corrected.final_gaps(), r.uncorrected.final_gaps());
                for (i, k) in r.corrected.levels().iter().enumerate() {
                    writeln!(
                        csv,
                        "{k},{:.10e},{:.10e},{:.10e},{:.10e}",
                        r.corrected.gaps[i], r.uncorrected.gaps[i], cf[i], uf[i]
                    )
                    .unwrap();
                }
                put(dir, "renorm.csv", &csv, &mut out)?;
                let plot = convergence_plot(
                    "Ladder gaps with and without the phase",
                    vec![("corrected", &r.corrected), ("uncorrected", &r.uncorrected)],
                );
                put(dir, "renorm.svg", &plot.to_svg(), &mut out)?;
            }
            Report::Stochastic(r) => {
                put(dir, "stochastic.txt", &r.to_text(), &mut out)?;
                let ks = r.config.eps_list[1..].iter().map(|e| -e.log2());
                let plot = LinePlot {
                    title: "Median Cauchy gaps of the noise objects".into(),
                    x_label: "k = -log2 eps".into(),
                    y_label: "gap".into(),
                    log_y: true,
                    series: vec![
                        Series { name: "wick".into(), points: ks.clone().zip(r.wick_gap_median.iter().cloned()).collect() },
                        Series { name: "Y".into(), points: ks.zip(r.y_gap_median.iter().cloned()).collect() },
                    ],
                };
                put(dir, "stochastic.svg", &plot.to_svg(), &mut out)?;
            }
            Report::Ledger(l) => {
                put(dir, "ledger.csv", &l.to_csv(), &mut out)?;
                let e0 = l.rows.first().map_or(0.0, |r| r.modified_energy);
                let plot = LinePlot {
                    title: "Modified-energy residual".into(),
                    x_label: "t".into(),
                    y_label: "|E(t) - E(0) + lambda int H|".into(),
                    log_y: true,
                    series: vec![Series {
                        name: "residual".into(),
                        points: l
                            .rows
                            .iter()
                            .skip(1)
                            .map(|r| (r.time, r.modified_energy - e0 + l.lambda * r.h_integral))
                            .collect(),
                    }],
                };
                put(dir, "ledger.svg", &plot.to_svg(), &mut out)?;
            }
            Report::Audit(a) => {
                put(dir, "audit.txt", &a.to_text(), &mut out)?;
                let plot = LinePlot {
                    title: "Audit residual against dt".into(),
                    x_label: "log10 dt".into(),
                    y_label: "residual".into(),
                    log_y: true,
                    series: vec![Series {
                        name: "residual".into(),
                        points: a.dts.iter().map(|d| d.log10()).zip(a.residuals.iter().cloned()).collect(),
                    }],
                };
                put(dir, "audit.svg", &plot.to_svg(), &mut out)?;
            }
        }
    }
    Ok(out)
}
