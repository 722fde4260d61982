//! Report serializations: CSV, JSON, SVG charts and a plain-text table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bench::{BenchReport, BenchRow, Setting, ValidationReport};
use crate::error::{validation, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
    Text,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 4] = [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg, ReportFormat::Text];
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            "text" | "txt" | "text-table" => Ok(Self::Text),
            _ => Err(validation(format!("unknown report format '{s}'"))),
        }
    }
}

/// Column headers, matching the comparison table's column order.
pub const CSV_HEADER: [&str; 9] = [
    "player_setting",
    "jds_easy",
    "jds_hard",
    "jds_all",
    "mpjpe_active_mm",
    "mpjpe_all_mm",
    "sr_pct",
    "jerk_rad_s3",
    "acc_rad_s2",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with one row per player × setting. The first line is a `#` comment
/// carrying the provenance.
pub fn to_csv(report: &BenchReport) -> Result<String> {
    let mut out = format!(
        "# {}; config sha256 {}; seed {}\n",
        report.provenance.note, report.provenance.config_hash, report.provenance.seed
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            r.label(),
            opt(r.jds_easy),
            opt(r.jds_hard),
            opt(r.jds_all),
            opt(r.mpjpe_active),
            r.mpjpe_all.to_string(),
            r.sr.to_string(),
            r.jerk.to_string(),
            r.acc.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => validation(format!("csv: {other:?}")),
    }
}

pub fn to_json(report: &BenchReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

pub fn from_json(text: &str) -> Result<BenchReport> {
    serde_json::from_str(text).map_err(|e| validation(format!("bad report json: {e}")))
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    v.map(|x| format!("{x:.decimals$}")).unwrap_or_else(|| "-".into())
}

/// Fixed-width table in the column order of the comparison table: JDS
/// Easy/Hard/All, MPJPE Active/All, SR, jerk, acceleration.
pub fn text_table(report: &BenchReport) -> String {
    let label_w = report.rows.iter().map(|r| r.label().len()).max().unwrap_or(0).max("Player-Setting".len());
    let mut out = String::new();
    let _ = writeln!(out, "# {}", report.provenance.note);
    let _ = writeln!(out, "# config sha256 {} seed {}", report.provenance.config_hash, report.provenance.seed);
    let _ = writeln!(
        out,
        "{:<label_w$} {:>6} {:>6} {:>6} {:>8} {:>8} {:>6} {:>9} {:>7}",
        "Player-Setting", "Easy", "Hard", "All", "Active", "All", "SR(%)", "Jerk", "Acc"
    );
    let _ = writeln!(
        out,
        "{:<label_w$} {:>20} {:>17} {:>6} {:>17}",
        "", "JDS", "MPJPE(mm)", "", "rad/s^3 rad/s^2"
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:<label_w$} {:>6} {:>6} {:>6} {:>8} {:>8.1} {:>6.1} {:>9.1} {:>7.1}",
            r.label(),
            fmt_opt(r.jds_easy, 0),
            fmt_opt(r.jds_hard, 0),
            fmt_opt(r.jds_all, 0),
            fmt_opt(r.mpjpe_active, 1),
            r.mpjpe_all,
            r.sr,
            r.jerk,
            r.acc
        );
    }
    if !report.errata.is_empty() {
        let _ = writeln!(out, "# errata:");
        for e in &report.errata {
            let _ = writeln!(out, "#   {}: {}", e.file, e.error);
        }
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const PALETTE: [&str; 6] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1"];

/// A group of bars sharing an x-axis label.
struct BarGroup {
    label: String,
    bars: Vec<(String, f64)>,
}

/// Grouped bar chart drawn with plain rectangles and text.
fn bar_chart(title: &str, y_label: &str, groups: &[BarGroup]) -> String {
    let (width, height) = (640.0, 400.0);
    let (left, right, top, bottom) = (70.0, 20.0, 50.0, 70.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let max = groups.iter().flat_map(|g| g.bars.iter().map(|b| b.1)).fold(0.0f64, f64::max);
    let y_max = if max > 0.0 { nice_ceiling(max) } else { 1.0 };
    let series: Vec<String> = {
        let mut s: Vec<String> = Vec::new();
        for g in groups {
            for (name, _) in &g.bars {
                if !s.contains(name) {
                    s.push(name.clone());
                }
            }
        }
        s
    };
    let group_w = plot_w / groups.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, width / 2.0, xml_escape(title));
    let _ = writeln!(
        svg,
        r#"<text transform="translate(16,{}) rotate(-90)" text-anchor="middle">{}</text>"#,
        top + plot_h / 2.0,
        xml_escape(y_label)
    );
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let y = top + plot_h - plot_h * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            left + plot_w,
            left - 6.0,
            y + 4.0,
            format_tick(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<path d="M{left},{top} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
        top + plot_h,
        left + plot_w
    );
    for (gi, g) in groups.iter().enumerate() {
        let x0 = left + gi as f64 * group_w + group_w * 0.1;
        let _ = writeln!(svg, r#"<g class="bar-group" data-group="{}">"#, xml_escape(&g.label));
        for (name, value) in &g.bars {
            let si = series.iter().position(|s| s == name).unwrap_or(0);
            let h = plot_h * (value.max(0.0) / y_max);
            let x = x0 + si as f64 * bar_w;
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="{}"><title>{} {}: {}</title></rect>"#,
                top + plot_h - h,
                bar_w * 0.95,
                PALETTE[si % PALETTE.len()],
                xml_escape(&g.label),
                xml_escape(name),
                format_tick(*value)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x0 + group_w * 0.4,
            top + plot_h + 18.0,
            xml_escape(&g.label)
        );
        let _ = writeln!(svg, "</g>");
    }
    for (si, name) in series.iter().enumerate() {
        let x = left + si as f64 * 110.0;
        let y = height - 22.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{y:.1}">{}</text>"#,
            y - 10.0,
            PALETTE[si % PALETTE.len()],
            x + 16.0,
            xml_escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn nice_ceiling(v: f64) -> f64 {
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|c| *c >= v).unwrap_or(10.0 * mag)
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn settings_in_order(rows: &[BenchRow]) -> Vec<Setting> {
    let mut out = Vec::new();
    for r in rows {
        if !out.contains(&r.setting) {
            out.push(r.setting);
        }
    }
    out
}

fn players_in_order(rows: &[BenchRow]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in rows {
        if !out.contains(&r.player) {
            out.push(r.player.clone());
        }
    }
    out
}

/// Mean score per player, one bar group per setting.
pub fn score_chart_svg(report: &BenchReport) -> String {
    let groups: Vec<BarGroup> = settings_in_order(&report.rows)
        .into_iter()
        .map(|s| BarGroup {
            label: s.to_string(),
            bars: report
                .rows
                .iter()
                .filter(|r| r.setting == s)
                .map(|r| (r.player.clone(), r.jds_all.unwrap_or(0.0)))
                .collect(),
        })
        .collect();
    bar_chart("Score by setting (score-model estimate)", "JDS (all songs)", &groups)
}

/// Jerk of Smo against Dyn, one bar group per player; `None` when the report
/// has neither setting.
pub fn jerk_chart_svg(report: &BenchReport) -> Option<String> {
    let groups: Vec<BarGroup> = players_in_order(&report.rows)
        .into_iter()
        .map(|p| BarGroup {
            bars: report
                .rows
                .iter()
                .filter(|r| r.player == p && matches!(r.setting, Setting::Smo | Setting::Dyn))
                .map(|r| (r.setting.to_string(), r.jerk))
                .collect(),
            label: p,
        })
        .filter(|g| !g.bars.is_empty())
        .collect();
    (!groups.is_empty()).then(|| bar_chart("Jerk: Smo vs Dyn", "jerk (rad/s^3)", &groups))
}

/// Writes the requested formats into `dir` and returns the written paths.
pub fn render_report(report: &BenchReport, formats: &[ReportFormat], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if report.rows.is_empty() {
        return Err(validation("report has no rows"));
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    for f in formats {
        match f {
            ReportFormat::Csv => put("bench.csv", to_csv(report)?)?,
            ReportFormat::Json => put("bench.json", to_json(report))?,
            ReportFormat::Text => put("bench.txt", text_table(report))?,
            ReportFormat::Svg => {
                put("bench_scores.svg", score_chart_svg(report))?;
                if let Some(svg) = jerk_chart_svg(report) {
                    put("bench_jerk.svg", svg)?;
                }
            }
        }
    }
    Ok(written)
}

/// Plain-text summary of a validation study.
pub fn validation_text(v: &ValidationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", v.note);
    let _ = writeln!(out, "# config sha256 {} seed {}", v.config_hash, v.seed);
    let _ = writeln!(
        out,
        "{} profiles x {} songs x {} repeats = {} trials",
        v.profiles.len(),
        v.songs.len(),
        v.repeats,
        v.trials
    );
    let _ = writeln!(out, "\nValidity: Pearson r(score, PA-MPJPE)");
    for s in &v.per_song {
        match &s.correlation {
            Some(c) => {
                let _ = writeln!(out, "  {:<16} r = {:>7.3}  p = {:.3e}  n = {}", s.song, c.r, c.p, c.n);
            }
            None => {
                let _ = writeln!(out, "  {:<16} degenerate", s.song);
            }
        }
    }
    match &v.pooled {
        Some(c) => {
            let _ = writeln!(out, "  {:<16} r = {:>7.3}  p = {:.3e}  n = {}", "pooled", c.r, c.p, c.n);
        }
        None => {
            let _ = writeln!(out, "  pooled           degenerate");
        }
    }
    let _ = writeln!(out, "\nRepeatability");
    let _ = writeln!(out, "  ICC(2,1)   {}", fmt_opt(v.icc, 3));
    let _ = writeln!(out, "  mean CV    {}%", fmt_opt(v.mean_cv_percent, 1));
    let _ = writeln!(out, "  Kendall W  {}", fmt_opt(v.kendall_w, 3));
    let _ = writeln!(out, "\nPer-cell mean score and CV (%)");
    for c in &v.cells {
        let _ = writeln!(out, "  {:<12} {:<16} {:>8.0} {:>7}", c.profile, c.song, c.mean_score, fmt_opt(c.cv_percent, 1));
    }
    if !v.degenerate.is_empty() {
        let _ = writeln!(out, "\nDegenerate statistics:");
        for d in &v.degenerate {
            let _ = writeln!(out, "  {d}");
        }
    }
    out
}
