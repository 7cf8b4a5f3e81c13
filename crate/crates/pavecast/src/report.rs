//! Report rendering: CSV, aligned text and an SVG bar chart.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::Path;

use pavecast_core::metrics::{MetricTriple, ReportRow};
use pavecast_core::sequence::Task;
use pavecast_core::EvaluationReport;

use crate::csvio::format_sig;
use crate::error::{Error, Result};

pub fn title(task: Task) -> &'static str {
    match task {
        Task::Skid => "Prediction results for Skid Number.",
        Task::Macrotexture => "Prediction results for Macrotexture.",
    }
}

/// `model,r2,rmse,mae` with 9 significant digits.
pub fn write_csv(path: &Path, report: &EvaluationReport) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let to_err = |e: csv::Error| Error::Format(format!("{}: {e}", path.display()));
    w.write_record(["model", "r2", "rmse", "mae"]).map_err(to_err)?;
    for row in &report.rows {
        let m = row.metrics;
        w.write_record([
            row.model.clone(),
            format_sig(m.r2, 9),
            format_sig(m.rmse, 9),
            format_sig(m.mae, 9),
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let num = |i: usize, column: &str| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            raw.parse().map_err(|_| Error::Cell {
                path: path.into(),
                line,
                column: column.into(),
                value: raw.into(),
            })
        };
        rows.push(ReportRow {
            model: rec.get(0).unwrap_or("").to_string(),
            metrics: MetricTriple {
                r2: num(1, "r2")?,
                rmse: num(2, "rmse")?,
                mae: num(3, "mae")?,
            },
        });
    }
    Ok(rows)
}

/// Aligned text table. The best value of each column is
/// followed by `*`.
pub fn render_text(report: &EvaluationReport) -> String {
    let best_r2 = report.rows.iter().map(|r| r.metrics.r2).fold(f64::NEG_INFINITY, f64::max);
    let best_rmse = report.rows.iter().map(|r| r.metrics.rmse).fold(f64::INFINITY, f64::min);
    let best_mae = report.rows.iter().map(|r| r.metrics.mae).fold(f64::INFINITY, f64::min);
    let cell = |v: f64, best: f64| format!("{v:.3}{}", if v == best { "*" } else { " " });
    let width = report.rows.iter().map(|r| r.model.len()).max().unwrap_or(0).max("Model".len());

    let mut out = String::new();
    writeln!(out, "{}", title(report.target)).unwrap();
    writeln!(out, "{:<width$}  {:>8}  {:>8}  {:>8}", "Model", "R²", "RMSE", "MAE").unwrap();
    writeln!(out, "{}", "-".repeat(width + 30)).unwrap();
    for row in &report.rows {
        let m = row.metrics;
        writeln!(
            out,
            "{:<width$}  {:>8}  {:>8}  {:>8}",
            row.model,
            cell(m.r2, best_r2),
            cell(m.rmse, best_rmse),
            cell(m.mae, best_mae)
        )
        .unwrap();
    }
    writeln!(out, "{}", "-".repeat(width + 30)).unwrap();
    writeln!(out, "split: {}; seed: {}; * best in column", report.split, report.seed).unwrap();
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Horizontal bars of R² per model, clipped at zero.
pub fn render_svg(report: &EvaluationReport) -> String {
    let (label_w, bar_w, row_h, top) = (190.0, 360.0, 26.0, 40.0);
    let height = top + row_h * report.rows.len() as f64 + 30.0;
    let width = label_w + bar_w + 70.0;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="13">"#
    )
    .unwrap();
    writeln!(s, r#"<text x="10" y="22" font-weight="bold">{}</text>"#, escape(title(report.target))).unwrap();
    for (i, row) in report.rows.iter().enumerate() {
        let y = top + row_h * i as f64;
        let r2 = row.metrics.r2.clamp(0.0, 1.0);
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            label_w - 8.0,
            y + 16.0,
            escape(&row.model)
        )
        .unwrap();
        writeln!(
            s,
            r##"<rect x="{label_w}" y="{}" width="{:.2}" height="{}" fill="#4a7ab5"/>"##,
            y + 4.0,
            r2 * bar_w,
            row_h - 8.0
        )
        .unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{}">{:.3}</text>"#, label_w + r2 * bar_w + 6.0, y + 16.0, row.metrics.r2).unwrap();
    }
    let axis_y = top + row_h * report.rows.len() as f64 + 4.0;
    writeln!(
        s,
        r#"<line x1="{label_w}" y1="{axis_y}" x2="{}" y2="{axis_y}" stroke="black"/>"#,
        label_w + bar_w
    )
    .unwrap();
    for tick in 0..=4 {
        let x = label_w + bar_w * tick as f64 / 4.0;
        writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{:.2}</text>"#, axis_y + 16.0, tick as f64 / 4.0).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `<stem>.csv`, `<stem>.txt` and, if asked, `<stem>.svg` in `dir`.
pub fn write_all(dir: &Path, stem: &str, report: &EvaluationReport, svg: bool) -> Result<()> {
    write_csv(&dir.join(format!("{stem}.csv")), report)?;
    let txt = dir.join(format!("{stem}.txt"));
    fs::write(&txt, render_text(report)).map_err(|e| Error::io(&txt, e))?;
    if svg {
        let p = dir.join(format!("{stem}.svg"));
        fs::write(&p, render_svg(report)).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}
