use std::fs;
use std::path::Path;

use pavecast::csvio::{format_sig, load_records, read_records, read_windows, save_records, save_windows};
use pavecast::report;
use pavecast::Error;
use pavecast_core::metrics::ReportRow;
use pavecast_core::sequence::{build_series, make_all_windows, Task, WindowSpec};
use pavecast_core::{compute_metrics, generate_synthetic, EvaluationReport, RangeTable, SyntheticConfig};

const HEADER: &str = "section_id,climatic_zone,depth_in,drum,speed_fpm,surface_type,month,skid_before,skid_after,macro_before_mm,macro_after_mm,skid_number,macro_mm";

fn write(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("records.csv");
    fs::write(&p, body).unwrap();
    p
}

fn row(id: &str, drum: &str, month: &str) -> String {
    format!("{id},1,0.3,{drum},60,0,{month},20,40,0.5,1.5,35,1.4")
}

#[test]
fn missing_column_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let header = HEADER.replace(",speed_fpm", "");
    let p = write(dir.path(), &format!("{header}\nS1,1,0.3,0,0,0,20,40,0.5,1.5,35,1.4\n"));
    let err = load_records(&p, &RangeTable::default()).unwrap_err();
    assert!(matches!(&err, Error::MissingColumn { column, .. } if column == "speed_fpm"), "{err}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn unparsable_cell_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{HEADER}\n{}\n{}\n", row("S1", "0", "0"), row("S1", "0", "x3"));
    let p = write(dir.path(), &body);
    let err = load_records(&p, &RangeTable::default()).unwrap_err();
    assert!(matches!(&err, Error::Cell { line: 3, column, value, .. } if column == "month" && value == "x3"), "{err}");
}

#[test]
fn duplicate_key_reports_both_lines() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{HEADER}\n{}\n{}\n{}\n", row("S1", "0", "0"), row("S1", "0", "3"), row("S1", "0", "0"));
    let p = write(dir.path(), &body);
    let err = load_records(&p, &RangeTable::default()).unwrap_err();
    assert!(
        matches!(&err, Error::Duplicate { section_id, month: 0, first_line: 2, line: 4, .. } if section_id == "S1"),
        "{err}"
    );
}

#[test]
fn out_of_code_drum_is_a_violation() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{HEADER}\n{}\n{}\n", row("S1", "0", "0"), row("S1", "2", "3"));
    let p = write(dir.path(), &body);
    let err = load_records(&p, &RangeTable::default()).unwrap_err();
    let Error::Validation { report } = &err else { panic!("{err}") };
    assert_eq!(report.len(), 1);
    assert!(err.to_string().contains("drum out of {0,1}"), "{err}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn records_round_trip_at_nine_digits() {
    let dir = tempfile::tempdir().unwrap();
    let rs = generate_synthetic(&SyntheticConfig::with_sections(30), 4).unwrap();
    let p = dir.path().join("r.csv");
    save_records(&p, &rs).unwrap();
    let back = load_records(&p, &RangeTable::default()).unwrap();
    assert_eq!(back.len(), rs.len());
    let close = |a: f64, b: f64| (a - b).abs() <= 5e-9 * a.abs().max(b.abs());
    for (a, b) in rs.records.iter().zip(&back.records) {
        assert_eq!(a.section_id, b.section_id);
        assert_eq!((a.climatic_zone, a.drum, a.surface_type, a.month), (b.climatic_zone, b.drum, b.surface_type, b.month));
        for (x, y) in [
            (a.depth_in, b.depth_in),
            (a.speed_fpm, b.speed_fpm),
            (a.skid_before, b.skid_before),
            (a.skid_after, b.skid_after),
            (a.macro_before_mm, b.macro_before_mm),
            (a.macro_after_mm, b.macro_after_mm),
            (a.skid_number, b.skid_number),
            (a.macro_mm, b.macro_mm),
        ] {
            assert!(close(x, y), "{x} vs {y}");
            assert_eq!(format_sig(x, 9), format_sig(y, 9));
        }
    }
    // A second save is byte-identical to the first.
    let p2 = dir.path().join("r2.csv");
    save_records(&p2, &back).unwrap();
    assert_eq!(fs::read(&p).unwrap(), fs::read(&p2).unwrap());
}

#[test]
fn windows_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let rs = generate_synthetic(&SyntheticConfig::with_sections(10), 9).unwrap();
    for task in Task::ALL {
        let spec = WindowSpec::new(3, task);
        let samples = make_all_windows(&build_series(&rs), &spec).unwrap();
        let p = dir.path().join("w.csv");
        save_windows(&p, &samples, &spec.layout(), spec.length).unwrap();
        let (header, back) = read_windows(&p).unwrap();
        assert_eq!(header.length, 3);
        assert_eq!(header.features, spec.layout().features);
        assert!(header.has_target);
        assert_eq!(back, samples);
    }
}

#[test]
fn windows_without_feature_columns_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("w.csv");
    fs::write(&p, "section_id,target_month,padded,target\n").unwrap();
    assert!(matches!(read_windows(&p), Err(Error::Format(_))));
}

#[test]
fn records_without_validation_keep_violations() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{HEADER}\n{}\n", row("S1", "2", "0"));
    let p = write(dir.path(), &body);
    let (rs, lines) = read_records(&p).unwrap();
    assert_eq!(rs.records[0].drum, 2);
    assert_eq!(lines, [2]);
}

#[test]
fn report_reloads_to_nine_digits() {
    let dir = tempfile::tempdir().unwrap();
    let y = [1.0, 2.5, 3.25, 7.0, 4.0];
    let rows = vec![
        ReportRow {
            model: "A".into(),
            metrics: compute_metrics(&y, &[1.1, 2.4, 3.3, 6.7, 4.05]).unwrap(),
        },
        ReportRow {
            model: "B, quoted".into(),
            metrics: compute_metrics(&y, &[2.0, 2.0, 3.0, 5.0, 5.0]).unwrap(),
        },
    ];
    let report = EvaluationReport::new(Task::Skid, rows, "sections 0.8".into(), 7);
    let p = dir.path().join("report.csv");
    report::write_csv(&p, &report).unwrap();
    let back = report::read_csv(&p).unwrap();
    assert_eq!(back.len(), report.rows.len());
    for (a, b) in report.rows.iter().zip(&back) {
        assert_eq!(a.model, b.model);
        for (x, y) in [(a.metrics.r2, b.metrics.r2), (a.metrics.rmse, b.metrics.rmse), (a.metrics.mae, b.metrics.mae)] {
            assert_eq!(format_sig(x, 9), format_sig(y, 9));
        }
    }
    let text = report::render_text(&report);
    assert!(text.starts_with("Prediction results for Skid Number."));
    assert!(text.contains("seed: 7"));
    let svg = report::render_svg(&report);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}
