use std::collections::HashSet;

use pavecast_core::records::{validate, InspectionRecord, RangeTable, RecordSet};
use pavecast_core::sequence::{
    build_series, flatten, make_all_windows, make_windows, split, split_indices, unflatten, Feature, FeatureLayout,
    Scaler, SequenceError, SplitMode, Task, TargetHistory, WindowSample, WindowSpec,
};
use pavecast_core::synthetic::{generate_synthetic, SyntheticConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mean_std(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[test]
fn synthetic_marginals_match_field_statistics() {
    let rs = generate_synthetic(&SyntheticConfig::with_sections(500), 7).unwrap();
    let skid: Vec<f64> = rs.records.iter().filter(|r| r.month > 0).map(|r| r.skid_number).collect();
    let mac: Vec<f64> = rs.records.iter().filter(|r| r.month > 0).map(|r| r.macro_mm).collect();
    let (skid_mean, skid_std) = mean_std(&skid);
    let (macro_mean, _) = mean_std(&mac);
    assert!((skid_mean - 29.91).abs() <= 1.5, "{skid_mean}");
    assert!((skid_std - 9.59).abs() <= 1.5, "{skid_std}");
    assert!((macro_mean - 1.44).abs() <= 0.25, "{macro_mean}");
}

#[test]
fn synthetic_is_bitwise_deterministic() {
    let cfg = SyntheticConfig::default();
    let a = generate_synthetic(&cfg, 7).unwrap();
    let b = generate_synthetic(&cfg, 7).unwrap();
    let bits = |rs: &RecordSet| -> Vec<u64> {
        rs.records
            .iter()
            .flat_map(|r| [r.depth_in, r.speed_fpm, r.skid_number, r.macro_mm].map(f64::to_bits))
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a, b);
}

#[test]
fn synthetic_values_respect_ranges() {
    for seed in 0..5 {
        let rs = generate_synthetic(&SyntheticConfig::with_sections(200), seed).unwrap();
        let report = validate(&rs, &RangeTable::default());
        assert!(report.is_empty(), "{report}");
        let months: Vec<u32> = rs.records[..5].iter().map(|r| r.month).collect();
        assert_eq!(months, [0, 3, 6, 12, 18]);
        for r in &rs.records {
            assert!(r.climatic_zone <= 1 && r.drum <= 1 && r.surface_type <= 1);
            if r.month == 0 {
                assert_eq!(r.skid_number, r.skid_after);
                assert_eq!(r.macro_mm, r.macro_after_mm);
            }
        }
    }
}

#[test]
fn noiseless_skid_decays_monotonically() {
    let mut cfg = SyntheticConfig::with_sections(300);
    cfg.hma.skid.noise_std = 0.0;
    cfg.seal_coat.skid.noise_std = 0.0;
    let rs = generate_synthetic(&cfg, 9).unwrap();
    for series in build_series(&rs) {
        for w in series.records.windows(2) {
            assert!(w[1].skid_number <= w[0].skid_number, "{}", series.section_id);
        }
    }
}

#[test]
fn seal_coat_loses_skid_faster_than_hma() {
    let rs = generate_synthetic(&SyntheticConfig::with_sections(500), 7).unwrap();
    let mut drop = [Vec::new(), Vec::new()];
    for s in build_series(&rs) {
        let first = s.records.first().unwrap();
        let at3 = &s.records[1];
        drop[first.surface_type as usize].push(first.skid_number - at3.skid_number);
    }
    let (hma, _) = mean_std(&drop[0]);
    let (seal, _) = mean_std(&drop[1]);
    assert!(seal > hma, "seal {seal} hma {hma}");
}

fn record(id: &str, month: u32, skid: f64) -> InspectionRecord {
    InspectionRecord {
        section_id: id.into(),
        climatic_zone: 1,
        depth_in: 0.3,
        drum: 0,
        speed_fpm: 60.0,
        surface_type: 0,
        month,
        skid_before: 20.0,
        skid_after: 45.0,
        macro_before_mm: 0.8,
        macro_after_mm: 2.0,
        skid_number: skid,
        macro_mm: 1.5 + f64::from(month) / 100.0,
    }
}

fn set(records: Vec<InspectionRecord>) -> RecordSet {
    RecordSet::new(records, pavecast_core::records::Provenance::Loaded, None)
}

#[test]
fn series_are_grouped_and_sorted() {
    let mut recs: Vec<InspectionRecord> = ["A", "B"]
        .iter()
        .flat_map(|id| [0, 3, 6, 12, 18].map(|m| record(id, m, 40.0 - f64::from(m))))
        .collect();
    recs.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let series = build_series(&set(recs.clone()));
    assert_eq!(series.len(), 2);
    for s in &series {
        assert_eq!(s.months(), [0, 3, 6, 12, 18]);
    }
    assert_eq!(series.iter().map(|s| s.len()).sum::<usize>(), recs.len());
    assert!(build_series(&set(Vec::new())).is_empty());
}

#[test]
fn window_examples() {
    let recs: Vec<InspectionRecord> = [0, 3, 6, 12, 18].map(|m| record("A", m, 40.0 - f64::from(m))).into();
    let series = build_series(&set(recs));
    let one = make_windows(&series[0], &WindowSpec::new(4, Task::Skid)).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].target_month, 18);
    assert_eq!(one[0].target, 22.0);
    let three = make_windows(&series[0], &WindowSpec::new(2, Task::Skid)).unwrap();
    assert_eq!(three.iter().map(|s| s.target_month).collect::<Vec<_>>(), [6, 12, 18]);

    let layout = FeatureLayout::new(Task::Skid, TargetHistory::Excluded);
    let month_col = layout.features.iter().position(|&f| f == Feature::Month).unwrap();
    for s in &three {
        assert!(s.target_month > s.window[(1, month_col)] as u32);
    }

    let short = build_series(&set([0, 3, 6].map(|m| record("B", m, 40.0 - f64::from(m))).into()));
    let mut spec = WindowSpec::new(4, Task::Macrotexture);
    assert!(make_windows(&short[0], &spec).unwrap().is_empty());
    spec.allow_padding = true;
    let padded = make_windows(&short[0], &spec).unwrap();
    assert_eq!(padded.len(), 1);
    assert!(padded[0].padded);
    assert_eq!(padded[0].window.row(0), padded[0].window.row(1));
    assert_eq!(padded[0].window.row(0), padded[0].window.row(2));
    assert_eq!(padded[0].target_month, 6);
}

#[test]
fn window_layout_widths() {
    assert_eq!(FeatureLayout::new(Task::Skid, TargetHistory::Included).width(), 12);
    let skid = FeatureLayout::new(Task::Skid, TargetHistory::Excluded);
    assert_eq!(skid.width(), 11);
    assert!(!skid.features.contains(&Feature::SkidNumber));
    assert!(skid.features.contains(&Feature::MacroMm));
    let mac = FeatureLayout::new(Task::Macrotexture, TargetHistory::Excluded);
    assert!(!mac.features.contains(&Feature::MacroMm));
}

#[test]
fn window_count_matches_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rs = generate_synthetic(&SyntheticConfig::with_sections(60), 2).unwrap();
    // Drop random records so series lengths vary.
    let kept: Vec<InspectionRecord> = rs
        .records
        .iter()
        .filter(|_| rand::Rng::random_bool(&mut rng, 0.7))
        .cloned()
        .collect();
    let series = build_series(&set(kept));
    for l in 1..=5 {
        for pad in [false, true] {
            let mut spec = WindowSpec::new(l, Task::Skid);
            spec.allow_padding = pad;
            let expected: usize = series
                .iter()
                .map(|s| {
                    let n = s.len();
                    if n > l {
                        n - l
                    } else if pad && n >= 2 {
                        1
                    } else {
                        0
                    }
                })
                .sum();
            assert_eq!(make_all_windows(&series, &spec).unwrap().len(), expected, "L={l} pad={pad}");
        }
    }
}

fn synthetic_windows(sections: usize, seed: u64, l: usize) -> Vec<WindowSample> {
    let rs = generate_synthetic(&SyntheticConfig::with_sections(sections), seed).unwrap();
    make_all_windows(&build_series(&rs), &WindowSpec::new(l, Task::Skid)).unwrap()
}

#[test]
fn sections_split_never_leaks() {
    let samples = synthetic_windows(80, 1, 2);
    for seed in 0..100 {
        let (train, test) = split(&samples, 0.8, SplitMode::Sections, seed).unwrap();
        let a: HashSet<&str> = train.iter().map(|s| s.section_id.as_str()).collect();
        let b: HashSet<&str> = test.iter().map(|s| s.section_id.as_str()).collect();
        assert!(a.is_disjoint(&b), "seed {seed}");
        assert_eq!(train.len() + test.len(), samples.len());
    }
}

#[test]
fn split_examples() {
    let samples: Vec<WindowSample> = synthetic_windows(10, 4, 4);
    assert_eq!(samples.len(), 10);
    let idx = split_indices(&samples, 0.8, SplitMode::Rows, 3).unwrap();
    assert_eq!((idx.train.len(), idx.test.len()), (8, 2));
    assert_eq!(idx, split_indices(&samples, 0.8, SplitMode::Rows, 3).unwrap());
    let mut all: Vec<usize> = idx.train.iter().chain(&idx.test).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..10).collect::<Vec<_>>());

    let one_section: Vec<WindowSample> = synthetic_windows(1, 4, 2);
    assert!(matches!(
        split(&one_section, 0.8, SplitMode::Sections, 0),
        Err(SequenceError::Infeasible(_))
    ));
    assert!(matches!(split(&samples[..1], 0.8, SplitMode::Rows, 0), Err(SequenceError::TooFewSamples(1))));
}

#[test]
fn sections_split_first_reaches_ratio() {
    let samples = synthetic_windows(50, 5, 2);
    for seed in 0..20 {
        let (train, _) = split(&samples, 0.8, SplitMode::Sections, seed).unwrap();
        let target = 0.8 * samples.len() as f64;
        assert!(train.len() as f64 >= target);
        // Each section has 3 windows, so train overshoots by less than one section.
        assert!((train.len() as f64) < target + 3.0);
    }
}

#[test]
fn scaler_properties() {
    let samples = synthetic_windows(60, 6, 4);
    let (train, test) = split(&samples, 0.8, SplitMode::Sections, 6).unwrap();
    let layout = WindowSpec::new(4, Task::Skid).layout();
    let mask = layout.binary_mask();
    let scaler = Scaler::fit(&train, &mask).unwrap();
    let scaled = scaler.apply(&train).unwrap();
    let width = layout.width();
    for c in 0..width {
        let col: Vec<f64> = scaled
            .iter()
            .flat_map(|s| (0..4).map(move |r| s.window[(r, c)]))
            .collect();
        let raw: Vec<f64> = train.iter().flat_map(|s| (0..4).map(move |r| s.window[(r, c)])).collect();
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let pop_std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if mask[c] {
            assert_eq!(col, raw);
        } else if raw.iter().all(|&v| v == raw[0]) {
            assert!(col.iter().all(|&v| v == 0.0));
        } else {
            assert!(mean.abs() <= 1e-9);
            assert!((pop_std - 1.0).abs() <= 1e-6);
        }
    }
    for (a, b) in train.iter().zip(&scaled) {
        assert_eq!(a.target, b.target);
    }

    // Test rows use the training statistics.
    let scaled_test = scaler.apply(&test).unwrap();
    let n = (train.len() * 4) as f64;
    let c = 3; // speed, continuous
    let raw_c: Vec<f64> = train.iter().flat_map(|s| (0..4).map(move |r| s.window[(r, c)])).collect();
    let mu_c = raw_c.iter().sum::<f64>() / n;
    let sigma_c = (raw_c.iter().map(|v| (v - mu_c).powi(2)).sum::<f64>() / n).sqrt();
    assert_eq!(layout.features[c], Feature::SpeedFpm);
    let hand = (test[0].window[(1, c)] - mu_c) / sigma_c;
    assert!((scaled_test[0].window[(1, c)] - hand).abs() <= 1e-12);

    // Rescaling already-scaled data is the identity.
    let again = Scaler::fit(&scaled, &mask).unwrap().apply(&scaled).unwrap();
    for (a, b) in scaled.iter().zip(&again) {
        for (x, y) in a.window.data().iter().zip(b.window.data()) {
            assert!((x - y).abs() <= 1e-9);
        }
    }
}

#[test]
fn constant_column_scales_to_zero() {
    let recs: Vec<InspectionRecord> = ["A", "B", "C"]
        .iter()
        .flat_map(|id| [0, 3, 6].map(|m| record(id, m, 40.0 - f64::from(m))))
        .collect();
    let samples = make_all_windows(&build_series(&set(recs)), &WindowSpec::new(2, Task::Skid)).unwrap();
    let layout = WindowSpec::new(2, Task::Skid).layout();
    let scaler = Scaler::fit(&samples, &layout.binary_mask()).unwrap();
    let depth = layout.features.iter().position(|&f| f == Feature::DepthIn).unwrap();
    for s in scaler.apply(&samples).unwrap() {
        assert_eq!(s.window[(0, depth)], 0.0);
        assert_eq!(s.window[(1, depth)], 0.0);
    }
}

proptest! {
    #[test]
    fn flatten_round_trips(l in 1usize..6, w in 1usize..14, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..l * w).map(|_| rand::Rng::random_range(&mut rng, -5.0..5.0)).collect();
        let m = pavecast_core::tensor::Matrix::new(l, w, values.clone()).unwrap();
        prop_assert_eq!(flatten(&m), values.clone());
        prop_assert_eq!(unflatten(&values, l, w).unwrap(), m);
    }
}
