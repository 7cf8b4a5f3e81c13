//! Per-section series, sliding windows, train/test partitioning and feature
//! standardisation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{InspectionRecord, RecordSet};
use crate::seed;
use crate::tensor::Matrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SequenceError {
    #[error("window length must be at least 1")]
    ZeroLength,
    #[error("split needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("split ratio must lie in (0, 1), got {0}")]
    BadRatio(f64),
    #[error("split infeasible: {0}")]
    Infeasible(&'static str),
    #[error("scaler needs at least one training window")]
    EmptyTrain,
    #[error("expected {expected} values, found {found}")]
    Length { expected: usize, found: usize },
}

/// Forecast target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Skid,
    Macrotexture,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Skid, Task::Macrotexture];

    pub fn name(self) -> &'static str {
        match self {
            Task::Skid => "skid",
            Task::Macrotexture => "macrotexture",
        }
    }

    pub fn target(self, r: &InspectionRecord) -> f64 {
        match self {
            Task::Skid => r.skid_number,
            Task::Macrotexture => r.macro_mm,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "skid" => Ok(Task::Skid),
            "macrotexture" | "macro" => Ok(Task::Macrotexture),
            other => Err(alloc::format!("unknown task `{other}` (expected skid or macrotexture)")),
        }
    }
}

/// One column of a window row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    ClimaticZone,
    DepthIn,
    Drum,
    SpeedFpm,
    SurfaceType,
    SkidBefore,
    SkidAfter,
    MacroBeforeMm,
    MacroAfterMm,
    Month,
    SkidNumber,
    MacroMm,
}

impl Feature {
    pub const ALL: [Feature; 12] = [
        Feature::ClimaticZone,
        Feature::DepthIn,
        Feature::Drum,
        Feature::SpeedFpm,
        Feature::SurfaceType,
        Feature::SkidBefore,
        Feature::SkidAfter,
        Feature::MacroBeforeMm,
        Feature::MacroAfterMm,
        Feature::Month,
        Feature::SkidNumber,
        Feature::MacroMm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::ClimaticZone => "climatic_zone",
            Feature::DepthIn => "depth_in",
            Feature::Drum => "drum",
            Feature::SpeedFpm => "speed_fpm",
            Feature::SurfaceType => "surface_type",
            Feature::SkidBefore => "skid_before",
            Feature::SkidAfter => "skid_after",
            Feature::MacroBeforeMm => "macro_before_mm",
            Feature::MacroAfterMm => "macro_after_mm",
            Feature::Month => "month",
            Feature::SkidNumber => "skid_number",
            Feature::MacroMm => "macro_mm",
        }
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        Feature::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Binary codes pass through the scaler untouched.
    pub fn is_binary(self) -> bool {
        matches!(self, Feature::ClimaticZone | Feature::Drum | Feature::SurfaceType)
    }

    pub fn value(self, r: &InspectionRecord) -> f64 {
        match self {
            Feature::ClimaticZone => f64::from(r.climatic_zone),
            Feature::DepthIn => r.depth_in,
            Feature::Drum => f64::from(r.drum),
            Feature::SpeedFpm => r.speed_fpm,
            Feature::SurfaceType => f64::from(r.surface_type),
            Feature::SkidBefore => r.skid_before,
            Feature::SkidAfter => r.skid_after,
            Feature::MacroBeforeMm => r.macro_before_mm,
            Feature::MacroAfterMm => r.macro_after_mm,
            Feature::Month => f64::from(r.month),
            Feature::SkidNumber => r.skid_number,
            Feature::MacroMm => r.macro_mm,
        }
    }
}

/// Whether window rows carry the forecast target's own past values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetHistory {
    /// Rows hold every covariate, the month and both measurements.
    Included,
    /// The forecast target's own measurement column is left out; the other
    /// measurement stays.
    Excluded,
}

impl FromStr for TargetHistory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "included" => Ok(TargetHistory::Included),
            "excluded" => Ok(TargetHistory::Excluded),
            other => Err(alloc::format!("unknown target history `{other}` (expected included or excluded)")),
        }
    }
}

/// Ordered feature columns of a window row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub features: Vec<Feature>,
}

impl FeatureLayout {
    pub fn new(task: Task, history: TargetHistory) -> Self {
        let own = match task {
            Task::Skid => Feature::SkidNumber,
            Task::Macrotexture => Feature::MacroMm,
        };
        let features = Feature::ALL
            .into_iter()
            .filter(|&f| history == TargetHistory::Included || f != own)
            .collect();
        FeatureLayout { features }
    }

    pub fn width(&self) -> usize {
        self.features.len()
    }

    pub fn binary_mask(&self) -> Vec<bool> {
        self.features.iter().map(|f| f.is_binary()).collect()
    }

    pub fn row(&self, r: &InspectionRecord) -> Vec<f64> {
        self.features.iter().map(|f| f.value(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub length: usize,
    pub task: Task,
    pub history: TargetHistory,
    pub allow_padding: bool,
}

impl WindowSpec {
    pub fn new(length: usize, task: Task) -> Self {
        WindowSpec {
            length,
            task,
            history: TargetHistory::Excluded,
            allow_padding: false,
        }
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout::new(self.task, self.history)
    }
}

/// Records of one section, ascending by month.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionSeries {
    pub section_id: String,
    pub records: Vec<InspectionRecord>,
}

impl SectionSeries {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn months(&self) -> Vec<u32> {
        self.records.iter().map(|r| r.month).collect()
    }
}

/// An `L x d_x` window and the value at the next inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    pub section_id: String,
    pub window: Matrix,
    pub target_month: u32,
    pub target: f64,
    pub padded: bool,
}

/// Groups records by section (first-appearance order) and sorts each group
/// by month. The record set is expected to be validated already.
pub fn build_series(rs: &RecordSet) -> Vec<SectionSeries> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<InspectionRecord>> = BTreeMap::new();
    for r in &rs.records {
        groups
            .entry(r.section_id.as_str())
            .or_insert_with(|| {
                order.push(r.section_id.as_str());
                Vec::new()
            })
            .push(r.clone());
    }
    order
        .into_iter()
        .map(|id| {
            let mut records = groups.remove(id).unwrap_or_default();
            records.sort_by_key(|r| r.month);
            SectionSeries {
                section_id: id.into(),
                records,
            }
        })
        .collect()
}

/// Stride-1 windows over one series, each targeting the record right after
/// it. Series shorter than `L + 1` yield one left-padded window (repeating
/// the earliest record) when padding is allowed and at least two records
/// exist, otherwise nothing.
pub fn make_windows(series: &SectionSeries, spec: &WindowSpec) -> Result<Vec<WindowSample>, SequenceError> {
    let l = spec.length;
    if l == 0 {
        return Err(SequenceError::ZeroLength);
    }
    let layout = spec.layout();
    let rows: Vec<Vec<f64>> = series.records.iter().map(|r| layout.row(r)).collect();
    let n = series.len();
    let build = |history: &[usize], target: usize, padded: bool| -> WindowSample {
        let mut data = Vec::with_capacity(l * layout.width());
        for &i in history {
            data.extend_from_slice(&rows[i]);
        }
        let t = &series.records[target];
        WindowSample {
            section_id: series.section_id.clone(),
            window: Matrix::from_parts(l, layout.width(), data),
            target_month: t.month,
            target: spec.task.target(t),
            padded,
        }
    };

    if n > l {
        Ok((0..n - l)
            .map(|start| {
                let history: Vec<usize> = (start..start + l).collect();
                build(&history, start + l, false)
            })
            .collect())
    } else if spec.allow_padding && n >= 2 {
        let available = n - 1;
        let history: Vec<usize> = (0..l).map(|i| (i + available).saturating_sub(l)).collect();
        Ok(alloc::vec![build(&history, n - 1, true)])
    } else {
        Ok(Vec::new())
    }
}

/// Windows for every series, in series order.
pub fn make_all_windows(series: &[SectionSeries], spec: &WindowSpec) -> Result<Vec<WindowSample>, SequenceError> {
    let mut out = Vec::new();
    for s in series {
        out.extend(make_windows(s, spec)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Uniform shuffle of samples.
    Rows,
    /// Whole sections assigned to one side.
    Sections,
}

impl FromStr for SplitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rows" => Ok(SplitMode::Rows),
            "sections" => Ok(SplitMode::Sections),
            other => Err(alloc::format!("unknown split mode `{other}` (expected rows or sections)")),
        }
    }
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitMode::Rows => "rows",
            SplitMode::Sections => "sections",
        })
    }
}

/// Sorted train and test indices into the input slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions sample indices. Rows mode shuffles and cuts at
/// `floor(ratio * N)`. Sections mode shuffles the distinct section ids and
/// adds whole sections to train until the train share first reaches
/// `ratio`; the boundary section goes to train.
pub fn split_indices(
    samples: &[WindowSample],
    ratio: f64,
    mode: SplitMode,
    seed: u64,
) -> Result<SplitIndices, SequenceError> {
    if samples.len() < 2 {
        return Err(SequenceError::TooFewSamples(samples.len()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(SequenceError::BadRatio(ratio));
    }
    let mut rng = seed::stream(seed, "split");
    let n = samples.len();
    let mut in_train = alloc::vec![false; n];
    match mode {
        SplitMode::Rows => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let cut = libm::floor(ratio * n as f64) as usize;
            for &i in &idx[..cut] {
                in_train[i] = true;
            }
        }
        SplitMode::Sections => {
            let mut ids: Vec<&str> = Vec::new();
            let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, s) in samples.iter().enumerate() {
                members
                    .entry(s.section_id.as_str())
                    .or_insert_with(|| {
                        ids.push(s.section_id.as_str());
                        Vec::new()
                    })
                    .push(i);
            }
            if ids.len() < 2 {
                return Err(SequenceError::Infeasible("sections mode needs at least 2 sections"));
            }
            ids.shuffle(&mut rng);
            let mut taken = 0usize;
            for id in ids {
                if taken as f64 >= ratio * n as f64 {
                    break;
                }
                for &i in &members[id] {
                    in_train[i] = true;
                    taken += 1;
                }
            }
        }
    }
    let train: Vec<usize> = (0..n).filter(|&i| in_train[i]).collect();
    let test: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
    if train.is_empty() || test.is_empty() {
        return Err(SequenceError::Infeasible("one side of the split is empty"));
    }
    Ok(SplitIndices { train, test })
}

/// [`split_indices`] materialised as `(train, test)`.
pub fn split(
    samples: &[WindowSample],
    ratio: f64,
    mode: SplitMode,
    seed: u64,
) -> Result<(Vec<WindowSample>, Vec<WindowSample>), SequenceError> {
    let idx = split_indices(samples, ratio, mode, seed)?;
    Ok((
        idx.train.iter().map(|&i| samples[i].clone()).collect(),
        idx.test.iter().map(|&i| samples[i].clone()).collect(),
    ))
}

pub const STD_FLOOR: f64 = 1e-8;

/// Per-column z-score fitted over every window row of a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Columns that pass through unscaled.
    pub passthrough: Vec<bool>,
}

impl Scaler {
    /// Fits on `train`; columns flagged in `passthrough` keep mean 0, std 1.
    pub fn fit(train: &[WindowSample], passthrough: &[bool]) -> Result<Scaler, SequenceError> {
        let first = train.first().ok_or(SequenceError::EmptyTrain)?;
        let d = first.window.cols();
        if passthrough.len() != d {
            return Err(SequenceError::Length {
                expected: d,
                found: passthrough.len(),
            });
        }
        let mut sum = alloc::vec![0.0; d];
        let mut count = 0usize;
        for s in train {
            for r in 0..s.window.rows() {
                for (acc, v) in sum.iter_mut().zip(s.window.row(r)) {
                    *acc += v;
                }
                count += 1;
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let mut sq = alloc::vec![0.0; d];
        for s in train {
            for r in 0..s.window.rows() {
                for ((acc, v), m) in sq.iter_mut().zip(s.window.row(r)).zip(&mean) {
                    *acc += (v - m) * (v - m);
                }
            }
        }
        let std = sq.iter().map(|s| libm::sqrt(s / count as f64).max(STD_FLOOR)).collect();
        let mut scaler = Scaler {
            mean,
            std,
            passthrough: passthrough.to_vec(),
        };
        for (c, &pass) in passthrough.iter().enumerate() {
            if pass {
                scaler.mean[c] = 0.0;
                scaler.std[c] = 1.0;
            }
        }
        Ok(scaler)
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, window: &Matrix) -> Result<Matrix, SequenceError> {
        if window.cols() != self.width() {
            return Err(SequenceError::Length {
                expected: self.width(),
                found: window.cols(),
            });
        }
        let mut out = window.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                if !self.passthrough[c] {
                    *v = (*v - self.mean[c]) / self.std[c];
                }
            }
        }
        Ok(out)
    }

    /// Scales every window; targets are left as they are.
    pub fn apply(&self, samples: &[WindowSample]) -> Result<Vec<WindowSample>, SequenceError> {
        samples
            .iter()
            .map(|s| {
                Ok(WindowSample {
                    window: self.transform(&s.window)?,
                    ..s.clone()
                })
            })
            .collect()
    }
}

/// Row-major flattening of a window into `L * d_x` values.
pub fn flatten(window: &Matrix) -> Vec<f64> {
    window.data().to_vec()
}

pub fn unflatten(values: &[f64], length: usize, width: usize) -> Result<Matrix, SequenceError> {
    if values.len() != length * width || length == 0 || width == 0 {
        return Err(SequenceError::Length {
            expected: length * width,
            found: values.len(),
        });
    }
    Ok(Matrix::from_parts(length, width, values.to_vec()))
}

/// Flattened windows as an `n x (L * d_x)` matrix plus targets.
pub fn design_rows(samples: &[WindowSample]) -> Option<(Matrix, Vec<f64>)> {
    let first = samples.first()?;
    let p = first.window.data().len();
    let mut data = Vec::with_capacity(samples.len() * p);
    for s in samples {
        data.extend_from_slice(s.window.data());
    }
    let targets = samples.iter().map(|s| s.target).collect();
    Some((Matrix::from_parts(samples.len(), p, data), targets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::Provenance;
    use alloc::vec;

    fn rec(section: &str, month: u32, skid: f64) -> InspectionRecord {
        InspectionRecord {
            section_id: section.into(),
            climatic_zone: 1,
            depth_in: 0.3,
            drum: 0,
            speed_fpm: 60.0,
            surface_type: 1,
            month,
            skid_before: 12.0,
            skid_after: 40.0,
            macro_before_mm: 0.5,
            macro_after_mm: 2.0,
            skid_number: skid,
            macro_mm: 1.0 + f64::from(month) / 100.0,
        }
    }

    fn series(section: &str, months: &[u32]) -> SectionSeries {
        SectionSeries {
            section_id: section.into(),
            records: months.iter().map(|&m| rec(section, m, 40.0 - f64::from(m))).collect(),
        }
    }

    #[test]
    fn build_series_groups_and_sorts() {
        let mut records = Vec::new();
        for m in [12, 0, 18, 3, 6] {
            records.push(rec("A", m, 1.0));
        }
        for m in [0, 3, 6, 12, 18] {
            records.push(rec("B", m, 1.0));
        }
        let rs = RecordSet::new(records, Provenance::Loaded, None);
        let out = build_series(&rs);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].months(), vec![0, 3, 6, 12, 18]);
        assert_eq!(out[1].len(), 5);
        assert!(build_series(&RecordSet::new(vec![], Provenance::Loaded, None)).is_empty());
    }

    #[test]
    fn window_counts_and_targets() {
        let s = series("A", &[0, 3, 6, 12, 18]);
        let w = make_windows(&s, &WindowSpec::new(4, Task::Skid)).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].target_month, 18);
        assert_eq!(w[0].target, 22.0);
        let w = make_windows(&s, &WindowSpec::new(2, Task::Skid)).unwrap();
        let months: Vec<u32> = w.iter().map(|s| s.target_month).collect();
        assert_eq!(months, vec![6, 12, 18]);
        assert!(w.iter().all(|s| !s.padded));
    }

    #[test]
    fn short_series_padding() {
        let s = series("A", &[0, 3, 6]);
        let mut spec = WindowSpec::new(4, Task::Skid);
        assert!(make_windows(&s, &spec).unwrap().is_empty());
        spec.allow_padding = true;
        let w = make_windows(&s, &spec).unwrap();
        assert_eq!(w.len(), 1);
        let win = &w[0].window;
        assert!(w[0].padded);
        assert_eq!(w[0].target_month, 6);
        let earliest = spec.layout().row(&s.records[0]);
        assert_eq!(win.row(0), earliest.as_slice());
        assert_eq!(win.row(1), earliest.as_slice());
        assert_eq!(win.row(3), spec.layout().row(&s.records[1]).as_slice());
        let single = series("B", &[0]);
        assert!(make_windows(&single, &spec).unwrap().is_empty());
    }

    #[test]
    fn layout_excludes_own_history_only() {
        let skid = FeatureLayout::new(Task::Skid, TargetHistory::Excluded);
        assert_eq!(skid.width(), 11);
        assert!(!skid.features.contains(&Feature::SkidNumber));
        assert!(skid.features.contains(&Feature::MacroMm));
        assert_eq!(FeatureLayout::new(Task::Skid, TargetHistory::Included).width(), 12);
    }

    fn samples(n_sections: usize, per_section: usize) -> Vec<WindowSample> {
        let mut out = Vec::new();
        for s in 0..n_sections {
            for k in 0..per_section {
                out.push(WindowSample {
                    section_id: alloc::format!("S{s}"),
                    window: Matrix::filled(2, 3, (s * 10 + k) as f64),
                    target_month: 18,
                    target: k as f64,
                    padded: false,
                });
            }
        }
        out
    }

    #[test]
    fn rows_split_sizes_and_determinism() {
        let data = samples(10, 1);
        let (train, test) = split(&data, 0.8, SplitMode::Rows, 3).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        assert_eq!(split_indices(&data, 0.8, SplitMode::Rows, 3), split_indices(&data, 0.8, SplitMode::Rows, 3));
    }

    #[test]
    fn sections_split_is_disjoint() {
        let data = samples(12, 3);
        let idx = split_indices(&data, 0.8, SplitMode::Sections, 9).unwrap();
        let train_ids: Vec<&str> = idx.train.iter().map(|&i| data[i].section_id.as_str()).collect();
        for &i in &idx.test {
            assert!(!train_ids.contains(&data[i].section_id.as_str()));
        }
        assert_eq!(idx.train.len() + idx.test.len(), data.len());
        assert!(idx.train.len() as f64 >= 0.8 * data.len() as f64);
    }

    #[test]
    fn split_errors() {
        let data = samples(1, 4);
        assert_eq!(
            split(&data, 0.8, SplitMode::Sections, 1).unwrap_err(),
            SequenceError::Infeasible("sections mode needs at least 2 sections")
        );
        assert!(matches!(split(&data[..1], 0.8, SplitMode::Rows, 1), Err(SequenceError::TooFewSamples(1))));
        assert!(matches!(split(&data, 1.0, SplitMode::Rows, 1), Err(SequenceError::BadRatio(_))));
    }

    #[test]
    fn scaler_constant_and_binary_columns() {
        let mk = |rows: &[[f64; 3]]| WindowSample {
            section_id: "A".into(),
            window: Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap(),
            target_month: 3,
            target: 5.0,
            padded: false,
        };
        let train = vec![mk(&[[1.0, 5.0, 0.0], [3.0, 5.0, 1.0]]), mk(&[[5.0, 5.0, 1.0], [7.0, 5.0, 0.0]])];
        let scaler = Scaler::fit(&train, &[false, false, true]).unwrap();
        let scaled = scaler.apply(&train).unwrap();
        for s in &scaled {
            for r in 0..2 {
                assert_eq!(s.window[(r, 1)], 0.0);
            }
            assert_eq!(s.target, 5.0);
        }
        assert_eq!(scaled[0].window[(1, 2)], 1.0);
        // test row scaled by hand with train statistics: mean 4, popstd sqrt(5)
        let test = mk(&[[9.0, 1.0, 1.0], [4.0, 5.0, 0.0]]);
        let out = scaler.transform(&test.window).unwrap();
        assert!((out[(0, 0)] - (9.0 - 4.0) / libm::sqrt(5.0)).abs() < 1e-15);
        assert_eq!(out[(0, 1)], (1.0 - 5.0) / STD_FLOOR);
        assert!(Scaler::fit(&[], &[]).is_err());
    }

    #[test]
    fn unflatten_inverts_flatten() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(unflatten(&flatten(&m), 2, 3).unwrap(), m);
        assert!(unflatten(&[1.0, 2.0], 2, 3).is_err());
    }
}
