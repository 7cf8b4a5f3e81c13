//! Inspection-record schema and invariant checking.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// One lane-segment observation at one month after treatment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionRecord {
    pub section_id: String,
    /// 0 = dry-freeze, 1 = dry-non-freeze.
    pub climatic_zone: u8,
    pub depth_in: f64,
    /// 0 = fine drum (300 teeth), 1 = standard drum (150 teeth).
    pub drum: u8,
    pub speed_fpm: f64,
    /// 0 = HMA, 1 = seal coat.
    pub surface_type: u8,
    pub month: u32,
    pub skid_before: f64,
    pub skid_after: f64,
    pub macro_before_mm: f64,
    pub macro_after_mm: f64,
    pub skid_number: f64,
    pub macro_mm: f64,
}

/// Column order of the on-disk format.
pub const FIELD_NAMES: [&str; 13] = [
    "section_id",
    "climatic_zone",
    "depth_in",
    "drum",
    "speed_fpm",
    "surface_type",
    "month",
    "skid_before",
    "skid_after",
    "macro_before_mm",
    "macro_after_mm",
    "skid_number",
    "macro_mm",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Loaded,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSet {
    pub records: Vec<InspectionRecord>,
    pub provenance: Provenance,
    pub seed: Option<u64>,
}

impl RecordSet {
    pub fn new(records: Vec<InspectionRecord>, provenance: Provenance, seed: Option<u64>) -> Self {
        RecordSet {
            records,
            provenance,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Index pairs `(first, duplicate)` sharing `(section_id, month)`.
    pub fn duplicate_keys(&self) -> Vec<(usize, usize)> {
        let mut seen: BTreeMap<(&str, u32), usize> = BTreeMap::new();
        let mut dups = Vec::new();
        for (i, r) in self.records.iter().enumerate() {
            if let Some(&first) = seen.get(&(r.section_id.as_str(), r.month)) {
                dups.push((first, i));
            } else {
                seen.insert((r.section_id.as_str(), r.month), i);
            }
        }
        dups
    }
}

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Range { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.min).min(self.max)
    }
}

/// Validation ranges for every continuous field. Defaults follow the
/// observed field-data extremes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeTable {
    pub depth_in: Range,
    pub speed_fpm: Range,
    pub month: Range,
    pub skid_before: Range,
    pub skid_after: Range,
    pub macro_before_mm: Range,
    pub macro_after_mm: Range,
    pub skid_number: Range,
    pub macro_mm: Range,
}

impl Default for RangeTable {
    fn default() -> Self {
        RangeTable {
            depth_in: Range::new(0.20, 0.50),
            speed_fpm: Range::new(30.0, 100.0),
            month: Range::new(0.0, 18.0),
            skid_before: Range::new(9.0, 35.0),
            skid_after: Range::new(15.0, 58.0),
            macro_before_mm: Range::new(0.16, 1.73),
            macro_after_mm: Range::new(0.48, 3.58),
            skid_number: Range::new(10.5, 47.0),
            macro_mm: Range::new(0.28, 2.89),
        }
    }
}

impl RangeTable {
    pub fn get(&self, field: &str) -> Option<Range> {
        Some(match field {
            "depth_in" => self.depth_in,
            "speed_fpm" => self.speed_fpm,
            "month" => self.month,
            "skid_before" => self.skid_before,
            "skid_after" => self.skid_after,
            "macro_before_mm" => self.macro_before_mm,
            "macro_after_mm" => self.macro_after_mm,
            "skid_number" => self.skid_number,
            "macro_mm" => self.macro_mm,
            _ => return None,
        })
    }

    pub fn set(&mut self, field: &str, range: Range) -> bool {
        let slot = match field {
            "depth_in" => &mut self.depth_in,
            "speed_fpm" => &mut self.speed_fpm,
            "month" => &mut self.month,
            "skid_before" => &mut self.skid_before,
            "skid_after" => &mut self.skid_after,
            "macro_before_mm" => &mut self.macro_before_mm,
            "macro_after_mm" => &mut self.macro_after_mm,
            "skid_number" => &mut self.skid_number,
            "macro_mm" => &mut self.macro_mm,
            _ => return false,
        };
        *slot = range;
        true
    }
}

/// One invariant violation, located by record position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub section_id: String,
    pub month: u32,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "record {} (section {}, month {}): {}",
            self.index, self.section_id, self.month, self.message
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every record invariant and returns all violations.
///
/// Month-0 records carry the immediately-after measurement, so their
/// `skid_number`/`macro_mm` are checked against the after-milling ranges.
pub fn validate(rs: &RecordSet, ranges: &RangeTable) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |i: usize, r: &InspectionRecord, field: &str, message: String| {
        violations.push(Violation {
            index: i,
            section_id: r.section_id.clone(),
            month: r.month,
            field: field.into(),
            message,
        });
    };

    for (i, r) in rs.records.iter().enumerate() {
        for (name, value) in [
            ("climatic_zone", r.climatic_zone),
            ("drum", r.drum),
            ("surface_type", r.surface_type),
        ] {
            if value > 1 {
                push(i, r, name, format!("{name} out of {{0,1}}"));
            }
        }
        let skid_range = if r.month == 0 { ranges.skid_after } else { ranges.skid_number };
        let macro_range = if r.month == 0 { ranges.macro_after_mm } else { ranges.macro_mm };
        for (name, value, range) in [
            ("depth_in", r.depth_in, ranges.depth_in),
            ("speed_fpm", r.speed_fpm, ranges.speed_fpm),
            ("month", f64::from(r.month), ranges.month),
            ("skid_before", r.skid_before, ranges.skid_before),
            ("skid_after", r.skid_after, ranges.skid_after),
            ("macro_before_mm", r.macro_before_mm, ranges.macro_before_mm),
            ("macro_after_mm", r.macro_after_mm, ranges.macro_after_mm),
            ("skid_number", r.skid_number, skid_range),
            ("macro_mm", r.macro_mm, macro_range),
        ] {
            if !value.is_finite() || !range.contains(value) {
                push(
                    i,
                    r,
                    name,
                    format!("{name} outside [{:.2}, {:.2}]", range.min, range.max),
                );
            }
        }
    }

    let mut first_of: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, r) in rs.records.iter().enumerate() {
        let Some(&j) = first_of.get(r.section_id.as_str()) else {
            first_of.insert(r.section_id.as_str(), i);
            continue;
        };
        let base = &rs.records[j];
        for (name, a, b) in [
            ("skid_before", r.skid_before, base.skid_before),
            ("skid_after", r.skid_after, base.skid_after),
            ("macro_before_mm", r.macro_before_mm, base.macro_before_mm),
            ("macro_after_mm", r.macro_after_mm, base.macro_after_mm),
        ] {
            if a != b {
                push(
                    i,
                    r,
                    name,
                    format!("{name} differs from record {j} of the same section"),
                );
            }
        }
    }

    for (first, dup) in rs.duplicate_keys() {
        let r = &rs.records[dup];
        push(
            dup,
            r,
            "month",
            format!("duplicate (section_id, month) with record {first}"),
        );
    }

    violations.sort_by_key(|v| v.index);
    ValidationReport { violations }
}
