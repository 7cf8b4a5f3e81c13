//! Synthetic inspection corpora.
//!
//! Section covariates are drawn once per section: binary codes from a
//! Bernoulli with the configured mean, continuous covariates from a normal
//! truncated to `[min, max]` by resampling. Skid number and macrotexture then
//! decay exponentially from their after-milling values toward a
//! section-specific asymptote:
//!
//! ```text
//! value(t) = after - (after - asymptote) * (1 - exp(-rate * t)) + noise
//! ```
//!
//! The asymptote retains a fraction of the milling gain,
//! `before + retained * (after - before)`, where `retained` depends on the
//! surface type plus a bonus for milling near the speed sweet spot (larger
//! for the fine drum). The rate depends on the surface type (seal coat wears
//! faster than HMA), is multiplied in the freeze zone, and carries a
//! log-normal per-section wear factor shared by both measurements. Month 0
//! holds the after-milling values exactly; later values are clipped to the
//! configured measurement ranges.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{InspectionRecord, Provenance, Range, RecordSet};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyntheticError {
    #[error("synthetic config requests zero sections")]
    EmptyConfig,
    #[error("invalid synthetic config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl VariableStats {
    pub const fn new(mean: f64, std: f64, min: f64, max: f64) -> Self {
        VariableStats { mean, std, min, max }
    }

    pub fn range(&self) -> Range {
        Range::new(self.min, self.max)
    }
}

/// Per-variable marginals. Defaults are the published field summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableTable {
    pub climatic_zone: VariableStats,
    pub depth_in: VariableStats,
    pub drum: VariableStats,
    pub speed_fpm: VariableStats,
    pub surface_type: VariableStats,
    pub skid_before: VariableStats,
    pub skid_after: VariableStats,
    pub macro_before_mm: VariableStats,
    pub macro_after_mm: VariableStats,
    pub skid_number: VariableStats,
    pub macro_mm: VariableStats,
}

impl Default for VariableTable {
    fn default() -> Self {
        VariableTable {
            climatic_zone: VariableStats::new(0.40, 0.49, 0.0, 1.0),
            depth_in: VariableStats::new(0.46, 0.11, 0.20, 0.50),
            drum: VariableStats::new(0.70, 0.46, 0.0, 1.0),
            speed_fpm: VariableStats::new(68.52, 17.81, 30.0, 100.0),
            surface_type: VariableStats::new(0.59, 0.50, 0.0, 1.0),
            skid_before: VariableStats::new(15.70, 8.00, 9.0, 35.0),
            skid_after: VariableStats::new(42.37, 12.15, 15.0, 58.0),
            macro_before_mm: VariableStats::new(0.68, 0.32, 0.16, 1.73),
            macro_after_mm: VariableStats::new(2.37, 0.59, 0.48, 3.58),
            skid_number: VariableStats::new(29.91, 9.59, 10.5, 47.0),
            macro_mm: VariableStats::new(1.44, 0.69, 0.28, 2.89),
        }
    }
}

impl VariableTable {
    fn entries(&self) -> [(&'static str, VariableStats); 11] {
        [
            ("climatic_zone", self.climatic_zone),
            ("depth_in", self.depth_in),
            ("drum", self.drum),
            ("speed_fpm", self.speed_fpm),
            ("surface_type", self.surface_type),
            ("skid_before", self.skid_before),
            ("skid_after", self.skid_after),
            ("macro_before_mm", self.macro_before_mm),
            ("macro_after_mm", self.macro_after_mm),
            ("skid_number", self.skid_number),
            ("macro_mm", self.macro_mm),
        ]
    }
}

/// Exponential decay of one measurement on one surface type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    /// Share of the milling gain still present at the asymptote.
    pub retained_fraction: f64,
    /// Decay rate per month before covariate multipliers.
    pub rate: f64,
    pub noise_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDecay {
    pub skid: DecayCurve,
    pub macrotexture: DecayCurve,
}

/// Covariate effects on the decay curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreatmentEffects {
    /// Rate multiplier in the dry-freeze zone (code 0).
    pub freeze_rate_multiplier: f64,
    /// Log-normal sigma of the per-section wear factor.
    pub wear_spread: f64,
    pub sweet_spot_speed_fpm: f64,
    pub sweet_spot_width_fpm: f64,
    pub fine_drum_skid_bonus: f64,
    pub standard_drum_skid_bonus: f64,
    pub fine_drum_macro_bonus: f64,
    pub standard_drum_macro_bonus: f64,
}

impl Default for TreatmentEffects {
    fn default() -> Self {
        TreatmentEffects {
            freeze_rate_multiplier: 2.0,
            wear_spread: 0.15,
            sweet_spot_speed_fpm: 72.0,
            sweet_spot_width_fpm: 10.0,
            fine_drum_skid_bonus: 0.5,
            standard_drum_skid_bonus: 0.25,
            fine_drum_macro_bonus: 0.3,
            standard_drum_macro_bonus: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_sections: usize,
    pub months: Vec<u32>,
    pub variables: VariableTable,
    pub hma: SurfaceDecay,
    pub seal_coat: SurfaceDecay,
    pub effects: TreatmentEffects,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_sections: 500,
            months: vec![0, 3, 6, 12, 18],
            variables: VariableTable::default(),
            hma: SurfaceDecay {
                skid: DecayCurve {
                    retained_fraction: 0.30,
                    rate: 0.03,
                    noise_std: 0.8,
                },
                macrotexture: DecayCurve {
                    retained_fraction: 0.30,
                    rate: 0.048,
                    noise_std: 0.08,
                },
            },
            seal_coat: SurfaceDecay {
                skid: DecayCurve {
                    retained_fraction: 0.03,
                    rate: 0.16,
                    noise_std: 0.8,
                },
                macrotexture: DecayCurve {
                    retained_fraction: 0.10,
                    rate: 0.256,
                    noise_std: 0.08,
                },
            },
            effects: TreatmentEffects::default(),
        }
    }
}

impl SyntheticConfig {
    pub fn with_sections(n_sections: usize) -> Self {
        SyntheticConfig {
            n_sections,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        if self.n_sections == 0 {
            return Err(SyntheticError::EmptyConfig);
        }
        if self.months.is_empty() || self.months.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SyntheticError::Invalid("months must be non-empty and strictly increasing".into()));
        }
        for (name, s) in self.variables.entries() {
            let ordered = s.min <= s.mean && s.mean <= s.max;
            if !ordered || !(s.std >= 0.0) || !s.std.is_finite() {
                return Err(SyntheticError::Invalid(format!(
                    "{name}: need min <= mean <= max and std >= 0"
                )));
            }
        }
        for (name, s) in [
            ("climatic_zone", self.variables.climatic_zone),
            ("drum", self.variables.drum),
            ("surface_type", self.variables.surface_type),
        ] {
            if s.mean < 0.0 || s.mean > 1.0 {
                return Err(SyntheticError::Invalid(format!("{name}: mean must be a probability")));
            }
        }
        for (name, c) in [
            ("hma.skid", self.hma.skid),
            ("hma.macrotexture", self.hma.macrotexture),
            ("seal_coat.skid", self.seal_coat.skid),
            ("seal_coat.macrotexture", self.seal_coat.macrotexture),
        ] {
            if !(0.0..=1.0).contains(&c.retained_fraction) || !(c.rate >= 0.0) || !(c.noise_std >= 0.0) {
                return Err(SyntheticError::Invalid(format!(
                    "{name}: retained_fraction in [0,1], rate >= 0, noise_std >= 0"
                )));
            }
        }
        let e = &self.effects;
        if !(e.freeze_rate_multiplier >= 0.0) || !(e.wear_spread >= 0.0) || !(e.sweet_spot_width_fpm > 0.0) {
            return Err(SyntheticError::Invalid("treatment effects out of range".into()));
        }
        Ok(())
    }
}

fn truncated_normal<R: Rng>(rng: &mut R, s: &VariableStats) -> f64 {
    if s.std == 0.0 {
        return s.mean;
    }
    for _ in 0..100_000 {
        let z: f64 = StandardNormal.sample(rng);
        let v = s.mean + s.std * z;
        if v >= s.min && v <= s.max {
            return v;
        }
    }
    s.range().clamp(s.mean)
}

fn bernoulli<R: Rng>(rng: &mut R, p: f64) -> u8 {
    u8::from(rng.random::<f64>() < p)
}

fn asymptote(before: f64, after: f64, retained: f64) -> f64 {
    if after > before {
        before + retained.min(0.95) * (after - before)
    } else {
        after
    }
}

/// Generates `cfg.n_sections` sections observed at `cfg.months`.
/// Deterministic for a fixed `(cfg, seed)`.
pub fn generate_synthetic(cfg: &SyntheticConfig, seed: u64) -> Result<RecordSet, SyntheticError> {
    cfg.validate()?;
    let v = &cfg.variables;
    let e = &cfg.effects;
    let mut rng = seed::stream(seed, "synthetic");
    let mut records = Vec::with_capacity(cfg.n_sections * cfg.months.len());

    for i in 0..cfg.n_sections {
        let climatic_zone = bernoulli(&mut rng, v.climatic_zone.mean);
        let depth_in = truncated_normal(&mut rng, &v.depth_in);
        let drum = bernoulli(&mut rng, v.drum.mean);
        let speed_fpm = truncated_normal(&mut rng, &v.speed_fpm);
        let surface_type = bernoulli(&mut rng, v.surface_type.mean);
        let skid_before = truncated_normal(&mut rng, &v.skid_before);
        let skid_after = truncated_normal(&mut rng, &v.skid_after);
        let macro_before_mm = truncated_normal(&mut rng, &v.macro_before_mm);
        let macro_after_mm = truncated_normal(&mut rng, &v.macro_after_mm);
        let wear_z: f64 = StandardNormal.sample(&mut rng);

        let decay = if surface_type == 1 { cfg.seal_coat } else { cfg.hma };
        let offset = (speed_fpm - e.sweet_spot_speed_fpm) / e.sweet_spot_width_fpm;
        let sweet_spot = libm::exp(-offset * offset);
        let (skid_bonus, macro_bonus) = if drum == 0 {
            (e.fine_drum_skid_bonus, e.fine_drum_macro_bonus)
        } else {
            (e.standard_drum_skid_bonus, e.standard_drum_macro_bonus)
        };
        let mut wear = libm::exp(e.wear_spread * wear_z);
        if climatic_zone == 0 {
            wear *= e.freeze_rate_multiplier;
        }
        let skid_rate = decay.skid.rate * wear;
        let macro_rate = decay.macrotexture.rate * wear;
        let skid_floor = asymptote(
            skid_before,
            skid_after,
            decay.skid.retained_fraction + sweet_spot * skid_bonus,
        );
        let macro_floor = asymptote(
            macro_before_mm,
            macro_after_mm,
            decay.macrotexture.retained_fraction + sweet_spot * macro_bonus,
        );

        let section_id = format!("S{:04}", i + 1);
        for &month in &cfg.months {
            let (skid_number, macro_mm) = if month == 0 {
                (skid_after, macro_after_mm)
            } else {
                let t = f64::from(month);
                let z_skid: f64 = StandardNormal.sample(&mut rng);
                let z_macro: f64 = StandardNormal.sample(&mut rng);
                let skid = skid_after - (skid_after - skid_floor) * (1.0 - libm::exp(-skid_rate * t))
                    + decay.skid.noise_std * z_skid;
                let mac = macro_after_mm
                    - (macro_after_mm - macro_floor) * (1.0 - libm::exp(-macro_rate * t))
                    + decay.macrotexture.noise_std * z_macro;
                (v.skid_number.range().clamp(skid), v.macro_mm.range().clamp(mac))
            };
            records.push(InspectionRecord {
                section_id: section_id.clone(),
                climatic_zone,
                depth_in,
                drum,
                speed_fpm,
                surface_type,
                month,
                skid_before,
                skid_after,
                macro_before_mm,
                macro_after_mm,
                skid_number,
                macro_mm,
            });
        }
    }
    Ok(RecordSet::new(records, Provenance::Synthetic, Some(seed)))
}
