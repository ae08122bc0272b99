use std::collections::BTreeMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::segment::{segment_and_normalize, FaultLabel, SequenceSample, SEQUENCE_LEN};
use super::trace::{add_noise_for_snr, synthesize_trace, EventKind, EventSpec, FiberSpec};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetMode {
    /// Normal-only training split, mixed test split (70/30).
    Detection,
    /// Faulty-only sequences, 60/20/20 train/val/test.
    Diagnosis,
}

/// Dataset generator configuration. Severity ranges follow the simulator's
/// event model; every field has a sensible default except mode and total.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub mode: DatasetMode,
    pub total: usize,
    /// SNR range sampled uniformly, in dB. Defaults per mode: (0, 30) for
    /// detection (the full noisy-to-clean sweep) and (1, 40) for diagnosis,
    /// approximating the high-SNR-skewed mix of averaged field captures
    /// while still covering the noise-dominated regime.
    #[serde(default)]
    pub snr_range_db: Option<(f64, f64)>,
    /// Backscatter drop across one 30-sample window, in dB. Defaults per
    /// mode: a shallow slope for detection (so weak taps still dominate the
    /// normalized window shape) and a steeper one for diagnosis (so full
    /// drops remain distinguishable from partial steps).
    #[serde(default)]
    pub window_slope_db: Option<f64>,
    #[serde(default = "d_launch")]
    pub launch_level_db: f64,
    /// Overrides the mode's default train/val/test fractions.
    #[serde(default)]
    pub split_fractions: Option<[f64; 3]>,
    /// Fraction of the detection test split that is faulty.
    #[serde(default = "d_test_fault_fraction")]
    pub test_fault_fraction: f64,
    #[serde(default = "d_splice_loss")]
    pub splice_loss_db: (f64, f64),
    #[serde(default = "d_tap_loss")]
    pub tap_loss_db: (f64, f64),
    #[serde(default = "d_tap_ramp")]
    pub tap_ramp_samples: (usize, usize),
    #[serde(default = "d_dirty_reflectance")]
    pub dirty_reflectance_db: (f64, f64),
    #[serde(default = "d_dirty_loss")]
    pub dirty_loss_db: (f64, f64),
    #[serde(default = "d_cut_reflectance")]
    pub cut_reflectance_db: (f64, f64),
    /// Probability that a cut shows a terminal Fresnel reflection spike.
    /// An open fiber end (glass–air interface) reflects strongly, so the
    /// spike is present by default; shattered or angled breaks can be
    /// modeled by lowering this.
    #[serde(default = "d_cut_spike_probability")]
    pub cut_spike_probability: f64,
    /// In-window fault position range (margin keeps the signature visible).
    #[serde(default = "d_position_range")]
    pub position_range: (usize, usize),
}

fn d_launch() -> f64 {
    20.0
}
fn d_test_fault_fraction() -> f64 {
    0.5
}
fn d_splice_loss() -> (f64, f64) {
    (0.3, 1.5)
}
fn d_tap_loss() -> (f64, f64) {
    (0.05, 1.0)
}
fn d_tap_ramp() -> (usize, usize) {
    (2, 4)
}
fn d_dirty_reflectance() -> (f64, f64) {
    (1.0, 4.0)
}
fn d_dirty_loss() -> (f64, f64) {
    (0.5, 2.0)
}
fn d_cut_reflectance() -> (f64, f64) {
    (2.0, 6.0)
}
fn d_cut_spike_probability() -> f64 {
    1.0
}
fn d_position_range() -> (usize, usize) {
    (2, 27)
}

impl GenConfig {
    pub fn new(mode: DatasetMode, total: usize) -> Self {
        GenConfig {
            mode,
            total,
            snr_range_db: None,
            window_slope_db: None,
            launch_level_db: d_launch(),
            split_fractions: None,
            test_fault_fraction: d_test_fault_fraction(),
            splice_loss_db: d_splice_loss(),
            tap_loss_db: d_tap_loss(),
            tap_ramp_samples: d_tap_ramp(),
            dirty_reflectance_db: d_dirty_reflectance(),
            dirty_loss_db: d_dirty_loss(),
            cut_reflectance_db: d_cut_reflectance(),
            cut_spike_probability: d_cut_spike_probability(),
            position_range: d_position_range(),
        }
    }

    /// Effective SNR sampling range in dB.
    pub fn snr_range(&self) -> (f64, f64) {
        self.snr_range_db.unwrap_or(match self.mode {
            DatasetMode::Detection => (0.0, 30.0),
            DatasetMode::Diagnosis => (1.0, 40.0),
        })
    }

    /// Effective in-window backscatter slope (dB over 30 samples).
    pub fn window_slope(&self) -> f64 {
        self.window_slope_db.unwrap_or(match self.mode {
            DatasetMode::Detection => 0.02,
            DatasetMode::Diagnosis => 0.25,
        })
    }

    pub fn fractions(&self) -> [f64; 3] {
        self.split_fractions.unwrap_or(match self.mode {
            DatasetMode::Detection => [0.7, 0.0, 0.3],
            DatasetMode::Diagnosis => [0.6, 0.2, 0.2],
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.total == 0 {
            return Err(Error::Config("total sequence count must be positive".into()));
        }
        let f = self.fractions();
        if f.iter().any(|&x| x < 0.0) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("split fractions must be >= 0 and sum to 1".into()));
        }
        let (lo, hi) = self.snr_range();
        if !(0.0..=40.0).contains(&lo) || !(0.0..=40.0).contains(&hi) || lo > hi {
            return Err(Error::Config("SNR range must lie within [0, 40]".into()));
        }
        let (plo, phi) = self.position_range;
        if plo > phi || phi >= SEQUENCE_LEN {
            return Err(Error::Config("fault position range outside the window".into()));
        }
        if self.window_slope() <= 0.0 {
            return Err(Error::Config("window slope must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.test_fault_fraction) {
            return Err(Error::Config("test fault fraction must be in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.cut_spike_probability) {
            return Err(Error::Config("cut spike probability must be in [0, 1]".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex_digest(json.as_bytes())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{:02x}", b)).collect()
}

/// One dataset line: a sequence sample plus its split assignment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetRecord {
    #[serde(flatten)]
    pub sample: SequenceSample,
    pub split: Split,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub records: Vec<DatasetRecord>,
    pub generator_seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub generator_seed: u64,
    pub config_hash: String,
    pub total: usize,
    /// Counts keyed "split/label".
    pub counts: BTreeMap<String, usize>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &SequenceSample> {
        self.records
            .iter()
            .filter(move |r| r.split == split)
            .map(|r| &r.sample)
    }

    pub fn counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts
                .entry(format!("{}/{}", r.split.name(), r.sample.label.name()))
                .or_insert(0) += 1;
        }
        counts
    }

    pub fn manifest(&self, config_hash: &str) -> Manifest {
        Manifest {
            generator_seed: self.generator_seed,
            config_hash: config_hash.to_string(),
            total: self.records.len(),
            counts: self.counts(),
        }
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl(path: &Path, generator_seed: u64) -> Result<Dataset> {
        let f = std::fs::File::open(path)?;
        let mut records = Vec::new();
        for (lineno, line) in std::io::BufReader::new(f).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: DatasetRecord = serde_json::from_str(&line).map_err(|e| {
                Error::Data(format!("line {}: {}", lineno + 1, e))
            })?;
            record.sample.validate().map_err(|e| {
                Error::Data(format!("line {}: {}", lineno + 1, e))
            })?;
            records.push(record);
        }
        Ok(Dataset {
            records,
            generator_seed,
        })
    }
}

/// Deterministic per-sample RNG stream derived from (seed, domain, index),
/// so samples can be generated in any order.
pub fn substream(seed: u64, domain: &str, index: u64) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(domain.as_bytes());
    hasher.update(seed.to_le_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(key)
}

fn uniform(rng: &mut ChaCha12Rng, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.gen_range(range.0..range.1)
    } else {
        range.0
    }
}

/// Builds a single-window fiber so the whole synthesized trace is exactly
/// one 30-sample sequence.
fn window_fiber(config: &GenConfig) -> FiberSpec {
    let probe = FiberSpec {
        length_km: 1.0,
        attenuation_db_per_km: 1.0,
        launch_level_db: config.launch_level_db,
        sample_interval_ns: 1.0,
        group_index: 1.468,
    };
    let mps = probe.meters_per_sample();
    let window_m = SEQUENCE_LEN as f64 * mps;
    FiberSpec {
        length_km: (window_m + 0.5 * mps) / 1000.0,
        attenuation_db_per_km: config.window_slope() / (window_m / 1000.0),
        launch_level_db: config.launch_level_db,
        sample_interval_ns: 1.0,
        group_index: 1.468,
    }
}

fn draw_event(
    config: &GenConfig,
    label: FaultLabel,
    mps: f64,
    rng: &mut ChaCha12Rng,
) -> (EventSpec, usize) {
    let (plo, phi) = config.position_range;
    let j = rng.gen_range(plo..=phi);
    let position_m = j as f64 * mps;
    let event = match label {
        FaultLabel::BadSplice => EventSpec {
            kind: EventKind::SpliceLoss,
            position_m,
            loss_db: uniform(rng, config.splice_loss_db),
            reflectance_db: None,
            ramp_samples: None,
        },
        FaultLabel::FiberTapping => EventSpec {
            kind: EventKind::BendTap,
            position_m,
            loss_db: uniform(rng, config.tap_loss_db),
            reflectance_db: None,
            ramp_samples: Some(rng.gen_range(config.tap_ramp_samples.0..=config.tap_ramp_samples.1)),
        },
        FaultLabel::DirtyConnector => EventSpec {
            kind: EventKind::DirtyConnector,
            position_m,
            loss_db: uniform(rng, config.dirty_loss_db),
            reflectance_db: Some(uniform(rng, config.dirty_reflectance_db)),
            ramp_samples: None,
        },
        FaultLabel::FiberCut => {
            let reflectance = if rng.gen_bool(config.cut_spike_probability) {
                Some(uniform(rng, config.cut_reflectance_db))
            } else {
                None
            };
            EventSpec {
                kind: EventKind::FiberCut,
                position_m,
                loss_db: 0.0,
                reflectance_db: reflectance,
                ramp_samples: None,
            }
        }
        FaultLabel::Normal => unreachable!("normal windows carry no event"),
    };
    (event, j)
}

/// The per-index (split, label) plan. Class counts stay balanced within ±1
/// and split sizes match the configured fractions.
fn build_plan(config: &GenConfig) -> Vec<(Split, FaultLabel)> {
    let fractions = config.fractions();
    let total = config.total;
    let mut plan = Vec::with_capacity(total);
    match config.mode {
        DatasetMode::Detection => {
            let n_train = (total as f64 * fractions[0]).round() as usize;
            let n_test = total - n_train;
            let n_fault = (n_test as f64 * config.test_fault_fraction).round() as usize;
            for _ in 0..n_train {
                plan.push((Split::Train, FaultLabel::Normal));
            }
            for i in 0..n_test {
                let label = if i < n_fault {
                    FaultLabel::FAULT_CLASSES[i % 4]
                } else {
                    FaultLabel::Normal
                };
                plan.push((Split::Test, label));
            }
        }
        DatasetMode::Diagnosis => {
            // Per-class round robin with per-class split thresholds.
            let mut class_totals = [0usize; 4];
            for i in 0..total {
                class_totals[i % 4] += 1;
            }
            let mut seen = [0usize; 4];
            for i in 0..total {
                let c = i % 4;
                let m = class_totals[c] as f64;
                let n_tr = (m * fractions[0]).round() as usize;
                let n_val = (m * fractions[1]).round() as usize;
                let split = if seen[c] < n_tr {
                    Split::Train
                } else if seen[c] < n_tr + n_val {
                    Split::Val
                } else {
                    Split::Test
                };
                seen[c] += 1;
                plan.push((split, FaultLabel::FAULT_CLASSES[c]));
            }
        }
    }
    plan
}

/// Generates a labeled dataset: a pure function of (config, seed).
pub fn generate_dataset(config: &GenConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    let fiber = window_fiber(config);
    let mps = fiber.meters_per_sample();
    let plan = build_plan(config);
    let mut records = Vec::with_capacity(plan.len());
    for (i, &(split, label)) in plan.iter().enumerate() {
        let mut rng = substream(seed, "fibermon.sample", i as u64);
        let snr = uniform(&mut rng, config.snr_range());
        let (events, expected_pos) = if label.is_fault() {
            let (event, j) = draw_event(config, label, mps, &mut rng);
            (vec![event], Some(j))
        } else {
            (Vec::new(), None)
        };
        let noise_seed: u64 = rng.gen();
        let trace = synthesize_trace(&fiber, &events)?;
        let noisy = add_noise_for_snr(&trace, snr, noise_seed)?;
        let windows = segment_and_normalize(&noisy, SEQUENCE_LEN)?;
        let sample = windows.into_iter().next().ok_or_else(|| {
            Error::Data("window fiber produced no sequence".into())
        })?;
        debug_assert_eq!(sample.label, label);
        debug_assert_eq!(sample.position_index, expected_pos);
        records.push(DatasetRecord { sample, split });
    }
    Ok(Dataset {
        records,
        generator_seed: seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_seed_reproduces_identical_bytes() {
        let config = GenConfig::new(DatasetMode::Diagnosis, 40);
        let a = generate_dataset(&config, 7).unwrap();
        let b = generate_dataset(&config, 7).unwrap();
        let ja = serde_json::to_string(&a.records).unwrap();
        let jb = serde_json::to_string(&b.records).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn diagnosis_split_sizes_600_200_200() {
        let config = GenConfig::new(DatasetMode::Diagnosis, 1000);
        let d = generate_dataset(&config, 1).unwrap();
        assert_eq!(d.split(Split::Train).count(), 600);
        assert_eq!(d.split(Split::Val).count(), 200);
        assert_eq!(d.split(Split::Test).count(), 200);
        assert!(d.records.iter().all(|r| r.sample.label.is_fault()));
    }

    #[test]
    fn per_class_test_counts_from_20_percent_split() {
        // 1600 sequences, 400 per class: a perfect classifier's confusion
        // rows on test would each sum to 80.
        let config = GenConfig::new(DatasetMode::Diagnosis, 1600);
        let d = generate_dataset(&config, 2).unwrap();
        for class in FaultLabel::FAULT_CLASSES {
            let n = d.split(Split::Test).filter(|s| s.label == class).count();
            assert_eq!(n, 80);
        }
    }

    #[test]
    fn detection_train_split_is_normal_only() {
        let config = GenConfig::new(DatasetMode::Detection, 200);
        let d = generate_dataset(&config, 3).unwrap();
        assert_eq!(d.split(Split::Train).count(), 140);
        assert!(d
            .split(Split::Train)
            .all(|s| s.label == FaultLabel::Normal));
        let faults = d.split(Split::Test).filter(|s| s.label.is_fault()).count();
        assert_eq!(faults, 30);
    }

    #[test]
    fn class_balance_within_one() {
        let config = GenConfig::new(DatasetMode::Diagnosis, 402);
        let d = generate_dataset(&config, 4).unwrap();
        let counts: Vec<usize> = FaultLabel::FAULT_CLASSES
            .iter()
            .map(|&c| d.records.iter().filter(|r| r.sample.label == c).count())
            .collect();
        let min = *counts.iter().min().unwrap();
        let max = *counts.iter().max().unwrap();
        assert!(max - min <= 1);
    }

    #[test]
    fn labels_consistent_with_geometry_and_points_normalized() {
        let config = GenConfig::new(DatasetMode::Diagnosis, 80);
        let d = generate_dataset(&config, 5).unwrap();
        for r in &d.records {
            r.sample.validate().unwrap();
            let p = r.sample.position_index.unwrap();
            assert!((2..=27).contains(&p));
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let config = GenConfig::new(DatasetMode::Detection, 30);
        let d = generate_dataset(&config, 6).unwrap();
        let dir = std::env::temp_dir().join("fibermon_dataset_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("data.jsonl");
        d.write_jsonl(&path).unwrap();
        let back = Dataset::read_jsonl(&path, 6).unwrap();
        assert_eq!(back.records.len(), d.records.len());
        let ja = serde_json::to_string(&d.records).unwrap();
        let jb = serde_json::to_string(&back.records).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn zero_total_rejected() {
        let config = GenConfig::new(DatasetMode::Detection, 0);
        assert!(generate_dataset(&config, 0).is_err());
    }
}
