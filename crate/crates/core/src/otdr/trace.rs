use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::nn::Tensor;
use crate::{Error, Result};

pub const SPEED_OF_LIGHT_M_PER_S: f64 = 2.998e8;

/// Drop from the launch level down to the post-cut noise floor, in dB.
pub const NOISE_FLOOR_DROP_DB: f64 = 40.0;

/// Width (standard deviation, in samples) of the Gaussian shape used for
/// reflective spikes. Roughly matches a few-samples pulse response.
const SPIKE_SIGMA_SAMPLES: f64 = 1.5;

/// Fiber and acquisition geometry.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    pub launch_level_db: f64,
    #[serde(default = "default_sample_interval")]
    pub sample_interval_ns: f64,
    #[serde(default = "default_group_index")]
    pub group_index: f64,
}

fn default_sample_interval() -> f64 {
    1.0
}

fn default_group_index() -> f64 {
    1.468
}

/// Sample spacing for the default 1 ns interval and n_g = 1.468 (≈ 0.1021 m).
pub fn default_meters_per_sample() -> f64 {
    SPEED_OF_LIGHT_M_PER_S * 1e-9 / (2.0 * default_group_index())
}

impl FiberSpec {
    /// Distance between adjacent samples: (c · Δt) / (2 n_g).
    /// ≈ 0.1021 m for the default 1 ns interval and n_g = 1.468.
    pub fn meters_per_sample(&self) -> f64 {
        SPEED_OF_LIGHT_M_PER_S * self.sample_interval_ns * 1e-9 / (2.0 * self.group_index)
    }

    pub fn num_samples(&self) -> usize {
        (self.length_km * 1000.0 / self.meters_per_sample()).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.length_km <= 0.0 || self.attenuation_db_per_km <= 0.0 {
            return Err(Error::Config(
                "fiber length and attenuation must be positive".into(),
            ));
        }
        if self.meters_per_sample() <= 0.0 {
            return Err(Error::Config("non-positive sample spacing".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Benign reflective connector (normal event).
    ConnectorReflective,
    /// Benign terminal reflector (normal event).
    Reflector,
    /// Bad splice: abrupt non-reflective loss step.
    SpliceLoss,
    /// Fiber tapping via micro-bend: loss applied as a short linear ramp.
    BendTap,
    /// Complete break: trace drops to the noise floor past the position.
    FiberCut,
    /// Dirty connector: reflective spike plus a loss step.
    DirtyConnector,
}

impl EventKind {
    pub fn is_reflective(self) -> bool {
        matches!(
            self,
            EventKind::ConnectorReflective
                | EventKind::Reflector
                | EventKind::DirtyConnector
                | EventKind::FiberCut
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub kind: EventKind,
    pub position_m: f64,
    #[serde(default)]
    pub loss_db: f64,
    /// Spike height above the local backscatter level (reflective kinds only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflectance_db: Option<f64>,
    /// Ramp length for bend_tap events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_samples: Option<usize>,
}

/// A simulated backscatter trace in dB vs distance, with ground truth.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OtdrTrace {
    pub samples_db: Tensor,
    pub meters_per_sample: f64,
    pub events: Vec<EventSpec>,
    /// SNR target the noise was injected at; `None` while noiseless.
    pub snr_db: Option<f64>,
    pub noiseless_db: Tensor,
}

impl OtdrTrace {
    pub fn len(&self) -> usize {
        self.samples_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples_db.is_empty()
    }

    pub fn event_index(&self, event: &EventSpec) -> usize {
        (event.position_m / self.meters_per_sample).round() as usize
    }
}

/// Builds the noiseless trace: a linear backscatter slope with the event
/// signatures superimposed.
pub fn synthesize_trace(fiber: &FiberSpec, events: &[EventSpec]) -> Result<OtdrTrace> {
    fiber.validate()?;
    let mps = fiber.meters_per_sample();
    let length_m = fiber.length_km * 1000.0;
    let n = fiber.num_samples();
    if n == 0 {
        return Err(Error::Config("fiber shorter than one sample".into()));
    }
    for pair in events.windows(2) {
        if pair[0].position_m > pair[1].position_m {
            return Err(Error::Config("events must be sorted by position".into()));
        }
    }
    let mut cut_index: Option<usize> = None;
    for e in events {
        if e.position_m < 0.0 || e.position_m > length_m {
            return Err(Error::Config(format!(
                "event at {} m outside fiber of {} m",
                e.position_m, length_m
            )));
        }
        if let Some(ci) = cut_index {
            let idx = (e.position_m / mps).round() as usize;
            if idx > ci {
                return Err(Error::Config("event located beyond a fiber cut".into()));
            }
        }
        if e.kind == EventKind::FiberCut {
            cut_index = Some((e.position_m / mps).round() as usize);
        }
    }

    let floor_db = fiber.launch_level_db - NOISE_FLOOR_DROP_DB;
    let mut samples = vec![0.0; n];
    for (k, s) in samples.iter_mut().enumerate() {
        let d_km = k as f64 * mps / 1000.0;
        *s = fiber.launch_level_db - fiber.attenuation_db_per_km * d_km;
    }

    for e in events {
        let idx = (e.position_m / mps).round() as usize;
        match e.kind {
            EventKind::FiberCut => {
                for s in samples.iter_mut().skip(idx + 1) {
                    *s = floor_db;
                }
            }
            EventKind::BendTap => {
                let ramp = e.ramp_samples.unwrap_or(2).max(1);
                for k in idx..n {
                    let frac = ((k - idx + 1) as f64 / ramp as f64).min(1.0);
                    samples[k] -= frac * e.loss_db;
                }
            }
            _ => {
                for s in samples.iter_mut().skip(idx) {
                    *s -= e.loss_db;
                }
            }
        }
        if let Some(r) = e.reflectance_db {
            // Gaussian-shaped spike; for a cut, only on the surviving side.
            let lo = idx.saturating_sub(5);
            let hi = if e.kind == EventKind::FiberCut {
                idx + 1
            } else {
                (idx + 6).min(n)
            };
            for (k, s) in samples.iter_mut().enumerate().take(hi).skip(lo) {
                let d = k as f64 - idx as f64;
                *s += r * (-d * d / (2.0 * SPIKE_SIGMA_SAMPLES * SPIKE_SIGMA_SAMPLES)).exp();
            }
        }
    }

    let noiseless = Tensor::new(vec![n], samples)?;
    Ok(OtdrTrace {
        samples_db: noiseless.clone(),
        meters_per_sample: mps,
        events: events.to_vec(),
        snr_db: None,
        noiseless_db: noiseless,
    })
}

/// Adds zero-mean Gaussian noise with σ = dynamic_range · 10^(−target/10),
/// i.e. 10·log10(dynamic_range/σ) == target. The dynamic range is taken
/// over the noiseless segment (max minus the in-segment floor).
pub fn add_noise_for_snr(trace: &OtdrTrace, target_snr_db: f64, seed: u64) -> Result<OtdrTrace> {
    if !(0.0..=40.0).contains(&target_snr_db) {
        return Err(Error::Config(format!(
            "target SNR {} outside [0, 40] dB",
            target_snr_db
        )));
    }
    let data = trace.noiseless_db.data();
    let max = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let dynamic_range = max - floor;
    if dynamic_range < 1e-9 {
        return Err(Error::Data("degenerate flat trace".into()));
    }
    let sigma = dynamic_range * 10f64.powf(-target_snr_db / 10.0);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let noisy: Vec<f64> = data.iter().map(|&s| s + normal.sample(&mut rng)).collect();
    Ok(OtdrTrace {
        samples_db: Tensor::new(vec![noisy.len()], noisy)?,
        meters_per_sample: trace.meters_per_sample,
        events: trace.events.clone(),
        snr_db: Some(target_snr_db),
        noiseless_db: trace.noiseless_db.clone(),
    })
}
