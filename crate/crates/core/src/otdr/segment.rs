use serde::{Deserialize, Serialize};

use super::trace::{EventKind, OtdrTrace};
use crate::{Error, Result};

/// Fixed sequence length both models consume.
pub const SEQUENCE_LEN: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultLabel {
    Normal,
    FiberCut,
    FiberTapping,
    BadSplice,
    DirtyConnector,
}

impl FaultLabel {
    /// The four fault classes, in confusion-matrix order.
    pub const FAULT_CLASSES: [FaultLabel; 4] = [
        FaultLabel::FiberCut,
        FaultLabel::FiberTapping,
        FaultLabel::BadSplice,
        FaultLabel::DirtyConnector,
    ];

    pub fn is_fault(self) -> bool {
        self != FaultLabel::Normal
    }

    /// Index into the 4-class heads; `None` for normal.
    pub fn class_index(self) -> Option<usize> {
        Self::FAULT_CLASSES.iter().position(|&c| c == self)
    }

    pub fn from_class_index(i: usize) -> Result<FaultLabel> {
        Self::FAULT_CLASSES
            .get(i)
            .copied()
            .ok_or_else(|| Error::Data(format!("class index {} out of range", i)))
    }

    pub fn name(self) -> &'static str {
        match self {
            FaultLabel::Normal => "normal",
            FaultLabel::FiberCut => "fiber_cut",
            FaultLabel::FiberTapping => "fiber_tapping",
            FaultLabel::BadSplice => "bad_splice",
            FaultLabel::DirtyConnector => "dirty_connector",
        }
    }
}

fn event_label(kind: EventKind) -> FaultLabel {
    match kind {
        EventKind::ConnectorReflective | EventKind::Reflector => FaultLabel::Normal,
        EventKind::SpliceLoss => FaultLabel::BadSplice,
        EventKind::BendTap => FaultLabel::FiberTapping,
        EventKind::FiberCut => FaultLabel::FiberCut,
        EventKind::DirtyConnector => FaultLabel::DirtyConnector,
    }
}

/// One normalized 30-point sequence with its SNR tag and ground truth.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SequenceSample {
    pub points: Vec<f64>,
    pub snr_db: f64,
    pub label: FaultLabel,
    pub position_index: Option<usize>,
}

impl SequenceSample {
    pub fn validate(&self) -> Result<()> {
        if self.points.len() != SEQUENCE_LEN {
            return Err(Error::Data(format!(
                "sequence has {} points, expected {}",
                self.points.len(),
                SEQUENCE_LEN
            )));
        }
        if !self
            .points
            .iter()
            .all(|p| p.is_finite() && (0.0..=1.0).contains(p))
        {
            return Err(Error::Data("sequence points outside [0, 1]".into()));
        }
        match (self.label.is_fault(), self.position_index) {
            (true, Some(p)) if p < SEQUENCE_LEN => Ok(()),
            (false, None) => Ok(()),
            _ => Err(Error::Data(
                "position_index must be present iff the label is a fault".into(),
            )),
        }
    }
}

/// Cuts the trace into non-overlapping 30-sample windows (configurable
/// stride), min-max normalizes each to [0,1], and labels windows from the
/// ground-truth events falling inside. Short tails are dropped.
pub fn segment_and_normalize(trace: &OtdrTrace, stride: usize) -> Result<Vec<SequenceSample>> {
    if trace.len() < SEQUENCE_LEN {
        return Err(Error::Data(format!(
            "trace of {} samples is shorter than one {}-sample window",
            trace.len(),
            SEQUENCE_LEN
        )));
    }
    let stride = stride.max(1);
    let snr_db = trace.snr_db.unwrap_or(40.0);
    let data = trace.samples_db.data();
    let mut out = Vec::new();
    let mut start = 0;
    while start + SEQUENCE_LEN <= data.len() {
        let window = &data[start..start + SEQUENCE_LEN];
        let min = window.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let points: Vec<f64> = if max - min < 1e-12 {
            vec![0.0; SEQUENCE_LEN] // degenerate flat window
        } else {
            window.iter().map(|&v| (v - min) / (max - min)).collect()
        };

        let mut label = FaultLabel::Normal;
        let mut position_index = None;
        for e in &trace.events {
            let idx = trace.event_index(e);
            if idx >= start && idx < start + SEQUENCE_LEN {
                let l = event_label(e.kind);
                if l.is_fault() {
                    label = l;
                    position_index = Some(idx - start);
                    break;
                }
            }
        }
        let sample = SequenceSample {
            points,
            snr_db,
            label,
            position_index,
        };
        sample.validate()?;
        out.push(sample);
        start += stride;
    }
    Ok(out)
}

/// Per-sequence SNR estimate: 10·log10(dynamic_range / σ̂) where σ̂ is the
/// standard deviation of the residuals after subtracting a linear fit,
/// clamped to [0, 40] dB. An externally known noise σ can be supplied.
pub fn compute_snr(points: &[f64], noise_estimate: Option<f64>) -> f64 {
    let n = points.len();
    if n < 3 {
        return 40.0;
    }
    let range = points.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - points.iter().cloned().fold(f64::INFINITY, f64::min);
    let sigma = noise_estimate.unwrap_or_else(|| {
        // Least-squares line fit, then residual standard deviation.
        let nf = n as f64;
        let mean_x = (nf - 1.0) / 2.0;
        let mean_y = points.iter().sum::<f64>() / nf;
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        for (i, &y) in points.iter().enumerate() {
            let dx = i as f64 - mean_x;
            sxy += dx * (y - mean_y);
            sxx += dx * dx;
        }
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let intercept = mean_y - slope * mean_x;
        let ss: f64 = points
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let r = y - (intercept + slope * i as f64);
                r * r
            })
            .sum();
        (ss / (nf - 2.0)).sqrt()
    });
    if sigma <= 0.0 || range <= 0.0 {
        return 40.0;
    }
    (10.0 * (range / sigma).log10()).clamp(0.0, 40.0)
}
