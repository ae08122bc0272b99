use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Detection outcome tallies; "positive" means faulty/anomalous.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl DetectionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn record(&mut self, actual_fault: bool, predicted_fault: bool) {
        match (actual_fault, predicted_fault) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True when tp+fp == 0 or tp+fn == 0, where the rates are defined as 0.
    pub degenerate: bool,
}

pub fn detection_metrics(counts: &DetectionCounts) -> DetectionMetrics {
    let pred_pos = counts.tp + counts.fp;
    let actual_pos = counts.tp + counts.fn_;
    if pred_pos == 0 || actual_pos == 0 || counts.tp == 0 {
        return DetectionMetrics {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            degenerate: pred_pos == 0 || actual_pos == 0,
        };
    }
    let precision = counts.tp as f64 / pred_pos as f64;
    let recall = counts.tp as f64 / actual_pos as f64;
    let f1 = 2.0 * precision * recall / (precision + recall);
    DetectionMetrics {
        precision,
        recall,
        f1,
        degenerate: false,
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub theta: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn counts_at_theta(scored: &[(f64, bool)], theta: f64) -> DetectionCounts {
    let mut c = DetectionCounts::default();
    for &(score, is_fault) in scored {
        c.record(is_fault, score > theta);
    }
    c
}

/// Sweeps candidate thresholds (midpoints between consecutive distinct
/// scores, plus extremes) and returns the θ maximizing F1 together with the
/// full curve. Ties break toward the smaller θ.
pub fn sweep_threshold(scored: &[(f64, bool)]) -> Result<(f64, Vec<ThresholdPoint>)> {
    let n_pos = scored.iter().filter(|(_, f)| *f).count();
    if n_pos == 0 || n_pos == scored.len() {
        return Err(Error::Data(
            "threshold calibration needs both normal and faulty samples".into(),
        ));
    }
    let mut sorted: Vec<f64> = scored.iter().map(|(s, _)| *s).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();

    let mut candidates = Vec::with_capacity(sorted.len() + 2);
    candidates.push((sorted[0] - 1.0).max(0.0));
    for w in sorted.windows(2) {
        candidates.push(0.5 * (w[0] + w[1]));
    }
    candidates.push(*sorted.last().unwrap());
    candidates.dedup();

    let mut curve = Vec::with_capacity(candidates.len());
    let mut best: Option<ThresholdPoint> = None;
    for theta in candidates {
        let m = detection_metrics(&counts_at_theta(scored, theta));
        let point = ThresholdPoint {
            theta,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        };
        curve.push(point);
        if best.map_or(true, |b| point.f1 > b.f1) {
            best = Some(point);
        }
    }
    Ok((best.unwrap().theta, curve))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RocPoint {
    pub false_positive_rate: f64,
    pub true_positive_rate: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC over every distinct score plus the two trivial endpoints; AUC by
/// trapezoidal integration. Equals the pairwise ranking statistic (ties
/// counted half) on the same data.
pub fn roc_and_auc(scored: &[(f64, bool)]) -> Result<RocCurve> {
    let n_pos = scored.iter().filter(|(_, f)| *f).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data("ROC needs both normal and faulty samples".into()));
    }
    let mut thresholds: Vec<f64> = scored.iter().map(|(s, _)| *s).collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();

    let mut points = vec![RocPoint {
        false_positive_rate: 0.0,
        true_positive_rate: 0.0,
        threshold: f64::INFINITY,
    }];
    for t in thresholds {
        // Positive verdict at or above this score.
        let (mut tp, mut fp) = (0usize, 0usize);
        for &(score, is_fault) in scored {
            if score >= t {
                if is_fault {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        points.push(RocPoint {
            false_positive_rate: fp as f64 / n_neg as f64,
            true_positive_rate: tp as f64 / n_pos as f64,
            threshold: t,
        });
    }
    points.push(RocPoint {
        false_positive_rate: 1.0,
        true_positive_rate: 1.0,
        threshold: f64::NEG_INFINITY,
    });

    let mut auc = 0.0;
    for w in points.windows(2) {
        auc += (w[1].false_positive_rate - w[0].false_positive_rate)
            * (w[0].true_positive_rate + w[1].true_positive_rate)
            * 0.5;
    }
    Ok(RocCurve { points, auc })
}
