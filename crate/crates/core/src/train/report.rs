use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::eval::{DiagnosisReport, EvalReport};
use super::loops::DiagHistory;
use crate::Result;

/// Writes the report as CSV files plus a human-readable summary; returns the
/// paths written. Column layouts are stable and re-emitting an identical
/// report produces byte-identical files.
pub fn emit_report(report: &EvalReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut summary = String::new();

    if let Some(det) = &report.detection {
        let _ = writeln!(summary, "== detection ==");
        let _ = writeln!(
            summary,
            "samples: {}  tp: {}  tn: {}  fp: {}  fn: {}",
            det.counts.total(),
            det.counts.tp,
            det.counts.tn,
            det.counts.fp,
            det.counts.fn_
        );
        let _ = writeln!(
            summary,
            "precision: {:.4}  recall: {:.4}  f1: {:.4}{}",
            det.metrics.precision,
            det.metrics.recall,
            det.metrics.f1,
            if det.metrics.degenerate {
                "  (degenerate)"
            } else {
                ""
            }
        );
        let _ = writeln!(summary, "auc: {:.4}", det.roc.auc);
        if let Some(theta) = det.threshold {
            let _ = writeln!(summary, "threshold: {}", theta);
        }

        let mut roc = String::from("threshold,false_positive_rate,true_positive_rate\n");
        for p in &det.roc.points {
            let _ = writeln!(
                roc,
                "{},{},{}",
                p.threshold, p.false_positive_rate, p.true_positive_rate
            );
        }
        let path = dir.join("roc.csv");
        fs::write(&path, roc)?;
        written.push(path);

        if !det.threshold_curve.is_empty() {
            let mut curve = String::from("theta,precision,recall,f1\n");
            for p in &det.threshold_curve {
                let _ = writeln!(curve, "{},{},{},{}", p.theta, p.precision, p.recall, p.f1);
            }
            let path = dir.join("threshold_curve.csv");
            fs::write(&path, curve)?;
            written.push(path);
        }
    }

    if let Some(diag) = &report.diagnosis {
        let names = DiagnosisReport::class_names();
        let _ = writeln!(summary, "== diagnosis ==");
        let _ = writeln!(summary, "accuracy: {:.4}", diag.accuracy);
        let _ = writeln!(
            summary,
            "rmse: {:.4} indices = {:.4} m ({:.4} m/sample)",
            diag.rmse_index, diag.rmse_m, diag.meters_per_sample
        );
        for b in &diag.accuracy_by_snr_bin {
            let _ = writeln!(
                summary,
                "snr [{:>2}, {:>2}) dB: n={} accuracy {:.4} rmse {:.4} idx / {:.4} m",
                b.lo_db, b.hi_db, b.count, b.accuracy, b.rmse_index, b.rmse_m
            );
        }

        let mut conf = format!("true\\predicted,{}\n", names.join(","));
        for (name, row) in names.iter().zip(&diag.confusion) {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(conf, "{},{}", name, cells.join(","));
        }
        let path = dir.join("confusion.csv");
        fs::write(&path, conf)?;
        written.push(path);

        let mut bins = String::from("lo_db,hi_db,count,accuracy,rmse_index,rmse_m\n");
        for b in &diag.accuracy_by_snr_bin {
            let _ = writeln!(
                bins,
                "{},{},{},{},{},{}",
                b.lo_db, b.hi_db, b.count, b.accuracy, b.rmse_index, b.rmse_m
            );
        }
        let path = dir.join("snr_bins.csv");
        fs::write(&path, bins)?;
        written.push(path);
    }

    let path = dir.join("summary.txt");
    fs::write(&path, summary)?;
    written.push(path);
    Ok(written)
}

/// Epoch-indexed loss CSV for a training run.
pub fn write_loss_csv(path: &Path, train: &[f64], val: Option<&[f64]>) -> Result<()> {
    let mut out = String::from(if val.is_some() {
        "epoch,train_loss,val_loss\n"
    } else {
        "epoch,train_loss\n"
    });
    for (i, t) in train.iter().enumerate() {
        match val {
            Some(v) => {
                let _ = writeln!(out, "{},{},{}", i, t, v[i]);
            }
            None => {
                let _ = writeln!(out, "{},{}", i, t);
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_diag_loss_csv(path: &Path, history: &DiagHistory) -> Result<()> {
    if history.val_loss.is_empty() {
        write_loss_csv(path, &history.train_loss, None)
    } else {
        write_loss_csv(path, &history.train_loss, Some(&history.val_loss))
    }
}
