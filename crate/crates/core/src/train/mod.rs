//! Training loops for both models, threshold calibration, and the
//! evaluation suite (detection metrics, ROC/AUC, confusion matrix,
//! per-SNR accuracy and localization error).

pub mod config;
pub mod eval;
pub mod loops;
pub mod metrics;
pub mod report;

pub use config::TrainConfig;
pub use eval::{
    evaluate_detection, evaluate_diag, BinStat, DetectionReport, DiagnosisReport, EvalReport,
    SNR_BIN_WIDTH_DB,
};
pub use loops::{train_ae, train_diag, DiagHistory};
pub use metrics::{
    detection_metrics, roc_and_auc, sweep_threshold, DetectionCounts, DetectionMetrics, RocCurve,
    RocPoint, ThresholdPoint,
};
pub use report::{emit_report, write_diag_loss_csv, write_loss_csv};
