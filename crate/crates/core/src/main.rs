use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fibermon::model::{
    anomaly_score, build_input, diag_forward, load_model, predicted_position_index, save_model,
    AeModel, DiagModel,
};
use fibermon::otdr::{
    compute_snr, default_meters_per_sample, generate_dataset, Dataset, FaultLabel, GenConfig,
    SequenceSample, Split, SEQUENCE_LEN,
};
use fibermon::train::{
    evaluate_detection, evaluate_diag, emit_report, sweep_threshold, train_ae, train_diag,
    write_diag_loss_csv, write_loss_csv, EvalReport, TrainConfig,
};
use fibermon::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fibermon",
    version,
    about = "OTDR dataset synthesis, anomaly detection and fault diagnosis"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Csv,
    JsonLines,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a labeled sequence dataset (JSONL + manifest).
    Generate {
        /// Generator config JSON; must contain `mode` and `total`.
        #[arg(long, env = "FIBERMON_CONFIG")]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long, env = "FIBERMON_OUT")]
        out: PathBuf,
    },
    /// Train the anomaly-detection autoencoder on the dataset's train split.
    TrainAe {
        #[arg(long, env = "FIBERMON_DATA")]
        data: PathBuf,
        /// Training config JSON; defaults apply when omitted.
        #[arg(long, env = "FIBERMON_CONFIG")]
        config: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "FIBERMON_OUT")]
        out: PathBuf,
    },
    /// Train the diagnosis/localization model on train+val splits.
    TrainDiag {
        #[arg(long, env = "FIBERMON_DATA")]
        data: PathBuf,
        #[arg(long, env = "FIBERMON_CONFIG")]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "FIBERMON_OUT")]
        out: PathBuf,
    },
    /// Pick the detection threshold maximizing F1 and store it in the model.
    Calibrate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, env = "FIBERMON_DATA")]
        data: PathBuf,
        /// Directory for the threshold curve CSV (defaults to the model's).
        #[arg(long, env = "FIBERMON_OUT")]
        out: Option<PathBuf>,
    },
    /// Evaluate saved model(s) on the dataset's test split.
    Eval {
        #[arg(long)]
        ae_model: Option<PathBuf>,
        #[arg(long)]
        diag_model: Option<PathBuf>,
        #[arg(long, env = "FIBERMON_DATA")]
        data: PathBuf,
        #[arg(long, env = "FIBERMON_OUT")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Classify one sequence: anomaly verdict, then fault class + position.
    Detect {
        #[arg(long)]
        ae_model: PathBuf,
        #[arg(long)]
        diag_model: Option<PathBuf>,
        /// File with 30 raw trace points (dB), whitespace/comma separated.
        #[arg(long, conflicts_with = "sample")]
        points: Option<PathBuf>,
        /// File with one dataset JSONL line.
        #[arg(long)]
        sample: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e);
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Generate { config, seed, out } => cmd_generate(&config, seed, &out),
        Cmd::TrainAe {
            data,
            config,
            seed,
            out,
        } => cmd_train_ae(&data, config.as_deref(), seed, &out),
        Cmd::TrainDiag {
            data,
            config,
            seed,
            out,
        } => cmd_train_diag(&data, config.as_deref(), seed, &out),
        Cmd::Calibrate { model, data, out } => cmd_calibrate(&model, &data, out.as_deref()),
        Cmd::Eval {
            ae_model,
            diag_model,
            data,
            out,
            format,
        } => cmd_eval(
            ae_model.as_deref(),
            diag_model.as_deref(),
            &data,
            &out,
            format,
        ),
        Cmd::Detect {
            ae_model,
            diag_model,
            points,
            sample,
            format,
        } => cmd_detect(
            &ae_model,
            diag_model.as_deref(),
            points.as_deref(),
            sample.as_deref(),
            format,
        ),
    }
}

/// Every command records the configuration it actually ran with.
fn write_resolved<T: Serialize>(out_dir: &Path, command: &str, seed: u64, config: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Resolved<'a, T> {
        command: &'a str,
        seed: u64,
        config: &'a T,
    }
    let json = serde_json::to_string_pretty(&Resolved {
        command,
        seed,
        config,
    })?;
    fs::write(out_dir.join("resolved_config.json"), json)?;
    Ok(())
}

fn cmd_generate(config_path: &Path, seed: u64, out: &Path) -> Result<()> {
    let text = fs::read_to_string(config_path)?;
    let config: GenConfig =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", config_path.display(), e)))?;
    let dataset = generate_dataset(&config, seed)?;
    fs::create_dir_all(out)?;
    dataset.write_jsonl(&out.join("dataset.jsonl"))?;
    let manifest = dataset.manifest(&config.hash());
    fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    write_resolved(out, "generate", seed, &config)?;
    println!(
        "wrote {} sequences to {}",
        dataset.records.len(),
        out.join("dataset.jsonl").display()
    );
    Ok(())
}

fn load_train_config(path: Option<&Path>, seed: Option<u64>) -> Result<TrainConfig> {
    let mut config = match path {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {}", p.display(), e)))?
        }
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

/// Loads a dataset and rejects records violating the named split contract,
/// reporting the offending 1-based line.
fn load_dataset(path: &Path) -> Result<Dataset> {
    Dataset::read_jsonl(path, 0)
}

fn cmd_train_ae(data: &Path, config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let config = load_train_config(config, seed)?;
    let dataset = load_dataset(data)?;
    for (i, r) in dataset.records.iter().enumerate() {
        if r.split == Split::Train && r.sample.label.is_fault() {
            return Err(Error::Data(format!(
                "autoencoder training requires a normal-only train split; line {} is '{}'",
                i + 1,
                r.sample.label.name()
            )));
        }
    }
    let train: Vec<SequenceSample> = dataset.split(Split::Train).cloned().collect();
    let (mut model, history) = train_ae(&train, &config)?;
    model.meta.snr_range_db = Some(snr_range_of(&train));
    fs::create_dir_all(out)?;
    save_model(&model, &out.join("model.json"))?;
    write_loss_csv(&out.join("loss.csv"), &history, None)?;
    write_resolved(out, "train-ae", config.seed, &config)?;
    println!(
        "trained autoencoder on {} sequences ({} epochs); final loss {:.6}",
        train.len(),
        history.len(),
        history.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn snr_range_of(samples: &[SequenceSample]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in samples {
        lo = lo.min(s.snr_db);
        hi = hi.max(s.snr_db);
    }
    (lo, hi)
}

fn cmd_train_diag(data: &Path, config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let config = load_train_config(config, seed)?;
    let dataset = load_dataset(data)?;
    for (i, r) in dataset.records.iter().enumerate() {
        if (r.split == Split::Train || r.split == Split::Val) && !r.sample.label.is_fault() {
            return Err(Error::Data(format!(
                "diagnosis training requires faulty-only train/val splits; line {} is 'normal'",
                i + 1
            )));
        }
    }
    let train: Vec<SequenceSample> = dataset.split(Split::Train).cloned().collect();
    let val: Vec<SequenceSample> = dataset.split(Split::Val).cloned().collect();
    let (model, history) = train_diag(&train, &val, &config)?;
    fs::create_dir_all(out)?;
    save_model(&model, &out.join("model.json"))?;
    write_diag_loss_csv(&out.join("loss.csv"), &history)?;
    write_resolved(out, "train-diag", config.seed, &config)?;
    println!(
        "trained diagnosis model on {} sequences ({} epochs{}); best epoch {}",
        train.len(),
        history.train_loss.len(),
        if history.stopped_early {
            ", early stop"
        } else {
            ""
        },
        history.best_epoch
    );
    Ok(())
}

fn cmd_calibrate(model_path: &Path, data: &Path, out: Option<&Path>) -> Result<()> {
    let mut model: AeModel = load_model(model_path)?;
    let dataset = load_dataset(data)?;
    // Detection datasets have no validation split; fall back to test.
    let mut calib: Vec<SequenceSample> = dataset.split(Split::Val).cloned().collect();
    if calib.is_empty() {
        calib = dataset.split(Split::Test).cloned().collect();
    }
    let mut scored = Vec::with_capacity(calib.len());
    for s in &calib {
        scored.push((anomaly_score(&model, s)?, s.label.is_fault()));
    }
    let (theta, curve) = sweep_threshold(&scored)?;
    model.meta.theta = Some(theta);
    save_model(&model, model_path)?;

    let out_dir = out
        .map(Path::to_path_buf)
        .or_else(|| model_path.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir)?;
    let mut csv = String::from("theta,precision,recall,f1\n");
    for p in &curve {
        csv.push_str(&format!("{},{},{},{}\n", p.theta, p.precision, p.recall, p.f1));
    }
    fs::write(out_dir.join("threshold_curve.csv"), csv)?;
    let best = curve
        .iter()
        .find(|p| p.theta == theta)
        .expect("θ comes from the curve");
    println!(
        "threshold {} (precision {:.4}, recall {:.4}, f1 {:.4}) over {} sequences",
        theta, best.precision, best.recall, best.f1, calib.len()
    );
    Ok(())
}

fn cmd_eval(
    ae_model: Option<&Path>,
    diag_model: Option<&Path>,
    data: &Path,
    out: &Path,
    format: Format,
) -> Result<()> {
    if ae_model.is_none() && diag_model.is_none() {
        return Err(Error::Config(
            "eval needs --ae-model and/or --diag-model".into(),
        ));
    }
    let dataset = load_dataset(data)?;
    let test: Vec<SequenceSample> = dataset.split(Split::Test).cloned().collect();
    if test.is_empty() {
        return Err(Error::Data("dataset has no test split".into()));
    }
    let mut report = EvalReport::default();
    if let Some(path) = ae_model {
        let model: AeModel = load_model(path)?;
        let theta = model.meta.theta.ok_or_else(|| {
            Error::Model("autoencoder has no threshold; calibrate first".into())
        })?;
        report.detection = Some(evaluate_detection(&model, &test, theta)?);
    }
    if let Some(path) = diag_model {
        let model: DiagModel = load_model(path)?;
        let faulty: Vec<SequenceSample> = test
            .iter()
            .filter(|s| s.label.is_fault())
            .cloned()
            .collect();
        report.diagnosis = Some(evaluate_diag(&model, &faulty)?);
    }
    let written = emit_report(&report, out)?;
    match format {
        Format::Text => {
            print!("{}", fs::read_to_string(out.join("summary.txt"))?);
        }
        Format::Csv => {
            let mut rows = String::from("metric,value\n");
            if let Some(det) = &report.detection {
                rows.push_str(&format!("precision,{}\n", det.metrics.precision));
                rows.push_str(&format!("recall,{}\n", det.metrics.recall));
                rows.push_str(&format!("f1,{}\n", det.metrics.f1));
                rows.push_str(&format!("auc,{}\n", det.roc.auc));
            }
            if let Some(diag) = &report.diagnosis {
                rows.push_str(&format!("accuracy,{}\n", diag.accuracy));
                rows.push_str(&format!("rmse_index,{}\n", diag.rmse_index));
                rows.push_str(&format!("rmse_m,{}\n", diag.rmse_m));
            }
            print!("{}", rows);
        }
        Format::JsonLines => {
            println!("{}", serde_json::to_string(&report)?);
        }
    }
    eprintln!("wrote {} report files to {}", written.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct DetectOutput {
    verdict: &'static str,
    score: f64,
    threshold: f64,
    snr_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    class: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    position_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    position_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    attention: Option<Vec<f64>>,
}

fn read_sequence(points: Option<&Path>, sample: Option<&Path>) -> Result<SequenceSample> {
    match (points, sample) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)?;
            let raw: Vec<f64> = text
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Data(format!("bad trace point '{}'", t)))
                })
                .collect::<Result<_>>()?;
            if raw.len() != SEQUENCE_LEN {
                return Err(Error::Data(format!(
                    "expected {} raw points, got {}",
                    SEQUENCE_LEN,
                    raw.len()
                )));
            }
            if raw.iter().any(|p| !p.is_finite()) {
                return Err(Error::Data("non-finite trace point".into()));
            }
            let snr_db = compute_snr(&raw, None);
            let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let points = if hi > lo {
                raw.iter().map(|p| (p - lo) / (hi - lo)).collect()
            } else {
                vec![0.0; SEQUENCE_LEN]
            };
            Ok(SequenceSample {
                points,
                snr_db,
                label: FaultLabel::Normal,
                position_index: None,
            })
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)?;
            let line = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .ok_or_else(|| Error::Data("sample file is empty".into()))?;
            // Accept either a dataset line (with `split`) or a bare sample.
            let sample: SequenceSample =
                match serde_json::from_str::<fibermon::otdr::DatasetRecord>(line) {
                    Ok(r) => r.sample,
                    Err(_) => serde_json::from_str(line)
                        .map_err(|e| Error::Data(format!("malformed sequence line: {}", e)))?,
                };
            sample.validate()?;
            Ok(sample)
        }
        _ => Err(Error::Config(
            "detect needs exactly one of --points or --sample".into(),
        )),
    }
}

fn cmd_detect(
    ae_path: &Path,
    diag_path: Option<&Path>,
    points: Option<&Path>,
    sample: Option<&Path>,
    format: Format,
) -> Result<()> {
    let ae: AeModel = load_model(ae_path)?;
    let theta = ae
        .meta
        .theta
        .ok_or_else(|| Error::Model("autoencoder has no threshold; calibrate first".into()))?;
    let seq = read_sequence(points, sample)?;
    let score = anomaly_score(&ae, &seq)?;
    let anomalous = score > theta;

    let mut out = DetectOutput {
        verdict: if anomalous { "anomalous" } else { "normal" },
        score,
        threshold: theta,
        snr_db: seq.snr_db,
        class: None,
        position_index: None,
        position_m: None,
        attention: None,
    };
    if anomalous {
        if let Some(path) = diag_path {
            let diag: DiagModel = load_model(path)?;
            let input = build_input(&seq)?;
            let (dout, _) = diag_forward(&diag, &input)?;
            let mut best = 0;
            for (k, &p) in dout.class_probs.iter().enumerate() {
                if p > dout.class_probs[best] {
                    best = k;
                }
            }
            let idx = predicted_position_index(dout.position_norm);
            out.class = Some(FaultLabel::FAULT_CLASSES[best].name());
            out.position_index = Some(idx);
            out.position_m = Some(idx as f64 * default_meters_per_sample());
            out.attention = Some(dout.alphas);
        }
    }

    match format {
        Format::Text => {
            println!("verdict: {}", out.verdict);
            println!(
                "score: {:.6}  threshold: {:.6}  snr: {:.2} dB",
                out.score, out.threshold, out.snr_db
            );
            if let Some(class) = out.class {
                println!(
                    "class: {}  position index: {}  position: {:.4} m",
                    class,
                    out.position_index.unwrap(),
                    out.position_m.unwrap()
                );
                let weights: Vec<String> = out
                    .attention
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|a| format!("{:.4}", a))
                    .collect();
                println!("attention: {}", weights.join(" "));
            }
        }
        Format::Csv => {
            println!("verdict,score,threshold,snr_db,class,position_index,position_m");
            println!(
                "{},{},{},{},{},{},{}",
                out.verdict,
                out.score,
                out.threshold,
                out.snr_db,
                out.class.unwrap_or(""),
                out.position_index.map(|i| i.to_string()).unwrap_or_default(),
                out.position_m.map(|m| m.to_string()).unwrap_or_default()
            );
        }
        Format::JsonLines => {
            println!("{}", serde_json::to_string(&out)?);
        }
    }
    Ok(())
}
