use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AeModel, DiagModel};
use crate::nn::{ParamSet, Tensor};
use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Provenance carried alongside the weights: how the model was trained and,
/// for detectors, the calibrated threshold.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ModelMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_range_db: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Architecture {
    kind: String,
    hidden1: usize,
    hidden2: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    architecture: Architecture,
    params: BTreeMap<String, Tensor>,
    metadata: ModelMeta,
}

/// A model type that can round-trip through the on-disk JSON format.
pub trait StoredModel: Sized {
    const KIND: &'static str;
    fn hidden_sizes(&self) -> (usize, usize);
    fn meta(&self) -> &ModelMeta;
    fn meta_mut(&mut self) -> &mut ModelMeta;
    fn empty(hidden1: usize, hidden2: usize) -> Self;
    fn param_tensors(&self) -> Vec<(String, &Tensor)>;
    fn param_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)>;
}

impl StoredModel for AeModel {
    const KIND: &'static str = "gru_autoencoder";
    fn hidden_sizes(&self) -> (usize, usize) {
        (self.hidden1, self.hidden2)
    }
    fn meta(&self) -> &ModelMeta {
        &self.meta
    }
    fn meta_mut(&mut self) -> &mut ModelMeta {
        &mut self.meta
    }
    fn empty(hidden1: usize, hidden2: usize) -> Self {
        AeModel::zeros(hidden1, hidden2)
    }
    fn param_tensors(&self) -> Vec<(String, &Tensor)> {
        self.params.tensors()
    }
    fn param_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        self.params.tensors_mut()
    }
}

impl StoredModel for DiagModel {
    const KIND: &'static str = "attention_bigru";
    fn hidden_sizes(&self) -> (usize, usize) {
        (self.hidden1, self.hidden2)
    }
    fn meta(&self) -> &ModelMeta {
        &self.meta
    }
    fn meta_mut(&mut self) -> &mut ModelMeta {
        &mut self.meta
    }
    fn empty(hidden1: usize, hidden2: usize) -> Self {
        DiagModel::zeros(hidden1, hidden2)
    }
    fn param_tensors(&self) -> Vec<(String, &Tensor)> {
        self.params.tensors()
    }
    fn param_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        self.params.tensors_mut()
    }
}

pub fn save_model<M: StoredModel>(model: &M, path: &Path) -> Result<()> {
    let (hidden1, hidden2) = model.hidden_sizes();
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        architecture: Architecture {
            kind: M::KIND.to_string(),
            hidden1,
            hidden2,
        },
        params: model
            .param_tensors()
            .into_iter()
            .map(|(k, t)| (k, t.clone()))
            .collect(),
        metadata: model.meta().clone(),
    };
    let json = serde_json::to_string_pretty(&file)?;
    fs::write(path, json)?;
    Ok(())
}

fn parse_file(path: &Path) -> Result<ModelFile> {
    let text = fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text)?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Model(format!(
            "unsupported model format version {} (expected {})",
            file.format_version, MODEL_FORMAT_VERSION
        )));
    }
    Ok(file)
}

fn hydrate<M: StoredModel>(file: ModelFile) -> Result<M> {
    if file.architecture.kind != M::KIND {
        return Err(Error::Model(format!(
            "model file holds a '{}' model, expected '{}'",
            file.architecture.kind,
            M::KIND
        )));
    }
    let mut model = M::empty(file.architecture.hidden1, file.architecture.hidden2);
    let slots = model.param_tensors_mut();
    if slots.len() != file.params.len() {
        return Err(Error::Model(format!(
            "model file has {} parameter tensors, expected {}",
            file.params.len(),
            slots.len()
        )));
    }
    for (name, slot) in slots {
        let stored = file
            .params
            .get(&name)
            .ok_or_else(|| Error::Model(format!("model file is missing tensor '{}'", name)))?;
        if stored.shape() != slot.shape() {
            return Err(Error::Model(format!(
                "tensor '{}' has shape {:?}, expected {:?}",
                name,
                stored.shape(),
                slot.shape()
            )));
        }
        *slot = stored.clone();
    }
    *model.meta_mut() = file.metadata;
    Ok(model)
}

pub fn load_model<M: StoredModel>(path: &Path) -> Result<M> {
    hydrate(parse_file(path)?)
}

pub enum AnyModel {
    Ae(AeModel),
    Diag(DiagModel),
}

/// Load a model file, dispatching on the architecture it declares.
pub fn load_any(path: &Path) -> Result<AnyModel> {
    let file = parse_file(path)?;
    match file.architecture.kind.as_str() {
        k if k == AeModel::KIND => Ok(AnyModel::Ae(hydrate(file)?)),
        k if k == DiagModel::KIND => Ok(AnyModel::Diag(hydrate(file)?)),
        other => Err(Error::Model(format!("unknown model kind '{}'", other))),
    }
}
