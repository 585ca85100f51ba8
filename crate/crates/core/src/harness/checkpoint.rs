use std::path::Path;

use serde::Deserialize;

use super::config::TrainConfig;
use crate::data::Standardizer;
use crate::error::{Error, Result};
use crate::jsonfmt::ObjectWriter;
use crate::temporal::{ParamRecord, TmgnnConfig, TmgnnModel};

pub const CHECKPOINT_FORMAT: &str = "tmgnn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Trained parameters plus what is needed to rebuild inputs for them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub train: TrainConfig,
    pub model: TmgnnConfig,
    pub standardizer: Standardizer,
    pub epochs_completed: usize,
    pub params: Vec<ParamRecord>,
}

impl Checkpoint {
    pub fn new(train: &TrainConfig, model: &TmgnnModel, standardizer: &Standardizer, epochs_completed: usize) -> Self {
        Checkpoint {
            train: train.clone(),
            model: model.cfg.clone(),
            standardizer: standardizer.clone(),
            epochs_completed,
            params: model.export_params(),
        }
    }

    pub fn to_model(&self) -> Result<TmgnnModel> {
        TmgnnModel::from_params(self.model.clone(), &self.params)
    }

    /// One key per line, one parameter per line; floats print in their
    /// shortest round-trip form.
    pub fn to_canonical_string(&self) -> String {
        let mut w = ObjectWriter::new();
        w.field("format", CHECKPOINT_FORMAT);
        w.field("version", &CHECKPOINT_VERSION);
        w.field("train", &self.train);
        w.field("model", &self.model);
        w.field("standardizer", &self.standardizer);
        w.field("epochs_completed", &self.epochs_completed);
        w.rows("params", &self.params);
        w.finish()
    }

    pub fn from_canonical_str(text: &str, path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            format: String,
            version: u32,
            train: TrainConfig,
            model: TmgnnConfig,
            standardizer: Standardizer,
            epochs_completed: usize,
            params: Vec<ParamRecord>,
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        if doc.format != CHECKPOINT_FORMAT || doc.version != CHECKPOINT_VERSION {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 2,
                msg: format!(
                    "unsupported checkpoint {} v{} (expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION})",
                    doc.format, doc.version
                ),
            });
        }
        if let Some(r) = doc.params.iter().find(|r| r.values.len() != r.shape[0] * r.shape[1]) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: format!(
                    "parameter `{}` has {} values for shape {:?}",
                    r.name,
                    r.values.len(),
                    r.shape
                ),
            });
        }
        Ok(Checkpoint {
            train: doc.train,
            model: doc.model,
            standardizer: doc.standardizer,
            epochs_completed: doc.epochs_completed,
            params: doc.params,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_canonical_str(&text, path)
    }
}
