use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{SplitSpec, WindowSpec};
use crate::error::{Error, Result};
use crate::mgn::{AssignMode, MgnConfig, Sampling};
use crate::resattn::Contraction;
use crate::temporal::{CellKind, TmgnnConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Mse,
    Mae,
}

fn default_seq_len() -> usize {
    1
}
fn default_train_fraction() -> f64 {
    0.8
}
fn default_avg_window() -> usize {
    7
}
fn default_heads() -> usize {
    1
}
fn default_temperature() -> f64 {
    1.0
}
fn default_assign() -> AssignMode {
    AssignMode::StraightThrough
}

/// Training run description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Seeds for multi-run experiments; empty means just `seed`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub lags: usize,
    pub horizon: usize,
    /// Recurrent steps per sample.
    #[serde(default = "default_seq_len")]
    pub seq_len: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// How clusters and resolutions are drawn while training.
    #[serde(default = "default_assign")]
    pub train_assign: AssignMode,
    #[serde(default = "default_heads")]
    pub heads: usize,
    #[serde(default)]
    pub contraction: Contraction,
    #[serde(default)]
    pub cell: CellKind,
    /// Defaults to the message size.
    #[serde(default)]
    pub hidden_dim: Option<usize>,
    pub mgn: MgnConfig,
    #[serde(default)]
    pub loss: LossKind,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// 0 means one full-batch step per epoch.
    #[serde(default)]
    pub batch_size: usize,
    /// Score MSE on only the last this-many test samples.
    #[serde(default)]
    pub eval_last: Option<usize>,
    #[serde(default = "default_avg_window")]
    pub avg_window: usize,
    pub dataset: PathBuf,
    pub output_dir: PathBuf,
}

impl TrainConfig {
    /// Weekly county series: levels 20/8/1, four layers of width 24, eight lags.
    pub fn chickenpox(dataset: PathBuf, output_dir: PathBuf) -> Self {
        let mut mgn = MgnConfig::chickenpox();
        mgn.self_loops = true;
        TrainConfig {
            epochs: 150,
            learning_rate: 0.001,
            seed: 0,
            seeds: vec![0, 1, 2],
            lags: 8,
            horizon: 1,
            seq_len: 1,
            temperature: default_temperature(),
            train_assign: default_assign(),
            heads: 2,
            contraction: Contraction::Mean,
            cell: CellKind::Lstm,
            hidden_dim: None,
            mgn,
            loss: LossKind::Mse,
            train_fraction: 0.8,
            batch_size: 0,
            eval_last: Some(40),
            avg_window: 7,
            dataset,
            output_dir,
        }
    }

    /// Daily mobility series: three coarse levels halving in size, width 64.
    /// Graphs of at most 32 regions get half-size levels and width 32.
    pub fn mobility(n: usize, horizon: usize, dataset: PathBuf, output_dir: PathBuf) -> Self {
        let mut mgn = MgnConfig::covid(n);
        if n <= 32 {
            let c = (n / 2).max(2);
            mgn.cluster_sizes = vec![(c / 4).max(1), (c / 2).max(2), c, n];
            mgn.cluster_sizes.dedup();
            mgn.message_dim = 32;
        }
        mgn.self_loops = true;
        TrainConfig {
            epochs: 150,
            learning_rate: 0.001,
            seed: 0,
            seeds: vec![0, 1, 2],
            lags: 7,
            horizon,
            seq_len: 1,
            temperature: default_temperature(),
            train_assign: default_assign(),
            heads: 2,
            contraction: Contraction::Mean,
            cell: CellKind::Lstm,
            hidden_dim: None,
            mgn,
            loss: LossKind::Mse,
            train_fraction: 0.8,
            batch_size: 0,
            eval_last: None,
            avg_window: 7,
            dataset,
            output_dir,
        }
    }

    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            msg: e.message().to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = TrainConfig::from_toml_str(&text, path)?;
        // Relative paths are taken from the config file's directory.
        if let Some(dir) = path.parent() {
            if cfg.dataset.is_relative() {
                cfg.dataset = dir.join(&cfg.dataset);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(1..=4).contains(&self.heads) {
            return Err(Error::config(format!("heads must lie in 1..=4, got {}", self.heads)));
        }
        if self.lags == 0 || self.horizon == 0 || self.seq_len == 0 {
            return Err(Error::config("lags, horizon and seq_len must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.avg_window == 0 {
            return Err(Error::config("avg_window must be at least 1"));
        }
        Sampling::new(self.train_assign, self.temperature)?;
        self.mgn.validate()
    }

    pub fn window(&self) -> WindowSpec {
        WindowSpec {
            lags: self.lags,
            horizon: self.horizon,
            seq_len: self.seq_len,
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec::chronological(self.train_fraction)
    }

    pub fn sampling(&self) -> Result<Sampling> {
        Sampling::new(self.train_assign, self.temperature)
    }

    pub fn run_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn model_config(&self) -> TmgnnConfig {
        let mut m = TmgnnConfig::new(self.mgn.clone(), self.heads, self.cell, self.lags, self.horizon);
        m.attention.contraction = self.contraction;
        if let Some(h) = self.hidden_dim {
            m.hidden_dim = h;
        }
        m
    }
}
