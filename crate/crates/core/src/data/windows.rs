use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Window layout: each of `seq_len` steps sees the `lags` most recent values,
/// so a sample reads `lags + seq_len - 1` timesteps of history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub lags: usize,
    pub horizon: usize,
    pub seq_len: usize,
}

impl WindowSpec {
    pub fn new(lags: usize, horizon: usize) -> Self {
        WindowSpec {
            lags,
            horizon,
            seq_len: 1,
        }
    }

    pub fn history(&self) -> usize {
        self.lags + self.seq_len - 1
    }

    fn validate(&self) -> Result<()> {
        if self.lags == 0 || self.horizon == 0 || self.seq_len == 0 {
            return Err(Error::config("lags, horizon and seq_len must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSample {
    /// Last input timestep.
    pub anchor: usize,
    /// `n × history`, oldest column first; column `history-1` is `anchor`.
    pub inputs: Tensor,
    /// `n × horizon`; column `k` is timestep `anchor + 1 + k`.
    pub target: Tensor,
}

impl WindowedSample {
    /// Node features of recurrent step `s`: the `lags` values ending at
    /// `anchor - (seq_len - 1 - s)`.
    pub fn step_features(&self, s: usize, lags: usize) -> Tensor {
        Tensor::from_fn(self.inputs.rows(), lags, |v, k| self.inputs.get(v, s + k))
    }

    pub fn input_timesteps(&self) -> std::ops::RangeInclusive<usize> {
        self.anchor + 1 - self.inputs.cols()..=self.anchor
    }

    pub fn target_timesteps(&self, horizon: usize) -> std::ops::RangeInclusive<usize> {
        self.anchor + 1..=self.anchor + horizon
    }
}

/// One sample per anchor with a full history before it and a full target
/// window after it, in chronological order. `cases` is `T × n`.
pub fn make_windows(cases: &Tensor, spec: WindowSpec) -> Result<Vec<WindowedSample>> {
    spec.validate()?;
    let (t_len, n) = (cases.rows(), cases.cols());
    let hist = spec.history();
    if t_len < hist + spec.horizon {
        return Err(Error::data(format!(
            "{t_len} timesteps cannot hold {hist} inputs plus a {}-step target",
            spec.horizon
        )));
    }
    Ok((hist - 1..t_len - spec.horizon)
        .map(|anchor| {
            let start = anchor + 1 - hist;
            WindowedSample {
                anchor,
                inputs: Tensor::from_fn(n, hist, |v, k| cases.get(start + k, v)),
                target: Tensor::from_fn(n, spec.horizon, |v, k| cases.get(anchor + 1 + k, v)),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitStyle {
    #[default]
    Chronological,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    #[serde(default)]
    pub style: SplitStyle,
}

impl SplitSpec {
    pub fn chronological(train_fraction: f64) -> Self {
        SplitSpec {
            train_fraction,
            style: SplitStyle::Chronological,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<WindowedSample>,
    pub test: Vec<WindowedSample>,
}

impl Split {
    /// Last timestep any training target reads.
    pub fn train_end(&self, horizon: usize) -> Option<usize> {
        self.train.last().map(|s| s.anchor + horizon)
    }
}

/// Earliest `⌊fraction · N⌋` samples train; the rest test, minus the first
/// `horizon - 1` test samples whose targets would overlap training targets.
pub fn split(samples: Vec<WindowedSample>, spec: SplitSpec, horizon: usize) -> Result<Split> {
    let f = spec.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::config(format!("train fraction must lie in (0, 1), got {f}")));
    }
    if samples.windows(2).any(|w| w[0].anchor >= w[1].anchor) {
        return Err(Error::contract("samples must be in chronological order"));
    }
    let cut = (f * samples.len() as f64).floor() as usize;
    let mut train = samples;
    let test = train.split_off(cut);
    let purge = match train.last() {
        Some(last) => test.iter().take_while(|s| s.anchor < last.anchor + horizon).count(),
        None => 0,
    };
    Ok(Split {
        train,
        test: test.into_iter().skip(purge).collect(),
    })
}

/// Per-node z-scores with statistics from a training prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population statistics of rows `0..rows` of `cases`.
    pub fn fit(cases: &Tensor, rows: usize) -> Result<Self> {
        if rows == 0 || rows > cases.rows() {
            return Err(Error::data(format!(
                "cannot fit standardization on {rows} of {} timesteps",
                cases.rows()
            )));
        }
        let n = cases.cols();
        let r = rows as f64;
        let mean: Vec<f64> = (0..n)
            .map(|v| (0..rows).map(|t| cases.get(t, v)).sum::<f64>() / r)
            .collect();
        let std = (0..n)
            .map(|v| ((0..rows).map(|t| (cases.get(t, v) - mean[v]).powi(2)).sum::<f64>() / r).sqrt())
            .collect();
        Ok(Standardizer { mean, std })
    }

    /// `std = 0` nodes pass through unchanged.
    pub fn value(&self, v: usize, y: f64) -> f64 {
        if self.std[v] == 0.0 {
            y
        } else {
            (y - self.mean[v]) / self.std[v]
        }
    }

    pub fn inverse_value(&self, v: usize, z: f64) -> f64 {
        if self.std[v] == 0.0 {
            z
        } else {
            z * self.std[v] + self.mean[v]
        }
    }

    /// Applies to a `T × n` table.
    pub fn transform(&self, cases: &Tensor) -> Tensor {
        Tensor::from_fn(cases.rows(), cases.cols(), |t, v| self.value(v, cases.get(t, v)))
    }

    pub fn inverse(&self, z: &Tensor) -> Tensor {
        Tensor::from_fn(z.rows(), z.cols(), |t, v| self.inverse_value(v, z.get(t, v)))
    }

    /// Inverse for an `n × k` per-node block.
    pub fn inverse_nodes(&self, z: &Tensor) -> Tensor {
        Tensor::from_fn(z.rows(), z.cols(), |v, k| self.inverse_value(v, z.get(v, k)))
    }
}
