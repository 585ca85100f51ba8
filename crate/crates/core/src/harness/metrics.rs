use serde::{Deserialize, Serialize};

use super::train::Example;
use crate::data::{Standardizer, TemporalGraphDataset};
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::resattn::SelectionRecord;
use crate::temporal::TmgnnModel;

/// Mean squared difference over every entry.
pub fn mse(pred: &Tensor, target: &Tensor) -> Result<f64> {
    Ok(pred.sub(target)?.data().iter().map(|d| d * d).sum::<f64>() / pred.len() as f64)
}

/// `(1/(n·d)) Σ |ŷ − y|` for an `n × d` block.
pub fn mae(pred: &Tensor, target: &Tensor) -> Result<f64> {
    Ok(pred.sub(target)?.data().iter().map(|d| d.abs()).sum::<f64>() / pred.len() as f64)
}

/// Eval-mode predictions for each example, standardized scale.
pub fn predict_all(model: &TmgnnModel, examples: &[Example]) -> Result<Vec<(Tensor, Vec<SelectionRecord>)>> {
    examples.iter().map(|ex| model.predict(&ex.graphs)).collect()
}

fn tail(examples: &[Example], last: Option<usize>) -> &[Example] {
    match last {
        Some(k) if k < examples.len() => &examples[examples.len() - k..],
        _ => examples,
    }
}

/// MSE on standardized targets, averaged over nodes, outputs and samples.
/// `last` keeps only the final `last` test samples.
pub fn evaluate_mse(model: &TmgnnModel, test: &[Example], last: Option<usize>) -> Result<f64> {
    let test = tail(test, last);
    if test.is_empty() {
        return Err(Error::contract("empty test set"));
    }
    let total = test
        .iter()
        .map(|ex| mse(&model.predict(&ex.graphs)?.0, &ex.target))
        .sum::<Result<f64>>()?;
    Ok(total / test.len() as f64)
}

/// MAE on raw counts: predictions are mapped back through `standardizer`
/// and only the first `horizon` outputs are scored.
pub fn evaluate_mae(model: &TmgnnModel, test: &[Example], standardizer: &Standardizer, horizon: usize) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::contract("empty test set"));
    }
    if horizon == 0 || horizon > model.cfg.outputs {
        return Err(Error::data(format!(
            "horizon {horizon} exceeds the {} days the model forecasts",
            model.cfg.outputs
        )));
    }
    let total = test
        .iter()
        .map(|ex| {
            let raw = standardizer.inverse_nodes(&model.predict(&ex.graphs)?.0);
            let cut = |t: &Tensor| Tensor::from_fn(t.rows(), horizon, |v, k| t.get(v, k));
            mae(&cut(&raw), &cut(&ex.raw_target))
        })
        .sum::<Result<f64>>()?;
    Ok(total / test.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Avg,
    LastDay,
    AvgWindow,
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "avg" => Ok(BaselineKind::Avg),
            "last_day" => Ok(BaselineKind::LastDay),
            "avg_window" => Ok(BaselineKind::AvgWindow),
            other => Err(Error::config(format!("unknown baseline `{other}`"))),
        }
    }
}

impl std::fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BaselineKind::Avg => "AVG",
            BaselineKind::LastDay => "LAST_DAY",
            BaselineKind::AvgWindow => "AVG_WINDOW",
        })
    }
}

/// Forecast for the next `d` steps from `history` (oldest first); every
/// baseline repeats one value.
pub fn baseline_forecast(kind: BaselineKind, history: &[f64], d: usize, window: usize) -> Result<Vec<f64>> {
    let Some(&last) = history.last() else {
        return Err(Error::data("baseline needs a non-empty history"));
    };
    let value = match kind {
        BaselineKind::Avg => history.iter().sum::<f64>() / history.len() as f64,
        BaselineKind::LastDay => last,
        BaselineKind::AvgWindow => {
            if window == 0 || window > history.len() {
                return Err(Error::data(format!(
                    "window {window} does not fit a history of {}",
                    history.len()
                )));
            }
            history[history.len() - window..].iter().sum::<f64>() / window as f64
        }
    };
    Ok(vec![value; d])
}

/// Raw-scale MAE of a baseline over the given anchors; each forecast sees
/// timesteps `0..=anchor` of its node.
pub fn evaluate_baseline(
    ds: &TemporalGraphDataset,
    kind: BaselineKind,
    anchors: &[usize],
    horizon: usize,
    window: usize,
) -> Result<f64> {
    if anchors.is_empty() {
        return Err(Error::contract("no anchors to evaluate"));
    }
    let mut total = 0.0;
    for &a in anchors {
        if a + horizon >= ds.len() {
            return Err(Error::data(format!(
                "anchor {a} + horizon {horizon} runs past the series"
            )));
        }
        let mut err = 0.0;
        for v in 0..ds.n() {
            let history: Vec<f64> = (0..=a).map(|t| ds.cases.get(t, v)).collect();
            let f = baseline_forecast(kind, &history, horizon, window)?;
            err += (0..horizon)
                .map(|k| (f[k] - ds.cases.get(a + 1 + k, v)).abs())
                .sum::<f64>();
        }
        total += err / (ds.n() * horizon) as f64;
    }
    Ok(total / anchors.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        let y = Tensor::column_vector(&[3.0, 5.0]);
        assert_eq!(mae(&y, &y).unwrap(), 0.0);
        assert_eq!(mse(&y, &y).unwrap(), 0.0);
        let p = Tensor::column_vector(&[5.0, 5.0]);
        assert_eq!(mae(&p, &y).unwrap(), 1.0);
        assert_eq!(mse(&p, &y).unwrap(), 2.0);
    }

    #[test]
    fn baseline_examples() {
        let s = [1.0, 2.0, 3.0];
        assert_eq!(baseline_forecast(BaselineKind::LastDay, &s, 1, 7).unwrap(), vec![3.0]);
        assert_eq!(baseline_forecast(BaselineKind::AvgWindow, &s, 1, 2).unwrap(), vec![2.5]);
        assert_eq!(baseline_forecast(BaselineKind::Avg, &s, 2, 7).unwrap(), vec![2.0, 2.0]);
        for kind in [BaselineKind::Avg, BaselineKind::LastDay, BaselineKind::AvgWindow] {
            assert_eq!(baseline_forecast(kind, &[4.0; 9], 3, 7).unwrap(), vec![4.0; 3]);
            assert!(baseline_forecast(kind, &[], 1, 1).is_err());
        }
        assert!(baseline_forecast(BaselineKind::AvgWindow, &s, 1, 4).is_err());
        assert_eq!("last-day".parse::<BaselineKind>().unwrap(), BaselineKind::LastDay);
        assert!("median".parse::<BaselineKind>().is_err());
    }
}
