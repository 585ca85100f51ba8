use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::config::TrainConfig;
use super::metrics::{evaluate_baseline, evaluate_mae, evaluate_mse, predict_all, BaselineKind};
use super::train::{prepare, train, Prepared};
use crate::data::TemporalGraphDataset;
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::resattn::{selection_log_table, SelectionRecord};
use crate::temporal::TmgnnModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; absent for a single run.
    pub std: Option<f64>,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std =
            (values.len() >= 2).then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        Summary { mean, std }
    }
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.std {
            Some(s) => write!(f, "{:.4} ± {:.4}", self.mean, s),
            None => write!(f, "{:.4}", self.mean),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    /// Standardized-scale MSE over the scored test samples.
    pub mse: f64,
    /// Raw-scale MAE over all test samples.
    pub mae: f64,
    pub final_loss: f64,
    /// Test-time count of each selected level, index 0 = level 1.
    pub selection_histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub kind: BaselineKind,
    pub mae: f64,
}

/// Aggregate of one experiment. Serializes to the deterministic
/// `summary.json`; timing goes to a separate file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub horizon: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub scored_mse_samples: usize,
    pub mse: Summary,
    pub mae: Summary,
    pub runs: Vec<SeedResult>,
    pub baselines: Vec<BaselineResult>,
    pub selection_histogram: Vec<usize>,
    #[serde(skip)]
    pub wall_clock_seconds: Vec<f64>,
}

impl MetricsReport {
    pub fn metrics_table(&self) -> String {
        let mut out = String::from("seed\tmse\tmae\tfinal_loss\n");
        for r in &self.runs {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", r.seed, r.mse, r.mae, r.final_loss);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable summary.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "horizon {}: {} train / {} test samples ({} scored for MSE)",
            self.horizon, self.train_samples, self.test_samples, self.scored_mse_samples
        );
        let _ = writeln!(out, "TMGNN  MSE {}  MAE {}", self.mse, self.mae);
        for b in &self.baselines {
            let _ = writeln!(out, "{:<10} MAE {:.4}", b.kind.to_string(), b.mae);
        }
        let _ = writeln!(out, "selected levels (1..L): {:?}", self.selection_histogram);
        out
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn histogram(selections: &[SelectionRecord], levels: usize) -> Vec<usize> {
    let mut h = vec![0; levels];
    for s in selections {
        h[s.level - 1] += 1;
    }
    h
}

/// Trains and evaluates one model per seed.
///
/// With `out` set, writes per seed `seed_<s>/checkpoint.json`, `loss.tsv` and
/// `selections.tsv`, then `metrics.tsv`, `summary.json` and `timing.tsv`. If
/// a seed fails, the files of completed seeds are kept and the error returned.
pub fn run_experiment(
    ds: &TemporalGraphDataset,
    cfg: &TrainConfig,
    seeds: &[u64],
    out: Option<&Path>,
) -> Result<MetricsReport> {
    if seeds.is_empty() {
        return Err(Error::config("at least one seed is required"));
    }
    let prepared: Prepared = prepare(ds, cfg)?;
    if prepared.test.is_empty() {
        return Err(Error::data("test split is empty"));
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let levels = cfg.mgn.levels();
    let mut runs = Vec::new();
    let mut seconds = Vec::new();
    let anchors: Vec<usize> = prepared.test.iter().map(|e| e.anchor).collect();
    let baselines = [BaselineKind::Avg, BaselineKind::LastDay, BaselineKind::AvgWindow]
        .into_iter()
        .map(|kind| {
            Ok(BaselineResult {
                kind,
                mae: evaluate_baseline(ds, kind, &anchors, cfg.horizon, cfg.avg_window)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scored = cfg
        .eval_last
        .map_or(prepared.test.len(), |k| k.min(prepared.test.len()));

    let finish = |runs: &[SeedResult], seconds: &[f64]| -> Result<MetricsReport> {
        let mse: Vec<f64> = runs.iter().map(|r| r.mse).collect();
        let mae: Vec<f64> = runs.iter().map(|r| r.mae).collect();
        let mut hist = vec![0; levels];
        for r in runs {
            for (h, c) in hist.iter_mut().zip(&r.selection_histogram) {
                *h += c;
            }
        }
        let report = MetricsReport {
            horizon: cfg.horizon,
            train_samples: prepared.train.len(),
            test_samples: prepared.test.len(),
            scored_mse_samples: scored,
            mse: Summary::of(&mse),
            mae: Summary::of(&mae),
            runs: runs.to_vec(),
            baselines: baselines.clone(),
            selection_histogram: hist,
            wall_clock_seconds: seconds.to_vec(),
        };
        if let Some(dir) = out {
            write(&dir.join("metrics.tsv"), &report.metrics_table())?;
            write(&dir.join("summary.json"), &report.to_json())?;
            let mut timing = String::from("seed\tseconds\n");
            for (r, s) in runs.iter().zip(seconds) {
                let _ = writeln!(timing, "{}\t{s:.3}", r.seed);
            }
            write(&dir.join("timing.tsv"), &timing)?;
        }
        Ok(report)
    };

    for &seed in seeds {
        let start = Instant::now();
        let result = (|| -> Result<SeedResult> {
            let mut run_cfg = cfg.clone();
            run_cfg.seed = seed;
            let mut model = TmgnnModel::new(cfg.model_config(), &mut Rng::new(seed))?;
            let seed_dir = out.map(|d| d.join(format!("seed_{seed}")));
            if let Some(d) = &seed_dir {
                std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
            }
            let outcome = match train(&mut model, &prepared.train, &run_cfg) {
                Ok(o) => o,
                Err(e @ Error::NonFinite { last_finite, .. }) => {
                    if let Some(d) = &seed_dir {
                        let done = last_finite.map_or(0, |e| e + 1);
                        Checkpoint::new(&run_cfg, &model, &prepared.standardizer, done)
                            .save(&d.join("last_finite.json"))?;
                    }
                    return Err(e);
                }
                Err(e) => return Err(e),
            };
            let mse = evaluate_mse(&model, &prepared.test, cfg.eval_last)?;
            let mae = evaluate_mae(&model, &prepared.test, &prepared.standardizer, cfg.horizon)?;
            let selections: Vec<SelectionRecord> = predict_all(&model, &prepared.test)?
                .into_iter()
                .zip(&prepared.test)
                .flat_map(|((_, sel), ex)| {
                    let steps = sel.len();
                    sel.into_iter().map(move |mut s| {
                        s.timestep = ex.anchor + 1 + s.timestep - steps;
                        s
                    })
                })
                .collect();
            if let Some(d) = &seed_dir {
                Checkpoint::new(&run_cfg, &model, &prepared.standardizer, cfg.epochs)
                    .save(&d.join("checkpoint.json"))?;
                let mut loss = String::from("epoch\tloss\n");
                for (e, l) in outcome.loss_history.iter().enumerate() {
                    let _ = writeln!(loss, "{}\t{l}", e + 1);
                }
                write(&d.join("loss.tsv"), &loss)?;
                write(&d.join("selections.tsv"), &selection_log_table(&selections))?;
            }
            Ok(SeedResult {
                seed,
                mse,
                mae,
                final_loss: *outcome.loss_history.last().expect("epochs >= 1"),
                selection_histogram: histogram(&selections, levels),
            })
        })();
        match result {
            Ok(r) => {
                runs.push(r);
                seconds.push(start.elapsed().as_secs_f64());
            }
            Err(e) => {
                if !runs.is_empty() {
                    finish(&runs, &seconds)?;
                }
                return Err(e);
            }
        }
    }
    finish(&runs, &seconds)
}

/// Renders the `summary.json` found in `dir`.
pub fn render_report(dir: &Path) -> Result<String> {
    let path = dir.join("summary.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let report: MetricsReport = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    let mut out = report.render();
    out.push_str("seed\tmse\tmae\tfinal_loss\n");
    for r in &report.runs {
        let _ = writeln!(out, "{}\t{:.6}\t{:.6}\t{:.6}", r.seed, r.mse, r.mae, r.final_loss);
    }
    Ok(out)
}
