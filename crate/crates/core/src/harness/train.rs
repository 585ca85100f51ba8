use super::config::{LossKind, TrainConfig};
use crate::data::{make_windows, split, Standardizer, TemporalGraphDataset};
use crate::error::{Error, Result};
use crate::graphcore::Graph;
use crate::numerics::{AdamState, Noise, Rng, Tape, Tensor, Var};
use crate::temporal::{tmgnn_forward, TmgnnModel};

/// One windowed sample turned into model inputs.
#[derive(Debug, Clone)]
pub struct Example {
    pub anchor: usize,
    /// One graph per recurrent step, features = standardized lags.
    pub graphs: Vec<Graph>,
    /// `n × horizon`, standardized.
    pub target: Tensor,
    /// `n × horizon`, raw counts.
    pub raw_target: Tensor,
}

/// Dataset split into model-ready train and test examples.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub standardizer: Standardizer,
    pub train: Vec<Example>,
    pub test: Vec<Example>,
}

/// Windows the series, splits chronologically, fits per-node statistics
/// on the timesteps the training samples read, and builds the graphs.
pub fn prepare(ds: &TemporalGraphDataset, cfg: &TrainConfig) -> Result<Prepared> {
    cfg.validate()?;
    cfg.mgn.validate_for(ds.n())?;
    let spec = cfg.window();
    let raw = split(make_windows(&ds.cases, spec)?, cfg.split_spec(), spec.horizon)?;
    let train_end = raw
        .train_end(spec.horizon)
        .ok_or_else(|| Error::data("training split is empty"))?;
    let standardizer = Standardizer::fit(&ds.cases, train_end + 1)?;
    let z = standardizer.transform(&ds.cases);
    let scaled = make_windows(&z, spec)?;
    let first = scaled[0].anchor;
    let build = |samples: &[crate::data::WindowedSample]| -> Result<Vec<Example>> {
        samples
            .iter()
            .map(|raw_sample| {
                let s = &scaled[raw_sample.anchor - first];
                // Topology of the anchor timestep for every step of the sample.
                let graphs = (0..spec.seq_len)
                    .map(|k| ds.graph_at(s.anchor, s.step_features(k, spec.lags)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Example {
                    anchor: s.anchor,
                    graphs,
                    target: s.target.clone(),
                    raw_target: raw_sample.target.clone(),
                })
            })
            .collect()
    };
    Ok(Prepared {
        train: build(&raw.train)?,
        test: build(&raw.test)?,
        standardizer,
    })
}

pub fn loss_between<'t>(pred: Var<'t>, target: &Tensor, kind: LossKind) -> Result<Var<'t>> {
    let diff = pred.sub(pred.tape().constant(target.clone()))?;
    Ok(match kind {
        LossKind::Mse => diff.square().mean(),
        LossKind::Mae => diff.abs().mean(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Mean training loss per epoch, measured during the epoch's pass.
    pub loss_history: Vec<f64>,
}

/// Adam over the examples for `cfg.epochs` epochs.
///
/// On a non-finite loss the parameters are rolled back to the end of the
/// last finite epoch and `Error::NonFinite` is returned.
pub fn train(model: &mut TmgnnModel, examples: &[Example], cfg: &TrainConfig) -> Result<TrainOutcome> {
    if examples.is_empty() {
        return Err(Error::contract("no training examples"));
    }
    let sampling = cfg.sampling()?;
    let mut adam = AdamState::new(&model.store, cfg.learning_rate);
    let mut rng = Rng::stream(cfg.seed, 1);
    let batch = if cfg.batch_size == 0 {
        examples.len()
    } else {
        cfg.batch_size
    };
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut snapshot = model.store.clone();
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..examples.len()).collect();
        if batch < examples.len() {
            order = rng.permutation(examples.len());
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let mut grads: Option<Vec<Tensor>> = None;
            for &i in chunk {
                let ex = &examples[i];
                let tape = Tape::new();
                let p = model.store.bind(&tape);
                let out = tmgnn_forward(&p, model, &ex.graphs, sampling, &mut Noise::sample(&mut rng))?;
                let loss = loss_between(out.predictions, &ex.target, cfg.loss)?.scale(1.0 / chunk.len() as f64);
                epoch_loss += loss.item() * chunk.len() as f64;
                let g = p.gradients(&tape.backward(loss)?);
                grads = Some(match grads {
                    None => g,
                    Some(acc) => acc.iter().zip(&g).map(|(a, b)| a.add(b)).collect::<Result<_>>()?,
                });
            }
            let grads = grads.expect("non-empty chunk");
            if !epoch_loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                model.store = snapshot;
                return Err(Error::NonFinite {
                    epoch,
                    last_finite: epoch.checked_sub(1),
                });
            }
            adam.step(&mut model.store, &grads)?;
        }
        let mean = epoch_loss / examples.len() as f64;
        if !model.store.iter().all(|(_, t)| t.is_finite()) {
            model.store = snapshot;
            return Err(Error::NonFinite {
                epoch,
                last_finite: epoch.checked_sub(1),
            });
        }
        history.push(mean);
        snapshot = model.store.clone();
    }
    Ok(TrainOutcome { loss_history: history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic_chickenpox;
    use crate::mgn::MgnConfig;
    use crate::numerics::Rng;

    fn tiny_cfg() -> TrainConfig {
        let mut cfg = TrainConfig::chickenpox("d".into(), "o".into());
        cfg.mgn = MgnConfig::new(vec![1, 4, 20], 6, 1);
        cfg.mgn.self_loops = true;
        cfg.lags = 4;
        cfg.epochs = 2;
        cfg.heads = 1;
        cfg
    }

    fn small_dataset() -> TemporalGraphDataset {
        let mut ds = synthetic_chickenpox(3).unwrap();
        ds.cases = Tensor::from_fn(60, 20, |t, v| ds.cases.get(t, v));
        ds
    }

    #[test]
    fn prepare_layout() {
        let ds = small_dataset();
        let cfg = tiny_cfg();
        let p = prepare(&ds, &cfg).unwrap();
        // 60 - 4 - 1 + 1 = 56 windows, 44 train.
        assert_eq!((p.train.len(), p.test.len()), (44, 12));
        let ex = &p.test[0];
        assert_eq!(ex.graphs.len(), 1);
        assert_eq!(ex.graphs[0].features().shape(), [20, 4]);
        for v in 0..20 {
            let z = p.standardizer.value(v, ds.cases.get(ex.anchor + 1, v));
            assert!((ex.target.get(v, 0) - z).abs() < 1e-12);
            assert_eq!(ex.raw_target.get(v, 0), ds.cases.get(ex.anchor + 1, v));
        }
        let last_train = p.train.last().unwrap().anchor;
        assert!(p.test.iter().all(|e| e.anchor > last_train));
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let ds = small_dataset();
        let mut cfg = tiny_cfg();
        cfg.learning_rate = 0.0;
        let p = prepare(&ds, &cfg).unwrap();
        let mut model = TmgnnModel::new(cfg.model_config(), &mut Rng::new(1)).unwrap();
        let before = model.store.clone();
        train(&mut model, &p.train[..5], &cfg).unwrap();
        assert_eq!(model.store, before);
    }

    #[test]
    fn same_seed_same_history() {
        let ds = small_dataset();
        let mut cfg = tiny_cfg();
        cfg.batch_size = 8;
        let p = prepare(&ds, &cfg).unwrap();
        let run = || {
            let mut model = TmgnnModel::new(cfg.model_config(), &mut Rng::new(cfg.seed)).unwrap();
            let h = train(&mut model, &p.train, &cfg).unwrap().loss_history;
            (h, model.export_params())
        };
        let (a, pa) = run();
        let (b, pb) = run();
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(pa, pb);
        assert!(a.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn memorizes_a_single_sample() {
        let ds = small_dataset();
        let mut cfg = tiny_cfg();
        cfg.epochs = 150;
        cfg.learning_rate = 0.01;
        let p = prepare(&ds, &cfg).unwrap();
        let mut model = TmgnnModel::new(cfg.model_config(), &mut Rng::new(2)).unwrap();
        let h = train(&mut model, &p.train[..1], &cfg).unwrap().loss_history;
        assert!(h[149] < 0.1 * h[0], "{} -> {}", h[0], h[149]);
    }

    #[test]
    fn nan_aborts_and_rolls_back() {
        let ds = small_dataset();
        let cfg = tiny_cfg();
        let mut p = prepare(&ds, &cfg).unwrap();
        p.train[0].target.set(0, 0, f64::NAN);
        let mut model = TmgnnModel::new(cfg.model_config(), &mut Rng::new(3)).unwrap();
        let before = model.store.clone();
        match train(&mut model, &p.train[..2], &cfg) {
            Err(Error::NonFinite {
                epoch: 0,
                last_finite: None,
            }) => {}
            other => panic!("{other:?}"),
        }
        assert_eq!(model.store, before);
    }
}
