use serde::{Deserialize, Serialize};

use super::cell::{step, CellKind, RecurrentParams, RecurrentState};
use crate::error::{Error, Result};
use crate::graphcore::Graph;
use crate::mgn::{build_hierarchy, MgnConfig, MgnParams, Sampling};
use crate::nn::Mlp;
use crate::numerics::{Bound, Noise, ParamStore, Rng, Tape, Tensor, Var};
use crate::resattn::{select_resolution, AttentionConfig, AttentionParams, SelectionRecord};

/// Everything needed to rebuild a model's parameter layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TmgnnConfig {
    pub mgn: MgnConfig,
    pub attention: AttentionConfig,
    pub cell: CellKind,
    pub hidden_dim: usize,
    /// Features per node at each timestep.
    pub input_dim: usize,
    /// Outputs per node (one per forecast day).
    pub outputs: usize,
}

impl TmgnnConfig {
    /// `d_h = d_k = d_v = d_z`.
    pub fn new(mgn: MgnConfig, heads: usize, cell: CellKind, input_dim: usize, outputs: usize) -> Self {
        let d = mgn.message_dim;
        TmgnnConfig {
            attention: AttentionConfig::new(heads, d),
            mgn,
            cell,
            hidden_dim: d,
            input_dim,
            outputs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mgn.validate()?;
        self.attention.validate()?;
        if self.hidden_dim == 0 || self.input_dim == 0 || self.outputs == 0 {
            return Err(Error::config("hidden_dim, input_dim and outputs must be positive"));
        }
        Ok(())
    }
}

/// Parameter record as stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

/// MGN and attention shared across timesteps, one recurrent cell, and a
/// per-node head over `[bottom latent ⊕ final hidden state]`.
#[derive(Debug, Clone)]
pub struct TmgnnModel {
    pub cfg: TmgnnConfig,
    pub store: ParamStore,
    pub mgn: MgnParams,
    pub attention: AttentionParams,
    pub recurrent: RecurrentParams,
    pub head: Mlp,
}

impl TmgnnModel {
    pub fn new(cfg: TmgnnConfig, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        let mut store = ParamStore::new();
        let d = cfg.mgn.message_dim;
        let mgn = MgnParams::new(&mut store, "mgn", &cfg.mgn, cfg.input_dim, rng)?;
        let attention = AttentionParams::new(&mut store, "attn", cfg.attention, d, rng)?;
        let recurrent = RecurrentParams::new(&mut store, "rnn", cfg.cell, d, cfg.hidden_dim, rng)?;
        let head = Mlp::new(
            &mut store,
            "head",
            [d + cfg.hidden_dim, d, cfg.outputs],
            cfg.mgn.activation,
            rng,
        );
        Ok(TmgnnModel {
            cfg,
            store,
            mgn,
            attention,
            recurrent,
            head,
        })
    }

    pub fn export_params(&self) -> Vec<ParamRecord> {
        self.store
            .iter()
            .map(|(name, t)| ParamRecord {
                name: name.to_string(),
                shape: t.shape(),
                values: t.data().to_vec(),
            })
            .collect()
    }

    /// Rebuilds a model from its config and a full set of records.
    pub fn from_params(cfg: TmgnnConfig, records: &[ParamRecord]) -> Result<Self> {
        let mut model = TmgnnModel::new(cfg, &mut Rng::new(0))?;
        let tensors = records
            .iter()
            .map(|r| Ok((r.name.as_str(), Tensor::new(r.shape[0], r.shape[1], r.values.clone())?)))
            .collect::<Result<Vec<_>>>()?;
        model.store.load_from(tensors)?;
        Ok(model)
    }

    /// Eval-mode predictions (`n × outputs`) and selections.
    pub fn predict(&self, graphs: &[Graph]) -> Result<(Tensor, Vec<SelectionRecord>)> {
        let tape = Tape::new();
        let p = self.store.bind(&tape);
        let out = tmgnn_forward(&p, self, graphs, Sampling::eval(), &mut Noise::zero())?;
        Ok((out.predictions.value(), out.selections))
    }
}

pub struct Forward<'t> {
    /// `n × outputs`
    pub predictions: Var<'t>,
    pub selections: Vec<SelectionRecord>,
    /// Per-timestep `L × d_z` readout stacks.
    pub stacks: Vec<Tensor>,
}

/// Runs MGN, resolution selection and the recurrent cell over each graph in
/// order, then applies the head to every node of the last timestep.
pub fn tmgnn_forward<'t>(
    p: &Bound<'t>,
    model: &TmgnnModel,
    graphs: &[Graph],
    sampling: Sampling,
    noise: &mut Noise<'_>,
) -> Result<Forward<'t>> {
    let Some(first) = graphs.first() else {
        return Err(Error::data("empty graph sequence"));
    };
    let n = first.n();
    if let Some((t, g)) = graphs.iter().enumerate().find(|(_, g)| g.n() != n) {
        return Err(Error::data(format!("timestep {t} has {} nodes, expected {n}", g.n())));
    }
    let tape = p.tape();
    let mut state = RecurrentState::zero(tape, &model.recurrent);
    let mut selections = Vec::with_capacity(graphs.len());
    let mut stacks = Vec::with_capacity(graphs.len());
    let mut bottom = None;
    for (t, g) in graphs.iter().enumerate() {
        let hierarchy = build_hierarchy(p, &model.mgn, &model.cfg.mgn, g, sampling, noise)?;
        let stack = hierarchy.readout_stack()?;
        let sel = select_resolution(p, stack, &model.attention, sampling, noise)?;
        state = step(p, sel.vector, &state, &model.recurrent)?;
        selections.push(SelectionRecord {
            timestep: t,
            level: sel.selected + 1,
            probabilities: sel.probabilities,
        });
        stacks.push(stack.value());
        bottom = Some(hierarchy.bottom_latents());
    }
    let latents = bottom.expect("non-empty sequence");
    let hidden = state.h.broadcast_rows(n)?;
    let predictions = model.head.forward(p, Var::concat_cols(&[latents, hidden])?)?;
    Ok(Forward {
        predictions,
        selections,
        stacks,
    })
}
