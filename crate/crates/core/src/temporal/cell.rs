use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Bound, ParamId, ParamStore, Rng, Tape, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    #[default]
    Lstm,
    Gru,
}

/// Pre-activation `x W + h U + b` of one gate.
#[derive(Debug, Clone)]
pub struct Gate {
    /// `d_in × d_h`
    pub input: ParamId,
    /// `d_h × d_h`
    pub recurrent: ParamId,
    /// `1 × d_h`
    pub bias: ParamId,
}

impl Gate {
    fn new(store: &mut ParamStore, name: &str, d_in: usize, d_h: usize, rng: &mut Rng) -> Self {
        Gate {
            input: store.add_uniform(format!("{name}.w"), d_in, d_h, d_h, rng),
            recurrent: store.add_uniform(format!("{name}.u"), d_h, d_h, d_h, rng),
            bias: store.add_uniform(format!("{name}.b"), 1, d_h, d_h, rng),
        }
    }

    fn pre<'t>(&self, p: &Bound<'t>, x: Var<'t>, h: Var<'t>) -> Result<Var<'t>> {
        x.matmul(p.var(self.input))?
            .add(h.matmul(p.var(self.recurrent))?)?
            .add_row(p.var(self.bias))
    }
}

/// Gates in order: LSTM `input, forget, output, candidate`; GRU `update, reset, candidate`.
#[derive(Debug, Clone)]
pub struct RecurrentParams {
    pub kind: CellKind,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub gates: Vec<Gate>,
}

impl RecurrentParams {
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        kind: CellKind,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(Error::config("recurrent dims must be positive"));
        }
        let names: &[&str] = match kind {
            CellKind::Lstm => &["input", "forget", "output", "candidate"],
            CellKind::Gru => &["update", "reset", "candidate"],
        };
        let gates = names
            .iter()
            .map(|g| Gate::new(store, &format!("{prefix}.{g}"), input_dim, hidden_dim, rng))
            .collect();
        Ok(RecurrentParams {
            kind,
            input_dim,
            hidden_dim,
            gates,
        })
    }

    fn check(&self, kind: CellKind, x: Var<'_>, state: &RecurrentState<'_>) -> Result<()> {
        if self.kind != kind {
            return Err(Error::contract(format!(
                "{:?} parameters used in a {kind:?} cell",
                self.kind
            )));
        }
        if x.shape() != [1, self.input_dim] || state.h.shape() != [1, self.hidden_dim] {
            return Err(Error::contract(format!(
                "cell expects input 1x{} and hidden 1x{}, got {:?} and {:?}",
                self.input_dim,
                self.hidden_dim,
                x.shape(),
                state.h.shape()
            )));
        }
        if kind == CellKind::Lstm && state.c.map(|c| c.shape()) != Some([1, self.hidden_dim]) {
            return Err(Error::contract("LSTM state needs a 1 x d_h cell vector"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
pub struct RecurrentState<'t> {
    pub h: Var<'t>,
    /// LSTM only.
    pub c: Option<Var<'t>>,
}

impl<'t> RecurrentState<'t> {
    pub fn zero(tape: &'t Tape, params: &RecurrentParams) -> Self {
        let d = params.hidden_dim;
        RecurrentState {
            h: tape.constant(Tensor::zeros(1, d)),
            c: (params.kind == CellKind::Lstm).then(|| tape.constant(Tensor::zeros(1, d))),
        }
    }
}

/// `c' = f∘c + i∘g`, `h' = o∘tanh(c')`.
pub fn lstm_cell<'t>(
    p: &Bound<'t>,
    x: Var<'t>,
    state: &RecurrentState<'t>,
    params: &RecurrentParams,
) -> Result<RecurrentState<'t>> {
    params.check(CellKind::Lstm, x, state)?;
    let [gi, gf, go, gg] = &params.gates[..] else {
        return Err(Error::contract("LSTM needs four gates"));
    };
    let i = gi.pre(p, x, state.h)?.sigmoid();
    let f = gf.pre(p, x, state.h)?.sigmoid();
    let o = go.pre(p, x, state.h)?.sigmoid();
    let g = gg.pre(p, x, state.h)?.tanh();
    let c_prev = state.c.expect("checked");
    let c = f.mul(c_prev)?.add(i.mul(g)?)?;
    let h = o.mul(c.tanh())?;
    Ok(RecurrentState { h, c: Some(c) })
}

/// `h' = (1 − z)∘n + z∘h` with `n = tanh(x W_n + (r∘h) U_n + b_n)`.
pub fn gru_cell<'t>(
    p: &Bound<'t>,
    x: Var<'t>,
    state: &RecurrentState<'t>,
    params: &RecurrentParams,
) -> Result<RecurrentState<'t>> {
    params.check(CellKind::Gru, x, state)?;
    let [gz, gr, gn] = &params.gates[..] else {
        return Err(Error::contract("GRU needs three gates"));
    };
    let h = state.h;
    let z = gz.pre(p, x, h)?.sigmoid();
    let r = gr.pre(p, x, h)?.sigmoid();
    let n = x
        .matmul(p.var(gn.input))?
        .add(r.mul(h)?.matmul(p.var(gn.recurrent))?)?
        .add_row(p.var(gn.bias))?
        .tanh();
    let ones = p.tape().constant(Tensor::ones(1, params.hidden_dim));
    let h = ones.sub(z)?.mul(n)?.add(z.mul(h)?)?;
    Ok(RecurrentState { h, c: None })
}

pub fn step<'t>(
    p: &Bound<'t>,
    x: Var<'t>,
    state: &RecurrentState<'t>,
    params: &RecurrentParams,
) -> Result<RecurrentState<'t>> {
    match params.kind {
        CellKind::Lstm => lstm_cell(p, x, state, params),
        CellKind::Gru => gru_cell(p, x, state, params),
    }
}
