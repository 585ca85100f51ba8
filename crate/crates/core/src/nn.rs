//! Small parameterised layers shared by the network modules.

use crate::error::Result;
use crate::numerics::{Activation, Bound, ParamId, ParamStore, Rng, Tensor, Var};

/// `x W + b` with `W: in×out`, `b: 1×out`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        Linear {
            weight: store.add_uniform(format!("{name}.w"), inputs, outputs, inputs, rng),
            bias: store.add_uniform(format!("{name}.b"), 1, outputs, inputs, rng),
        }
    }

    pub fn forward<'t>(&self, p: &Bound<'t>, x: Var<'t>) -> Result<Var<'t>> {
        x.matmul(p.var(self.weight))?.add_row(p.var(self.bias))
    }

    pub fn set_identity(&self, store: &mut ParamStore) {
        let w = store.get(self.weight);
        let eye = Tensor::from_fn(w.rows(), w.cols(), |i, j| if i == j { 1.0 } else { 0.0 });
        *store.get_mut(self.weight) = eye;
        let b = store.get(self.bias).shape();
        *store.get_mut(self.bias) = Tensor::zeros(b[0], b[1]);
    }
}

/// Two-layer perceptron `act(x W1 + b1) W2 + b2`.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub hidden: Linear,
    pub output: Linear,
    pub activation: Activation,
}

impl Mlp {
    pub fn new(store: &mut ParamStore, name: &str, dims: [usize; 3], activation: Activation, rng: &mut Rng) -> Self {
        Mlp {
            hidden: Linear::new(store, &format!("{name}.hidden"), dims[0], dims[1], rng),
            output: Linear::new(store, &format!("{name}.out"), dims[1], dims[2], rng),
            activation,
        }
    }

    pub fn forward<'t>(&self, p: &Bound<'t>, x: Var<'t>) -> Result<Var<'t>> {
        let h = self.hidden.forward(p, x)?.activation(self.activation);
        self.output.forward(p, h)
    }
}
