use serde::{Deserialize, Serialize};

use super::config::MgnConfig;
use crate::error::{Error, Result};
use crate::graphcore::{LaplacianKind, Partition};
use crate::nn::{Linear, Mlp};
use crate::numerics::{one_hot_argmax, Activation, Bound, Noise, ParamStore, Rng, Tensor, Var};

/// How cluster assignments are drawn from the clustering logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignMode {
    /// Gumbel-softmax probabilities used directly as a soft assignment.
    Soft,
    /// One-hot Gumbel sample forward, soft-sample gradient backward.
    StraightThrough,
    /// Deterministic row argmax of the logits, no noise.
    Argmax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub mode: AssignMode,
    pub temperature: f64,
}

impl Sampling {
    pub fn new(mode: AssignMode, temperature: f64) -> Result<Self> {
        if mode != AssignMode::Argmax && !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::config(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(Sampling { mode, temperature })
    }

    pub fn eval() -> Self {
        Sampling {
            mode: AssignMode::Argmax,
            temperature: 1.0,
        }
    }
}

/// Input projection followed by `mp_layers` rounds of propagate, transform, activate.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub projection: Linear,
    pub layers: Vec<Linear>,
}

/// Message-passing layers ending in one channel per cluster.
#[derive(Debug, Clone)]
pub struct Clusterer {
    pub layers: Vec<Linear>,
}

/// Parameters owned by one level.
#[derive(Debug, Clone)]
pub struct LevelParams {
    pub encoder: Encoder,
    /// Present on every level except the coarsest.
    pub clusterer: Option<Clusterer>,
    pub pooler: Option<Mlp>,
}

/// Independent per-level parameter triples; `levels[0]` is level 1.
#[derive(Debug, Clone)]
pub struct MgnParams {
    pub levels: Vec<LevelParams>,
}

impl MgnParams {
    pub fn new(store: &mut ParamStore, prefix: &str, cfg: &MgnConfig, input_dim: usize, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.message_dim;
        let big_l = cfg.levels();
        let mut levels = Vec::with_capacity(big_l);
        for level in 1..=big_l {
            let name = format!("{prefix}.level{level}");
            let in_dim = if level == big_l { input_dim } else { d };
            let encoder = Encoder {
                projection: Linear::new(store, &format!("{name}.encoder.proj"), in_dim, d, rng),
                layers: (0..cfg.mp_layers)
                    .map(|t| Linear::new(store, &format!("{name}.encoder.mp{t}"), d, d, rng))
                    .collect(),
            };
            let (clusterer, pooler) = if level > 1 {
                let k = cfg.level_size(level - 1);
                let layers = (0..cfg.cluster_layers)
                    .map(|t| {
                        let out = if t + 1 == cfg.cluster_layers { k } else { d };
                        Linear::new(store, &format!("{name}.cluster.mp{t}"), d, out, rng)
                    })
                    .collect();
                let pooler = Mlp::new(store, &format!("{name}.pool"), [d, d, d], cfg.activation, rng);
                (Some(Clusterer { layers }), Some(pooler))
            } else {
                (None, None)
            };
            levels.push(LevelParams {
                encoder,
                clusterer,
                pooler,
            });
        }
        Ok(MgnParams { levels })
    }

    pub fn level(&self, level: usize) -> &LevelParams {
        &self.levels[level - 1]
    }
}

/// Propagation operator for an adjacency that may itself carry gradient.
pub fn propagation<'t>(adjacency: Var<'t>, kind: LaplacianKind, self_loops: bool) -> Result<Var<'t>> {
    let a = if self_loops {
        let n = adjacency.shape()[0];
        adjacency.add(adjacency.tape().constant(Tensor::identity(n)))?
    } else {
        adjacency
    };
    match kind {
        LaplacianKind::Row => a.row_normalize(),
        LaplacianKind::Symmetric => a.sym_laplacian(),
    }
}

/// `Z = H_T` with `H_0 = F W_in + b_in` and `H_t = γ(L H_{t-1} W_t + b_t)`.
pub fn encode<'t>(
    p: &Bound<'t>,
    encoder: &Encoder,
    operator: Var<'t>,
    features: Var<'t>,
    activation: Activation,
) -> Result<Var<'t>> {
    let mut h = encoder.projection.forward(p, features)?;
    for layer in &encoder.layers {
        h = layer.forward(p, operator.matmul(h)?)?.activation(activation);
    }
    Ok(h)
}

/// Clustering logits `p̃ ∈ ℝ^{n×K}`.
pub fn cluster_logits<'t>(
    p: &Bound<'t>,
    clusterer: &Clusterer,
    operator: Var<'t>,
    latents: Var<'t>,
    activation: Activation,
) -> Result<Var<'t>> {
    let mut x = latents;
    let last = clusterer.layers.len() - 1;
    for (t, layer) in clusterer.layers.iter().enumerate() {
        x = layer.forward(p, operator.matmul(x)?)?;
        if t < last {
            x = x.activation(activation);
        }
    }
    Ok(x)
}

/// Result of assigning nodes to clusters.
pub struct Assignment<'t> {
    /// `n×K` matrix used downstream: soft probabilities, straight-through
    /// one-hot, or constant one-hot.
    pub matrix: Var<'t>,
    /// Row argmax of `matrix`.
    pub partition: Partition,
    /// Gumbel-softmax probabilities (the argmax one-hot in argmax mode).
    pub soft: Tensor,
}

/// Turns logits into an assignment according to `sampling`.
pub fn assign<'t>(logits: Var<'t>, sampling: Sampling, noise: &mut Noise<'_>) -> Result<Assignment<'t>> {
    let [n, k] = logits.shape();
    if k == 0 {
        return Err(Error::config("cluster count must be positive"));
    }
    let tape = logits.tape();
    let (matrix, soft) = match sampling.mode {
        AssignMode::Argmax => {
            let hot = one_hot_argmax(&logits.value_ref());
            (tape.constant(hot.clone()), hot)
        }
        AssignMode::Soft | AssignMode::StraightThrough => {
            let g = noise.draw(n, k)?;
            let hard = sampling.mode == AssignMode::StraightThrough;
            let y = crate::numerics::gumbel_softmax_with_noise(logits, &g, sampling.temperature, false)?;
            let soft = y.value();
            if hard {
                (Var::straight_through(one_hot_argmax(&soft), y)?, soft)
            } else {
                (y, soft)
            }
        }
    };
    let values = matrix.value_ref();
    let partition = Partition::new(k, (0..n).map(|i| values.argmax_row(i)).collect())?;
    drop(values);
    Ok(Assignment {
        matrix,
        partition,
        soft,
    })
}

/// Sums member latents per cluster (`Πᵀ Z`), applies the perceptron, and
/// zeroes clusters that received no mass.
pub fn pool<'t>(p: &Bound<'t>, pooler: &Mlp, assignment: Var<'t>, latents: Var<'t>) -> Result<Var<'t>> {
    let sums = assignment.transpose().matmul(latents)?;
    let out = pooler.forward(p, sums)?;
    let mask = {
        let pi = assignment.value_ref();
        let [k, d] = out.shape();
        let mut mask = Tensor::zeros(k, d);
        for c in 0..k {
            let mass: f64 = (0..pi.rows()).map(|i| pi.get(i, c)).sum();
            if mass != 0.0 {
                for j in 0..d {
                    mask.set(c, j, 1.0);
                }
            }
        }
        mask
    };
    out.mul(out.tape().constant(mask))
}

/// Pools with a fixed hard partition.
pub fn pool_partition<'t>(p: &Bound<'t>, pooler: &Mlp, partition: &Partition, latents: Var<'t>) -> Result<Var<'t>> {
    if partition.n() != latents.shape()[0] {
        return Err(Error::contract(format!(
            "partition covers {} rows, latents have {}",
            partition.n(),
            latents.shape()[0]
        )));
    }
    let pi = latents.tape().constant(partition.assignment_matrix().into_inner());
    pool(p, pooler, pi, latents)
}

/// Coarse adjacency `Πᵀ A Π` with its diagonal halved, differentiable in both
/// arguments. With a one-hot `Π` this is the coarsening of the partition.
pub fn coarse_adjacency<'t>(assignment: Var<'t>, adjacency: Var<'t>) -> Result<Var<'t>> {
    let q = assignment.transpose().matmul(adjacency)?.matmul(assignment)?;
    let k = q.shape()[0];
    let halve = Tensor::from_fn(k, k, |i, j| if i == j { 0.5 } else { 1.0 });
    q.mul(q.tape().constant(halve))
}

/// Column means: a permutation-invariant summary of `Z`.
pub fn readout<'t>(latents: Var<'t>) -> Var<'t> {
    latents.mean_over_rows()
}

pub fn readout_values(latents: &Tensor) -> Tensor {
    Tensor::from_fn(1, latents.cols(), |_, j| {
        (0..latents.rows()).map(|i| latents.get(i, j)).sum::<f64>() / latents.rows() as f64
    })
}
