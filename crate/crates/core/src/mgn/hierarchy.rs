use super::config::MgnConfig;
use super::network::{
    assign, cluster_logits, coarse_adjacency, encode, pool, propagation, readout, AssignMode, MgnParams, Sampling,
};
use crate::error::{Error, Result};
use crate::graphcore::{coarsen, Graph, Partition};
use crate::jsonfmt::ObjectWriter;
use crate::nn::Mlp;
use crate::numerics::{Activation, Bound, Noise, ParamStore, Rng, Tensor, Var};

/// One level of a hierarchy as recorded on a tape.
pub struct LevelVars<'t> {
    pub adjacency: Var<'t>,
    /// Encoder output `Z^(ℓ)`.
    pub latents: Var<'t>,
    /// Partition of this level into the next coarser one (absent at level 1).
    pub partition: Option<Partition>,
    pub soft_assignment: Option<Tensor>,
}

/// Differentiable hierarchy; `levels[0]` is level 1 (coarsest).
pub struct HierarchyVars<'t> {
    pub levels: Vec<LevelVars<'t>>,
}

impl<'t> HierarchyVars<'t> {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Finest-level node latents.
    pub fn bottom_latents(&self) -> Var<'t> {
        self.levels.last().expect("non-empty hierarchy").latents
    }

    /// `L×d_z` stack of per-level readouts, row `ℓ-1` for level `ℓ`.
    pub fn readout_stack(&self) -> Result<Var<'t>> {
        let rows: Vec<Var<'t>> = self.levels.iter().map(|l| readout(l.latents)).collect();
        Var::concat_rows(&rows)
    }

    pub fn record(&self) -> ResolutionHierarchy {
        ResolutionHierarchy {
            adjacency: self.levels.iter().map(|l| l.adjacency.value()).collect(),
            latents: self.levels.iter().map(|l| l.latents.value()).collect(),
            partitions: self.levels.iter().map(|l| l.partition.clone()).collect(),
        }
    }
}

/// Runs encode → cluster → coarsen → pool from the input graph (level L)
/// up to level 1.
///
/// In argmax mode the coarse adjacency is the plain coarsening of the chosen
/// partition and carries no gradient; otherwise it is built from the
/// assignment matrix so gradient reaches the clustering network.
pub fn build_hierarchy<'t>(
    p: &Bound<'t>,
    params: &MgnParams,
    cfg: &MgnConfig,
    g: &Graph,
    sampling: Sampling,
    noise: &mut Noise<'_>,
) -> Result<HierarchyVars<'t>> {
    let tape = p.tape();
    cfg.validate_for(g.n())?;
    if params.levels.len() != cfg.levels() {
        return Err(Error::config(format!(
            "parameters cover {} levels, config has {}",
            params.levels.len(),
            cfg.levels()
        )));
    }
    let mut adjacency = tape.constant(g.adjacency().clone());
    let mut features = tape.constant(g.features().clone());
    let mut levels = Vec::with_capacity(cfg.levels());
    for level in (1..=cfg.levels()).rev() {
        let lp = params.level(level);
        let operator = propagation(adjacency, cfg.laplacian, cfg.self_loops)?;
        let latents = encode(p, &lp.encoder, operator, features, cfg.activation)?;
        let (Some(clusterer), Some(pooler)) = (&lp.clusterer, &lp.pooler) else {
            levels.push(LevelVars {
                adjacency,
                latents,
                partition: None,
                soft_assignment: None,
            });
            break;
        };
        let logits = cluster_logits(p, clusterer, operator, latents, cfg.activation)?;
        let a = assign(logits, sampling, noise)?;
        let pooled = pool(p, pooler, a.matrix, latents)?;
        let next_adjacency = if sampling.mode == AssignMode::Argmax {
            let current = Graph::with_self_loops(adjacency.value(), Tensor::zeros(a.partition.n(), 1))?;
            tape.constant(coarsen(&current, &a.partition)?.adjacency().clone())
        } else {
            coarse_adjacency(a.matrix, adjacency)?
        };
        levels.push(LevelVars {
            adjacency,
            latents,
            partition: Some(a.partition),
            soft_assignment: Some(a.soft),
        });
        adjacency = next_adjacency;
        features = pooled;
    }
    levels.reverse();
    Ok(HierarchyVars { levels })
}

/// Plain values of a built hierarchy; index 0 is level 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionHierarchy {
    pub adjacency: Vec<Tensor>,
    pub latents: Vec<Tensor>,
    pub partitions: Vec<Option<Partition>>,
}

impl ResolutionHierarchy {
    pub fn level_sizes(&self) -> Vec<usize> {
        self.adjacency.iter().map(Tensor::rows).collect()
    }

    /// Structured text dump: node counts, partitions (1-based) and coarse
    /// adjacencies per level.
    pub fn to_dump_string(&self, timestep: Option<usize>) -> String {
        let mut w = ObjectWriter::new();
        if let Some(t) = timestep {
            w.field("timestep", &t);
        }
        self.write_dump(&mut w);
        w.finish()
    }

    pub(crate) fn write_dump(&self, w: &mut ObjectWriter) {
        w.field("levels", &self.adjacency.len());
        w.field("level_sizes", &self.level_sizes());
        w.rows(
            "partitions",
            self.partitions.iter().enumerate().filter_map(|(i, p)| {
                p.as_ref().map(|p| {
                    serde_json::json!({
                        "level": i + 1,
                        "clusters": p.k(),
                        "assignment": p.one_based(),
                        "cluster_sizes": p.sizes(),
                    })
                })
            }),
        );
        w.rows(
            "adjacency",
            self.adjacency.iter().enumerate().map(|(i, a)| {
                let rows: Vec<&[f64]> = (0..a.rows()).map(|r| a.row(r)).collect();
                serde_json::json!({ "level": i + 1, "matrix": rows })
            }),
        );
    }
}

/// Graph-level regressor: an MLP over the concatenated per-level readouts.
#[derive(Debug, Clone)]
pub struct MgnRegressor {
    pub cfg: MgnConfig,
    pub mgn: MgnParams,
    pub head: Mlp,
}

impl MgnRegressor {
    pub fn new(store: &mut ParamStore, cfg: MgnConfig, input_dim: usize, rng: &mut Rng) -> Result<Self> {
        let mgn = MgnParams::new(store, "mgn", &cfg, input_dim, rng)?;
        let d = cfg.message_dim;
        let head = Mlp::new(store, "mgn.head", [cfg.levels() * d, d, 1], Activation::Tanh, rng);
        Ok(MgnRegressor { cfg, mgn, head })
    }

    pub fn predict<'t>(&self, p: &Bound<'t>, hierarchy: &HierarchyVars<'t>) -> Result<Var<'t>> {
        let readouts: Vec<Var<'t>> = hierarchy.levels.iter().map(|l| readout(l.latents)).collect();
        self.head.forward(p, Var::concat_cols(&readouts)?)
    }
}

/// `‖f(⊕_ℓ R(Z^(ℓ))) − y‖²`.
pub fn mgn_regression_loss<'t>(
    p: &Bound<'t>,
    model: &MgnRegressor,
    hierarchy: &HierarchyVars<'t>,
    target: f64,
) -> Result<Var<'t>> {
    let pred = model.predict(p, hierarchy)?;
    let y = p.tape().constant(Tensor::scalar(target));
    Ok(pred.sub(y)?.square())
}
