//! Self-attention across the per-level graph representations and one-hot
//! selection of a single resolution per timestep.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mgn::{AssignMode, Sampling};
use crate::numerics::{
    gumbel_softmax_with_noise, one_hot_argmax, softmax_rows, Bound, Noise, ParamId, ParamStore, Rng, Tensor, Var,
};

/// How the multi-head output is reduced to one logit per resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Contraction {
    /// Mean over the head-expanded features, then a learned scalar affine map.
    #[default]
    Mean,
    /// Learned linear projection of each row to a scalar.
    Projection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttentionConfig {
    pub heads: usize,
    pub key_dim: usize,
    pub value_dim: usize,
    #[serde(default)]
    pub contraction: Contraction,
}

impl AttentionConfig {
    /// `d_k = d_v = d_z`.
    pub fn new(heads: usize, d_z: usize) -> Self {
        AttentionConfig {
            heads,
            key_dim: d_z,
            value_dim: d_z,
            contraction: Contraction::Mean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.heads == 0 || self.key_dim == 0 || self.value_dim == 0 {
            return Err(Error::config("attention heads and dims must be positive"));
        }
        Ok(())
    }
}

/// Projections of one head, stored so that `Q = Z · query` (the transpose of
/// the usual `W_Q`).
#[derive(Debug, Clone)]
pub struct HeadParams {
    pub query: ParamId,
    pub key: ParamId,
    pub value: ParamId,
}

#[derive(Debug, Clone)]
pub struct AttentionParams {
    pub cfg: AttentionConfig,
    pub heads: Vec<HeadParams>,
    /// `h·d_v × h·d_v`
    pub output: ParamId,
    pub logit_weight: ParamId,
    pub logit_bias: ParamId,
}

impl AttentionParams {
    pub fn new(store: &mut ParamStore, prefix: &str, cfg: AttentionConfig, d_z: usize, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        let heads = (0..cfg.heads)
            .map(|h| HeadParams {
                query: store.add_uniform(format!("{prefix}.head{h}.q"), d_z, cfg.key_dim, d_z, rng),
                key: store.add_uniform(format!("{prefix}.head{h}.k"), d_z, cfg.key_dim, d_z, rng),
                value: store.add_uniform(format!("{prefix}.head{h}.v"), d_z, cfg.value_dim, d_z, rng),
            })
            .collect();
        let width = cfg.heads * cfg.value_dim;
        let output = store.add_uniform(format!("{prefix}.out"), width, width, width, rng);
        let logit_rows = match cfg.contraction {
            Contraction::Mean => 1,
            Contraction::Projection => width,
        };
        let logit_weight = store.add_uniform(format!("{prefix}.logit.w"), logit_rows, 1, logit_rows, rng);
        let logit_bias = store.add(format!("{prefix}.logit.b"), Tensor::zeros(1, 1));
        Ok(AttentionParams {
            cfg,
            heads,
            output,
            logit_weight,
            logit_bias,
        })
    }
}

/// One head's output `X = softmax(QKᵀ/√d_k) V` and its attention matrix.
pub fn self_attention<'t>(p: &Bound<'t>, stack: Var<'t>, head: &HeadParams) -> Result<(Var<'t>, Var<'t>)> {
    let q = stack.matmul(p.var(head.query))?;
    let k = stack.matmul(p.var(head.key))?;
    let v = stack.matmul(p.var(head.value))?;
    let d_k = q.shape()[1] as f64;
    let scores = q.matmul(k.transpose())?.scale(1.0 / d_k.sqrt());
    let attn = scores.softmax_rows();
    Ok((attn.matmul(v)?, attn))
}

/// `Concat(X_1..X_h) W_O`, shape `L × h·d_v`.
pub fn multi_head<'t>(p: &Bound<'t>, stack: Var<'t>, params: &AttentionParams) -> Result<Var<'t>> {
    let outs = params
        .heads
        .iter()
        .map(|h| self_attention(p, stack, h).map(|(x, _)| x))
        .collect::<Result<Vec<_>>>()?;
    Var::concat_cols(&outs)?.matmul(p.var(params.output))
}

/// Reduces the multi-head output to an `L×1` column of logits.
pub fn resolution_logits<'t>(p: &Bound<'t>, multi: Var<'t>, params: &AttentionParams) -> Result<Var<'t>> {
    let reduced = match params.cfg.contraction {
        Contraction::Mean => multi.mean_over_cols(),
        Contraction::Projection => multi,
    };
    reduced
        .matmul(p.var(params.logit_weight))?
        .add_row(p.var(params.logit_bias))
}

/// Outcome of choosing one resolution.
pub struct Selection<'t> {
    /// `1×L` weights: one-hot (straight-through in training) or soft.
    pub weights: Var<'t>,
    /// Weighted combination of the stacked readouts, `1×d_z`.
    pub vector: Var<'t>,
    /// 0-based index of the chosen level (level `selected + 1`).
    pub selected: usize,
    /// Noise-free softmax of the logits.
    pub probabilities: Vec<f64>,
}

/// Selects one row of `stack` from `1×L` logits.
pub fn select_from_logits<'t>(
    logits: Var<'t>,
    stack: Var<'t>,
    sampling: Sampling,
    noise: &mut Noise<'_>,
) -> Result<Selection<'t>> {
    let [one, l] = logits.shape();
    if one != 1 || stack.shape()[0] != l {
        return Err(Error::Shape {
            op: "select_resolution",
            left: logits.shape(),
            right: stack.shape(),
        });
    }
    let probabilities = softmax_rows(&logits.value_ref()).data().to_vec();
    let weights = match sampling.mode {
        AssignMode::Argmax => {
            let hot = one_hot_argmax(&logits.value_ref());
            logits.tape().constant(hot)
        }
        AssignMode::Soft | AssignMode::StraightThrough => {
            let g = noise.draw(1, l)?;
            gumbel_softmax_with_noise(
                logits,
                &g,
                sampling.temperature,
                sampling.mode == AssignMode::StraightThrough,
            )?
        }
    };
    let selected = weights.value().argmax_row(0);
    let vector = weights.matmul(stack)?;
    Ok(Selection {
        weights,
        vector,
        selected,
        probabilities,
    })
}

/// Attention, contraction and selection over an `L×d_z` readout stack.
pub fn select_resolution<'t>(
    p: &Bound<'t>,
    stack: Var<'t>,
    params: &AttentionParams,
    sampling: Sampling,
    noise: &mut Noise<'_>,
) -> Result<Selection<'t>> {
    let multi = multi_head(p, stack, params)?;
    let logits = resolution_logits(p, multi, params)?.transpose();
    select_from_logits(logits, stack, sampling, noise)
}

/// Per-timestep record of the chosen resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub timestep: usize,
    /// 1-based level.
    pub level: usize,
    pub probabilities: Vec<f64>,
}

/// Tab-separated table: `timestep`, `selected_level`, `p_1..p_L`.
pub fn selection_log_table(records: &[SelectionRecord]) -> String {
    let l = records.first().map_or(0, |r| r.probabilities.len());
    let mut out = String::from("timestep\tselected_level");
    for i in 1..=l {
        let _ = write!(out, "\tp_{i}");
    }
    out.push('\n');
    for r in records {
        let _ = write!(out, "{}\t{}", r.timestep, r.level);
        for p in &r.probabilities {
            let _ = write!(out, "\t{p}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tape;

    fn setup(l: usize, d: usize, heads: usize, seed: u64) -> (ParamStore, AttentionParams, Tensor) {
        let mut store = ParamStore::new();
        let mut rng = Rng::new(seed);
        let params = AttentionParams::new(&mut store, "attn", AttentionConfig::new(heads, d), d, &mut rng).unwrap();
        let stack = rng.uniform_tensor(l, d, 1.0);
        (store, params, stack)
    }

    #[test]
    fn zero_queries_give_uniform_attention() {
        let (mut store, params, stack) = setup(3, 4, 1, 1);
        *store.get_mut(params.heads[0].query) = Tensor::zeros(4, 4);
        let tape = Tape::new();
        let p = store.bind(&tape);
        let z = tape.constant(stack);
        let (x, attn) = self_attention(&p, z, &params.heads[0]).unwrap();
        for v in attn.value().data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let v = z.matmul(p.var(params.heads[0].value)).unwrap().value();
        let mean = crate::mgn::readout_values(&v);
        let x = x.value();
        for i in 0..3 {
            for j in 0..4 {
                assert!((x.get(i, j) - mean.get(0, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_resolution_returns_values() {
        let (store, params, stack) = setup(1, 3, 1, 2);
        let tape = Tape::new();
        let p = store.bind(&tape);
        let z = tape.constant(stack);
        let (x, _) = self_attention(&p, z, &params.heads[0]).unwrap();
        let v = z.matmul(p.var(params.heads[0].value)).unwrap();
        assert_eq!(x.value(), v.value());
    }

    #[test]
    fn scalar_scores_give_two_thirds() {
        // d_z = d_k = 1; q_1 k_1 = ln 2, q_1 k_2 = 0.
        let mut store = ParamStore::new();
        let mut rng = Rng::new(3);
        let params = AttentionParams::new(&mut store, "a", AttentionConfig::new(1, 1), 1, &mut rng).unwrap();
        *store.get_mut(params.heads[0].query) = Tensor::scalar(1.0);
        *store.get_mut(params.heads[0].key) = Tensor::scalar(1.0);
        let tape = Tape::new();
        let p = store.bind(&tape);
        let stack = tape.constant(Tensor::column_vector(&[2f64.ln().sqrt(), 0.0]));
        let (_, attn) = self_attention(&p, stack, &params.heads[0]).unwrap();
        let a = attn.value();
        assert!((a.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((a.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn one_head_identity_output_matches_self_attention() {
        let (mut store, params, stack) = setup(4, 3, 1, 4);
        *store.get_mut(params.output) = Tensor::identity(3);
        let tape = Tape::new();
        let p = store.bind(&tape);
        let z = tape.constant(stack);
        let m = multi_head(&p, z, &params).unwrap();
        let (x, _) = self_attention(&p, z, &params.heads[0]).unwrap();
        assert_eq!(m.value(), x.value());
    }

    #[test]
    fn multi_head_shapes() {
        for h in 1..=4 {
            let (store, params, stack) = setup(3, 5, h, 10 + h as u64);
            let tape = Tape::new();
            let p = store.bind(&tape);
            let m = multi_head(&p, tape.constant(stack), &params).unwrap();
            assert_eq!(m.shape(), [3, 5 * h]);
        }
    }

    #[test]
    fn permuting_levels_permutes_output() {
        let (store, params, stack) = setup(4, 3, 2, 5);
        let perm = [2, 0, 3, 1];
        let tape = Tape::new();
        let p = store.bind(&tape);
        let a = multi_head(&p, tape.constant(stack.clone()), &params).unwrap().value();
        let b = multi_head(&p, tape.constant(stack.permute_rows(&perm)), &params)
            .unwrap()
            .value();
        assert!(a.permute_rows(&perm).max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn selection_contracts() {
        let (store, params, stack) = setup(3, 4, 2, 6);
        let mut rng = Rng::new(60);
        let tape = Tape::new();
        let p = store.bind(&tape);
        let z = tape.constant(stack.clone());
        for sampling in [
            Sampling::eval(),
            Sampling::new(AssignMode::StraightThrough, 1.0).unwrap(),
        ] {
            let s = select_resolution(&p, z, &params, sampling, &mut Noise::sample(&mut rng)).unwrap();
            let w = s.weights.value();
            assert_eq!(w.data().iter().sum::<f64>(), 1.0);
            assert_eq!(w.data().iter().filter(|&&v| v != 0.0).count(), 1);
            assert_eq!(s.vector.value().data(), stack.row(s.selected));
        }
        let bad = Sampling {
            mode: AssignMode::StraightThrough,
            temperature: -1.0,
        };
        assert!(select_resolution(&p, z, &params, bad, &mut Noise::sample(&mut rng)).is_err());
    }

    #[test]
    fn dominant_logit_selects_first_level() {
        let tape = Tape::new();
        let logits = tape.constant(Tensor::row_vector(&[10.0, 0.0, 0.0]));
        let stack = tape.constant(Tensor::from_rows(&[[1.0], [2.0], [3.0]]));
        let s = select_from_logits(logits, stack, Sampling::eval(), &mut Noise::zero()).unwrap();
        assert_eq!(s.selected, 0);
        assert_eq!(s.vector.item(), 1.0);
        let again = select_from_logits(logits, stack, Sampling::eval(), &mut Noise::zero()).unwrap();
        assert_eq!(again.selected, 0);
    }

    #[test]
    fn log_table_layout() {
        let t = selection_log_table(&[SelectionRecord {
            timestep: 3,
            level: 2,
            probabilities: vec![0.25, 0.75],
        }]);
        assert_eq!(t, "timestep\tselected_level\tp_1\tp_2\n3\t2\t0.25\t0.75\n");
    }
}
