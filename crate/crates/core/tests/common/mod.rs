#![allow(dead_code)]

use tmgnn::graphcore::{Graph, Partition};
use tmgnn::numerics::gradcheck::check_input;
use tmgnn::numerics::{gumbel_softmax_with_noise, Activation, Rng, Tensor, Var};
use tmgnn::Result;

/// Ring plus random weighted chords, so every node has a neighbour.
pub fn random_graph(n: usize, features: usize, rng: &mut Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        if n > 1 {
            edges.push((i.min((i + 1) % n), i.max((i + 1) % n), 1.0));
        }
        for j in i + 2..n {
            if rng.uniform_open() < 0.3 {
                edges.push((i, j, rng.uniform(0.5, 2.0)));
            }
        }
    }
    edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    edges.dedup_by(|a, b| (a.0, a.1) == (b.0, b.1));
    Graph::from_edges(n, &edges, rng.uniform_tensor(n, features, 1.0)).unwrap()
}

/// Erdős–Rényi with unit weights; isolated nodes allowed.
pub fn random_unweighted_graph(n: usize, p: f64, rng: &mut Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.uniform_open() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    Graph::from_edges(n, &edges, Tensor::ones(n, 1)).unwrap()
}

pub fn random_partition(n: usize, k: usize, rng: &mut Rng) -> Partition {
    Partition::new(k, (0..n).map(|_| rng.below(k)).collect()).unwrap()
}

fn dims(rng: &mut Rng) -> (usize, usize) {
    (1 + rng.below(4), 1 + rng.below(4))
}

/// Entries bounded away from zero, for ops with a kink there.
fn away_from_zero(r: usize, c: usize, rng: &mut Rng) -> Tensor {
    Tensor::from_fn(r, c, |_, _| {
        let m = rng.uniform(0.2, 1.5);
        if rng.uniform_open() < 0.5 {
            -m
        } else {
            m
        }
    })
}

fn positive(r: usize, c: usize, rng: &mut Rng) -> Tensor {
    Tensor::from_fn(r, c, |_, _| rng.uniform(0.2, 2.0))
}

/// `Σ w ⊙ y`: a scalar whose gradient exercises every output entry.
fn weigh<'t>(y: Var<'t>, w: &Tensor) -> Result<Var<'t>> {
    Ok(y.mul(y.tape().constant(w.clone()))?.sum())
}

pub const STEP: f64 = 1e-6;

/// Worst relative error per differentiable op over `trials` random draws.
pub fn op_gradient_errors(trials: usize, seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = Rng::new(seed);
    let mut out: Vec<(&'static str, f64)> = Vec::new();
    let mut record = |name: &'static str, e: f64| match out.iter_mut().find(|(n, _)| *n == name) {
        Some((_, worst)) => *worst = worst.max(e),
        None => out.push((name, e)),
    };
    for _ in 0..trials {
        let (r, c) = dims(&mut rng);
        let k = 1 + rng.below(4);
        let x = rng.uniform_tensor(r, c, 1.5);
        let other = rng.uniform_tensor(r, c, 1.5);
        let w = rng.uniform_tensor(r, c, 1.0);

        let b = rng.uniform_tensor(c, k, 1.0);
        let wk = rng.uniform_tensor(r, k, 1.0);
        let a = rng.uniform_tensor(r, c, 1.0);
        record(
            "matmul (left)",
            check_input(&x, STEP, |v| weigh(v.matmul(v.tape().constant(b.clone()))?, &wk)).unwrap(),
        );
        let bt = rng.uniform_tensor(c, k, 1.0);
        record(
            "matmul (right)",
            check_input(&bt, STEP, |v| weigh(v.tape().constant(a.clone()).matmul(v)?, &wk)).unwrap(),
        );
        record(
            "add",
            check_input(&x, STEP, |v| weigh(v.add(v.tape().constant(other.clone()))?, &w)).unwrap(),
        );
        record(
            "sub",
            check_input(&x, STEP, |v| weigh(v.tape().constant(other.clone()).sub(v)?, &w)).unwrap(),
        );
        record(
            "mul",
            check_input(&x, STEP, |v| weigh(v.mul(v.tape().constant(other.clone()))?, &w)).unwrap(),
        );
        record("mul (self)", check_input(&x, STEP, |v| weigh(v.mul(v)?, &w)).unwrap());
        let row = rng.uniform_tensor(1, c, 1.0);
        record(
            "add_row (matrix)",
            check_input(&x, STEP, |v| weigh(v.add_row(v.tape().constant(row.clone()))?, &w)).unwrap(),
        );
        record(
            "add_row (row)",
            check_input(&row, STEP, |v| weigh(v.tape().constant(x.clone()).add_row(v)?, &w)).unwrap(),
        );
        let s = rng.uniform(-2.0, 2.0);
        record("scale", check_input(&x, STEP, |v| weigh(v.scale(s), &w)).unwrap());
        let xa = away_from_zero(r, c, &mut rng);
        record("abs", check_input(&xa, STEP, |v| weigh(v.abs(), &w)).unwrap());
        record("square", check_input(&x, STEP, |v| weigh(v.square(), &w)).unwrap());
        for act in [
            Activation::Sigmoid,
            Activation::Tanh,
            Activation::Relu,
            Activation::Identity,
        ] {
            let name = match act {
                Activation::Sigmoid => "activation sigmoid",
                Activation::Tanh => "activation tanh",
                Activation::Relu => "activation relu",
                Activation::Identity => "activation identity",
            };
            record(name, check_input(&xa, STEP, |v| weigh(v.activation(act), &w)).unwrap());
        }
        record("sigmoid", check_input(&x, STEP, |v| weigh(v.sigmoid(), &w)).unwrap());
        record("tanh", check_input(&x, STEP, |v| weigh(v.tanh(), &w)).unwrap());
        record(
            "softmax_rows",
            check_input(&x, STEP, |v| weigh(v.softmax_rows(), &w)).unwrap(),
        );
        let wt = rng.uniform_tensor(c, r, 1.0);
        record(
            "transpose",
            check_input(&x, STEP, |v| weigh(v.transpose(), &wt)).unwrap(),
        );
        record("sum", check_input(&x, STEP, |v| Ok(v.square().sum())).unwrap());
        record("mean", check_input(&x, STEP, |v| Ok(v.square().mean())).unwrap());
        let w1c = rng.uniform_tensor(1, c, 1.0);
        record(
            "mean_over_rows",
            check_input(&x, STEP, |v| weigh(v.mean_over_rows(), &w1c)).unwrap(),
        );
        let wr1 = rng.uniform_tensor(r, 1, 1.0);
        record(
            "mean_over_cols",
            check_input(&x, STEP, |v| weigh(v.mean_over_cols(), &wr1)).unwrap(),
        );
        let n = 1 + rng.below(4);
        let wb = rng.uniform_tensor(n, c, 1.0);
        record(
            "broadcast_rows",
            check_input(&row, STEP, |v| weigh(v.broadcast_rows(n)?, &wb)).unwrap(),
        );
        let sq = positive(r, r, &mut rng);
        let wsq = rng.uniform_tensor(r, r, 1.0);
        record(
            "row_normalize",
            check_input(&sq, STEP, |v| weigh(v.row_normalize()?, &wsq)).unwrap(),
        );
        record(
            "sym_laplacian",
            check_input(&sq, STEP, |v| weigh(v.sym_laplacian()?, &wsq)).unwrap(),
        );
        let right = rng.uniform_tensor(r, k, 1.0);
        let wcat = rng.uniform_tensor(r, c + k, 1.0);
        record(
            "concat_cols",
            check_input(&x, STEP, |v| {
                weigh(Var::concat_cols(&[v, v.tape().constant(right.clone())])?, &wcat)
            })
            .unwrap(),
        );
        let below = rng.uniform_tensor(k, c, 1.0);
        let wrows = rng.uniform_tensor(r + k, c, 1.0);
        record(
            "concat_rows",
            check_input(&x, STEP, |v| {
                weigh(Var::concat_rows(&[v, v.tape().constant(below.clone())])?, &wrows)
            })
            .unwrap(),
        );
        let g = rng.gumbel_tensor(r, c);
        let tau = rng.uniform(0.5, 2.0);
        record(
            "gumbel_softmax (soft)",
            check_input(&x, STEP, |v| weigh(gumbel_softmax_with_noise(v, &g, tau, false)?, &w)).unwrap(),
        );
    }
    out
}
