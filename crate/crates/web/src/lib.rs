//! Three operations for the static demo page. Each returns JSON or plain
//! numbers; errors come back as strings and surface as exceptions in JS.

use serde_json::json;
use wasm_bindgen::prelude::wasm_bindgen;

use tmgnn::data::random_connected_edges;
use tmgnn::graphcore::{cycle_graph, simulate_spread, Graph};
use tmgnn::mgn::{build_hierarchy, MgnConfig, Sampling};
use tmgnn::numerics::{gumbel_soft_sample, Noise, Rng, Tape, Tensor};
use tmgnn::resattn::select_resolution;
use tmgnn::temporal::{CellKind, TmgnnConfig, TmgnnModel};

fn text(e: tmgnn::Error) -> String {
    e.to_string()
}

/// Outbreak on a ring of `nodes` people starting at `first`, coarsened by
/// infection status at each of `steps` snapshots.
#[wasm_bindgen]
pub fn outbreak(nodes: usize, first: usize, steps: usize) -> Result<String, String> {
    if !(3..=64).contains(&nodes) || steps == 0 || steps > 64 {
        return Err("use 3..=64 nodes and 1..=64 steps".into());
    }
    let g = cycle_graph(nodes);
    let out = simulate_spread(&g, &[first], steps).map_err(text)?;
    Ok(serde_json::to_string(&out).expect("steps serialize"))
}

/// How often each category wins under `draws` Gumbel-softmax samples.
#[wasm_bindgen]
pub fn gumbel_histogram(logits: Vec<f64>, temperature: f64, draws: u32, seed: u32) -> Result<Vec<u32>, String> {
    if logits.is_empty() || draws == 0 {
        return Err("need at least one logit and one draw".into());
    }
    let k = logits.len();
    let logits = Tensor::row_vector(&logits);
    let mut rng = Rng::new(u64::from(seed));
    let mut counts = vec![0u32; k];
    for _ in 0..draws {
        let y = gumbel_soft_sample(&logits, &rng.gumbel_tensor(1, k), temperature).map_err(text)?;
        counts[y.argmax_row(0)] += 1;
    }
    Ok(counts)
}

/// Untrained model on a random connected graph: the eval-mode hierarchy
/// and which resolution attention picks. `level_sizes` is comma-separated,
/// coarsest first, ending with the node count.
#[wasm_bindgen]
pub fn resolution_selection(level_sizes: &str, heads: usize, seed: u32) -> Result<String, String> {
    let sizes: Vec<usize> = level_sizes
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("bad level size `{s}`")))
        .collect::<Result<_, _>>()?;
    let n = *sizes.last().ok_or("no level sizes")?;
    if !(2..=64).contains(&n) || !(1..=4).contains(&heads) {
        return Err("use 2..=64 nodes and 1..=4 heads".into());
    }
    let mut rng = Rng::new(u64::from(seed));
    let mut mgn = MgnConfig::new(sizes, 8, 2);
    mgn.self_loops = true;
    let model = TmgnnModel::new(TmgnnConfig::new(mgn, heads, CellKind::Lstm, 3, 1), &mut rng).map_err(text)?;
    let edges = random_connected_edges(n, (2 * n).min(n * (n - 1) / 2).max(n - 1), &mut rng).map_err(text)?;
    let g = Graph::from_edges(n, &edges, rng.uniform_tensor(n, 3, 1.0)).map_err(text)?;

    let tape = Tape::new();
    let p = model.store.bind(&tape);
    let h = build_hierarchy(&p, &model.mgn, &model.cfg.mgn, &g, Sampling::eval(), &mut Noise::zero()).map_err(text)?;
    let stack = h.readout_stack().map_err(text)?;
    let sel = select_resolution(&p, stack, &model.attention, Sampling::eval(), &mut Noise::zero()).map_err(text)?;
    let record = h.record();
    let partitions: Vec<Option<Vec<usize>>> = record
        .partitions
        .iter()
        .map(|p| p.as_ref().map(|p| p.one_based()))
        .collect();
    Ok(json!({
        "edges": edges.iter().map(|&(a, b, _)| [a, b]).collect::<Vec<_>>(),
        "level_sizes": record.level_sizes(),
        "partitions": partitions,
        "level_probabilities": sel.probabilities,
        "selected_level": sel.selected + 1,
    })
    .to_string())
}
