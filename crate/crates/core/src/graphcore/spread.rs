//! Two-cluster coarsening keyed on infection status, stepped through a
//! contact-driven outbreak.

use serde::Serialize;

use super::coarsen::coarsen;
use super::graph::Graph;
use super::partition::Partition;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// One snapshot: who is infected and the two-node coarse graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadStep {
    pub timestep: usize,
    pub infected: Vec<bool>,
    /// Members per coarse node.
    pub cluster_sizes: [usize; 2],
    /// 1-based coarse node per input node.
    pub partition: Vec<usize>,
    pub coarse_adjacency: [[f64; 2]; 2],
}

/// Everyone touching an infected node becomes infected.
pub fn infect_neighbours(g: &Graph, infected: &[bool]) -> Result<Vec<bool>> {
    if infected.len() != g.n() {
        return Err(Error::contract(format!(
            "status covers {} nodes, graph has {}",
            infected.len(),
            g.n()
        )));
    }
    Ok((0..g.n())
        .map(|i| infected[i] || (0..g.n()).any(|j| j != i && infected[j] && g.adjacency().get(i, j) > 0.0))
        .collect())
}

/// Two clusters, uninfected before infected, except that an empty cluster
/// is always numbered last. Node features are set to 1 so coarse features
/// count members.
pub fn status_coarsening(g: &Graph, infected: &[bool]) -> Result<(Partition, Graph)> {
    if infected.len() != g.n() {
        return Err(Error::contract(format!(
            "status covers {} nodes, graph has {}",
            infected.len(),
            g.n()
        )));
    }
    let all_infected = infected.iter().all(|&x| x);
    let p = Partition::new(2, infected.iter().map(|&x| usize::from(x && !all_infected)).collect())?;
    let counted = g.with_features(Tensor::ones(g.n(), 1))?;
    let coarse = coarsen(&counted, &p)?;
    Ok((p, coarse))
}

/// Runs `steps` snapshots starting from `initially_infected`, spreading
/// along edges between snapshots.
pub fn simulate_spread(g: &Graph, initially_infected: &[usize], steps: usize) -> Result<Vec<SpreadStep>> {
    let mut infected = vec![false; g.n()];
    for &i in initially_infected {
        if i >= g.n() {
            return Err(Error::contract(format!("node {i} is outside 0..{}", g.n())));
        }
        infected[i] = true;
    }
    let mut out = Vec::with_capacity(steps);
    for t in 1..=steps {
        if t > 1 {
            infected = infect_neighbours(g, &infected)?;
        }
        let (p, coarse) = status_coarsening(g, &infected)?;
        let a = coarse.adjacency();
        out.push(SpreadStep {
            timestep: t,
            infected: infected.clone(),
            cluster_sizes: [
                coarse.features().get(0, 0) as usize,
                coarse.features().get(1, 0) as usize,
            ],
            partition: p.one_based(),
            coarse_adjacency: [[a.get(0, 0), a.get(0, 1)], [a.get(1, 0), a.get(1, 1)]],
        });
    }
    Ok(out)
}

/// Four people on a square, the top-right one infected first.
pub fn square_outbreak() -> Result<Vec<SpreadStep>> {
    // 0 top-left, 1 top-right, 2 bottom-right, 3 bottom-left.
    let g = Graph::from_edges(
        4,
        &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
        Tensor::ones(4, 1),
    )?;
    simulate_spread(&g, &[1], 3)
}
