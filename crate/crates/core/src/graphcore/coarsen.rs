use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::graph::Graph;
use super::partition::{AssignmentMatrix, Partition};
use crate::error::{Error, Result};
use crate::numerics::{self, Tensor};

/// Coarse graph of `p.k()` nodes.
///
/// Off-diagonal weights sum the edges between two clusters; the diagonal is
/// half the weight summed over ordered pairs inside a cluster, i.e. the edge
/// count of the induced subgraph. Coarse features are per-cluster sums.
pub fn coarsen(g: &Graph, p: &Partition) -> Result<Graph> {
    if p.n() != g.n() {
        return Err(Error::contract(format!(
            "partition covers {} nodes, graph has {}",
            p.n(),
            g.n()
        )));
    }
    let k = p.k();
    let a = g.adjacency();
    let mut coarse = Tensor::zeros(k, k);
    for i in 0..g.n() {
        let ci = p.cluster_of(i);
        for j in 0..g.n() {
            let w = a.get(i, j);
            if w == 0.0 {
                continue;
            }
            let cj = p.cluster_of(j);
            coarse.set(ci, cj, coarse.get(ci, cj) + w);
        }
    }
    for c in 0..k {
        coarse.set(c, c, 0.5 * coarse.get(c, c));
    }
    let d = g.feature_dim();
    let mut features = Tensor::zeros(k, d);
    for i in 0..g.n() {
        let c = p.cluster_of(i);
        for j in 0..d {
            features.set(c, j, features.get(c, j) + g.features().get(i, j));
        }
    }
    Graph::with_self_loops(coarse, features)
}

/// `Πᵀ A Π`.
pub fn quadratic_coarsen(g: &Graph, pi: &AssignmentMatrix) -> Result<Tensor> {
    let pi = pi.matrix();
    if pi.rows() != g.n() {
        return Err(Error::contract(format!(
            "assignment matrix has {} rows, graph has {} nodes",
            pi.rows(),
            g.n()
        )));
    }
    pi.transpose().matmul(g.adjacency())?.matmul(pi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LaplacianKind {
    /// `D⁻¹A`
    #[default]
    Row,
    /// `I − D^{-1/2} A D^{-1/2}`
    Symmetric,
}

impl FromStr for LaplacianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row" => Ok(LaplacianKind::Row),
            "symmetric" | "sym" => Ok(LaplacianKind::Symmetric),
            other => Err(Error::config(format!("unknown laplacian kind `{other}`"))),
        }
    }
}

impl fmt::Display for LaplacianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LaplacianKind::Row => "row",
            LaplacianKind::Symmetric => "symmetric",
        })
    }
}

/// Propagation operator for message passing. Zero-degree nodes are given a
/// unit self-loop first.
pub fn normalized_laplacian(g: &Graph, kind: LaplacianKind) -> Tensor {
    laplacian_of(g.adjacency(), kind)
}

/// As [`normalized_laplacian`], but zero-degree nodes are an error.
pub fn normalized_laplacian_strict(g: &Graph, kind: LaplacianKind) -> Result<Tensor> {
    if let Some(i) = (0..g.n()).find(|&i| g.degree(i) == 0.0) {
        return Err(Error::Degenerate(format!("node {i} has zero degree")));
    }
    Ok(normalized_laplacian(g, kind))
}

fn laplacian_of(adjacency: &Tensor, kind: LaplacianKind) -> Tensor {
    match kind {
        LaplacianKind::Row => numerics::row_normalize(adjacency),
        LaplacianKind::Symmetric => numerics::sym_laplacian(adjacency),
    }
}
