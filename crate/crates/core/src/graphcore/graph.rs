use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::jsonfmt::ObjectWriter;
use crate::numerics::Tensor;

/// Undirected weighted graph with node features.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Tensor,
    features: Tensor,
    labels: Option<Vec<String>>,
}

impl Graph {
    /// Validates a symmetric, non-negative adjacency with a zero diagonal.
    pub fn new(adjacency: Tensor, features: Tensor) -> Result<Self> {
        let g = Graph::with_self_loops(adjacency, features)?;
        if (0..g.n()).any(|i| g.adjacency.get(i, i) != 0.0) {
            return Err(Error::contract("adjacency has self-loops; use Graph::with_self_loops"));
        }
        Ok(g)
    }

    /// Like [`Graph::new`] but diagonal weights are allowed.
    pub fn with_self_loops(adjacency: Tensor, features: Tensor) -> Result<Self> {
        let n = adjacency.rows();
        if adjacency.cols() != n {
            return Err(Error::contract(format!(
                "adjacency must be square, got {:?}",
                adjacency.shape()
            )));
        }
        if features.rows() != n {
            return Err(Error::contract(format!(
                "feature matrix has {} rows for {n} nodes",
                features.rows()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = adjacency.get(i, j);
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::contract(format!(
                        "edge weight A[{i}][{j}] = {w} is not a finite non-negative value"
                    )));
                }
                if w != adjacency.get(j, i) {
                    return Err(Error::contract(format!("adjacency is not symmetric at ({i}, {j})")));
                }
            }
        }
        if !features.is_finite() {
            return Err(Error::contract("node features must be finite"));
        }
        Ok(Graph {
            adjacency,
            features,
            labels: None,
        })
    }

    /// Builds from 0-based undirected edges `(i, j, w)`; duplicates accumulate.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], features: Tensor) -> Result<Self> {
        if n == 0 {
            return Err(Error::contract("graph needs at least one node"));
        }
        let mut a = Tensor::zeros(n, n);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::contract(format!("edge ({i}, {j}) out of range for {n} nodes")));
            }
            if i == j {
                a.set(i, i, a.get(i, i) + w);
            } else {
                a.set(i, j, a.get(i, j) + w);
                a.set(j, i, a.get(j, i) + w);
            }
        }
        Graph::with_self_loops(a, features)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::contract(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.n()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Same topology, new features.
    pub fn with_features(&self, features: Tensor) -> Result<Self> {
        if features.rows() != self.n() {
            return Err(Error::contract(format!(
                "feature matrix has {} rows for {} nodes",
                features.rows(),
                self.n()
            )));
        }
        Ok(Graph {
            adjacency: self.adjacency.clone(),
            features,
            labels: self.labels.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn adjacency(&self) -> &Tensor {
        &self.adjacency
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.adjacency.row(i).iter().sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.degree(i)).collect()
    }

    /// Undirected edges with `i <= j`, 0-based, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                let w = self.adjacency.get(i, j);
                if w != 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn num_edges(&self) -> usize {
        self.edges().iter().filter(|e| e.0 != e.1).count()
    }

    /// Relabels node `i` as `perm[i]`: `A' = P A Pᵀ`, `F' = P F`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.n();
        check_bijection(perm, n)?;
        let mut a = Tensor::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a.set(perm[i], perm[j], self.adjacency.get(i, j));
            }
        }
        let labels = self.labels.as_ref().map(|l| {
            let mut out = vec![String::new(); n];
            for (i, name) in l.iter().enumerate() {
                out[perm[i]] = name.clone();
            }
            out
        });
        Ok(Graph {
            adjacency: a,
            features: self.features.permute_rows(perm),
            labels,
        })
    }

    pub fn to_canonical_string(&self) -> String {
        let mut w = ObjectWriter::new();
        w.field("n", &self.n());
        w.rows("edges", self.edges().into_iter().map(|(i, j, wt)| (i + 1, j + 1, wt)));
        w.field("node_labels", &self.labels);
        w.rows("features", (0..self.n()).map(|i| self.features.row(i)));
        w.finish()
    }

    pub fn from_canonical_str(text: &str, path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            n: usize,
            edges: Vec<(usize, usize, f64)>,
            #[serde(default)]
            node_labels: Option<Vec<String>>,
            features: Vec<Vec<f64>>,
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        if doc.features.len() != doc.n {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: format!("`features` has {} rows, expected n = {}", doc.features.len(), doc.n),
            });
        }
        let d = doc.features.first().map_or(0, Vec::len);
        if d == 0 || doc.features.iter().any(|r| r.len() != d) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: "`features` rows must be non-empty and equal length".into(),
            });
        }
        let mut edges = Vec::with_capacity(doc.edges.len());
        for (i, j, w) in doc.edges {
            if i == 0 || j == 0 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 0,
                    msg: format!("edge ({i}, {j}) uses 0 but indices are 1-based"),
                });
            }
            edges.push((i - 1, j - 1, w));
        }
        let features = Tensor::new(doc.n, d, doc.features.concat())?;
        let g = Graph::from_edges(doc.n, &edges, features)?;
        match doc.node_labels {
            Some(l) => g.with_labels(l),
            None => Ok(g),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Graph::from_canonical_str(&text, path)
    }
}

pub(crate) fn check_bijection(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::contract(format!(
            "permutation has length {}, expected {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::contract(format!("{perm:?} is not a bijection on 0..{n}")));
        }
    }
    Ok(())
}

/// Cycle `0-1-…-(n-1)-0` with unit weights and a constant feature.
pub fn cycle_graph(n: usize) -> Graph {
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    Graph::from_edges(n, &edges, Tensor::ones(n, 1)).expect("valid cycle")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric_and_negative() {
        let a = Tensor::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        assert!(Graph::new(a, Tensor::ones(2, 1)).is_err());
        let a = Tensor::from_rows(&[[0.0, -1.0], [-1.0, 0.0]]);
        assert!(Graph::new(a, Tensor::ones(2, 1)).is_err());
        let a = Tensor::from_rows(&[[1.0, 0.0], [0.0, 0.0]]);
        assert!(Graph::new(a.clone(), Tensor::ones(2, 1)).is_err());
        assert!(Graph::with_self_loops(a, Tensor::ones(2, 1)).is_ok());
        assert!(Graph::new(Tensor::zeros(2, 2), Tensor::ones(3, 1)).is_err());
    }

    #[test]
    fn permute_identity_and_inverse() {
        let g = cycle_graph(5)
            .with_features(Tensor::from_fn(5, 2, |i, j| (i * 2 + j) as f64))
            .unwrap();
        let id: Vec<usize> = (0..5).collect();
        assert_eq!(g.permute(&id).unwrap(), g);
        let perm = vec![3, 0, 4, 1, 2];
        let mut inv = vec![0; 5];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        assert_eq!(g.permute(&perm).unwrap().permute(&inv).unwrap(), g);
        assert!(g.permute(&[0, 0, 1, 2, 3]).is_err());
    }

    #[test]
    fn degrees_survive_permutation() {
        let g = Graph::from_edges(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)], Tensor::ones(4, 1)).unwrap();
        let mut before = g.degrees();
        let mut after = g.permute(&[2, 3, 1, 0]).unwrap().degrees();
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        assert_eq!(before, after);
    }

    #[test]
    fn canonical_round_trip_is_exact() {
        let features = Tensor::from_rows(&[[0.1, 1.0 / 3.0], [2.5e-17, -7.0], [1e300, 0.0]]);
        let g = Graph::from_edges(3, &[(0, 1, 0.7), (1, 2, 1.0 / 7.0), (2, 2, 3.0)], features)
            .unwrap()
            .with_labels(vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        let text = g.to_canonical_string();
        let back = Graph::from_canonical_str(&text, Path::new("mem")).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_canonical_string(), text);
    }

    #[test]
    fn parse_errors_carry_line() {
        let err =
            Graph::from_canonical_str("{\n \"n\": 2,\n \"edges\": [[1, 2, 1.0],\n}", Path::new("g.json")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert!(line >= 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
