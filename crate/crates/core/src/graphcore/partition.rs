use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Mapping of `n` nodes onto `k` clusters.
///
/// Cluster indices are 0-based in memory; files and reports print them
/// 1-based. Empty clusters are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    k: usize,
    assignment: Vec<usize>,
}

impl Partition {
    pub fn new(k: usize, assignment: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("cluster count must be positive"));
        }
        if let Some((i, &c)) = assignment.iter().enumerate().find(|(_, &c)| c >= k) {
            return Err(Error::contract(format!(
                "node {i} assigned to cluster {c}, but only {k} clusters exist"
            )));
        }
        Ok(Partition { k, assignment })
    }

    /// From 1-based labels, as printed in files.
    pub fn from_one_based(k: usize, labels: &[usize]) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::contract("cluster labels are 1-based"));
        }
        Partition::new(k, labels.iter().map(|c| c - 1).collect())
    }

    /// Every node in its own cluster.
    pub fn identity(n: usize) -> Self {
        Partition {
            k: n,
            assignment: (0..n).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn cluster_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.assignment.iter().map(|c| c + 1).collect()
    }

    /// Nodes of cluster `c` in increasing order.
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignment[i] == c).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn assignment_matrix(&self) -> AssignmentMatrix {
        let mut pi = Tensor::zeros(self.n().max(1), self.k);
        for (i, &c) in self.assignment.iter().enumerate() {
            pi.set(i, c, 1.0);
        }
        AssignmentMatrix(pi)
    }

    /// Relabels nodes: node `i` becomes `perm[i]`, clusters keep their ids.
    pub fn permute(&self, perm: &[usize]) -> Result<Partition> {
        super::graph::check_bijection(perm, self.n())?;
        let mut assignment = vec![0; self.n()];
        for (i, &p) in perm.iter().enumerate() {
            assignment[p] = self.assignment[i];
        }
        Ok(Partition { k: self.k, assignment })
    }
}

/// Zero-one `n×k` matrix with exactly one 1 per row.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix(Tensor);

impl AssignmentMatrix {
    pub fn new(pi: Tensor) -> Result<Self> {
        for i in 0..pi.rows() {
            let row = pi.row(i);
            let ones = row.iter().filter(|&&v| v == 1.0).count();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || ones + zeros != row.len() {
                return Err(Error::contract(format!("assignment row {i} is not one-hot: {row:?}")));
            }
        }
        Ok(AssignmentMatrix(pi))
    }

    pub fn matrix(&self) -> &Tensor {
        &self.0
    }

    pub fn into_inner(self) -> Tensor {
        self.0
    }

    pub fn to_partition(&self) -> Partition {
        let assignment = (0..self.0.rows()).map(|i| self.0.argmax_row(i)).collect();
        Partition {
            k: self.0.cols(),
            assignment,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_from_partition() {
        let p = Partition::from_one_based(2, &[1, 1, 2]).unwrap();
        assert_eq!(
            *p.assignment_matrix().matrix(),
            Tensor::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        );
    }

    #[test]
    fn empty_cluster_column() {
        let p = Partition::from_one_based(2, &[1]).unwrap();
        assert_eq!(*p.assignment_matrix().matrix(), Tensor::from_rows(&[[1.0, 0.0]]));
        assert_eq!(p.sizes(), vec![1, 0]);
    }

    #[test]
    fn argmax_recovers_partition() {
        let p = Partition::new(4, vec![3, 0, 2, 2, 1, 3]).unwrap();
        assert_eq!(p.assignment_matrix().to_partition(), p);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(Partition::new(2, vec![0, 2]).is_err());
        assert!(Partition::new(0, vec![]).is_err());
        assert!(AssignmentMatrix::new(Tensor::from_rows(&[[0.5, 0.5]])).is_err());
    }
}
