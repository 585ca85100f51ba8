use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphcore::LaplacianKind;
use crate::numerics::Activation;

fn default_activation() -> Activation {
    Activation::Tanh
}

fn default_cluster_layers() -> usize {
    1
}

/// Shape of the multiresolution network.
///
/// `cluster_sizes[ℓ-1]` is the node count of level `ℓ`; the last entry is the
/// input graph size and the sizes strictly decrease toward level 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MgnConfig {
    pub cluster_sizes: Vec<usize>,
    pub message_dim: usize,
    pub mp_layers: usize,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default)]
    pub laplacian: LaplacianKind,
    /// Add unit self-loops before normalizing, so a node's own latent takes
    /// part in its update.
    #[serde(default)]
    pub self_loops: bool,
    #[serde(default = "default_cluster_layers")]
    pub cluster_layers: usize,
}

impl MgnConfig {
    pub fn new(cluster_sizes: Vec<usize>, message_dim: usize, mp_layers: usize) -> Self {
        MgnConfig {
            cluster_sizes,
            message_dim,
            mp_layers,
            activation: default_activation(),
            laplacian: LaplacianKind::Row,
            self_loops: false,
            cluster_layers: 1,
        }
    }

    /// Three levels of 20, 8 and 1 nodes, four message-passing layers of width 24.
    pub fn chickenpox() -> Self {
        MgnConfig::new(vec![1, 8, 20], 24, 4)
    }

    /// Input graph plus coarse levels of 32, 16 and 8 nodes, width 64.
    pub fn covid(n: usize) -> Self {
        MgnConfig::new(vec![8, 16, 32, n], 64, 4)
    }

    pub fn levels(&self) -> usize {
        self.cluster_sizes.len()
    }

    /// Node count of level `level` (1-based).
    pub fn level_size(&self, level: usize) -> usize {
        self.cluster_sizes[level - 1]
    }

    pub fn input_size(&self) -> usize {
        *self.cluster_sizes.last().expect("validated config")
    }

    pub fn validate(&self) -> Result<()> {
        if self.cluster_sizes.is_empty() {
            return Err(Error::config("at least one level is required"));
        }
        if self.cluster_sizes.contains(&0) {
            return Err(Error::config("cluster counts must be positive"));
        }
        if self.cluster_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(format!(
                "cluster sizes {:?} must strictly increase from level 1 to level L",
                self.cluster_sizes
            )));
        }
        if self.message_dim == 0 || self.mp_layers == 0 || self.cluster_layers == 0 {
            return Err(Error::config(
                "message_dim, mp_layers and cluster_layers must be at least 1",
            ));
        }
        Ok(())
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        self.validate()?;
        if self.input_size() != n {
            return Err(Error::config(format!(
                "finest level has {} nodes but the graph has {n}",
                self.input_size()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        MgnConfig::chickenpox().validate_for(20).unwrap();
        MgnConfig::covid(129).validate_for(129).unwrap();
        assert_eq!(MgnConfig::covid(129).cluster_sizes, vec![8, 16, 32, 129]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(MgnConfig::new(vec![8, 8, 20], 4, 1).validate().is_err());
        assert!(MgnConfig::new(vec![0, 20], 4, 1).validate().is_err());
        assert!(MgnConfig::new(vec![1, 20], 0, 1).validate().is_err());
        assert!(MgnConfig::new(vec![1, 20], 4, 0).validate().is_err());
        assert!(MgnConfig::new(vec![1, 20], 4, 1).validate_for(21).is_err());
        assert!(MgnConfig::new(vec![], 4, 1).validate().is_err());
    }
}
