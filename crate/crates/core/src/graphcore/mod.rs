//! Graphs, partitions, coarsening and propagation operators.

mod coarsen;
mod graph;
mod partition;
mod spread;

pub use coarsen::{coarsen, normalized_laplacian, normalized_laplacian_strict, quadratic_coarsen, LaplacianKind};
pub use graph::{cycle_graph, Graph};
pub use partition::{AssignmentMatrix, Partition};
pub use spread::{infect_neighbours, simulate_spread, square_outbreak, status_coarsening, SpreadStep};
