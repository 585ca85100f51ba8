//! Datasets, importers, lag windows, chronological splits and
//! standardization.

mod dataset;
mod import;
mod synth;
mod windows;

pub use dataset::{load_canonical, EdgeList, Granularity, TemporalGraphDataset, Topology, SCHEMA_VERSION};
pub use import::{import_chickenpox, import_mobility, symmetrize, GapPolicy, MobilityOptions};
pub use synth::{pearson, random_connected_edges, synthetic_chickenpox, synthetic_mobility, SyntheticMobility};
pub use windows::{make_windows, split, Split, SplitSpec, SplitStyle, Standardizer, WindowSpec, WindowedSample};
