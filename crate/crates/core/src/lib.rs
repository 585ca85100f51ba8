//! Temporal multiresolution graph neural networks for forecasting case
//! counts on region graphs.
//!
//! The crate is layered bottom-up:
//!
//! - [`numerics`]: dense tensors, reverse-mode tape, Gumbel sampling, Adam.
//! - [`graphcore`]: graphs, partitions, coarsening, normalized Laplacians.
//! - [`mgn`]: the per-timestep multiresolution network (encode, cluster,
//!   coarsen, pool, readout).
//! - [`resattn`]: attention over the per-level representations and one-hot
//!   resolution selection.
//! - [`temporal`]: recurrent cells and the full forecasting model.
//! - [`data`]: datasets, importers, windows, splits, standardization.
//! - [`harness`]: training, metrics, baselines, experiments, reports.

pub mod data;
pub mod error;
pub mod graphcore;
pub mod harness;
mod jsonfmt;
pub mod mgn;
pub mod nn;
pub mod numerics;
pub mod resattn;
pub mod temporal;

pub use error::{Error, Result};
