//! Recurrent backbone over per-timestep resolution selections and the
//! composed forecasting model.

mod cell;
mod model;

pub use cell::{gru_cell, lstm_cell, step, CellKind, Gate, RecurrentParams, RecurrentState};
pub use model::{tmgnn_forward, Forward, ParamRecord, TmgnnConfig, TmgnnModel};
