use super::checkpoint::Checkpoint;
use crate::data::TemporalGraphDataset;
use crate::error::{Error, Result};
use crate::jsonfmt::ObjectWriter;
use crate::mgn::{build_hierarchy, Sampling};
use crate::numerics::{Noise, Tape, Tensor};
use crate::resattn::select_resolution;

/// Eval-mode hierarchy and resolution choice for the graph at timestep `t`
/// (0-based), with the `lags` standardized values ending at `t` as features.
pub fn inspect_hierarchy(ck: &Checkpoint, ds: &TemporalGraphDataset, t: usize) -> Result<String> {
    let lags = ck.model.input_dim;
    if t + 1 < lags || t >= ds.len() {
        return Err(Error::data(format!(
            "timestep {t} needs {lags} lags within 0..{}",
            ds.len()
        )));
    }
    if ck.standardizer.mean.len() != ds.n() {
        return Err(Error::data(format!(
            "checkpoint covers {} nodes, dataset has {}",
            ck.standardizer.mean.len(),
            ds.n()
        )));
    }
    let model = ck.to_model()?;
    let features = Tensor::from_fn(ds.n(), lags, |v, k| {
        ck.standardizer.value(v, ds.cases.get(t + 1 + k - lags, v))
    });
    let g = ds.graph_at(t, features)?;
    let tape = Tape::new();
    let p = model.store.bind(&tape);
    let h = build_hierarchy(&p, &model.mgn, &model.cfg.mgn, &g, Sampling::eval(), &mut Noise::zero())?;
    let sel = select_resolution(
        &p,
        h.readout_stack()?,
        &model.attention,
        Sampling::eval(),
        &mut Noise::zero(),
    )?;
    let mut w = ObjectWriter::new();
    w.field("timestep", &t);
    if let Some(d) = &ds.dates {
        w.field("date", &d[t]);
    }
    w.field("selected_level", &(sel.selected + 1));
    w.field("level_probabilities", &sel.probabilities);
    h.record().write_dump(&mut w);
    Ok(w.finish())
}
