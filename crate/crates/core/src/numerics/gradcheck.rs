//! Central finite-difference checks of tape gradients.

use super::params::{Bound, ParamId, ParamStore};
use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Denominator floor for [`relative_error`]; below it the difference is
/// effectively measured in absolute terms.
pub const REL_FLOOR: f64 = 1e-4;

/// `|a − b| / max(|a|, |b|, REL_FLOOR)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

fn scalar_loss(loss: Var<'_>) -> Result<f64> {
    if loss.shape() != [1, 1] {
        return Err(Error::contract(format!("loss must be 1x1, got {:?}", loss.shape())));
    }
    Ok(loss.item())
}

/// Worst relative error between the analytic gradient of `f` at `x` and
/// central differences with step `h`, over every entry of `x`.
pub fn check_input<F>(x: &Tensor, h: f64, f: F) -> Result<f64>
where
    F: for<'t> Fn(Var<'t>) -> Result<Var<'t>>,
{
    let tape = Tape::new();
    let input = tape.param(x.clone());
    let loss = f(input)?;
    scalar_loss(loss)?;
    let analytic = tape.backward(loss)?.wrt(input);
    let eval = |v: Tensor| -> Result<f64> {
        let tape = Tape::new();
        scalar_loss(f(tape.param(v))?)
    };
    let mut worst = 0.0f64;
    for idx in 0..x.len() {
        let mut plus = x.clone();
        plus.data_mut()[idx] += h;
        let mut minus = x.clone();
        minus.data_mut()[idx] -= h;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * h);
        worst = worst.max(relative_error(analytic.data()[idx], numeric));
    }
    Ok(worst)
}

/// Relative error per requested parameter coordinate `(param, flat index)`.
pub fn check_params<F>(store: &ParamStore, coords: &[(ParamId, usize)], h: f64, loss: F) -> Result<Vec<f64>>
where
    F: for<'t> Fn(&Bound<'t>) -> Result<Var<'t>>,
{
    let tape = Tape::new();
    let bound = store.bind(&tape);
    let l = loss(&bound)?;
    scalar_loss(l)?;
    let grads = bound.gradients(&tape.backward(l)?);
    let mut work = store.clone();
    let mut eval = |id: ParamId, idx: usize, value: f64| -> Result<f64> {
        let saved = work.get(id).data()[idx];
        work.get_mut(id).data_mut()[idx] = value;
        let tape = Tape::new();
        let out = scalar_loss(loss(&work.bind(&tape))?);
        work.get_mut(id).data_mut()[idx] = saved;
        out
    };
    coords
        .iter()
        .map(|&(id, idx)| {
            let x = store.get(id).data()[idx];
            let numeric = (eval(id, idx, x + h)? - eval(id, idx, x - h)?) / (2.0 * h);
            Ok(relative_error(grads[id.index()].data()[idx], numeric))
        })
        .collect()
}
