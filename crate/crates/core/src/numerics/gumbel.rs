use super::rng::Rng;
use super::tape::{softmax_rows, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// One-hot rows at the argmax of each row of `x` (lowest index wins ties).
pub fn one_hot_argmax(x: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        out.set(i, x.argmax_row(i), 1.0);
    }
    out
}

/// Gumbel-softmax with caller-supplied noise.
///
/// Soft mode returns `softmax((logits + noise) / temperature)` row-wise. Hard
/// mode returns the one-hot argmax of those rows in the forward pass and the
/// soft sample's gradient in the backward pass.
pub fn gumbel_softmax_with_noise<'t>(logits: Var<'t>, noise: &Tensor, temperature: f64, hard: bool) -> Result<Var<'t>> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::config(format!(
            "gumbel temperature must be positive, got {temperature}"
        )));
    }
    let noise = logits.tape().constant(noise.clone());
    let soft = logits.add(noise)?.scale(1.0 / temperature).softmax_rows();
    if hard {
        let hot = one_hot_argmax(&soft.value_ref());
        Var::straight_through(hot, soft)
    } else {
        Ok(soft)
    }
}

pub fn gumbel_softmax<'t>(logits: Var<'t>, temperature: f64, hard: bool, rng: &mut Rng) -> Result<Var<'t>> {
    let [r, c] = logits.shape();
    let noise = rng.gumbel_tensor(r, c);
    gumbel_softmax_with_noise(logits, &noise, temperature, hard)
}

/// Forward-only soft sample, for callers that do not need a tape.
pub fn gumbel_soft_sample(logits: &Tensor, noise: &Tensor, temperature: f64) -> Result<Tensor> {
    if !(temperature > 0.0) {
        return Err(Error::config(format!(
            "gumbel temperature must be positive, got {temperature}"
        )));
    }
    Ok(softmax_rows(&logits.add(noise)?.scale(1.0 / temperature)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tape;

    #[test]
    fn hard_rows_are_one_hot() {
        let tape = Tape::new();
        let mut rng = Rng::new(1);
        let logits = tape.param(rng.uniform_tensor(6, 4, 2.0));
        let y = gumbel_softmax(logits, 1.0, true, &mut rng).unwrap().value();
        for i in 0..6 {
            assert_eq!(y.row(i).iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(y.row(i).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn rejects_non_positive_temperature() {
        let tape = Tape::new();
        let logits = tape.param(Tensor::zeros(1, 3));
        let mut rng = Rng::new(0);
        assert!(matches!(
            gumbel_softmax(logits, 0.0, false, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn high_temperature_approaches_uniform() {
        let tape = Tape::new();
        let mut rng = Rng::new(5);
        let logits = tape.param(Tensor::row_vector(&[3.0, -1.0, 0.5, 2.0]));
        let y = gumbel_softmax(logits, 1e6, false, &mut rng).unwrap().value();
        for &v in y.data() {
            assert!((v - 0.25).abs() < 1e-4);
        }
    }
}
