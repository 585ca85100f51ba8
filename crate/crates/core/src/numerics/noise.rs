use super::rng::Rng;
use super::tensor::Tensor;
use crate::error::{Error, Result};

enum Source<'a> {
    Zero,
    Sample(&'a mut Rng),
    Replay { draws: &'a [Tensor], pos: usize },
}

/// Supplier of Gumbel noise blocks.
///
/// Draws can be sampled, replayed from a fixed list (for tests that need
/// the same noise under a permutation), or all zero. Every draw is logged so
/// a sampled run can be replayed later.
pub struct Noise<'a> {
    source: Source<'a>,
    log: Vec<Tensor>,
}

impl<'a> Noise<'a> {
    pub fn zero() -> Self {
        Noise {
            source: Source::Zero,
            log: Vec::new(),
        }
    }

    pub fn sample(rng: &'a mut Rng) -> Self {
        Noise {
            source: Source::Sample(rng),
            log: Vec::new(),
        }
    }

    pub fn replay(draws: &'a [Tensor]) -> Self {
        Noise {
            source: Source::Replay { draws, pos: 0 },
            log: Vec::new(),
        }
    }

    pub fn draw(&mut self, rows: usize, cols: usize) -> Result<Tensor> {
        let t = match &mut self.source {
            Source::Zero => Tensor::zeros(rows, cols),
            Source::Sample(rng) => rng.gumbel_tensor(rows, cols),
            Source::Replay { draws, pos } => {
                let t = draws
                    .get(*pos)
                    .ok_or_else(|| Error::contract(format!("noise replay exhausted after {pos} draws")))?;
                if t.shape() != [rows, cols] {
                    return Err(Error::Shape {
                        op: "noise_replay",
                        left: t.shape(),
                        right: [rows, cols],
                    });
                }
                *pos += 1;
                t.clone()
            }
        };
        self.log.push(t.clone());
        Ok(t)
    }

    pub fn log(&self) -> &[Tensor] {
        &self.log
    }

    pub fn into_log(self) -> Vec<Tensor> {
        self.log
    }
}
