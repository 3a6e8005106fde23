//! Seeded parameter initialization and dropout masks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Xavier/Glorot uniform initialization over `±sqrt(6 / (fan_in + fan_out))`.
///
/// For a matrix `[rows x cols]` the fans are `rows` and `cols`; a 1-D shape
/// uses its length for both.
pub fn xavier_init(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    xavier_with(shape, &mut rng)
}

pub fn xavier_with(shape: &[usize], rng: &mut impl Rng) -> Tensor {
    let (fan_in, fan_out) = match shape {
        [n] => (*n, *n),
        [r, rest @ ..] => (*r, rest.iter().product()),
        [] => (1, 1),
    };
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let numel: usize = shape.iter().product();
    let data = (0..numel).map(|_| rng.random_range(-bound..=bound)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape/data agree by construction")
}

/// Gaussian vector with zero mean and standard deviation `std`.
pub fn gaussian_vec(len: usize, std: f64, rng: &mut impl Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, std).expect("finite positive std");
    (0..len).map(|_| normal.sample(rng)).collect()
}

/// Inverted-dropout mask for a tensor of `shape`: each entry is
/// `1 / keep_prob` with probability `keep_prob`, else 0. In inference mode,
/// or with `keep_prob == 1`, the mask is all ones.
pub fn dropout_mask(shape: &[usize], keep_prob: f64, training: bool, rng: &mut impl Rng) -> Result<Tensor> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(Error::InvalidArgument(format!("keep_prob must lie in (0, 1], got {keep_prob}")));
    }
    if !training || keep_prob == 1.0 {
        return Ok(Tensor::full(shape, 1.0));
    }
    let numel: usize = shape.iter().product();
    let scale = 1.0 / keep_prob;
    let data = (0..numel)
        .map(|_| if rng.random::<f64>() < keep_prob { scale } else { 0.0 })
        .collect();
    Tensor::new(shape.to_vec(), data)
}

/// Applies [`dropout_mask`] to a plain tensor.
pub fn dropout(x: &Tensor, keep_prob: f64, training: bool, rng: &mut impl Rng) -> Result<Tensor> {
    let mask = dropout_mask(x.shape(), keep_prob, training, rng)?;
    x.zip_map(&mask, |v, m| v * m)
}
