use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::network::Network;
use crate::error::{Error, Result};
use crate::exec::Parallelism;

/// Mini-batch settings for reconstruction training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Drives the per-epoch shuffle.
    pub seed: u64,
}

fn gather(data: &ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    let n = data.ncols();
    let mut out = Array2::zeros((idx.len(), n));
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).assign(&data.row(i));
    }
    out
}

/// Trains `net` to reconstruct `data` with Adam and MSE, starting from a
/// fresh optimizer state. Returns the mean training loss of each epoch.
///
/// Rows are reshuffled every epoch from a generator seeded with
/// `opts.seed`; frozen layers are left as they are.
pub fn fit_autoencoder(net: &mut Network, data: ArrayView2<f64>, opts: &FitOptions) -> Result<Vec<f64>> {
    fit_autoencoder_with(net, data, opts, Parallelism::default())
}

pub fn fit_autoencoder_with(
    net: &mut Network,
    data: ArrayView2<f64>,
    opts: &FitOptions,
    par: Parallelism,
) -> Result<Vec<f64>> {
    if opts.batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be at least 1".into()));
    }
    if data.ncols() != net.input_dim() || net.output_dim() != net.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "data has {} columns, network maps {} -> {}",
            data.ncols(),
            net.input_dim(),
            net.output_dim()
        )));
    }
    if opts.epochs > 0 && data.nrows() == 0 {
        return Err(Error::EmptyResult("no training rows".into()));
    }
    let mut adam = AdamState::new(net, opts.learning_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..data.nrows()).collect();
    let mut history = Vec::with_capacity(opts.epochs);
    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for idx in order.chunks(opts.batch_size) {
            let batch = gather(&data, idx);
            let (grads, loss) = net.backward_with(batch.view(), batch.view(), par)?;
            adam.step(net, &grads)?;
            weighted += loss * idx.len() as f64;
        }
        let mean = weighted / data.nrows() as f64;
        log::debug!("epoch {epoch}: loss {mean:.6e}");
        history.push(mean);
    }
    Ok(history)
}
