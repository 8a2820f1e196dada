use rand::seq::SliceRandom;
use rand::Rng;

use super::ops::{self, Mode};
use super::optim::{adam_step, AdamState};
use super::{Network, NnError};
use crate::data::ImageDataset;
use crate::scalar::Scalar;

pub const DEFAULT_BATCH: usize = 64;
pub const DEFAULT_LR: f64 = 1e-4;

/// One shuffled pass of Adam updates. Returns the sample-weighted mean of
/// the batch losses.
pub fn train_epoch<T: Scalar, R: Rng>(
    net: &mut Network<T>,
    adam: &mut AdamState<T>,
    ds: &ImageDataset<T>,
    batch: usize,
    lr: f64,
    rng: &mut R,
) -> Result<T, NnError> {
    if ds.is_empty() {
        return Err(NnError::Config("empty training set".into()));
    }
    if batch == 0 {
        return Err(NnError::Config("batch size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(rng);
    let mut total = T::zero();
    for (b, idx) in order.chunks(batch).enumerate() {
        let sub = ds.select(idx);
        let loss = net.loss_and_grad(sub.images(), sub.labels(), Mode::Train)?;
        if !loss.is_finite() {
            return Err(NnError::Divergence { batch: b });
        }
        let (params, grads) = net.params_and_grads();
        adam_step(params, grads, adam, lr)?;
        total = total + loss * T::from_usize(idx.len()).unwrap();
    }
    Ok(total / T::from_usize(ds.len()).unwrap())
}

fn chunks<T: Scalar>(ds: &ImageDataset<T>, batch: usize) -> impl Iterator<Item = ImageDataset<T>> + '_ {
    let idx: Vec<usize> = (0..ds.len()).collect();
    let batch = batch.max(1);
    (0..ds.len().div_ceil(batch)).map(move |c| ds.select(&idx[c * batch..((c + 1) * batch).min(idx.len())]))
}

/// Fraction of samples whose highest logit (lowest index on ties) is the label.
pub fn evaluate_top1<T: Scalar>(net: &Network<T>, ds: &ImageDataset<T>, batch: usize) -> Result<f64, NnError> {
    if ds.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for sub in chunks(ds, batch) {
        let pred = net.predict(sub.images())?.argmax_rows();
        correct += pred.iter().zip(sub.labels()).filter(|(p, l)| p == l).count();
    }
    Ok(correct as f64 / ds.len() as f64)
}

/// Eval-mode mean cross-entropy.
pub fn evaluate_loss<T: Scalar>(net: &Network<T>, ds: &ImageDataset<T>, batch: usize) -> Result<T, NnError> {
    let mut total = T::zero();
    for sub in chunks(ds, batch) {
        let (loss, _) = ops::softmax_cross_entropy(&net.predict(sub.images())?, sub.labels())?;
        total = total + loss * T::from_usize(sub.len()).unwrap();
    }
    Ok(total / T::from_usize(ds.len().max(1)).unwrap())
}
