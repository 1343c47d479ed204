use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

use super::config::TrainConfig;
use super::heads::{loss_and_grad_into, Head, Targets};
use super::inputs::{InputLayout, Inputs};
use super::network::{ForwardCache, MlpParams};
use super::optim::OptimizerState;

/// A collection of examples the trainer can batch on demand.
pub trait ExampleSet<T: Scalar> {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn input_dim(&self) -> usize;

    fn layout(&self) -> InputLayout;

    /// Appends examples `ids` to `inputs` and `targets`.
    fn gather(&self, ids: &[usize], inputs: &mut Inputs<T>, targets: &mut Targets<T>) -> Result<()>;
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: MlpParams<T>,
    /// Mean per-example training loss of each epoch.
    pub loss_curve: Vec<f64>,
}

/// Minibatch training over the examples `ids` of `data`.
///
/// Every epoch visits all examples once in an order drawn from
/// `(config.seed, epoch)`; the last batch may be short.
pub fn train<T, D>(
    mut params: MlpParams<T>,
    data: &D,
    ids: &[usize],
    config: &TrainConfig,
    head: &Head<'_, T>,
) -> Result<TrainOutcome<T>>
where
    T: Scalar,
    D: ExampleSet<T> + ?Sized,
{
    config.validate()?;
    head.check(&params)?;
    if ids.is_empty() {
        return Err(Error::Validation("no training examples".into()));
    }
    if data.input_dim() != params.in_dim() {
        return Err(Error::Shape(format!(
            "examples have width {} but the probe expects {}",
            data.input_dim(),
            params.in_dim()
        )));
    }

    let mut opt = OptimizerState::new(config.optimizer, &params);
    let mut grads = MlpParams::zeros(params.config)?;
    let mut cache = ForwardCache::default();
    let mut inputs = Inputs::new(data.layout(), data.input_dim());
    let mut targets = head.empty_targets();
    let mut order = ids.to_vec();
    let mut curve = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.copy_from_slice(ids);
        order.shuffle(&mut seed::rng(seed::derive_seed(config.seed, "epoch", &[epoch as u64])));
        let mut total = 0.0;
        for (step, batch) in order.chunks(config.batch_size).enumerate() {
            inputs.clear();
            targets.clear();
            data.gather(batch, &mut inputs, &mut targets)?;
            let loss = loss_and_grad_into(&params, &inputs, head, &targets, &mut cache, &mut grads)?;
            let loss = loss.to_f64_lossy();
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, step, loss });
            }
            total += loss * batch.len() as f64;
            opt.step(&mut params, &grads);
        }
        curve.push(total / ids.len() as f64);
    }
    if !params.is_finite() {
        return Err(Error::Diverged {
            epoch: config.epochs,
            step: 0,
            loss: f64::NAN,
        });
    }
    Ok(TrainOutcome {
        params,
        loss_curve: curve,
    })
}

/// Rows of a dense matrix with per-row targets; handy for tests and small
/// experiments that do not go through an embedding table.
#[derive(Debug, Clone)]
pub struct MatrixSet<T> {
    pub cols: usize,
    pub rows: Vec<T>,
    pub targets: Targets<T>,
}

impl<T: Scalar> ExampleSet<T> for MatrixSet<T> {
    fn len(&self) -> usize {
        self.targets.len()
    }

    fn input_dim(&self) -> usize {
        self.cols
    }

    fn layout(&self) -> InputLayout {
        InputLayout::Dense
    }

    fn gather(&self, ids: &[usize], inputs: &mut Inputs<T>, targets: &mut Targets<T>) -> Result<()> {
        for &i in ids {
            inputs.push_row(&self.rows[i * self.cols..(i + 1) * self.cols]);
            match (&self.targets, &mut *targets) {
                (Targets::Real(src), Targets::Real(dst)) => dst.push(src[i]),
                (Targets::Binary(src), Targets::Binary(dst)) => dst.push(src[i]),
                (Targets::Class(src), Targets::Class(dst)) => dst.push(src[i]),
                _ => return Err(Error::Label("targets do not match the head".into())),
            }
        }
        Ok(())
    }
}
