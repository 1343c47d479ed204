//! Task heads: how the network output becomes a loss and a prediction.
//!
//! * regression: one output, squared error against the length;
//! * binary: one logit, sigmoid cross-entropy;
//! * char: the output is a vector in embedding space scored against the
//!   frozen embeddings of single-character tokens, softmax cross-entropy.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::inputs::Inputs;
use super::linalg::{mm_nn, mm_nt};
use super::network::{ForwardCache, MlpParams};

#[derive(Debug, Clone, Copy)]
pub enum Head<'a, T> {
    Regression,
    Binary,
    /// `decoder` is the row-major `n_chars x dim` matrix of character
    /// embeddings. It is read, never updated.
    Char { decoder: &'a [T], n_chars: usize },
}

/// Per-example supervision for one batch.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets<T> {
    Real(Vec<T>),
    Binary(Vec<bool>),
    Class(Vec<usize>),
}

impl<T> Targets<T> {
    pub fn len(&self) -> usize {
        match self {
            Targets::Real(v) => v.len(),
            Targets::Binary(v) => v.len(),
            Targets::Class(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn clear(&mut self) {
        match self {
            Targets::Real(v) => v.clear(),
            Targets::Binary(v) => v.clear(),
            Targets::Class(v) => v.clear(),
        }
    }
}

impl<'a, T: Scalar> Head<'a, T> {
    /// Output width the network must have for this head.
    pub fn required_out_dim(&self) -> usize {
        match self {
            Head::Regression | Head::Binary => 1,
            Head::Char { decoder, n_chars } => decoder.len() / (*n_chars).max(1),
        }
    }

    pub fn check(&self, params: &MlpParams<T>) -> Result<()> {
        if let Head::Char { decoder, n_chars } = self {
            if *n_chars == 0 || decoder.len() % n_chars != 0 {
                return Err(Error::Shape(format!(
                    "decoder of {} values is not {n_chars} rows",
                    decoder.len()
                )));
            }
        }
        if params.out_dim() != self.required_out_dim() {
            return Err(Error::Shape(format!(
                "probe output width {} but the head needs {}",
                params.out_dim(),
                self.required_out_dim()
            )));
        }
        Ok(())
    }

    /// Empty target buffer of the kind this head consumes.
    pub fn empty_targets(&self) -> Targets<T> {
        match self {
            Head::Regression => Targets::Real(Vec::new()),
            Head::Binary => Targets::Binary(Vec::new()),
            Head::Char { .. } => Targets::Class(Vec::new()),
        }
    }

    /// Character scores `batch x n_chars` for network outputs `out`.
    pub(crate) fn char_scores(decoder: &[T], n_chars: usize, out: &[T], batch: usize) -> Vec<T> {
        let dim = decoder.len() / n_chars;
        let mut scores = vec![T::zero(); batch * n_chars];
        mm_nt(batch, dim, n_chars, out, decoder, &mut scores, false);
        scores
    }

    /// Mean loss over the batch and its gradient with respect to `out`.
    pub fn loss_and_output_grad(&self, out: &[T], targets: &Targets<T>) -> Result<(T, Vec<T>)> {
        let b = targets.len();
        if b == 0 {
            return Err(Error::Validation("empty batch".into()));
        }
        let inv_b = T::one() / T::from_usize(b).unwrap();
        let two = T::one() + T::one();
        match (self, targets) {
            (Head::Regression, Targets::Real(y)) => {
                let mut loss = T::zero();
                let grad = out
                    .iter()
                    .zip(y)
                    .map(|(&p, &t)| {
                        let d = p - t;
                        loss += d * d;
                        two * d * inv_b
                    })
                    .collect();
                Ok((loss * inv_b, grad))
            }
            (Head::Binary, Targets::Binary(y)) => {
                let mut loss = T::zero();
                let grad = out
                    .iter()
                    .zip(y)
                    .map(|(&z, &pos)| {
                        let t = if pos { T::one() } else { T::zero() };
                        // softplus(z) - t z, computed without overflow
                        loss += z.max(T::zero()) - z * t + (-z.abs()).exp().ln_1p();
                        (sigmoid(z) - t) * inv_b
                    })
                    .collect();
                Ok((loss * inv_b, grad))
            }
            (Head::Char { decoder, n_chars }, Targets::Class(y)) => {
                let c = *n_chars;
                if let Some(bad) = y.iter().find(|&&k| k >= c) {
                    return Err(Error::Label(format!("class {bad} with only {c} characters")));
                }
                let mut probs = Self::char_scores(decoder, c, out, b);
                let mut loss = T::zero();
                for (r, &k) in y.iter().enumerate() {
                    let row = &mut probs[r * c..(r + 1) * c];
                    let lse = log_sum_exp(row);
                    loss += lse - row[k];
                    for v in row.iter_mut() {
                        *v = (*v - lse).exp();
                    }
                    row[k] -= T::one();
                    for v in row.iter_mut() {
                        *v *= inv_b;
                    }
                }
                let dim = decoder.len() / c;
                let mut grad = vec![T::zero(); b * dim];
                mm_nn(b, c, dim, &probs, decoder, &mut grad, false);
                Ok((loss * inv_b, grad))
            }
            _ => Err(Error::Label("targets do not match the head".into())),
        }
    }
}

pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

pub(crate) fn log_sum_exp<T: Scalar>(row: &[T]) -> T {
    let m = row.iter().copied().fold(T::neg_infinity(), T::max);
    m + row.iter().map(|&v| (v - m).exp()).sum::<T>().ln()
}

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(row: &[T]) -> Vec<T> {
    let lse = log_sum_exp(row);
    row.iter().map(|&v| (v - lse).exp()).collect()
}

/// Mean loss over the batch and the gradient of every parameter.
pub fn loss_and_grad<T: Scalar>(
    params: &MlpParams<T>,
    x: &Inputs<T>,
    head: &Head<'_, T>,
    targets: &Targets<T>,
) -> Result<(T, MlpParams<T>)> {
    let mut grads = MlpParams::zeros(params.config)?;
    let mut cache = ForwardCache::default();
    let loss = loss_and_grad_into(params, x, head, targets, &mut cache, &mut grads)?;
    Ok((loss, grads))
}

/// As [`loss_and_grad`], reusing caller-owned buffers. `grads` is
/// overwritten.
pub(crate) fn loss_and_grad_into<T: Scalar>(
    params: &MlpParams<T>,
    x: &Inputs<T>,
    head: &Head<'_, T>,
    targets: &Targets<T>,
    cache: &mut ForwardCache<T>,
    grads: &mut MlpParams<T>,
) -> Result<T> {
    head.check(params)?;
    if x.rows() != targets.len() {
        return Err(Error::Shape(format!(
            "{} inputs but {} targets",
            x.rows(),
            targets.len()
        )));
    }
    if x.cols() != params.in_dim() {
        return Err(Error::Shape(format!(
            "input width {} but the probe expects {}",
            x.cols(),
            params.in_dim()
        )));
    }
    let out = params.forward_into(x, cache);
    let (loss, d_out) = head.loss_and_output_grad(&out, targets)?;
    grads.fill_zero();
    params.backward(x, cache, d_out, grads);
    Ok(loss)
}
