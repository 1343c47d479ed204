use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::heads::{log_sum_exp, sigmoid, softmax, Head, Targets};
use super::inputs::Inputs;
use super::network::MlpParams;
use super::train::ExampleSet;

/// Decision threshold of the substring probe: positive iff `p > 0.5`.
pub const SUBSTRING_THRESHOLD: f64 = 0.5;

fn single(params: &MlpParams<impl Scalar>, parts: &[&[impl Scalar]]) -> Result<()> {
    let width: usize = parts.iter().map(|p| p.len()).sum();
    if width != params.in_dim() {
        return Err(Error::Shape(format!(
            "input width {width} but the probe expects {}",
            params.in_dim()
        )));
    }
    Ok(())
}

fn run<T: Scalar>(params: &MlpParams<T>, parts: &[&[T]]) -> Result<Vec<T>> {
    single(params, parts)?;
    let mut x = Inputs::new(super::InputLayout::Dense, params.in_dim());
    x.push_concat(parts);
    Ok(params.forward(&x)?.0)
}

pub fn predict_length<T: Scalar>(params: &MlpParams<T>, x: &[T]) -> Result<T> {
    Head::<T>::Regression.check(params)?;
    Ok(run(params, &[x])?[0])
}

/// `sigma(f(v_w + v_t))` with the word embedding first.
pub fn predict_substring<T: Scalar>(params: &MlpParams<T>, word: &[T], sub: &[T]) -> Result<T> {
    Head::<T>::Binary.check(params)?;
    Ok(sigmoid(run(params, &[word, sub])?[0]))
}

/// Softmax over characters of the output's dot products with `decoder` rows.
pub fn predict_char<T: Scalar>(params: &MlpParams<T>, x: &[T], decoder: &[T], n_chars: usize) -> Result<Vec<T>> {
    let head = Head::Char { decoder, n_chars };
    head.check(params)?;
    let out = run(params, &[x])?;
    Ok(softmax(&Head::char_scores(decoder, n_chars, &out, 1)))
}

/// Batched predictions for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictions<T> {
    Real(Vec<T>),
    Probability(Vec<T>),
    /// Arg-max class and its log-probability.
    Class(Vec<(usize, T)>),
}

impl<T> Predictions<T> {
    pub fn len(&self) -> usize {
        match self {
            Predictions::Real(v) | Predictions::Probability(v) => v.len(),
            Predictions::Class(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn predict_set<T, D>(
    params: &MlpParams<T>,
    data: &D,
    ids: &[usize],
    head: &Head<'_, T>,
    batch_size: usize,
) -> Result<Predictions<T>>
where
    T: Scalar,
    D: ExampleSet<T> + ?Sized,
{
    head.check(params)?;
    let mut inputs = Inputs::new(data.layout(), data.input_dim());
    let mut targets: Targets<T> = head.empty_targets();
    let mut preds = match head {
        Head::Regression => Predictions::Real(Vec::with_capacity(ids.len())),
        Head::Binary => Predictions::Probability(Vec::with_capacity(ids.len())),
        Head::Char { .. } => Predictions::Class(Vec::with_capacity(ids.len())),
    };
    for chunk in ids.chunks(batch_size.max(1)) {
        inputs.clear();
        targets.clear();
        data.gather(chunk, &mut inputs, &mut targets)?;
        let (out, _) = params.forward(&inputs)?;
        match (&mut preds, head) {
            (Predictions::Real(v), _) => v.extend(out),
            (Predictions::Probability(v), _) => v.extend(out.into_iter().map(sigmoid)),
            (Predictions::Class(v), Head::Char { decoder, n_chars }) => {
                let scores = Head::char_scores(decoder, *n_chars, &out, chunk.len());
                for row in scores.chunks(*n_chars) {
                    let (best, &top) = row
                        .iter()
                        .enumerate()
                        .fold((0, &row[0]), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
                    v.push((best, top - log_sum_exp(row)));
                }
            }
            _ => unreachable!(),
        }
    }
    Ok(preds)
}

const CHECKPOINT_FORMAT: &str = "surfprobe-mlp";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct Checkpoint<T> {
    format: String,
    version: u32,
    params: MlpParams<T>,
}

/// Writes parameters as versioned JSON. Floats use shortest round-trip
/// formatting so [`load_checkpoint`] restores them bit for bit.
pub fn save_checkpoint<T: Scalar>(params: &MlpParams<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let ck = Checkpoint {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        params: params.clone(),
    };
    serde_json::to_writer(&mut w, &ck)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<MlpParams<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint<T> = serde_json::from_reader(BufReader::new(file))?;
    if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
        return Err(Error::Validation(format!(
            "unsupported checkpoint {} v{}",
            ck.format, ck.version
        )));
    }
    let expected = MlpParams::<T>::zeros(ck.params.config)?;
    let shapes_ok = expected
        .layers
        .iter()
        .zip(&ck.params.layers)
        .all(|(a, b)| a.weights.len() == b.weights.len() && a.bias.len() == b.bias.len())
        && expected.layers.len() == ck.params.layers.len();
    if !shapes_ok || !ck.params.is_finite() {
        return Err(Error::Validation("checkpoint parameters do not match their config".into()));
    }
    Ok(ck.params)
}
