use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

use super::config::MlpConfig;
use super::inputs::{InputLayout, Inputs};
use super::linalg::{mm_nn, mm_nt, mm_tn};

/// Affine map `y = x W + b`, with `W` stored row-major as `in_dim x out_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Layer<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Layer {
            in_dim,
            out_dim,
            weights: vec![T::zero(); in_dim * out_dim],
            bias: vec![T::zero(); out_dim],
        }
    }
}

/// Parameters of an MLP probe. Also used to hold gradients, which have the
/// same shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MlpParams<T> {
    pub config: MlpConfig,
    pub layers: Vec<Layer<T>>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache<T> {
    /// Post-ReLU output of every hidden layer, `batch x hidden_dim`.
    pub hidden: Vec<Vec<T>>,
}

impl<T: Scalar> MlpParams<T> {
    pub fn zeros(config: MlpConfig) -> Result<Self> {
        config.validate()?;
        let layers = config
            .layer_dims()
            .into_iter()
            .map(|(i, o)| Layer::zeros(i, o))
            .collect();
        Ok(MlpParams { config, layers })
    }

    /// He-uniform weights, `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, and
    /// zero biases.
    pub fn init(config: MlpConfig, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(config)?;
        let mut rng = seed::rng(seed::derive_seed(seed, "init", &[]));
        for layer in &mut params.layers {
            let bound = (6.0 / layer.in_dim as f64).sqrt();
            for w in &mut layer.weights {
                *w = T::from_f64_lossy(rng.gen_range(-bound..bound));
            }
        }
        Ok(params)
    }

    pub fn in_dim(&self) -> usize {
        self.config.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.config.out_dim
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Every parameter slice in a fixed order: per layer, weights then bias.
    pub fn slices(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub(crate) fn fill_zero(&mut self) {
        for s in self.slices_mut() {
            s.fill(T::zero());
        }
    }

    /// Runs the network on a batch. Returns the `batch x out_dim` output of
    /// the final (linear) layer and the cache needed by [`Self::backward`].
    pub fn forward(&self, x: &Inputs<T>) -> Result<(Vec<T>, ForwardCache<T>)> {
        if x.cols() != self.in_dim() {
            return Err(Error::Shape(format!(
                "input width {} but the probe expects {}",
                x.cols(),
                self.in_dim()
            )));
        }
        if !x.all_finite() {
            return Err(Error::Validation("non-finite probe input".into()));
        }
        let mut cache = ForwardCache {
            hidden: Vec::with_capacity(self.layers.len().saturating_sub(1)),
        };
        let out = self.forward_into(x, &mut cache);
        Ok((out, cache))
    }

    pub(crate) fn forward_into(&self, x: &Inputs<T>, cache: &mut ForwardCache<T>) -> Vec<T> {
        let b = x.rows();
        let n = self.layers.len();
        cache.hidden.resize_with(n - 1, Vec::new);
        let mut output = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(b * layer.out_dim);
            for _ in 0..b {
                z.extend_from_slice(&layer.bias);
            }
            if l == 0 {
                first_layer_forward(layer, x, &mut z);
            } else {
                mm_nn(b, layer.in_dim, layer.out_dim, &cache.hidden[l - 1], &layer.weights, &mut z, true);
            }
            if l + 1 < n {
                for v in &mut z {
                    if *v < T::zero() {
                        *v = T::zero();
                    }
                }
                cache.hidden[l] = z;
            } else {
                output = z;
            }
        }
        output
    }

    /// Accumulates parameter gradients into `grads` given `d_out`, the loss
    /// gradient with respect to the final output (`batch x out_dim`).
    /// Inputs are frozen, so no gradient is propagated into them.
    pub fn backward(&self, x: &Inputs<T>, cache: &ForwardCache<T>, d_out: Vec<T>, grads: &mut MlpParams<T>) {
        let b = x.rows();
        let mut dz = d_out;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let g = &mut grads.layers[l];
            for r in 0..b {
                let row = &dz[r * layer.out_dim..(r + 1) * layer.out_dim];
                for (gb, &d) in g.bias.iter_mut().zip(row) {
                    *gb += d;
                }
            }
            if l == 0 {
                first_layer_backward(x, &dz, g);
                break;
            }
            let prev = &cache.hidden[l - 1];
            mm_tn(layer.in_dim, b, layer.out_dim, prev, &dz, &mut g.weights, true);
            let mut da = vec![T::zero(); b * layer.in_dim];
            mm_nt(b, layer.out_dim, layer.in_dim, &dz, &layer.weights, &mut da, false);
            for (d, &a) in da.iter_mut().zip(prev) {
                if a <= T::zero() {
                    *d = T::zero();
                }
            }
            dz = da;
        }
    }
}

fn first_layer_forward<T: Scalar>(layer: &Layer<T>, x: &Inputs<T>, z: &mut [T]) {
    let (b, o) = (x.rows(), layer.out_dim);
    match x.layout() {
        InputLayout::Dense => mm_nn(b, layer.in_dim, o, x.dense(), &layer.weights, z, true),
        InputLayout::Sparse => {
            for r in 0..b {
                let zr = &mut z[r * o..(r + 1) * o];
                for (j, v) in x.sparse_row(r) {
                    let wj = &layer.weights[j * o..(j + 1) * o];
                    for (zz, &w) in zr.iter_mut().zip(wj) {
                        *zz += v * w;
                    }
                }
            }
        }
    }
}

fn first_layer_backward<T: Scalar>(x: &Inputs<T>, dz: &[T], g: &mut Layer<T>) {
    let (b, o) = (x.rows(), g.out_dim);
    match x.layout() {
        InputLayout::Dense => mm_tn(g.in_dim, b, o, x.dense(), dz, &mut g.weights, true),
        InputLayout::Sparse => {
            for r in 0..b {
                let dr = &dz[r * o..(r + 1) * o];
                for (j, v) in x.sparse_row(r) {
                    let gj = &mut g.weights[j * o..(j + 1) * o];
                    for (gg, &d) in gj.iter_mut().zip(dr) {
                        *gg += v * d;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic() {
        let c = MlpConfig::new(5, 2).with_hidden(7);
        let a = MlpParams::<f64>::init(c, 11).unwrap();
        assert_eq!(a, MlpParams::init(c, 11).unwrap());
        assert_ne!(a, MlpParams::init(c, 12).unwrap());
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn init_rejects_zero_dims() {
        assert!(MlpParams::<f64>::init(MlpConfig::new(0, 1), 0).is_err());
    }

    #[test]
    fn he_uniform_scale() {
        // U(-a, a) with a = sqrt(6 / fan_in) has standard deviation sqrt(2 / fan_in).
        let c = MlpConfig::new(100, 100).with_hidden(100);
        let p = MlpParams::<f64>::init(c, 1).unwrap();
        let w = &p.layers[0].weights;
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let std = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w.len() as f64).sqrt();
        let he = (2.0f64 / 100.0).sqrt();
        assert!((std - he).abs() / he < 0.1, "std {std} vs {he}");
        let bound = (6.0f64 / 100.0).sqrt();
        let max = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max <= bound && max > 0.9 * bound);
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let p = MlpParams::<f64>::zeros(MlpConfig::new(3, 2).with_hidden(4)).unwrap();
        let x = Inputs::from_dense(3, vec![1.0, -2.0, 3.0, 0.5, 0.5, 0.5]).unwrap();
        let (y, _) = p.forward(&x).unwrap();
        assert_eq!(y, vec![0.0; 4]);
    }

    #[test]
    fn hand_computed_two_by_two() {
        // one hidden layer of width 2, identity-like first map
        let mut p = MlpParams::<f64>::zeros(MlpConfig::new(2, 1).with_hidden(2).with_layers(2)).unwrap();
        p.layers[0].weights = vec![1.0, 0.0, 0.0, 1.0];
        p.layers[0].bias = vec![0.0, -1.0];
        p.layers[1].weights = vec![2.0, 3.0];
        p.layers[1].bias = vec![0.5];
        // x = (1, 3): h = relu(1, 2) = (1, 2); y = 2 + 6 + 0.5
        // x = (-1, 0.5): h = relu(-1, -0.5) = (0, 0); y = 0.5
        let x = Inputs::from_dense(2, vec![1.0, 3.0, -1.0, 0.5]).unwrap();
        let (y, cache) = p.forward(&x).unwrap();
        assert_eq!(y, vec![8.5, 0.5]);
        assert_eq!(cache.hidden[0], vec![1.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn batch_of_b_gives_b_outputs() {
        let p = MlpParams::<f64>::init(MlpConfig::new(4, 3).with_hidden(5), 0).unwrap();
        let x = Inputs::from_dense(4, (0..28).map(|i| i as f64 / 10.0).collect()).unwrap();
        let (y, _) = p.forward(&x).unwrap();
        assert_eq!(y.len(), 7 * 3);
    }

    #[test]
    fn sparse_and_dense_forward_agree() {
        let p = MlpParams::<f64>::init(MlpConfig::new(6, 2).with_hidden(5), 3).unwrap();
        let rows = [[0.0, 1.0, 0.0, 0.0, -2.0, 0.0], [0.5, 0.0, 0.0, 0.0, 0.0, 0.0]];
        let mut d = Inputs::new(InputLayout::Dense, 6);
        let mut s = Inputs::new(InputLayout::Sparse, 6);
        for r in &rows {
            d.push_row(r);
            s.push_row(r);
        }
        let (yd, cd) = p.forward(&d).unwrap();
        let (ys, cs) = p.forward(&s).unwrap();
        for (a, b) in yd.iter().zip(&ys) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut gd = MlpParams::zeros(p.config).unwrap();
        let mut gs = MlpParams::zeros(p.config).unwrap();
        p.backward(&d, &cd, vec![1.0; 4], &mut gd);
        p.backward(&s, &cs, vec![1.0; 4], &mut gs);
        for (a, b) in gd.slices().iter().zip(gs.slices()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = MlpParams::<f64>::init(MlpConfig::new(2, 1).with_hidden(3), 0).unwrap();
        assert!(p.forward(&Inputs::from_dense(3, vec![0.0; 3]).unwrap()).is_err());
        assert!(p.forward(&Inputs::from_dense(2, vec![f64::NAN, 0.0]).unwrap()).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let p = MlpParams::<f32>::init(MlpConfig::new(3, 1).with_hidden(4), 0).unwrap();
        let (y, _) = p.forward(&Inputs::from_dense(3, vec![1.0f32, 2.0, 3.0]).unwrap()).unwrap();
        assert!(y[0].is_finite());
    }
}
