use crate::scalar::Scalar;

use super::config::Optimizer;
use super::network::MlpParams;

/// Optimizer state for one probe.
#[derive(Debug, Clone)]
pub struct OptimizerState<T> {
    kind: Optimizer,
    step: i32,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(kind: Optimizer, params: &MlpParams<T>) -> Self {
        let zeros = || -> Vec<Vec<T>> {
            match kind {
                Optimizer::Adam { .. } => params.slices().iter().map(|s| vec![T::zero(); s.len()]).collect(),
                Optimizer::Sgd { .. } => Vec::new(),
            }
        };
        OptimizerState {
            kind,
            step: 0,
            first: zeros(),
            second: zeros(),
        }
    }

    pub fn step(&mut self, params: &mut MlpParams<T>, grads: &MlpParams<T>) {
        self.step += 1;
        let grads = grads.slices();
        match self.kind {
            Optimizer::Sgd { learning_rate } => {
                let lr = T::from_f64_lossy(learning_rate);
                for (p, g) in params.slices_mut().into_iter().zip(grads) {
                    for (w, &d) in p.iter_mut().zip(g) {
                        *w -= lr * d;
                    }
                }
            }
            Optimizer::Adam {
                learning_rate,
                beta1,
                beta2,
                epsilon,
            } => {
                let t = self.step;
                let step_size = T::from_f64_lossy(learning_rate / (1.0 - beta1.powi(t)));
                let v_scale = T::from_f64_lossy(1.0 / (1.0 - beta2.powi(t)));
                let (b1, b2) = (T::from_f64_lossy(beta1), T::from_f64_lossy(beta2));
                let (c1, c2) = (T::one() - b1, T::one() - b2);
                let eps = T::from_f64_lossy(epsilon);
                let slots = params.slices_mut().into_iter().zip(grads);
                for ((p, g), (m, v)) in slots.zip(self.first.iter_mut().zip(self.second.iter_mut())) {
                    // zipped iterators so the loop vectorizes
                    for (((w, &d), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *m = b1 * *m + c1 * d;
                        *v = b2 * *v + c2 * d * d;
                        *w -= step_size * *m / ((*v * v_scale).sqrt() + eps);
                    }
                }
            }
        }
    }
}
