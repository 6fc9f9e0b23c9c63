use ndarray::{Array1, Array2, Zip};

use super::network::{Gradients, Network};
use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
struct LayerMoments {
    m_w: Array2<f64>,
    v_w: Array2<f64>,
    m_b: Array1<f64>,
    v_b: Array1<f64>,
    m_s: f64,
    v_s: f64,
}

/// Adam optimizer state with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    moments: Vec<LayerMoments>,
    pub step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

/// Constants of one optimizer step; `c1`, `c2` are the bias corrections.
struct StepRule {
    lr: f64,
    b1: f64,
    b2: f64,
    eps: f64,
    c1: f64,
    c2: f64,
}

impl StepRule {
    #[inline]
    fn update(&self, p: &mut f64, m: &mut f64, v: &mut f64, g: f64) {
        *m = self.b1 * *m + (1.0 - self.b1) * g;
        *v = self.b2 * *v + (1.0 - self.b2) * g * g;
        let m_hat = *m / self.c1;
        let v_hat = *v / self.c2;
        *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
    }
}

impl AdamState {
    /// Fresh state (zero moments) shaped like `net`.
    pub fn new(net: &Network, learning_rate: f64) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        Ok(Self {
            moments: net
                .layers()
                .iter()
                .map(|l| LayerMoments {
                    m_w: Array2::zeros(l.weights.raw_dim()),
                    v_w: Array2::zeros(l.weights.raw_dim()),
                    m_b: Array1::zeros(l.biases.len()),
                    v_b: Array1::zeros(l.biases.len()),
                    m_s: 0.0,
                    v_s: 0.0,
                })
                .collect(),
            step_count: 0,
            learning_rate,
            beta1: BETA1,
            beta2: BETA2,
            epsilon: EPSILON,
        })
    }

    fn check(&self, net: &Network, grads: &Gradients) -> Result<()> {
        let ok = self.moments.len() == net.layers().len()
            && grads.layers.len() == net.layers().len()
            && net.layers().iter().zip(&self.moments).zip(&grads.layers).all(|((l, m), g)| {
                l.weights.raw_dim() == m.m_w.raw_dim()
                    && l.weights.raw_dim() == g.weights.raw_dim()
                    && l.biases.len() == m.m_b.len()
                    && l.biases.len() == g.biases.len()
            });
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(
                "optimizer state, gradients and network disagree".into(),
            ))
        }
    }

    /// One update of every non-frozen parameter. Frozen layers keep their
    /// values and their moments.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        self.check(net, grads)?;
        self.step_count += 1;
        let t = self.step_count.min(i32::MAX as u64) as i32;
        let rule = StepRule {
            lr: self.learning_rate,
            b1: self.beta1,
            b2: self.beta2,
            eps: self.epsilon,
            c1: 1.0 - self.beta1.powi(t),
            c2: 1.0 - self.beta2.powi(t),
        };
        for ((layer, mo), g) in net
            .layers_mut()
            .iter_mut()
            .zip(self.moments.iter_mut())
            .zip(&grads.layers)
        {
            if layer.frozen {
                continue;
            }
            Zip::from(&mut layer.weights)
                .and(&mut mo.m_w)
                .and(&mut mo.v_w)
                .and(&g.weights)
                .for_each(|p, m, v, &gv| rule.update(p, m, v, gv));
            Zip::from(&mut layer.biases)
                .and(&mut mo.m_b)
                .and(&mut mo.v_b)
                .and(&g.biases)
                .for_each(|p, m, v, &gv| rule.update(p, m, v, gv));
            if let Some(slope) = layer.prelu_slope.as_mut() {
                rule.update(slope, &mut mo.m_s, &mut mo.v_s, g.prelu_slope);
            }
        }
        Ok(())
    }

    /// First and second moment of a scalar layer's weight, for inspection.
    pub fn weight_moments(&self, layer: usize, row: usize, col: usize) -> (f64, f64) {
        let m = &self.moments[layer];
        (m.m_w[[row, col]], m.v_w[[row, col]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::network::{build_network, DenseLayer, FreezeGroup};
    use ndarray::array;

    fn scalar_net(w: f64) -> Network {
        let l0 = DenseLayer {
            weights: array![[w]],
            biases: array![0.0],
            prelu_slope: Some(0.25),
            frozen: false,
        };
        let l1 = DenseLayer {
            weights: array![[1.0]],
            biases: array![0.0],
            prelu_slope: None,
            frozen: false,
        };
        Network::new(vec![l0, l1], 1).unwrap()
    }

    fn grads_with(net: &Network, g00: f64) -> Gradients {
        let mut g = Gradients::zeros_like(net);
        g.layers[0].weights[[0, 0]] = g00;
        g
    }

    #[test]
    fn zero_gradients_leave_params_unchanged() {
        let mut net = build_network(5, &[4, 2, 4], 1).unwrap();
        let before = net.clone();
        let mut adam = AdamState::new(&net, 0.001).unwrap();
        adam.step(&mut net, &Gradients::zeros_like(&before)).unwrap();
        assert_eq!(net, before);
        assert_eq!(adam.step_count, 1);
    }

    #[test]
    fn hand_computed_first_step() {
        let mut net = scalar_net(1.0);
        let mut adam = AdamState::new(&net, 0.001).unwrap();
        let g = grads_with(&net, 1.0);
        adam.step(&mut net, &g).unwrap();
        let (m, v) = adam.weight_moments(0, 0, 0);
        assert!((m - 0.1).abs() < 1e-15);
        assert!((v - 0.001).abs() < 1e-15);
        let expected = 1.0 - 0.001 / (1.0 + 1e-8);
        assert!((net.layers()[0].weights[[0, 0]] - expected).abs() < 1e-12);
    }

    #[test]
    fn identical_params_get_identical_updates() {
        let l0 = DenseLayer {
            weights: array![[0.3, 0.3]],
            biases: array![0.0],
            prelu_slope: Some(0.25),
            frozen: false,
        };
        let l1 = DenseLayer {
            weights: array![[1.0]],
            biases: array![0.0],
            prelu_slope: None,
            frozen: false,
        };
        let mut net = Network::new(vec![l0, l1], 1).unwrap();
        let mut g = Gradients::zeros_like(&net);
        g.layers[0].weights = array![[0.7, 0.7]];
        let mut adam = AdamState::new(&net, 0.01).unwrap();
        for _ in 0..3 {
            adam.step(&mut net, &g).unwrap();
        }
        let w = &net.layers()[0].weights;
        assert_eq!(w[[0, 0]].to_bits(), w[[0, 1]].to_bits());
    }

    #[test]
    fn frozen_layers_are_untouched() {
        let mut net = build_network(6, &[4, 2, 4], 2).unwrap();
        net.set_frozen(FreezeGroup::Decoder);
        let before = net.clone();
        let mut g = Gradients::zeros_like(&net);
        for l in &mut g.layers {
            l.weights.fill(0.5);
            l.biases.fill(0.5);
            l.prelu_slope = 0.5;
        }
        let mut adam = AdamState::new(&net, 0.01).unwrap();
        adam.step(&mut net, &g).unwrap();
        assert_eq!(net.layers()[2], before.layers()[2]);
        assert_eq!(net.layers()[3], before.layers()[3]);
        assert_ne!(net.layers()[0], before.layers()[0]);
        assert_eq!(adam.weight_moments(3, 0, 0), (0.0, 0.0));
    }

    #[test]
    fn mismatched_shapes_fail() {
        let mut net = build_network(6, &[4, 2, 4], 2).unwrap();
        let other = build_network(7, &[4, 2, 4], 2).unwrap();
        let mut adam = AdamState::new(&net, 0.01).unwrap();
        assert!(adam.step(&mut net, &Gradients::zeros_like(&other)).is_err());
        assert!(AdamState::new(&net, 0.0).is_err());
    }
}
