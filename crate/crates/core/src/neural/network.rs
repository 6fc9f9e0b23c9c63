use ndarray::{Array1, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};

/// Initial PReLU slope.
pub const INITIAL_PRELU_SLOPE: f64 = 0.25;
/// Rows per work unit in batched kernels. Fixed so results never depend on scheduling.
pub const ROW_CHUNK: usize = 64;

/// Fully connected layer `y = act(W x + b)`.
///
/// `prelu_slope` is `None` on the (linear) output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `[n_out, n_in]`
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub prelu_slope: Option<f64>,
    pub frozen: bool,
}

impl DenseLayer {
    pub fn n_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.biases.len() + usize::from(self.prelu_slope.is_some())
    }
}

/// Which layers to hold fixed during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FreezeGroup {
    Encoder,
    Decoder,
    None,
}

/// Dense feed-forward network with an encoder/decoder split.
///
/// Layers `[0, encoder_len)` form the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<DenseLayer>,
    encoder_len: usize,
}

/// Per-layer gradient of the loss. Frozen layers hold zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub prelu_slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    biases: Array1::zeros(l.biases.len()),
                    prelu_slope: 0.0,
                })
                .collect(),
        }
    }

    fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights += &b.weights;
            a.biases += &b.biases;
            a.prelu_slope += b.prelu_slope;
        }
    }

    /// Every gradient entry in layer order (weights, biases, slope).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.biases.iter());
            out.push(l.prelu_slope);
        }
        out
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four running sums in a fixed order keep this deterministic while
    // giving the CPU independent dependency chains
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = c * 4;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in chunks * 4..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn prelu(z: f64, slope: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        slope * z
    }
}

/// Activations of one forward pass over a block of rows.
struct Trace {
    /// `inputs[k]` is the input of layer k (row-major, rows x n_in).
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of each layer.
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl Network {
    pub fn new(layers: Vec<DenseLayer>, encoder_len: usize) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::BadArchitecture("no layers".into()));
        }
        if encoder_len == 0 || encoder_len >= layers.len() {
            return Err(Error::BadArchitecture(format!(
                "encoder_len {encoder_len} outside [1, {})",
                layers.len()
            )));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.biases.len() != l.n_out() {
                return Err(Error::BadArchitecture(format!("layer {k}: bias length")));
            }
            let last = k + 1 == layers.len();
            if last == l.prelu_slope.is_some() {
                return Err(Error::BadArchitecture(format!(
                    "layer {k}: PReLU slope must be present on hidden layers only"
                )));
            }
            if k > 0 && layers[k - 1].n_out() != l.n_in() {
                return Err(Error::BadArchitecture(format!(
                    "layer {k} expects {} inputs but layer {} has {} outputs",
                    l.n_in(),
                    k - 1,
                    layers[k - 1].n_out()
                )));
            }
        }
        Ok(Self {
            layers,
            encoder_len,
        })
    }

    /// He-initialized network with the given layer widths
    /// (`widths[0]` inputs, `widths[last]` outputs).
    pub fn with_widths(widths: &[usize], encoder_len: usize, seed: u64) -> Result<Self> {
        if widths.len() < 3 || widths.contains(&0) {
            return Err(Error::BadArchitecture(format!(
                "need at least one hidden layer and non-zero widths, got {widths:?}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_layers = widths.len() - 1;
        let layers = (0..n_layers)
            .map(|k| {
                let (n_in, n_out) = (widths[k], widths[k + 1]);
                let std = (2.0 / n_in as f64).sqrt();
                let normal = Normal::new(0.0, std).expect("finite std");
                let weights = Array2::from_shape_fn((n_out, n_in), |_| normal.sample(&mut rng));
                DenseLayer {
                    weights,
                    biases: Array1::zeros(n_out),
                    prelu_slope: (k + 1 < n_layers).then_some(INITIAL_PRELU_SLOPE),
                    frozen: false,
                }
            })
            .collect();
        Self::new(layers, encoder_len)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn encoder_len(&self) -> usize {
        self.encoder_len
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").n_out()
    }

    /// Output widths of all hidden layers.
    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(DenseLayer::n_out)
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(DenseLayer::n_params).sum()
    }

    pub fn set_frozen(&mut self, group: FreezeGroup) {
        let enc = self.encoder_len;
        for (k, l) in self.layers.iter_mut().enumerate() {
            l.frozen = match group {
                FreezeGroup::Encoder => k < enc,
                FreezeGroup::Decoder => k >= enc,
                FreezeGroup::None => false,
            };
        }
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "network takes {} inputs, batch has {} columns",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    fn run(&self, x: &[f64], rows: usize, keep: bool) -> Trace {
        let mut trace = Trace {
            inputs: Vec::new(),
            pre: Vec::new(),
            output: Vec::new(),
        };
        let mut current = x.to_vec();
        for layer in &self.layers {
            let (n_in, n_out) = (layer.n_in(), layer.n_out());
            let w = layer.weights.as_slice().expect("standard layout");
            let b = layer.biases.as_slice().expect("standard layout");
            let mut z = vec![0.0; rows * n_out];
            for r in 0..rows {
                let xin = &current[r * n_in..(r + 1) * n_in];
                for o in 0..n_out {
                    z[r * n_out + o] = dot(xin, &w[o * n_in..(o + 1) * n_in]) + b[o];
                }
            }
            let a = match layer.prelu_slope {
                Some(s) => z.iter().map(|&v| prelu(v, s)).collect(),
                None => z.clone(),
            };
            if keep {
                trace.inputs.push(std::mem::replace(&mut current, a));
                trace.pre.push(z);
            } else {
                current = a;
            }
        }
        trace.output = current;
        trace
    }

    /// Forward pass over a `[B, n_in]` batch.
    pub fn forward(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.forward_with(batch, Parallelism::default())
    }

    pub fn forward_with(&self, batch: ArrayView2<f64>, par: Parallelism) -> Result<Array2<f64>> {
        self.check_input(&batch)?;
        let x = batch.as_standard_layout();
        let x = x.as_slice().expect("standard layout");
        let n_in = self.input_dim();
        let parts = exec::map_chunks(par, batch.nrows(), ROW_CHUNK, |r| {
            self.run(&x[r.start * n_in..r.end * n_in], r.len(), false).output
        });
        let out: Vec<f64> = parts.into_iter().flatten().collect();
        Ok(Array2::from_shape_vec((batch.nrows(), self.output_dim()), out).expect("shape"))
    }

    /// Gradients of `mse_loss(forward(batch), target)`, together with the loss.
    pub fn backward(&self, batch: ArrayView2<f64>, target: ArrayView2<f64>) -> Result<(Gradients, f64)> {
        self.backward_with(batch, target, Parallelism::default())
    }

    pub fn backward_with(
        &self,
        batch: ArrayView2<f64>,
        target: ArrayView2<f64>,
        par: Parallelism,
    ) -> Result<(Gradients, f64)> {
        self.check_input(&batch)?;
        if target.nrows() != batch.nrows() || target.ncols() != self.output_dim() {
            return Err(Error::ShapeMismatch(format!(
                "target is {:?}, expected [{}, {}]",
                target.shape(),
                batch.nrows(),
                self.output_dim()
            )));
        }
        let rows = batch.nrows();
        if rows == 0 {
            return Err(Error::EmptyInput);
        }
        let x = batch.as_standard_layout();
        let t = target.as_standard_layout();
        let (x, t) = (x.as_slice().expect("layout"), t.as_slice().expect("layout"));
        let n_in = self.input_dim();
        let n_out = self.output_dim();
        let scale = 2.0 / (rows * n_out) as f64;
        let (grads, sse) = exec::reduce_chunks(
            par,
            rows,
            ROW_CHUNK,
            |r| {
                self.backward_block(
                    &x[r.start * n_in..r.end * n_in],
                    &t[r.start * n_out..r.end * n_out],
                    r.len(),
                    scale,
                )
            },
            |acc, part| {
                acc.0.add_assign(&part.0);
                acc.1 += part.1;
            },
        )
        .expect("non-empty batch");
        Ok((grads, sse / (rows * n_out) as f64))
    }

    /// Gradient sums and squared-error sum for one block of rows.
    fn backward_block(&self, x: &[f64], t: &[f64], rows: usize, scale: f64) -> (Gradients, f64) {
        let trace = self.run(x, rows, true);
        let mut grads = Gradients::zeros_like(self);
        let mut sse = 0.0;
        // dL/d(output)
        let mut delta: Vec<f64> = trace
            .output
            .iter()
            .zip(t)
            .map(|(y, t)| {
                let d = y - t;
                sse += d * d;
                scale * d
            })
            .collect();
        let Some(lowest) = self.layers.iter().position(|l| !l.frozen) else {
            return (grads, sse);
        };
        for k in (lowest..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let (n_in, n_out) = (layer.n_in(), layer.n_out());
            let z = &trace.pre[k];
            let input = &trace.inputs[k];
            let g = &mut grads.layers[k];
            // through the activation
            if let Some(slope) = layer.prelu_slope {
                let mut ds = 0.0;
                for (d, &zv) in delta.iter_mut().zip(z) {
                    if zv < 0.0 {
                        ds += *d * zv;
                        *d *= slope;
                    }
                }
                if !layer.frozen {
                    g.prelu_slope = ds;
                }
            }
            if !layer.frozen {
                let gw = g.weights.as_slice_mut().expect("layout");
                let gb = g.biases.as_slice_mut().expect("layout");
                for r in 0..rows {
                    let dr = &delta[r * n_out..(r + 1) * n_out];
                    let xr = &input[r * n_in..(r + 1) * n_in];
                    for (o, &d) in dr.iter().enumerate() {
                        gb[o] += d;
                        let row = &mut gw[o * n_in..(o + 1) * n_in];
                        for (gv, &xv) in row.iter_mut().zip(xr) {
                            *gv += d * xv;
                        }
                    }
                }
            }
            if k > lowest {
                let w = layer.weights.as_slice().expect("layout");
                let mut prev = vec![0.0; rows * n_in];
                for r in 0..rows {
                    let dr = &delta[r * n_out..(r + 1) * n_out];
                    let pr = &mut prev[r * n_in..(r + 1) * n_in];
                    for (o, &d) in dr.iter().enumerate() {
                        for (pv, &wv) in pr.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                            *pv += d * wv;
                        }
                    }
                }
                delta = prev;
            }
        }
        (grads, sse)
    }

    /// Every parameter in layer order (weights, biases, slope if present).
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.biases.iter());
            out.extend(l.prelu_slope);
        }
        out
    }
}

/// Layer widths `[input, hidden..., input]` with the encoder ending at the
/// unique narrowest hidden layer.
pub fn build_network(input_dim: usize, hidden_sizes: &[usize], seed: u64) -> Result<Network> {
    if input_dim == 0 {
        return Err(Error::BadArchitecture("input_dim must be at least 1".into()));
    }
    if hidden_sizes.is_empty() {
        return Err(Error::BadArchitecture("no hidden layers".into()));
    }
    let rev: Vec<usize> = hidden_sizes.iter().rev().copied().collect();
    if rev != hidden_sizes {
        return Err(Error::BadArchitecture(format!(
            "hidden sizes {hidden_sizes:?} are not palindromic"
        )));
    }
    let mid = hidden_sizes.len() / 2;
    let bottleneck = hidden_sizes[mid];
    let unique_min = hidden_sizes.len() % 2 == 1
        && hidden_sizes
            .iter()
            .enumerate()
            .all(|(i, &w)| i == mid || w > bottleneck);
    if !unique_min {
        return Err(Error::BadArchitecture(format!(
            "hidden sizes {hidden_sizes:?} need a unique minimum in the middle"
        )));
    }
    if input_dim < bottleneck {
        return Err(Error::BadArchitecture(format!(
            "input width {input_dim} is narrower than the bottleneck {bottleneck}"
        )));
    }
    let mut widths = Vec::with_capacity(hidden_sizes.len() + 2);
    widths.push(input_dim);
    widths.extend_from_slice(hidden_sizes);
    widths.push(input_dim);
    Network::with_widths(&widths, mid + 1, seed)
}

/// Mean over all entries of the squared difference.
pub fn mse_loss(pred: ArrayView2<f64>, target: ArrayView2<f64>) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sse: f64 = pred
        .iter()
        .zip(target.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sse / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn single(w: f64, b: f64, slope: Option<f64>) -> DenseLayer {
        DenseLayer {
            weights: array![[w]],
            biases: array![b],
            prelu_slope: slope,
            frozen: false,
        }
    }

    #[test]
    fn architecture_examples() {
        let net = build_network(30, &[25, 10, 25], 1).unwrap();
        let shapes: Vec<_> = net.layers().iter().map(|l| (l.n_in(), l.n_out())).collect();
        assert_eq!(shapes, vec![(30, 25), (25, 10), (10, 25), (25, 30)]);
        assert_eq!(net.encoder_len(), 2);

        let net = build_network(240, &[200, 100, 50, 100, 200], 1).unwrap();
        assert_eq!(net.layers().len(), 6);
        assert_eq!(net.encoder_len(), 3);
        assert!(net.layers()[..5].iter().all(|l| l.prelu_slope == Some(0.25)));
        assert!(net.layers()[5].prelu_slope.is_none());
        assert!(net.layers().iter().all(|l| l.biases.iter().all(|b| *b == 0.0)));
    }

    #[test]
    fn bad_architectures() {
        for hidden in [&[][..], &[25, 10, 20], &[10, 10], &[10, 25, 10], &[5, 5, 5]] {
            assert!(
                matches!(build_network(30, hidden, 0), Err(Error::BadArchitecture(_))),
                "{hidden:?}"
            );
        }
        assert!(build_network(5, &[25, 10, 25], 0).is_err());
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = build_network(30, &[25, 10, 25], 7).unwrap();
        let b = build_network(30, &[25, 10, 25], 7).unwrap();
        let c = build_network(30, &[25, 10, 25], 8).unwrap();
        let bits = |n: &Network| n.flatten_params().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn he_init_scale() {
        let net = build_network(200, &[150, 100, 150], 3).unwrap();
        let w = &net.layers()[0].weights;
        let var = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
        assert!((var - 2.0 / 200.0).abs() < 0.1 * 2.0 / 200.0, "{var}");
    }

    #[test]
    fn forward_examples() {
        // identity linear output layer
        let eye = DenseLayer {
            weights: Array2::eye(3),
            biases: Array1::zeros(3),
            prelu_slope: Some(0.25),
            frozen: false,
        };
        let out = DenseLayer {
            weights: Array2::eye(3),
            biases: Array1::zeros(3),
            prelu_slope: None,
            frozen: false,
        };
        let net = Network::new(vec![eye, out], 1).unwrap();
        let x = array![[1.0, 2.0, 3.5]];
        assert_eq!(net.forward(x.view()).unwrap(), x);

        // PReLU on a negative input
        let net = Network::new(vec![single(1.0, 0.0, Some(0.25)), single(1.0, 0.0, None)], 1).unwrap();
        assert_eq!(net.forward(array![[-2.0]].view()).unwrap()[[0, 0]], -0.5);

        // zero parameters
        let net = Network::new(vec![single(0.0, 0.0, Some(0.25)), single(0.0, 0.0, None)], 1).unwrap();
        assert_eq!(net.forward(array![[123.0], [-4.0]].view()).unwrap(), array![[0.0], [0.0]]);

        assert!(matches!(
            net.forward(array![[1.0, 2.0]].view()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn mse_examples() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(mse_loss(a.view(), a.view()).unwrap(), 0.0);
        assert_eq!(mse_loss((&a + 1.0).view(), a.view()).unwrap(), 1.0);
        assert_eq!(
            mse_loss(array![[0.0, 0.0]].view(), array![[3.0, 4.0]].view()).unwrap(),
            12.5
        );
        assert!(mse_loss(array![[0.0]].view(), a.view()).is_err());
    }

    #[test]
    fn perfect_reconstruction_has_zero_gradient() {
        let net = Network::new(vec![single(1.0, 0.0, Some(0.25)), single(1.0, 0.0, None)], 1).unwrap();
        let x = array![[0.5], [2.0]];
        let (g, loss) = net.backward(x.view(), x.view()).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.flatten().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn frozen_layers_get_zero_gradients() {
        let mut net = build_network(6, &[4, 2, 4], 11).unwrap();
        net.set_frozen(FreezeGroup::Encoder);
        assert_eq!(
            net.layers().iter().map(|l| l.frozen).collect::<Vec<_>>(),
            vec![true, true, false, false]
        );
        let x = Array2::from_shape_fn((5, 6), |(i, j)| ((i * 7 + j) as f64 * 0.3).sin());
        let (g, _) = net.backward(x.view(), x.view()).unwrap();
        for k in 0..2 {
            assert!(g.layers[k].weights.iter().all(|v| *v == 0.0));
            assert!(g.layers[k].biases.iter().all(|v| *v == 0.0));
            assert_eq!(g.layers[k].prelu_slope, 0.0);
        }
        assert!(g.layers[3].weights.iter().any(|v| *v != 0.0));
        net.set_frozen(FreezeGroup::None);
        assert!(net.layers().iter().all(|l| !l.frozen));
    }

    #[test]
    fn schedules_agree_bitwise() {
        let net = build_network(9, &[7, 3, 7], 5).unwrap();
        let x = Array2::from_shape_fn((300, 9), |(i, j)| ((i * 13 + j * 5) as f64 * 0.11).cos());
        let (gs, ls) = net.backward_with(x.view(), x.view(), Parallelism::Sequential).unwrap();
        let (gp, lp) = net.backward_with(x.view(), x.view(), Parallelism::Parallel).unwrap();
        assert_eq!(ls.to_bits(), lp.to_bits());
        assert!(gs.flatten().iter().zip(gp.flatten()).all(|(a, b)| a.to_bits() == b.to_bits()));
        let fs = net.forward_with(x.view(), Parallelism::Sequential).unwrap();
        let fp = net.forward_with(x.view(), Parallelism::Parallel).unwrap();
        assert!(fs.iter().zip(fp.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
