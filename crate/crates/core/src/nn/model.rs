use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ops::{self, Mode};
use super::NnError;
use crate::activation::{Activation, ActivationId};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Output channels of the conv blocks, in order.
pub const CHANNELS: [usize; 4] = [32, 64, 128, 128];
pub const PENULTIMATE_UNITS: usize = 64;
pub const DROPOUT_RATE: f64 = 0.5;
pub const CLASSES: usize = 10;
pub const INPUT_SHAPE: [usize; 3] = [3, 32, 32];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layer", rename_all = "snake_case")]
pub enum LayerSpec {
    /// 3×3 same-padded convolution followed by the activation.
    Conv2d {
        out_channels: usize,
        activation: Activation,
    },
    MaxPool,
    Dense {
        units: usize,
        activation: Activation,
    },
    Dropout {
        rate: f64,
    },
    Flatten,
    LogitsDense {
        units: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub conv_layers: usize,
    pub activation: ActivationId,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn new(conv_layers: usize, activation: ActivationId, seed: u64) -> Self {
        Self {
            conv_layers,
            activation,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if !(1..=CHANNELS.len()).contains(&self.conv_layers) {
            return Err(NnError::Config(format!(
                "conv_layers must be in 1..=4, got {}",
                self.conv_layers
            )));
        }
        Ok(())
    }
}

/// Layer list for a config: `[conv, pool]` per block, then the classifier head.
pub fn architecture(cfg: &NetworkConfig, classes: usize) -> Result<Vec<LayerSpec>, NnError> {
    cfg.validate()?;
    let activation = Activation::new(cfg.activation);
    let mut layers = Vec::with_capacity(2 * cfg.conv_layers + 4);
    for &out_channels in &CHANNELS[..cfg.conv_layers] {
        layers.push(LayerSpec::Conv2d {
            out_channels,
            activation,
        });
        layers.push(LayerSpec::MaxPool);
    }
    layers.extend([
        LayerSpec::Flatten,
        LayerSpec::Dense {
            units: PENULTIMATE_UNITS,
            activation,
        },
        LayerSpec::Dropout { rate: DROPOUT_RATE },
        LayerSpec::LogitsDense { units: classes },
    ]);
    Ok(layers)
}

/// The benchmark network for 3×32×32 inputs and ten classes.
pub fn build_model<T: Scalar>(cfg: &NetworkConfig) -> Result<Network<T>, NnError> {
    build_model_for(cfg, INPUT_SHAPE, CLASSES)
}

pub fn build_model_for<T: Scalar>(
    cfg: &NetworkConfig,
    input: [usize; 3],
    classes: usize,
) -> Result<Network<T>, NnError> {
    Network::new(architecture(cfg, classes)?, input, cfg.seed)
}

#[derive(Debug, Clone)]
enum Cache<T> {
    Conv {
        cols: Vec<T>,
        in_shape: [usize; 4],
        z: Tensor<T>,
    },
    Pool {
        in_shape: Vec<usize>,
        argmax: Vec<usize>,
    },
    Dense {
        input: Tensor<T>,
        z: Tensor<T>,
    },
    Dropout {
        mask: Option<Vec<T>>,
    },
    Flatten {
        in_shape: Vec<usize>,
    },
    Logits {
        input: Tensor<T>,
    },
}

/// A sequential network with its parameters, gradients and the activations
/// cached by the last [`Network::forward`].
#[derive(Debug, Clone)]
pub struct Network<T> {
    layers: Vec<LayerSpec>,
    /// Index of each layer's weight tensor in `params`; the bias follows it.
    param_index: Vec<Option<usize>>,
    input: [usize; 3],
    shapes: Vec<Vec<usize>>,
    params: Vec<Tensor<T>>,
    grads: Vec<Tensor<T>>,
    cache: Vec<Cache<T>>,
    dropout_rng: ChaCha8Rng,
}

impl<T: Scalar> Network<T> {
    /// Validates the layer stack against `input` (C, H, W) and initialises
    /// weights He-uniform from `seed` with zero biases.
    pub fn new(layers: Vec<LayerSpec>, input: [usize; 3], seed: u64) -> Result<Self, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shape = input.to_vec();
        let mut shapes = Vec::with_capacity(layers.len());
        let mut params = Vec::new();
        let mut param_index = Vec::with_capacity(layers.len());
        let mut he = |shape: &[usize], fan_in: usize| {
            let limit = (6.0 / fan_in as f64).sqrt();
            Tensor::from_fn(shape, |_| T::lit(rng.gen_range(-limit..limit)))
        };
        for (i, layer) in layers.iter().enumerate() {
            let bad = |why: String| NnError::Config(format!("layer {i} ({layer:?}): {why}"));
            let mut index = None;
            shape = match *layer {
                LayerSpec::Conv2d { out_channels, .. } => {
                    let &[c, h, w] = shape.as_slice() else {
                        return Err(bad(format!("needs a C×H×W input, got {shape:?}")));
                    };
                    if out_channels == 0 {
                        return Err(bad("zero output channels".into()));
                    }
                    index = Some(params.len());
                    params.push(he(&[out_channels, c, ops::KERNEL, ops::KERNEL], c * 9));
                    params.push(Tensor::zeros(&[out_channels]));
                    vec![out_channels, h, w]
                }
                LayerSpec::MaxPool => {
                    let &[c, h, w] = shape.as_slice() else {
                        return Err(bad(format!("needs a C×H×W input, got {shape:?}")));
                    };
                    if h % 2 != 0 || w % 2 != 0 {
                        return Err(bad(format!("odd spatial size {h}x{w}")));
                    }
                    vec![c, h / 2, w / 2]
                }
                LayerSpec::Flatten => vec![shape.iter().product()],
                LayerSpec::Dense { units, .. } | LayerSpec::LogitsDense { units } => {
                    let &[d] = shape.as_slice() else {
                        return Err(bad(format!("needs a flat input, got {shape:?}")));
                    };
                    if units == 0 {
                        return Err(bad("zero units".into()));
                    }
                    index = Some(params.len());
                    params.push(he(&[d, units], d));
                    params.push(Tensor::zeros(&[units]));
                    vec![units]
                }
                LayerSpec::Dropout { rate } => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(bad(format!("dropout rate {rate} outside [0, 1)")));
                    }
                    shape
                }
            };
            param_index.push(index);
            shapes.push(shape.clone());
        }
        if !matches!(layers.last(), Some(LayerSpec::LogitsDense { .. })) {
            return Err(NnError::Config("network must end in a logits layer".into()));
        }
        let grads = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        let mut dropout_rng = ChaCha8Rng::seed_from_u64(seed);
        dropout_rng.set_stream(1);
        Ok(Self {
            layers,
            param_index,
            input,
            shapes,
            params,
            grads,
            cache: Vec::new(),
            dropout_rng,
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_shape(&self) -> [usize; 3] {
        self.input
    }

    /// Per-sample output shape of every layer.
    pub fn layer_shapes(&self) -> &[Vec<usize>] {
        &self.shapes
    }

    /// Width of the flattened feature vector.
    pub fn flatten_dim(&self) -> Option<usize> {
        self.layers
            .iter()
            .position(|l| *l == LayerSpec::Flatten)
            .map(|i| self.shapes[i][0])
    }

    pub fn classes(&self) -> usize {
        self.shapes.last().map_or(0, |s| s[0])
    }

    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.params
    }

    /// Gradients from the last [`Network::backward`].
    pub fn grads(&self) -> &[Tensor<T>] {
        &self.grads
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Parameter tensor indices (weight, bias) owned by layer `layer`.
    pub fn layer_params(&self, layer: usize) -> Option<(usize, usize)> {
        self.param_index.get(layer).copied().flatten().map(|i| (i, i + 1))
    }

    /// Replaces all parameters; shapes must match exactly.
    pub fn set_params(&mut self, params: Vec<Tensor<T>>) -> Result<(), NnError> {
        if params.len() != self.params.len() {
            return Err(NnError::Config(format!(
                "expected {} parameter tensors, got {}",
                self.params.len(),
                params.len()
            )));
        }
        for (new, old) in params.iter().zip(&self.params) {
            new.expect_shape("set_params", old.shape())?;
        }
        self.params = params;
        Ok(())
    }

    /// Simultaneous access for optimizer updates.
    pub fn params_and_grads(&mut self) -> (&mut [Tensor<T>], &[Tensor<T>]) {
        (&mut self.params, &self.grads)
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<(), NnError> {
        let mut expected = vec![x.outer()];
        expected.extend_from_slice(&self.input);
        Ok(x.expect_shape("network input", &expected)?)
    }

    /// Forward pass that records what [`Network::backward`] needs.
    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        self.check_input(x)?;
        self.cache.clear();
        let mut h = x.clone();
        for (layer, index) in self.layers.iter().zip(&self.param_index) {
            let (next, cache) = match *layer {
                LayerSpec::Conv2d { activation, .. } => {
                    let i = index.expect("conv owns parameters");
                    let mut cols = Vec::new();
                    let in_shape = [h.shape()[0], h.shape()[1], h.shape()[2], h.shape()[3]];
                    let z = ops::conv2d_forward_cached(&h, &self.params[i], &self.params[i + 1], &mut cols)?;
                    (ops::activation_layer(&z, activation), Cache::Conv { cols, in_shape, z })
                }
                LayerSpec::MaxPool => {
                    let (out, argmax) = ops::maxpool2(&h)?;
                    let in_shape = h.shape().to_vec();
                    (out, Cache::Pool { in_shape, argmax })
                }
                LayerSpec::Flatten => {
                    let in_shape = h.shape().to_vec();
                    let n = h.outer();
                    let d = h.inner_len();
                    (h.reshape(&[n, d])?, Cache::Flatten { in_shape })
                }
                LayerSpec::Dense { activation, .. } => {
                    let i = index.expect("dense owns parameters");
                    let z = ops::dense(&h, &self.params[i], &self.params[i + 1])?;
                    (ops::activation_layer(&z, activation), Cache::Dense { input: h, z })
                }
                LayerSpec::Dropout { rate } => {
                    let (out, mask) = ops::dropout_with(&h, rate, mode, &mut self.dropout_rng);
                    (out, Cache::Dropout { mask })
                }
                LayerSpec::LogitsDense { .. } => {
                    let i = index.expect("logits own parameters");
                    let out = ops::dense(&h, &self.params[i], &self.params[i + 1])?;
                    (out, Cache::Logits { input: h })
                }
            };
            self.cache.push(cache);
            h = next;
        }
        Ok(h)
    }

    /// Eval-mode forward pass; a pure function of parameters and input.
    pub fn predict(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        self.check_input(x)?;
        let mut h = x.clone();
        for (layer, index) in self.layers.iter().zip(&self.param_index) {
            h = match *layer {
                LayerSpec::Conv2d { activation, .. } => {
                    let i = index.expect("conv owns parameters");
                    let z = ops::conv2d(&h, &self.params[i], &self.params[i + 1])?;
                    ops::activation_layer(&z, activation)
                }
                LayerSpec::MaxPool => ops::maxpool2(&h)?.0,
                LayerSpec::Flatten => {
                    let (n, d) = (h.outer(), h.inner_len());
                    h.reshape(&[n, d])?
                }
                LayerSpec::Dense { activation, .. } => {
                    let i = index.expect("dense owns parameters");
                    ops::activation_layer(&ops::dense(&h, &self.params[i], &self.params[i + 1])?, activation)
                }
                LayerSpec::Dropout { .. } => h,
                LayerSpec::LogitsDense { .. } => {
                    let i = index.expect("logits own parameters");
                    ops::dense(&h, &self.params[i], &self.params[i + 1])?
                }
            };
        }
        Ok(h)
    }

    /// Backpropagates `grad_logits` through the cached forward pass and
    /// overwrites [`Network::grads`].
    pub fn backward(&mut self, grad_logits: &Tensor<T>) -> Result<(), NnError> {
        if self.cache.len() != self.layers.len() {
            return Err(NnError::Config("backward called without a forward pass".into()));
        }
        for g in &mut self.grads {
            g.fill(T::zero());
        }
        let mut g = grad_logits.clone();
        for ((layer, index), cache) in self
            .layers
            .iter()
            .zip(&self.param_index)
            .zip(&self.cache)
            .rev()
        {
            g = match (*layer, cache) {
                (LayerSpec::Conv2d { activation, .. }, Cache::Conv { cols, in_shape, z }) => {
                    let i = index.expect("conv owns parameters");
                    let gz = ops::activation_backward(z, activation, &g)?;
                    let (head, tail) = self.grads.split_at_mut(i + 1);
                    ops::conv2d_backward_cached(cols, *in_shape, &self.params[i], &gz, &mut head[i], &mut tail[0])?
                }
                (LayerSpec::MaxPool, Cache::Pool { in_shape, argmax }) => {
                    ops::maxpool2_backward(in_shape, argmax, &g)?
                }
                (LayerSpec::Flatten, Cache::Flatten { in_shape }) => g.reshape(in_shape)?,
                (LayerSpec::Dense { activation, .. }, Cache::Dense { input, z }) => {
                    let i = index.expect("dense owns parameters");
                    let gz = ops::activation_backward(z, activation, &g)?;
                    let d = ops::dense_backward(input, &self.params[i], &gz)?;
                    self.grads[i] = d.weight;
                    self.grads[i + 1] = d.bias;
                    d.input
                }
                (LayerSpec::Dropout { .. }, Cache::Dropout { mask }) => match mask {
                    Some(mask) => {
                        for (gi, &m) in g.data_mut().iter_mut().zip(mask) {
                            *gi = *gi * m;
                        }
                        g
                    }
                    None => g,
                },
                (LayerSpec::LogitsDense { .. }, Cache::Logits { input }) => {
                    let i = index.expect("logits own parameters");
                    let d = ops::dense_backward(input, &self.params[i], &g)?;
                    self.grads[i] = d.weight;
                    self.grads[i + 1] = d.bias;
                    d.input
                }
                _ => unreachable!("cache entries follow the layer list"),
            };
        }
        Ok(())
    }

    /// Forward, softmax cross-entropy and backward in one call.
    pub fn loss_and_grad(&mut self, x: &Tensor<T>, labels: &[usize], mode: Mode) -> Result<T, NnError> {
        let logits = self.forward(x, mode)?;
        let (loss, grad) = ops::softmax_cross_entropy(&logits, labels)?;
        self.backward(&grad)?;
        Ok(loss)
    }
}
