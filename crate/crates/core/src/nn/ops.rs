//! Forward and backward kernels: 3×3 same-padded convolution (im2col +
//! GEMM), 2×2 max pooling, affine maps, elementwise activations, inverted
//! dropout and softmax cross-entropy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NnError;
use crate::activation::Activation;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const KERNEL: usize = 3;
const TAPS: usize = KERNEL * KERNEL;

fn dims4<T: Scalar>(op: &'static str, t: &Tensor<T>) -> Result<[usize; 4], NnError> {
    match *t.shape() {
        [n, c, h, w] => Ok([n, c, h, w]),
        _ => Err(NnError::Rank {
            op,
            expected: 4,
            actual: t.shape().to_vec(),
        }),
    }
}

fn dims2<T: Scalar>(op: &'static str, t: &Tensor<T>) -> Result<[usize; 2], NnError> {
    match *t.shape() {
        [n, d] => Ok([n, d]),
        _ => Err(NnError::Rank {
            op,
            expected: 2,
            actual: t.shape().to_vec(),
        }),
    }
}

/// Unfolds one `c×h×w` image into a `(c·9)×(h·w)` patch matrix.
fn im2col<T: Scalar>(img: &[T], c: usize, h: usize, w: usize, cols: &mut [T]) {
    let hw = h * w;
    for ch in 0..c {
        let plane = &img[ch * hw..(ch + 1) * hw];
        for ky in 0..KERNEL {
            for kx in 0..KERNEL {
                let row = &mut cols[(ch * TAPS + ky * KERNEL + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    let out = &mut row[y * w..(y + 1) * w];
                    if sy < 0 || sy >= h as isize {
                        out.fill(T::zero());
                        continue;
                    }
                    let src = &plane[sy as usize * w..(sy as usize + 1) * w];
                    for (x, o) in out.iter_mut().enumerate() {
                        let sx = x as isize + kx as isize - 1;
                        *o = if sx < 0 || sx >= w as isize {
                            T::zero()
                        } else {
                            src[sx as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates patch gradients back into the image.
fn col2im<T: Scalar>(cols: &[T], c: usize, h: usize, w: usize, img: &mut [T]) {
    let hw = h * w;
    for ch in 0..c {
        let plane = &mut img[ch * hw..(ch + 1) * hw];
        for ky in 0..KERNEL {
            for kx in 0..KERNEL {
                let row = &cols[(ch * TAPS + ky * KERNEL + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                    for x in 0..w {
                        let sx = x as isize + kx as isize - 1;
                        if sx >= 0 && sx < w as isize {
                            dst[sx as usize] = dst[sx as usize] + row[y * w + x];
                        }
                    }
                }
            }
        }
    }
}

fn check_conv_params<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
) -> Result<([usize; 4], usize), NnError> {
    let [n, c, h, w] = dims4("conv2d", input)?;
    let k = weight.outer();
    weight.expect_shape("conv2d weight", &[k, c, KERNEL, KERNEL])?;
    if let Some(b) = bias {
        b.expect_shape("conv2d bias", &[k])?;
    }
    Ok(([n, c, h, w], k))
}

/// Convolution forward that also returns the per-sample patch matrices
/// for reuse in the backward pass.
pub(crate) fn conv2d_forward_cached<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    cols: &mut Vec<T>,
) -> Result<Tensor<T>, NnError> {
    let ([n, c, h, w], k) = check_conv_params(input, weight, Some(bias))?;
    let hw = h * w;
    let patch = c * TAPS;
    cols.clear();
    cols.resize(n * patch * hw, T::zero());
    let mut out = Tensor::zeros(&[n, k, h, w]);
    let chw = c * hw;
    for s in 0..n {
        let col = &mut cols[s * patch * hw..(s + 1) * patch * hw];
        im2col(&input.data()[s * chw..(s + 1) * chw], c, h, w, col);
        let dst = &mut out.data_mut()[s * k * hw..(s + 1) * k * hw];
        for (kk, row) in dst.chunks_mut(hw).enumerate() {
            row.fill(bias.data()[kk]);
        }
        T::gemm(
            k,
            patch,
            hw,
            T::one(),
            weight.data(),
            (patch as isize, 1),
            col,
            (hw as isize, 1),
            T::one(),
            dst,
            (hw as isize, 1),
        );
    }
    Ok(out)
}

/// Backward from cached patches. Weight and bias gradients are accumulated
/// into `grad_w` / `grad_b`; the input gradient is returned.
pub(crate) fn conv2d_backward_cached<T: Scalar>(
    cols: &[T],
    in_shape: [usize; 4],
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
    grad_w: &mut Tensor<T>,
    grad_b: &mut Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    let [n, c, h, w] = in_shape;
    let k = weight.outer();
    grad_out.expect_shape("conv2d backward", &[n, k, h, w])?;
    let hw = h * w;
    let patch = c * TAPS;
    let mut grad_in = Tensor::zeros(&[n, c, h, w]);
    let mut dcols = vec![T::zero(); patch * hw];
    for s in 0..n {
        let col = &cols[s * patch * hw..(s + 1) * patch * hw];
        let g = &grad_out.data()[s * k * hw..(s + 1) * k * hw];
        // dW += G · colsᵀ
        T::gemm(
            k,
            hw,
            patch,
            T::one(),
            g,
            (hw as isize, 1),
            col,
            (1, hw as isize),
            T::one(),
            grad_w.data_mut(),
            (patch as isize, 1),
        );
        for (kk, row) in g.chunks(hw).enumerate() {
            let gb = &mut grad_b.data_mut()[kk];
            *gb = *gb + row.iter().copied().sum::<T>();
        }
        // dcols = Wᵀ · G
        T::gemm(
            patch,
            k,
            hw,
            T::one(),
            weight.data(),
            (1, patch as isize),
            g,
            (hw as isize, 1),
            T::zero(),
            &mut dcols,
            (hw as isize, 1),
        );
        let chw = c * hw;
        col2im(&dcols, c, h, w, &mut grad_in.data_mut()[s * chw..(s + 1) * chw]);
    }
    Ok(grad_in)
}

/// 3×3 cross-correlation, stride 1, zero padding 1: `[N,C,H,W] → [N,K,H,W]`.
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    conv2d_forward_cached(input, weight, bias, &mut Vec::new())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>, NnError> {
    let (dims, k) = check_conv_params(input, weight, None)?;
    let [n, c, h, w] = dims;
    let mut cols = vec![T::zero(); n * c * TAPS * h * w];
    let chw = c * h * w;
    let per = c * TAPS * h * w;
    for s in 0..n {
        im2col(
            &input.data()[s * chw..(s + 1) * chw],
            c,
            h,
            w,
            &mut cols[s * per..(s + 1) * per],
        );
    }
    let mut gw = Tensor::zeros(weight.shape());
    let mut gb = Tensor::zeros(&[k]);
    let gi = conv2d_backward_cached(&cols, dims, weight, grad_out, &mut gw, &mut gb)?;
    Ok(ConvGrads {
        input: gi,
        weight: gw,
        bias: gb,
    })
}

/// 2×2 non-overlapping max pool. Returns the pooled tensor and, per output
/// element, the flat input index it was taken from (first maximum wins).
pub fn maxpool2<T: Scalar>(input: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>), NnError> {
    let [n, c, h, w] = dims4("maxpool2", input)?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(NnError::OddPool { height: h, width: w });
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros(&[n, c, oh, ow]);
    let mut argmax = vec![0usize; n * c * oh * ow];
    let src = input.data();
    let dst = out.data_mut();
    for plane in 0..n * c {
        let base = plane * h * w;
        for y in 0..oh {
            for x in 0..ow {
                let mut best = base + 2 * y * w + 2 * x;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = base + (2 * y + dy) * w + 2 * x + dx;
                    if src[idx] > src[best] {
                        best = idx;
                    }
                }
                let o = plane * oh * ow + y * ow + x;
                dst[o] = src[best];
                argmax[o] = best;
            }
        }
    }
    Ok((out, argmax))
}

pub fn maxpool2_backward<T: Scalar>(
    in_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    if grad_out.len() != argmax.len() {
        return Err(NnError::Shape(crate::tensor::TensorError::Length {
            len: grad_out.len(),
            shape: vec![argmax.len()],
        }));
    }
    let mut grad_in = Tensor::zeros(in_shape);
    let gi = grad_in.data_mut();
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        gi[idx] = gi[idx] + g;
    }
    Ok(grad_in)
}

/// `x·W + b` for `x: [N,D]`, `W: [D,U]`, `b: [U]`.
pub fn dense<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    let [n, d] = dims2("dense", input)?;
    let u = bias.len();
    weight.expect_shape("dense weight", &[d, u])?;
    let mut out = Tensor::zeros(&[n, u]);
    for row in out.data_mut().chunks_mut(u) {
        row.copy_from_slice(bias.data());
    }
    T::gemm(
        n,
        d,
        u,
        T::one(),
        input.data(),
        (d as isize, 1),
        weight.data(),
        (u as isize, 1),
        T::one(),
        out.data_mut(),
        (u as isize, 1),
    );
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<DenseGrads<T>, NnError> {
    let [n, d] = dims2("dense backward", input)?;
    let u = weight.inner_len();
    weight.expect_shape("dense weight", &[d, u])?;
    grad_out.expect_shape("dense backward", &[n, u])?;
    let mut gw = Tensor::zeros(&[d, u]);
    T::gemm(
        d,
        n,
        u,
        T::one(),
        input.data(),
        (1, d as isize),
        grad_out.data(),
        (u as isize, 1),
        T::zero(),
        gw.data_mut(),
        (u as isize, 1),
    );
    let mut gb = Tensor::zeros(&[u]);
    for row in grad_out.data().chunks(u) {
        for (b, &g) in gb.data_mut().iter_mut().zip(row) {
            *b = *b + g;
        }
    }
    let mut gx = Tensor::zeros(&[n, d]);
    T::gemm(
        n,
        u,
        d,
        T::one(),
        grad_out.data(),
        (u as isize, 1),
        weight.data(),
        (1, u as isize),
        T::zero(),
        gx.data_mut(),
        (d as isize, 1),
    );
    Ok(DenseGrads {
        input: gx,
        weight: gw,
        bias: gb,
    })
}

pub fn activation_layer<T: Scalar>(input: &Tensor<T>, act: Activation) -> Tensor<T> {
    input.map(|z| act.eval(z))
}

/// Upstream gradient times `g'(z)`, with subgradient 0 at kinks.
pub fn activation_backward<T: Scalar>(
    pre_activation: &Tensor<T>,
    act: Activation,
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    grad_out.expect_shape("activation backward", pre_activation.shape())?;
    let data = pre_activation
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&z, &g)| g * act.grad(z))
        .collect();
    Ok(Tensor::from_vec(pre_activation.shape(), data)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted dropout driven by `rng`; returns the output and the applied
/// scale mask (`None` when the layer is the identity).
pub(crate) fn dropout_with<T: Scalar, R: Rng>(
    input: &Tensor<T>,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> (Tensor<T>, Option<Vec<T>>) {
    if mode == Mode::Eval || rate == 0.0 {
        return (input.clone(), None);
    }
    let keep = T::lit(1.0 / (1.0 - rate));
    let mask: Vec<T> = (0..input.len())
        .map(|_| {
            if rng.gen::<f64>() < rate {
                T::zero()
            } else {
                keep
            }
        })
        .collect();
    let data = input.data().iter().zip(&mask).map(|(&x, &m)| x * m).collect();
    (
        Tensor::from_vec(input.shape(), data).expect("same shape"),
        Some(mask),
    )
}

pub fn dropout<T: Scalar>(
    input: &Tensor<T>,
    rate: f64,
    mode: Mode,
    seed: u64,
) -> Result<Tensor<T>, NnError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnError::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(dropout_with(input, rate, mode, &mut rng).0)
}

/// Mean softmax cross-entropy over the batch and its gradient
/// `(softmax − onehot) / N`.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[usize],
) -> Result<(T, Tensor<T>), NnError> {
    let [n, classes] = dims2("softmax_cross_entropy", logits)?;
    if labels.len() != n {
        return Err(NnError::Shape(crate::tensor::TensorError::Shape {
            op: "softmax_cross_entropy labels",
            expected: vec![n],
            actual: vec![labels.len()],
        }));
    }
    if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(NnError::Label {
            index,
            label,
            classes,
        });
    }
    let inv_n = T::one() / T::from_usize(n).unwrap();
    let mut grad = Tensor::zeros(&[n, classes]);
    let mut total = T::zero();
    for ((row, g), &label) in logits
        .data()
        .chunks(classes)
        .zip(grad.data_mut().chunks_mut(classes))
        .zip(labels)
    {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for (gi, &v) in g.iter_mut().zip(row) {
            *gi = (v - max).exp();
            sum = sum + *gi;
        }
        total = total + (sum.ln() + max - row[label]);
        for gi in g.iter_mut() {
            *gi = *gi / sum * inv_n;
        }
        g[label] = g[label] - inv_n;
    }
    Ok((total * inv_n, grad))
}
