//! Activation catalog with oscillatory units, single-neuron XOR
//! certification, and a from-scratch CNN engine for benchmarking
//! activations on CIFAR-10.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision for the common cases.

pub mod activation;
pub mod data;
pub mod nn;
pub mod report;
pub mod scalar;
pub mod tensor;
pub mod xor;

pub use activation::{
    derivative, descriptor, evaluate, sinc, Activation, ActivationDescriptor, ActivationError,
    ActivationId, ActivationParams,
};
pub use data::{DataError, ImageDataset};
pub use nn::{LayerSpec, Network, NetworkConfig, NnError};
pub use scalar::Scalar;
pub use tensor::{Tensor, TensorError};

pub type SingleNeuron64 = xor::SingleNeuron<f64>;
pub type XorCertificate64 = xor::XorCertificate<f64>;

pub type Tensor32 = Tensor<f32>;
pub type Tensor64 = Tensor<f64>;
pub type Network32 = Network<f32>;
pub type Network64 = Network<f64>;
pub type ImageDataset32 = ImageDataset<f32>;
