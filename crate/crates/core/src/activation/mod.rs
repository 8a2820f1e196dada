//! Scalar activation functions with analytic derivatives.
//!
//! Every function is generic over [`Scalar`] and evaluated in a form that
//! stays finite for large `|z|` (exponentials are always taken of a
//! non-positive argument).

mod catalog;
pub mod scan;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use catalog::{
    descriptor, descriptor_with, ActivationDescriptor, Deviation, Endpoint, EndpointKind,
    HyperplaneCount, NamedParam, Range,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActivationError {
    #[error("non-finite input {0}")]
    Domain(f64),
    #[error("{id} is not differentiable at z = {point}")]
    Kink { id: ActivationId, point: f64 },
    #[error("{id} has no {what}")]
    Unsupported { id: ActivationId, what: &'static str },
    #[error("unknown activation '{0}'")]
    UnknownName(String),
}

/// Identifier of one catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActivationId {
    Signum,
    Identity,
    BipolarSigmoid,
    Sigmoid,
    Tanh,
    Absolute,
    SoftRootSign,
    HardTanh,
    SiLU,
    LiSHT,
    Softplus,
    ReLU,
    LeakyReLU,
    GELU,
    SELU,
    Swish,
    Mish,
    ELU,
    PReLU,
    Sine,
    SQU,
    MonotonicCubic,
    NCU,
    ZSqCos,
    SSU,
    GCU,
    DSU,
    /// Heaviside step. Carries property metadata only; not part of
    /// [`ActivationId::CATALOG`] and never benchmarked.
    Step,
}

impl ActivationId {
    /// The 27 defined activation functions, in table order.
    pub const CATALOG: [ActivationId; 27] = [
        Self::Signum,
        Self::Identity,
        Self::BipolarSigmoid,
        Self::Sigmoid,
        Self::Tanh,
        Self::Absolute,
        Self::SoftRootSign,
        Self::HardTanh,
        Self::SiLU,
        Self::LiSHT,
        Self::Softplus,
        Self::ReLU,
        Self::LeakyReLU,
        Self::GELU,
        Self::SELU,
        Self::Swish,
        Self::Mish,
        Self::ELU,
        Self::PReLU,
        Self::Sine,
        Self::SQU,
        Self::MonotonicCubic,
        Self::NCU,
        Self::ZSqCos,
        Self::SSU,
        Self::GCU,
        Self::DSU,
    ];

    /// Catalog plus descriptor-only entries.
    pub const ALL: [ActivationId; 28] = {
        let mut all = [Self::Step; 28];
        let mut i = 0;
        while i < 27 {
            all[i] = Self::CATALOG[i];
            i += 1;
        }
        all
    };

    pub fn name(self) -> &'static str {
        match self {
            Self::Signum => "Signum",
            Self::Identity => "Identity",
            Self::BipolarSigmoid => "BipolarSigmoid",
            Self::Sigmoid => "Sigmoid",
            Self::Tanh => "Tanh",
            Self::Absolute => "Absolute",
            Self::SoftRootSign => "SoftRootSign",
            Self::HardTanh => "HardTanh",
            Self::SiLU => "SiLU",
            Self::LiSHT => "LiSHT",
            Self::Softplus => "Softplus",
            Self::ReLU => "ReLU",
            Self::LeakyReLU => "LeakyReLU",
            Self::GELU => "GELU",
            Self::SELU => "SELU",
            Self::Swish => "Swish",
            Self::Mish => "Mish",
            Self::ELU => "ELU",
            Self::PReLU => "PReLU",
            Self::Sine => "Sine",
            Self::SQU => "SQU",
            Self::MonotonicCubic => "MonotonicCubic",
            Self::NCU => "NCU",
            Self::ZSqCos => "ZSqCos",
            Self::SSU => "SSU",
            Self::GCU => "GCU",
            Self::DSU => "DSU",
            Self::Step => "Step",
        }
    }
}

impl fmt::Display for ActivationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationId {
    type Err = ActivationError;

    /// Case-insensitive; `_`, `-` and spaces are ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        let alias = match key.as_str() {
            "sign" => Some(Self::Signum),
            "linear" => Some(Self::Identity),
            "abs" => Some(Self::Absolute),
            "srs" => Some(Self::SoftRootSign),
            "leakyrelu" | "lrelu" => Some(Self::LeakyReLU),
            "sin" => Some(Self::Sine),
            "z2cos" | "zsqcos" | "z2cosz" => Some(Self::ZSqCos),
            "heaviside" => Some(Self::Step),
            _ => None,
        };
        alias
            .or_else(|| {
                Self::ALL
                    .into_iter()
                    .find(|id| id.name().to_lowercase() == key)
            })
            .ok_or_else(|| ActivationError::UnknownName(s.to_string()))
    }
}

/// Tunable constants of the parametric activations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationParams {
    pub srs_alpha: f64,
    pub srs_beta: f64,
    pub selu_lambda: f64,
    pub selu_alpha: f64,
    pub prelu_alpha: f64,
    pub leaky_slope: f64,
}

impl Default for ActivationParams {
    fn default() -> Self {
        Self {
            srs_alpha: 2.0,
            srs_beta: 3.0,
            selu_lambda: 1.050_700_987_355_480_5,
            selu_alpha: 1.673_263_242_354_377_2,
            prelu_alpha: 0.25,
            leaky_slope: 0.01,
        }
    }
}

const GELU_CUBIC: f64 = 0.044715;

/// `sin(z)/z`, with `sinc(0) = 1`.
pub fn sinc<T: Scalar>(z: T) -> Result<T, ActivationError> {
    if !z.is_finite() {
        return Err(ActivationError::Domain(z.as_f64()));
    }
    Ok(sinc_raw(z))
}

#[inline]
pub(crate) fn sinc_raw<T: Scalar>(z: T) -> T {
    if z == T::zero() {
        T::one()
    } else {
        z.sin() / z
    }
}

/// Derivative of [`sinc`]; a series is used near the origin where
/// `z cos z - sin z` cancels catastrophically.
#[inline]
pub(crate) fn sinc_prime<T: Scalar>(z: T) -> T {
    if z.abs() < T::lit(1e-2) {
        let z2 = z * z;
        z * (T::lit(-1.0 / 3.0) + z2 * (T::lit(1.0 / 30.0) - z2 * T::lit(1.0 / 840.0)))
    } else {
        (z * z.cos() - z.sin()) / (z * z)
    }
}

#[inline]
fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

#[inline]
fn softplus<T: Scalar>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

#[inline]
fn gelu_gate<T: Scalar>(z: T) -> (T, T) {
    let c = T::lit((2.0 / std::f64::consts::PI).sqrt());
    let k = T::lit(GELU_CUBIC);
    let u = c * (z + k * z * z * z);
    let du = c * (T::one() + T::lit(3.0) * k * z * z);
    (sigmoid(u + u), du + du)
}

/// An activation id together with its parameter values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub id: ActivationId,
    pub params: ActivationParams,
}

impl From<ActivationId> for Activation {
    fn from(id: ActivationId) -> Self {
        Self::new(id)
    }
}

impl Activation {
    pub fn new(id: ActivationId) -> Self {
        Self {
            id,
            params: ActivationParams::default(),
        }
    }

    pub fn with_params(id: ActivationId, params: ActivationParams) -> Self {
        Self { id, params }
    }

    pub fn descriptor(&self) -> ActivationDescriptor {
        descriptor_with(self.id, &self.params)
    }

    pub fn eval<T: Scalar>(&self, z: T) -> T {
        use ActivationId::*;
        let p = &self.params;
        let zero = T::zero();
        let one = T::one();
        let pi = T::PI();
        match self.id {
            Signum => {
                if z > zero {
                    one
                } else if z < zero {
                    -one
                } else {
                    zero
                }
            }
            Step => {
                if z > zero {
                    one
                } else if z < zero {
                    zero
                } else {
                    T::lit(0.5)
                }
            }
            Identity => z,
            BipolarSigmoid => {
                let e = (-z.abs()).exp();
                let r = (one - e) / (one + e);
                if z < zero {
                    -r
                } else {
                    r
                }
            }
            Sigmoid => sigmoid(z),
            Tanh => z.tanh(),
            Absolute => z.abs(),
            SoftRootSign => {
                let (a, b) = (T::lit(p.srs_alpha), T::lit(p.srs_beta));
                z / (z / a + (-z / b).exp())
            }
            HardTanh => z.max(-one).min(one),
            SiLU | Swish => z * sigmoid(z),
            LiSHT => z * z.tanh(),
            Softplus => softplus(z),
            ReLU => z.max(zero),
            LeakyReLU => {
                if z < zero {
                    T::lit(p.leaky_slope) * z
                } else {
                    z
                }
            }
            PReLU => {
                if z < zero {
                    T::lit(p.prelu_alpha) * z
                } else {
                    z
                }
            }
            GELU => z * gelu_gate(z).0,
            SELU => {
                let lambda = T::lit(p.selu_lambda);
                if z >= zero {
                    lambda * z
                } else {
                    lambda * T::lit(p.selu_alpha) * z.exp_m1()
                }
            }
            ELU => {
                if z >= zero {
                    z
                } else {
                    z.exp_m1()
                }
            }
            Mish => z * softplus(z).tanh(),
            Sine => z.sin(),
            SQU => z * z + z,
            MonotonicCubic => z * z * z + z,
            NCU => z - z * z * z,
            ZSqCos => z * z * z.cos(),
            SSU => pi * sinc_raw(z - pi),
            GCU => z * z.cos(),
            DSU => pi / T::lit(2.0) * (sinc_raw(z - pi) - sinc_raw(z + pi)),
        }
    }

    /// Analytic derivative; errors exactly at a listed kink point.
    pub fn derivative<T: Scalar>(&self, z: T) -> Result<T, ActivationError> {
        if let Some(&point) = catalog::kinks(self.id)
            .iter()
            .find(|&&k| T::lit(k) == z)
        {
            return Err(ActivationError::Kink { id: self.id, point });
        }
        Ok(self.derivative_unchecked(z))
    }

    /// Derivative with the subgradient 0 at kink points, as used in backprop.
    pub fn grad<T: Scalar>(&self, z: T) -> T {
        if catalog::kinks(self.id).iter().any(|&k| T::lit(k) == z) {
            T::zero()
        } else {
            self.derivative_unchecked(z)
        }
    }

    fn derivative_unchecked<T: Scalar>(&self, z: T) -> T {
        use ActivationId::*;
        let p = &self.params;
        let zero = T::zero();
        let one = T::one();
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let pi = T::PI();
        match self.id {
            Signum | Step => zero,
            Identity => one,
            BipolarSigmoid => {
                let g = self.eval(z);
                (one - g * g) / two
            }
            Sigmoid => {
                let s = sigmoid(z);
                s * (one - s)
            }
            Tanh => {
                let t = z.tanh();
                one - t * t
            }
            Absolute => {
                if z < zero {
                    -one
                } else {
                    one
                }
            }
            SoftRootSign => {
                let (a, b) = (T::lit(p.srs_alpha), T::lit(p.srs_beta));
                let e = (-z / b).exp();
                let d = z / a + e;
                e * (one + z / b) / (d * d)
            }
            HardTanh => {
                if z > -one && z < one {
                    one
                } else {
                    zero
                }
            }
            SiLU | Swish => {
                let s = sigmoid(z);
                s + z * s * (one - s)
            }
            LiSHT => {
                let t = z.tanh();
                t + z * (one - t * t)
            }
            Softplus => sigmoid(z),
            ReLU => {
                if z > zero {
                    one
                } else {
                    zero
                }
            }
            LeakyReLU => {
                if z < zero {
                    T::lit(p.leaky_slope)
                } else {
                    one
                }
            }
            PReLU => {
                if z < zero {
                    T::lit(p.prelu_alpha)
                } else {
                    one
                }
            }
            GELU => {
                let (s, du2) = gelu_gate(z);
                s + z * s * (one - s) * du2
            }
            SELU => {
                let lambda = T::lit(p.selu_lambda);
                if z >= zero {
                    lambda
                } else {
                    lambda * T::lit(p.selu_alpha) * z.exp()
                }
            }
            ELU => {
                if z >= zero {
                    one
                } else {
                    z.exp()
                }
            }
            Mish => {
                let t = softplus(z).tanh();
                t + z * (one - t * t) * sigmoid(z)
            }
            Sine => z.cos(),
            SQU => two * z + one,
            MonotonicCubic => three * z * z + one,
            NCU => one - three * z * z,
            ZSqCos => z * (two * z.cos() - z * z.sin()),
            SSU => pi * sinc_prime(z - pi),
            GCU => z.cos() - z * z.sin(),
            DSU => pi / two * (sinc_prime(z - pi) - sinc_prime(z + pi)),
        }
    }
}

/// `g(z)` with default parameters.
#[inline]
pub fn evaluate<T: Scalar>(id: ActivationId, z: T) -> T {
    Activation::new(id).eval(z)
}

/// `g'(z)` with default parameters.
#[inline]
pub fn derivative<T: Scalar>(id: ActivationId, z: T) -> Result<T, ActivationError> {
    Activation::new(id).derivative(z)
}
