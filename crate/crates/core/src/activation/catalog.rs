//! Static metadata for every activation: continuity, kinks, monotonicity,
//! range, small-value behaviour, zero structure and XOR capability.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use super::{ActivationId, ActivationParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    /// Attained (or approached as a limit) and tight.
    Closed,
    /// Approached as a limit, never attained.
    Open,
    /// A valid bound that the function does not come near.
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Endpoint {
    pub value: f64,
    pub kind: EndpointKind,
}

impl Endpoint {
    pub const fn closed(value: f64) -> Self {
        Self {
            value,
            kind: EndpointKind::Closed,
        }
    }

    pub const fn open(value: f64) -> Self {
        Self {
            value,
            kind: EndpointKind::Open,
        }
    }

    pub const fn bound(value: f64) -> Self {
        Self {
            value,
            kind: EndpointKind::Bound,
        }
    }

    /// Finite and expected to be approached by the function.
    pub fn is_tight(&self) -> bool {
        self.value.is_finite() && self.kind != EndpointKind::Bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub lo: Endpoint,
    pub hi: Endpoint,
}

impl Range {
    pub const REAL_LINE: Range = Range {
        lo: Endpoint::open(f64::NEG_INFINITY),
        hi: Endpoint::open(f64::INFINITY),
    };

    const fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo: Endpoint::closed(lo),
            hi: Endpoint::closed(hi),
        }
    }

    const fn from(lo: Endpoint) -> Self {
        Self {
            lo,
            hi: Endpoint::open(f64::INFINITY),
        }
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo.value - tol && v <= self.hi.value + tol
    }
}

impl std::fmt::Display for Range {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let open = |e: &Endpoint| !e.value.is_finite() || e.kind == EndpointKind::Open;
        let num = |v: f64| {
            if v == f64::INFINITY {
                "inf".to_string()
            } else if v == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{v}")
            }
        };
        write!(
            f,
            "{}{}, {}{}",
            if open(&self.lo) { '(' } else { '[' },
            num(self.lo.value),
            num(self.hi.value),
            if open(&self.hi) { ')' } else { ']' },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperplaneCount {
    Finite(u32),
    CountablyInfinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NamedParam {
    pub name: &'static str,
    pub value: f64,
}

/// A property whose stored value differs from the published table cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Deviation {
    pub property: &'static str,
    pub published: &'static str,
    pub note: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivationDescriptor {
    pub id: ActivationId,
    pub formula: &'static str,
    pub params: Vec<NamedParam>,
    pub continuous: bool,
    pub nondifferentiable_points: Vec<f64>,
    pub monotonic: bool,
    pub range: Range,
    /// `(c0, c1)` with `g(z) ≈ c0 + c1·z` near the origin.
    pub small_value: Option<(f64, f64)>,
    pub hyperplane_count: HyperplaneCount,
    pub sign_equivalent_identity: bool,
    pub xor_property: bool,
    pub deviations: Vec<Deviation>,
}

pub(crate) fn kinks(id: ActivationId) -> &'static [f64] {
    use ActivationId::*;
    match id {
        Signum | Step | Absolute | ReLU | LeakyReLU | SELU | ELU | PReLU => &[0.0],
        HardTanh => &[-1.0, 1.0],
        _ => &[],
    }
}

// extremes of the oscillatory units, solved to full precision
const SSU_MIN: f64 = -0.682_459_570_501_030_4;
const DSU_MAX: f64 = 1.636_408_136_824_881_8;
const MISH_MIN: f64 = -0.308_843_413_017_250_4;

const NON_MONOTONIC_MINIMUM: &str = "has an interior minimum, so it is not monotonic";

/// Metadata with default parameters.
pub fn descriptor(id: ActivationId) -> ActivationDescriptor {
    descriptor_with(id, &ActivationParams::default())
}

pub fn descriptor_with(id: ActivationId, p: &ActivationParams) -> ActivationDescriptor {
    use ActivationId::*;
    use HyperplaneCount::{CountablyInfinite as Inf, Finite};

    let mut d = ActivationDescriptor {
        id,
        formula: "",
        params: Vec::new(),
        continuous: true,
        nondifferentiable_points: kinks(id).to_vec(),
        monotonic: false,
        range: Range::REAL_LINE,
        small_value: None,
        hyperplane_count: Finite(1),
        sign_equivalent_identity: false,
        xor_property: false,
        deviations: Vec::new(),
    };
    let linear = Some((0.0, 1.0));
    let dev = |property, published, note| Deviation {
        property,
        published,
        note,
    };

    match id {
        Signum => {
            d.formula = "-1 if z < 0; 0 if z = 0; 1 if z > 0";
            d.continuous = false;
            d.monotonic = true;
            d.deviations.push(dev(
                "monotonic",
                "No",
                "non-decreasing everywhere",
            ));
            d.range = Range::closed(-1.0, 1.0);
            d.sign_equivalent_identity = true;
        }
        Step => {
            d.formula = "0 if z < 0; 1/2 if z = 0; 1 if z > 0";
            d.continuous = false;
            d.monotonic = true;
            d.range = Range::closed(0.0, 1.0);
        }
        Identity => {
            d.formula = "z";
            d.monotonic = true;
            d.small_value = linear;
            d.sign_equivalent_identity = true;
        }
        BipolarSigmoid => {
            d.formula = "(1 - e^-z) / (1 + e^-z)";
            d.monotonic = true;
            d.deviations.push(dev(
                "monotonic",
                "No",
                "equals tanh(z/2), strictly increasing",
            ));
            d.range = Range::closed(-1.0, 1.0);
            d.small_value = Some((0.0, 0.5));
            d.deviations.push(dev(
                "small_value",
                "z",
                "equals tanh(z/2), whose slope at 0 is 1/2",
            ));
            d.sign_equivalent_identity = true;
        }
        Sigmoid => {
            d.formula = "1 / (1 + e^-z)";
            d.monotonic = true;
            d.range = Range::closed(0.0, 1.0);
            d.hyperplane_count = Finite(0);
        }
        Tanh => {
            d.formula = "tanh(z)";
            d.monotonic = true;
            d.range = Range::closed(-1.0, 1.0);
            d.small_value = linear;
            d.sign_equivalent_identity = true;
        }
        Absolute => {
            d.formula = "|z|";
            d.monotonic = false;
            d.deviations.push(dev(
                "monotonic",
                "Yes",
                "decreasing for z < 0, increasing for z > 0",
            ));
            d.range = Range::from(Endpoint::closed(0.0));
        }
        SoftRootSign => {
            d.formula = "z / (z/alpha + e^(-z/beta))";
            d.params = vec![
                NamedParam {
                    name: "alpha",
                    value: p.srs_alpha,
                },
                NamedParam {
                    name: "beta",
                    value: p.srs_beta,
                },
            ];
            let (a, b) = (p.srs_alpha, p.srs_beta);
            d.range = Range {
                lo: Endpoint::closed(a * b / (b - a * std::f64::consts::E)),
                hi: Endpoint::open(a),
            };
            d.small_value = linear;
            d.sign_equivalent_identity = true;
        }
        HardTanh => {
            d.formula = "max(-1, min(1, z))";
            d.monotonic = true;
            d.range = Range::closed(-1.0, 1.0);
            d.small_value = linear;
            d.sign_equivalent_identity = true;
        }
        SiLU | Swish => {
            d.formula = "z / (1 + e^-z)";
            d.deviations.push(dev("monotonic", "Yes", NON_MONOTONIC_MINIMUM));
            d.range = Range::from(Endpoint::bound(-0.5));
            if id == Swish {
                d.small_value = Some((0.0, 0.5));
            }
            d.sign_equivalent_identity = true;
        }
        LiSHT => {
            d.formula = "z tanh(z)";
            d.small_value = Some((0.0, 0.0));
            d.range = Range::REAL_LINE;
        }
        Softplus => {
            d.formula = "ln(1 + e^z)";
            d.monotonic = true;
            d.range = Range::from(Endpoint::closed(0.0));
            d.small_value = Some((LN_2, 0.5));
            d.hyperplane_count = Finite(0);
        }
        ReLU => {
            d.formula = "max(0, z)";
            d.monotonic = true;
            d.range = Range::from(Endpoint::closed(0.0));
        }
        LeakyReLU => {
            d.formula = "slope*z if z < 0; z otherwise";
            d.params = vec![NamedParam {
                name: "slope",
                value: p.leaky_slope,
            }];
            d.monotonic = true;
            d.sign_equivalent_identity = true;
        }
        GELU => {
            d.formula = "0.5 z (1 + tanh(sqrt(2/pi) (z + 0.044715 z^3)))";
            d.params = vec![NamedParam {
                name: "cubic",
                value: super::GELU_CUBIC,
            }];
            d.deviations.push(dev("monotonic", "Yes", NON_MONOTONIC_MINIMUM));
            d.range = Range::from(Endpoint::bound(-0.5));
            d.small_value = Some((0.0, 0.5));
            d.sign_equivalent_identity = true;
        }
        SELU => {
            d.formula = "lambda z if z >= 0; lambda alpha (e^z - 1) if z < 0";
            d.params = vec![
                NamedParam {
                    name: "lambda",
                    value: p.selu_lambda,
                },
                NamedParam {
                    name: "alpha",
                    value: p.selu_alpha,
                },
            ];
            d.monotonic = true;
            d.range = Range::from(Endpoint::closed(-p.selu_lambda * p.selu_alpha));
            d.sign_equivalent_identity = true;
        }
        Mish => {
            d.formula = "z tanh(ln(1 + e^z))";
            d.deviations.push(dev("monotonic", "Yes", NON_MONOTONIC_MINIMUM));
            d.range = Range::from(Endpoint::closed(MISH_MIN));
            d.small_value = Some((0.0, LN_2.tanh()));
            d.sign_equivalent_identity = true;
        }
        ELU => {
            d.formula = "z if z >= 0; e^z - 1 if z < 0";
            d.monotonic = true;
            d.range = Range::from(Endpoint::closed(-1.0));
            d.sign_equivalent_identity = true;
        }
        PReLU => {
            d.formula = "z if z >= 0; alpha z if z < 0";
            d.params = vec![NamedParam {
                name: "alpha",
                value: p.prelu_alpha,
            }];
            d.monotonic = true;
            d.sign_equivalent_identity = true;
        }
        Sine => {
            d.formula = "sin(z)";
            d.range = Range::closed(-1.0, 1.0);
            d.small_value = linear;
            d.hyperplane_count = Inf;
            d.xor_property = true;
        }
        SQU => {
            d.formula = "z^2 + z";
            d.range = Range::from(Endpoint::closed(-0.25));
            d.small_value = linear;
            d.hyperplane_count = Finite(2);
            d.xor_property = true;
        }
        MonotonicCubic => {
            d.formula = "z^3 + z";
            d.monotonic = true;
            d.sign_equivalent_identity = true;
        }
        NCU => {
            d.formula = "z - z^3";
            d.small_value = linear;
            d.hyperplane_count = Finite(3);
            d.xor_property = true;
        }
        ZSqCos => {
            d.formula = "z^2 cos(z)";
            d.hyperplane_count = Inf;
            d.deviations.push(dev(
                "range",
                "[,inf)",
                "malformed cell; |z^2 cos z| is unbounded in both directions",
            ));
        }
        SSU => {
            d.formula = "pi sinc(z - pi)";
            d.range = Range {
                lo: Endpoint::closed(SSU_MIN),
                hi: Endpoint::closed(PI),
            };
            d.hyperplane_count = Inf;
            d.xor_property = true;
        }
        GCU => {
            d.formula = "z cos(z)";
            d.small_value = linear;
            d.hyperplane_count = Inf;
            d.xor_property = true;
        }
        DSU => {
            d.formula = "(pi/2) (sinc(z - pi) - sinc(z + pi))";
            d.range = Range::closed(-DSU_MAX, DSU_MAX);
            d.deviations.push(dev(
                "range",
                "[-1.04, 1.04]",
                "equals pi^2 sin z / (pi^2 - z^2); extremes are +/-1.63641 at z = +/-2.63100",
            ));
            d.small_value = linear;
            d.hyperplane_count = Inf;
            d.xor_property = true;
        }
    }
    d
}
