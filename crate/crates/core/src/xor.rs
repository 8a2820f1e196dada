//! Single-neuron XOR: the bipolar dataset, brute-force certification,
//! gradient-descent training and decision-boundary export.

use std::cmp::Ordering;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::activation::{Activation, ActivationId};
use crate::scalar::Scalar;

/// Minimum `|g(z)|` for a certified point.
pub const MARGIN_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum XorError {
    #[error("invalid training spec: {0}")]
    InvalidSpec(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The four bipolar XOR pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XorDataset<T> {
    pub points: [([T; 2], T); 4],
}

pub fn xor_dataset<T: Scalar>() -> XorDataset<T> {
    let (n, p) = (-T::one(), T::one());
    XorDataset {
        points: [([n, n], n), ([p, n], p), ([n, p], p), ([p, p], n)],
    }
}

fn sign<T: Scalar>(v: T) -> i8 {
    if v > T::zero() {
        1
    } else if v < T::zero() {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleNeuron<T> {
    pub w: [T; 2],
    pub b: T,
    pub activation: Activation,
}

impl<T: Scalar> SingleNeuron<T> {
    pub fn new(id: ActivationId, w: [T; 2], b: T) -> Self {
        Self {
            w,
            b,
            activation: Activation::new(id),
        }
    }

    #[inline]
    pub fn pre_activation(&self, x: [T; 2]) -> T {
        self.w[0] * x[0] + self.w[1] * x[1] + self.b
    }

    #[inline]
    pub fn forward(&self, x: [T; 2]) -> T {
        self.activation.eval(self.pre_activation(x))
    }

    pub fn certify(&self) -> XorCertificate<T> {
        let data = xor_dataset::<T>();
        let margins = data.points.map(|(x, _)| self.forward(x));
        let correct = data
            .points
            .iter()
            .zip(&margins)
            .filter(|((_, y), m)| sign(**m) == sign(*y))
            .count();
        XorCertificate {
            neuron: *self,
            margins,
            correct,
        }
    }
}

/// Free function form of [`SingleNeuron::forward`].
pub fn neuron_forward<T: Scalar>(n: &SingleNeuron<T>, x: [T; 2]) -> T {
    n.forward(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XorCertificate<T> {
    pub neuron: SingleNeuron<T>,
    /// `g(zᵢ)` for the dataset points in order.
    pub margins: [T; 4],
    pub correct: usize,
}

impl<T: Scalar> XorCertificate<T> {
    pub fn min_abs_margin(&self) -> T {
        self.margins
            .iter()
            .fold(T::infinity(), |acc, m| acc.min(m.abs()))
    }

    pub fn is_valid(&self) -> bool {
        self.correct == 4 && self.min_abs_margin() > T::lit(MARGIN_THRESHOLD)
    }

    /// Higher correct count first, then the larger minimum margin.
    fn rank(&self, other: &Self) -> Ordering {
        self.correct.cmp(&other.correct).then(
            self.min_abs_margin()
                .partial_cmp(&other.min_abs_margin())
                .unwrap_or(Ordering::Equal),
        )
    }

    pub fn record(&self, source: CertificateSource) -> CertificateRecord {
        CertificateRecord {
            activation: self.neuron.activation.id,
            w: self.neuron.w.map(T::as_f64),
            b: self.neuron.b.as_f64(),
            margins: self.margins.map(T::as_f64),
            correct: self.correct,
            valid: self.is_valid(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateSource {
    Trained,
    Grid,
    None,
}

/// JSON form of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateRecord {
    pub activation: ActivationId,
    pub w: [f64; 2],
    pub b: f64,
    pub margins: [f64; 4],
    pub correct: usize,
    pub valid: bool,
    pub source: CertificateSource,
}

/// Exhaustive search over `(w1, w2, b) ∈ [−bound, bound]³` on a grid of
/// spacing `resolution`.
///
/// The best certificate maximises the correct count, then the minimum
/// `|margin|`; remaining ties go to the lowest `(w1, w2, b)` grid index, so
/// the result does not depend on how the work is split across threads.
pub fn grid_search_certificate<T: Scalar>(
    act: impl Into<Activation>,
    bound: T,
    resolution: T,
) -> Result<XorCertificate<T>, XorError> {
    let act = act.into();
    if bound.is_nan() || resolution.is_nan() || bound <= T::zero() || resolution <= T::zero() {
        return Err(XorError::InvalidGrid("bound and resolution must be positive"));
    }
    let n = (bound / resolution + T::lit(1e-9))
        .floor()
        .to_i64()
        .ok_or(XorError::InvalidGrid("grid too large"))?;
    let value = |k: i64| T::from_i64(k).unwrap() * resolution;

    let best = (-n..=n)
        .into_par_iter()
        .map(|i| {
            let w1 = value(i);
            let mut best: Option<XorCertificate<T>> = None;
            for j in -n..=n {
                let w2 = value(j);
                for k in -n..=n {
                    let neuron = SingleNeuron {
                        w: [w1, w2],
                        b: value(k),
                        activation: act,
                    };
                    let cert = neuron.certify();
                    if best.as_ref().is_none_or(|b| cert.rank(b) == Ordering::Greater) {
                        best = Some(cert);
                    }
                }
            }
            best.expect("non-empty grid")
        })
        // strict improvement keeps the earlier (lower index) candidate
        .reduce_with(|a, b| if b.rank(&a) == Ordering::Greater { b } else { a })
        .expect("non-empty grid");
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainSpec {
    pub learning_rate: f64,
    pub epochs: usize,
    pub restarts: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 2000,
            restarts: 20,
            seed: 7,
            init_scale: 1.0,
        }
    }
}

impl TrainSpec {
    fn validate(&self) -> Result<(), XorError> {
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(XorError::InvalidSpec("learning_rate must be positive"));
        }
        if self.epochs == 0 || self.restarts == 0 {
            return Err(XorError::InvalidSpec("epochs and restarts must be positive"));
        }
        if self.init_scale.is_nan() || self.init_scale <= 0.0 {
            return Err(XorError::InvalidSpec("init_scale must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutcome<T> {
    pub certificate: XorCertificate<T>,
    /// Per-epoch squared-error loss of the returned restart.
    pub loss_trace: Vec<T>,
    /// Zero-based index of the restart that produced the certificate.
    pub restart: usize,
}

/// Full-batch gradient descent on `Σ (g(w·xᵢ + b) − yᵢ)²` with seeded
/// restarts; stops at the first valid certificate.
pub fn train_single_neuron<T: Scalar>(
    act: impl Into<Activation>,
    spec: &TrainSpec,
) -> Result<TrainOutcome<T>, XorError> {
    spec.validate()?;
    let act = act.into();
    let data = xor_dataset::<T>();
    let lr = T::lit(spec.learning_rate);
    let two = T::lit(2.0);
    let mut best: Option<TrainOutcome<T>> = None;

    for restart in 0..spec.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(restart as u64));
        let s = spec.init_scale;
        let mut draw = || T::lit(rng.gen_range(-s..=s));
        let mut neuron = SingleNeuron {
            w: [draw(), draw()],
            b: draw(),
            activation: act,
        };
        let mut trace = Vec::with_capacity(spec.epochs);
        for _ in 0..spec.epochs {
            let mut loss = T::zero();
            let mut grad = [T::zero(); 3];
            for (x, y) in data.points {
                let z = neuron.pre_activation(x);
                let err = act.eval(z) - y;
                loss = loss + err * err;
                let delta = two * err * act.grad(z);
                grad[0] = grad[0] + delta * x[0];
                grad[1] = grad[1] + delta * x[1];
                grad[2] = grad[2] + delta;
            }
            trace.push(loss);
            if !grad.iter().all(|g| g.is_finite()) {
                break;
            }
            neuron.w[0] = neuron.w[0] - lr * grad[0];
            neuron.w[1] = neuron.w[1] - lr * grad[1];
            neuron.b = neuron.b - lr * grad[2];
        }
        let outcome = TrainOutcome {
            certificate: neuron.certify(),
            loss_trace: trace,
            restart,
        };
        if outcome.certificate.is_valid() {
            return Ok(outcome);
        }
        if best
            .as_ref()
            .is_none_or(|b| outcome.certificate.rank(&b.certificate) == Ordering::Greater)
        {
            best = Some(outcome);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Signs of a neuron's output over a square grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGrid<T> {
    /// Coordinates shared by both axes.
    pub axis: Vec<T>,
    /// `signs[j * n + i]` is the sign at `(x1, x2) = (axis[i], axis[j])`.
    pub signs: Vec<i8>,
}

impl<T: Scalar> BoundaryGrid<T> {
    pub fn resolution(&self) -> usize {
        self.axis.len()
    }

    pub fn sign_at(&self, i: usize, j: usize) -> i8 {
        self.signs[j * self.axis.len() + i]
    }

    /// Index of the axis coordinate nearest to `v`.
    pub fn nearest_index(&self, v: T) -> usize {
        let mut best = 0;
        for (i, &a) in self.axis.iter().enumerate() {
            if (a - v).abs() < (self.axis[best] - v).abs() {
                best = i;
            }
        }
        best
    }

    /// Sign at the cell nearest to `x`.
    pub fn sign_near(&self, x: [T; 2]) -> i8 {
        self.sign_at(self.nearest_index(x[0]), self.nearest_index(x[1]))
    }

    /// CSV with header `x1,x2,sign`, `x1` varying fastest.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x1,x2,sign")?;
        let n = self.axis.len();
        for j in 0..n {
            for i in 0..n {
                writeln!(out, "{},{},{}", self.axis[i], self.axis[j], self.signs[j * n + i])?;
            }
        }
        Ok(())
    }
}

pub fn decision_boundary_grid<T: Scalar>(
    neuron: &SingleNeuron<T>,
    lo: T,
    hi: T,
    resolution: usize,
) -> Result<BoundaryGrid<T>, XorError> {
    if resolution < 2 {
        return Err(XorError::InvalidGrid("resolution must be at least 2"));
    }
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(XorError::InvalidGrid("region must satisfy lo < hi"));
    }
    let spacing = (hi - lo) / T::from_usize(resolution - 1).unwrap();
    let axis: Vec<T> = (0..resolution)
        .map(|i| lo + T::from_usize(i).unwrap() * spacing)
        .collect();
    let mut signs = Vec::with_capacity(resolution * resolution);
    for &x2 in &axis {
        for &x1 in &axis {
            signs.push(sign(neuron.forward([x1, x2])));
        }
    }
    Ok(BoundaryGrid { axis, signs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActivationId::*;

    #[test]
    fn dataset_is_bipolar_xor() {
        let d = xor_dataset::<f64>();
        assert_eq!(d.points.len(), 4);
        assert!(d.points.contains(&([-1.0, -1.0], -1.0)));
        assert!(d.points.contains(&([1.0, -1.0], 1.0)));
        for (x, y) in d.points {
            // XOR in bipolar form: label is -x1*x2
            assert_eq!(y, -x[0] * x[1]);
        }
    }

    #[test]
    fn forward_examples() {
        let squ = SingleNeuron::new(SQU, [1.1f64, -1.0], -0.5);
        assert!((squ.forward([1.0, 1.0]) - (-0.24)).abs() < 1e-12);
        assert!((squ.forward([1.0, -1.0]) - 4.16).abs() < 1e-12);
        let zero = SingleNeuron::new(Identity, [0.0, 0.0], 0.0);
        assert_eq!(neuron_forward(&zero, [0.3, -7.0]), 0.0);
    }

    #[test]
    fn documented_certificates_are_valid() {
        let squ = SingleNeuron::new(SQU, [1.1f64, -1.0], -0.5).certify();
        assert!(squ.is_valid());
        let expect = [-0.24, 4.16, 4.16, -0.24];
        for (m, e) in squ.margins.iter().zip(expect) {
            assert!((m - e).abs() < 1e-12);
        }
        let ncu = SingleNeuron::new(NCU, [0.5f64, -0.5], -0.5).certify();
        assert!(ncu.is_valid());
        let expect = [-0.375, 0.375, 1.875, -0.375];
        for (m, e) in ncu.margins.iter().zip(expect) {
            assert!((m - e).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_margins_do_not_certify() {
        let c = SingleNeuron::new(Identity, [0.0f64, 0.0], 0.0).certify();
        assert_eq!(c.correct, 0);
        assert!(!c.is_valid());
    }

    #[test]
    fn grid_search_small_grid_is_deterministic() {
        let a = grid_search_certificate(SQU, 2.0f64, 0.5).unwrap();
        let b = grid_search_certificate(SQU, 2.0f64, 0.5).unwrap();
        assert_eq!(a, b);
        assert!(a.is_valid());
    }

    #[test]
    fn grid_search_matches_sequential_scan() {
        // independent sequential oracle with the same ordering rule
        let (bound, res) = (1.5f64, 0.5f64);
        let n = 3i64;
        let mut best: Option<XorCertificate<f64>> = None;
        for i in -n..=n {
            for j in -n..=n {
                for k in -n..=n {
                    let c = SingleNeuron::new(Sine, [i as f64 * res, j as f64 * res], k as f64 * res)
                        .certify();
                    let better = match &best {
                        None => true,
                        Some(b) => (c.correct, c.min_abs_margin()) > (b.correct, b.min_abs_margin()),
                    };
                    if better {
                        best = Some(c);
                    }
                }
            }
        }
        assert_eq!(grid_search_certificate(Sine, bound, res).unwrap(), best.unwrap());
    }

    #[test]
    fn relu_grid_has_no_certificate() {
        let c = grid_search_certificate(ReLU, 5.0f64, 0.1).unwrap();
        assert!(c.correct <= 3);
        assert!(!c.is_valid());
    }

    #[test]
    fn training_examples() {
        let spec = TrainSpec::default();
        let squ = train_single_neuron::<f64>(SQU, &spec).unwrap();
        assert_eq!(squ.certificate.correct, 4);
        assert!(squ.certificate.is_valid());
        let gcu = train_single_neuron::<f64>(GCU, &spec).unwrap();
        assert_eq!(gcu.certificate.correct, 4);
        let tanh = train_single_neuron::<f64>(Tanh, &spec).unwrap();
        assert!(tanh.certificate.correct <= 3);
        assert_eq!(tanh.loss_trace.len(), spec.epochs);
    }

    #[test]
    fn training_with_kinks_uses_zero_subgradient() {
        // starting exactly on the ReLU kink must not error
        let spec = TrainSpec {
            epochs: 5,
            restarts: 1,
            ..TrainSpec::default()
        };
        assert!(train_single_neuron::<f64>(ReLU, &spec).is_ok());
        assert!(train_single_neuron::<f64>(Signum, &spec).is_ok());
    }

    #[test]
    fn train_spec_validation() {
        let bad = TrainSpec {
            epochs: 0,
            ..TrainSpec::default()
        };
        assert!(train_single_neuron::<f64>(SQU, &bad).is_err());
    }

    #[test]
    fn boundary_grid_examples() {
        let squ = SingleNeuron::new(SQU, [1.1f64, -1.0], -0.5);
        let g = decision_boundary_grid(&squ, -2.0, 2.0, 101).unwrap();
        assert_eq!(g.resolution(), 101);
        assert_eq!(g.nearest_index(1.0), 75);
        assert_eq!(g.sign_near([1.0, 1.0]), -1);
        for (x, y) in xor_dataset::<f64>().points {
            assert_eq!(g.sign_near(x) as f64, y);
        }

        let zero = SingleNeuron::new(GCU, [0.0f64, 0.0], 0.0);
        let g = decision_boundary_grid(&zero, -3.0, 1.0, 7).unwrap();
        assert!(g.signs.iter().all(|&s| s == 0));

        let ncu = SingleNeuron::new(NCU, [0.5f64, -0.5], -0.5);
        let g = decision_boundary_grid(&ncu, -2.0, 2.0, 101).unwrap();
        assert_eq!(g.sign_near([-1.0, 1.0]), 1);

        assert!(decision_boundary_grid(&ncu, -2.0, 2.0, 1).is_err());
    }

    #[test]
    fn boundary_csv_layout() {
        let n = SingleNeuron::new(Identity, [1.0f64, 0.0], 0.0);
        let g = decision_boundary_grid(&n, -1.0, 1.0, 2).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "x1,x2,sign\n-1,-1,-1\n1,-1,1\n-1,1,-1\n1,1,1\n"
        );
    }
}
