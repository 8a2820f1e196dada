//! Grid-based numerical checks of activation properties.
//!
//! All scans evaluate on gridpoints `k·step` (integer `k`) inside the
//! interval, so the origin is always represented exactly when it lies in
//! range. Results are resolution-limited evidence, not proofs.

use serde::Serialize;
use thiserror::Error;

use super::{Activation, ActivationError};

/// Default scan resolution.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Points with `|z|` below this count as the origin when comparing signs.
pub const ORIGIN_TOL: f64 = 1e-12;
/// Step used by [`gradient_check`].
pub const GRAD_CHECK_H: f64 = 1e-5;
/// Half-width of the band excluded around kinks by [`gradient_check`].
pub const KINK_GUARD: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("invalid interval [{lo}, {hi}] with step {step}")]
    InvalidInterval { lo: f64, hi: f64, step: f64 },
    #[error(transparent)]
    Activation(#[from] ActivationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
    step: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self, ScanError> {
        let ok = lo.is_finite() && hi.is_finite() && step > 0.0 && lo < hi && step < hi - lo;
        if !ok {
            return Err(ScanError::InvalidInterval { lo, hi, step });
        }
        Ok(Self { lo, hi, step })
    }

    /// `[lo, hi]` at [`DEFAULT_STEP`].
    pub fn symmetric(half_width: f64) -> Self {
        Self::new(-half_width, half_width, DEFAULT_STEP).expect("valid symmetric interval")
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Gridpoints `k·step` with `lo ≤ k·step ≤ hi`.
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let k_lo = (self.lo / self.step - 1e-9).ceil() as i64;
        let k_hi = (self.hi / self.step + 1e-9).floor() as i64;
        (k_lo..=k_hi).map(move |k| k as f64 * self.step)
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZeroSite {
    /// Adjacent gridpoints with strictly opposite signs.
    Bracket { lo: f64, hi: f64 },
    /// A maximal run of gridpoints where `g` is exactly zero.
    Exact { lo: f64, hi: f64, crossing: bool },
}

impl ZeroSite {
    pub fn is_crossing(&self) -> bool {
        match self {
            ZeroSite::Bracket { .. } => true,
            ZeroSite::Exact { crossing, .. } => *crossing,
        }
    }

    pub fn midpoint(&self) -> f64 {
        match *self {
            ZeroSite::Bracket { lo, hi } | ZeroSite::Exact { lo, hi, .. } => 0.5 * (lo + hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroScan {
    pub sites: Vec<ZeroSite>,
    /// Number of sign changes of `g`.
    pub crossings: usize,
}

impl ZeroScan {
    /// Distinct zero locations, i.e. hyperplanes of a single neuron.
    pub fn locations(&self) -> usize {
        self.sites.len()
    }
}

pub fn zero_crossings(act: impl Into<Activation>, iv: Interval) -> ZeroScan {
    let act = act.into();
    let mut sites = Vec::new();
    let mut prev: Option<(f64, i8)> = None;
    // start of the current exact-zero run and sign of the value before it
    let mut run: Option<(f64, f64, i8)> = None;

    for z in iv.points() {
        let s = sign(act.eval(z));
        if s == 0 {
            run = match run {
                Some((start, _, before)) => Some((start, z, before)),
                None => Some((z, z, prev.map_or(0, |p| p.1))),
            };
        } else {
            if let Some((start, end, before)) = run.take() {
                sites.push(ZeroSite::Exact {
                    lo: start,
                    hi: end,
                    crossing: before != 0 && before != s,
                });
            } else if let Some((pz, ps)) = prev {
                if ps != 0 && ps != s {
                    sites.push(ZeroSite::Bracket { lo: pz, hi: z });
                }
            }
        }
        prev = Some((z, s));
    }
    if let Some((start, end, _)) = run {
        sites.push(ZeroSite::Exact {
            lo: start,
            hi: end,
            crossing: false,
        });
    }
    let crossings = sites.iter().filter(|s| s.is_crossing()).count();
    ZeroScan { sites, crossings }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub samples: usize,
    pub max_rel_error: f64,
    pub worst_z: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Analytic derivative vs central difference at `n` evenly spaced cell
/// midpoints, skipping the guard band around every kink.
pub fn gradient_check(act: impl Into<Activation>, iv: Interval, n: usize, tol: f64) -> GradCheckReport {
    let act = act.into();
    let kinks = super::catalog::kinks(act.id);
    let width = (iv.hi - iv.lo) / n as f64;
    let mut samples = 0;
    let mut max_rel_error = 0.0f64;
    let mut worst_z = f64::NAN;
    for i in 0..n {
        let z = iv.lo + (i as f64 + 0.5) * width;
        if kinks.iter().any(|k| (z - k).abs() <= KINK_GUARD) {
            continue;
        }
        let analytic = match act.derivative(z) {
            Ok(d) => d,
            Err(_) => continue,
        };
        let h = GRAD_CHECK_H;
        let numeric = (act.eval(z + h) - act.eval(z - h)) / (2.0 * h);
        let err = (analytic - numeric).abs() / analytic.abs().max(1.0);
        samples += 1;
        if err > max_rel_error || worst_z.is_nan() {
            max_rel_error = max_rel_error.max(err);
            worst_z = z;
        }
    }
    GradCheckReport {
        samples,
        max_rel_error,
        worst_z,
        tol,
        pass: max_rel_error <= tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallValueReport {
    pub expected: (f64, f64),
    pub measured: (f64, f64),
    pub tol: f64,
    pub pass: bool,
}

/// Compares `g(0)` and `g'(0)` (central difference) with the tabulated
/// small-value approximation.
pub fn small_value_check(act: impl Into<Activation>, tol: f64) -> Result<SmallValueReport, ScanError> {
    let act = act.into();
    let desc = act.descriptor();
    let expected = desc.small_value.ok_or(ActivationError::Unsupported {
        id: act.id,
        what: "small-value approximation",
    })?;
    if desc.nondifferentiable_points.contains(&0.0) {
        return Err(ActivationError::Kink {
            id: act.id,
            point: 0.0,
        }
        .into());
    }
    let h = 1e-6;
    let c0 = act.eval(0.0);
    let c1 = (act.eval(h) - act.eval(-h)) / (2.0 * h);
    let pass = (c0 - expected.0).abs() <= tol && (c1 - expected.1).abs() <= tol;
    Ok(SmallValueReport {
        expected,
        measured: (c0, c1),
        tol,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignEquivalence {
    pub equivalent: bool,
    /// The mismatching gridpoint closest to the origin.
    pub counterexample: Option<f64>,
}

pub fn sign_equivalence_scan(act: impl Into<Activation>, iv: Interval) -> SignEquivalence {
    let act = act.into();
    let mut best: Option<f64> = None;
    for z in iv.points() {
        let g = act.eval(z);
        if z.abs() <= ORIGIN_TOL && g.abs() <= ORIGIN_TOL {
            continue;
        }
        if sign(g) != sign(z) && best.is_none_or(|b| z.abs() < b.abs()) {
            best = Some(z);
        }
    }
    SignEquivalence {
        equivalent: best.is_none(),
        counterexample: best,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeScan {
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
}

pub fn range_scan(act: impl Into<Activation>, iv: Interval) -> RangeScan {
    let act = act.into();
    let mut r = RangeScan {
        min: f64::INFINITY,
        argmin: f64::NAN,
        max: f64::NEG_INFINITY,
        argmax: f64::NAN,
    };
    for z in iv.points() {
        let g = act.eval(z);
        if g < r.min {
            r.min = g;
            r.argmin = z;
        }
        if g > r.max {
            r.max = g;
            r.argmax = z;
        }
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityScan {
    pub monotonic: bool,
    pub violation_count: usize,
    /// Up to [`MonotonicityScan::MAX_LISTED`] gridpoints `z` with `g(z+step) < g(z)`.
    pub violations: Vec<f64>,
}

impl MonotonicityScan {
    pub const MAX_LISTED: usize = 16;
}

pub fn monotonicity_scan(act: impl Into<Activation>, iv: Interval) -> MonotonicityScan {
    let act = act.into();
    let mut violations = Vec::new();
    let mut count = 0;
    let mut prev: Option<(f64, f64)> = None;
    for z in iv.points() {
        let g = act.eval(z);
        if let Some((pz, pg)) = prev {
            if g < pg {
                count += 1;
                if violations.len() < MonotonicityScan::MAX_LISTED {
                    violations.push(pz);
                }
            }
        }
        prev = Some((z, g));
    }
    MonotonicityScan {
        monotonic: count == 0,
        violation_count: count,
        violations,
    }
}

/// Locates jump discontinuities.
///
/// Cells whose increment is steeper than `SLOPE_TRIGGER` are bisected
/// toward the half with the larger jump; an increment that survives
/// `BISECTIONS` halvings above `JUMP_TOL` marks a discontinuity.
pub fn continuity_scan(act: impl Into<Activation>, iv: Interval) -> Vec<f64> {
    const SLOPE_TRIGGER: f64 = 10.0;
    const BISECTIONS: usize = 60;
    const JUMP_TOL: f64 = 1e-6;

    let act = act.into();
    let mut found: Vec<f64> = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for z in iv.points() {
        let g = act.eval(z);
        if let Some((pz, pg)) = prev {
            if (g - pg).abs() > SLOPE_TRIGGER * iv.step {
                let (mut a, mut b) = (pz, z);
                let (mut ga, mut gb) = (pg, g);
                for _ in 0..BISECTIONS {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    let gm = act.eval(m);
                    if (gm - ga).abs() >= (gb - gm).abs() {
                        b = m;
                        gb = gm;
                    } else {
                        a = m;
                        ga = gm;
                    }
                }
                if (gb - ga).abs() > JUMP_TOL {
                    let at = 0.5 * (a + b);
                    if found.last().is_none_or(|&l| (at - l).abs() > 2.0 * iv.step) {
                        found.push(at);
                    }
                }
            }
        }
        prev = Some((z, g));
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationId::{self, *};
    use std::f64::consts::{LN_2, PI};

    fn iv10() -> Interval {
        Interval::symmetric(10.0)
    }

    /// Independent oracle: analytic zeros of the oscillatory units on [-10, 10].
    fn analytic_zeros(id: ActivationId) -> Vec<f64> {
        match id {
            SQU => vec![-1.0, 0.0],
            NCU => vec![-1.0, 0.0, 1.0],
            GCU => [-5.0, -3.0, -1.0, 1.0, 3.0, 5.0]
                .iter()
                .map(|k| k * PI / 2.0)
                .chain([0.0])
                .collect(),
            SSU => [-3.0, -2.0, -1.0, 0.0, 2.0, 3.0].iter().map(|k| k * PI).collect(),
            DSU => [-3.0, -2.0, 0.0, 2.0, 3.0].iter().map(|k| k * PI).collect(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::new(1.0, -1.0, 0.1).is_err());
        assert!(Interval::new(-1.0, 1.0, 0.0).is_err());
        assert!(Interval::new(-1.0, 1.0, 3.0).is_err());
        let iv = Interval::new(-1.0, 1.0, 0.25).unwrap();
        let pts: Vec<f64> = iv.points().collect();
        assert_eq!(pts, vec![-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(iv10().points().count(), 20_001);
        assert!(iv10().points().any(|z| z == 0.0));
    }

    #[test]
    fn crossing_counts_match_analytic_zeros() {
        for id in [SQU, NCU, GCU, SSU, DSU] {
            let scan = zero_crossings(id, iv10());
            let zeros = analytic_zeros(id);
            assert_eq!(scan.crossings, zeros.len(), "{id}");
            for site in &scan.sites {
                let m = site.midpoint();
                assert!(zeros.iter().any(|z| (z - m).abs() <= 1e-3), "{id}: stray site at {m}");
            }
        }
    }

    #[test]
    fn crossing_counts_for_the_rest() {
        let expect = [
            (Identity, 1),
            (MonotonicCubic, 1),
            (Sine, 7),
            (ZSqCos, 6),
            (Softplus, 0),
            (ReLU, 0),
        ];
        for (id, n) in expect {
            assert_eq!(zero_crossings(id, iv10()).crossings, n, "{id}");
        }
        // touching root at 0 plus six sign changes
        assert_eq!(zero_crossings(ZSqCos, iv10()).locations(), 7);
        // flat zero half-line is one location
        assert_eq!(zero_crossings(ReLU, iv10()).locations(), 1);
        assert_eq!(zero_crossings(LiSHT, iv10()).locations(), 1);
    }

    #[test]
    fn gradient_check_examples() {
        let iv = Interval::new(-6.0, 6.0, 0.01).unwrap();
        let id = gradient_check(Identity, iv, 100, 1e-6);
        assert!(id.pass && id.max_rel_error < 1e-10);
        assert_eq!(id.samples, 100);
        assert!(gradient_check(SQU, iv, 1000, 1e-5).pass);
        assert!(gradient_check(Mish, iv, 1000, 1e-5).pass);
        assert!((crate::activation::derivative(Mish, 0.0f64).unwrap() - LN_2.tanh()).abs() < 1e-15);
        // 1001 midpoints put one sample exactly on the kink
        let relu = gradient_check(ReLU, iv, 1001, 1e-5);
        assert!(relu.pass);
        assert_eq!(relu.samples, 1000);
    }

    #[test]
    fn gradient_check_catches_a_wrong_derivative() {
        // a derivative that is off by a factor shows up as a large error
        let a = crate::activation::Activation::new(Sine);
        let h = GRAD_CHECK_H;
        let z = 0.7;
        let numeric = (a.eval(z + h) - a.eval(z - h)) / (2.0 * h);
        assert!((1.1 * z.cos() - numeric).abs() > 1e-3);
    }

    #[test]
    fn small_value_examples() {
        let swish = small_value_check(Swish, 1e-6).unwrap();
        assert!(swish.pass);
        assert!((swish.measured.1 - 0.5).abs() < 1e-9);
        let sp = small_value_check(Softplus, 1e-6).unwrap();
        assert!(sp.pass && (sp.measured.0 - LN_2).abs() < 1e-15);
        let dsu = small_value_check(DSU, 1e-6).unwrap();
        assert_eq!(dsu.expected, (0.0, 1.0));
        assert!(dsu.pass);
        assert!(matches!(
            small_value_check(ReLU, 1e-6),
            Err(ScanError::Activation(ActivationError::Unsupported { .. }))
        ));
    }

    #[test]
    fn sign_equivalence_examples() {
        assert!(sign_equivalence_scan(BipolarSigmoid, iv10()).equivalent);
        let gcu = sign_equivalence_scan(GCU, iv10());
        assert!(!gcu.equivalent);
        let cex = gcu.counterexample.unwrap();
        assert!((cex.abs() - PI / 2.0).abs() < 2e-3);
        // the documented witness z = 2 is a mismatch too
        assert!(crate::activation::evaluate(GCU, 2.0f64) < 0.0);
        let relu = sign_equivalence_scan(ReLU, iv10());
        assert!(!relu.equivalent);
        assert!(relu.counterexample.unwrap() < 0.0);
        assert!(sign_equivalence_scan(GELU, iv10()).equivalent);
    }

    #[test]
    fn range_examples() {
        let squ = range_scan(SQU, Interval::symmetric(20.0));
        assert!((squ.min + 0.25).abs() < 1e-12);
        assert_eq!(squ.argmin, -0.5);

        // oracle: pi^2 sin z / (pi^2 - z^2) maximised on a 1e-6 grid near 2.631
        let oracle = (0..20_000)
            .map(|i| 2.62 + i as f64 * 1e-6)
            .map(|z| PI * PI * z.sin() / (PI * PI - z * z))
            .fold(f64::MIN, f64::max);
        let dsu = range_scan(DSU, Interval::symmetric(20.0));
        assert!((dsu.max - oracle).abs() < 1e-6);
        assert!((dsu.min + oracle).abs() < 1e-6);

        let ssu = range_scan(SSU, Interval::symmetric(40.0));
        assert!((ssu.min + 0.68).abs() < 0.01);
        assert!((ssu.max - PI).abs() < 1e-6);
    }

    #[test]
    fn monotonicity_examples() {
        assert!(monotonicity_scan(Tanh, iv10()).monotonic);
        assert!(monotonicity_scan(MonotonicCubic, iv10()).monotonic);
        let sine = monotonicity_scan(Sine, iv10());
        assert!(!sine.monotonic);
        assert!(sine.violations.len() <= MonotonicityScan::MAX_LISTED);
        assert!(sine.violation_count > sine.violations.len());
    }

    #[test]
    fn continuity_detects_jumps_only() {
        let jumps = continuity_scan(Signum, iv10());
        assert_eq!(jumps.len(), 1);
        assert!(jumps[0].abs() < 1e-3);
        assert_eq!(continuity_scan(Step, iv10()).len(), 1);
        for id in [ReLU, HardTanh, MonotonicCubic, GCU, ZSqCos, SSU] {
            assert!(continuity_scan(id, iv10()).is_empty(), "{id}");
        }
    }
}
