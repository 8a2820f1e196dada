//! Property report: every descriptor field next to its measured value, with
//! a list of contradictions per activation.

use std::io::Write;

use serde::Serialize;

use crate::activation::scan::{self, Interval};
use crate::activation::{
    descriptor, Activation, ActivationId, Deviation, HyperplaneCount, NamedParam,
};
use crate::xor;

pub const SCAN_HALF_WIDTH: f64 = 10.0;
pub const RANGE_HALF_WIDTH: f64 = 20.0;
pub const RANGE_TOL: f64 = 1e-9;
pub const APPROACH_TOL: f64 = 0.01;
pub const SMALL_VALUE_TOL: f64 = 1e-6;
pub const GRAD_HALF_WIDTH: f64 = 6.0;
pub const GRAD_POINTS: usize = 1000;
pub const GRAD_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportOptions {
    /// Also run the brute-force XOR search for every activation.
    pub with_xor: bool,
    pub xor_bound: f64,
    pub xor_resolution: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            with_xor: true,
            xor_bound: 5.0,
            xor_resolution: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyRow {
    pub id: ActivationId,
    pub formula: &'static str,
    pub params: Vec<NamedParam>,
    pub continuous: bool,
    pub measured_discontinuities: Vec<f64>,
    pub nondifferentiable_points: Vec<f64>,
    pub monotonic: bool,
    pub measured_monotonic: bool,
    pub range: String,
    pub observed_min: f64,
    pub observed_max: f64,
    pub small_value: Option<(f64, f64)>,
    pub measured_small_value: Option<(f64, f64)>,
    pub hyperplane_count: HyperplaneCount,
    /// Zero locations on `[-10, 10]`.
    pub zero_locations: usize,
    /// Zero locations on `[-20, 20]`.
    pub zero_locations_wide: usize,
    pub zero_crossings: usize,
    pub sign_equivalent_identity: bool,
    pub measured_sign_equivalent: bool,
    pub sign_counterexample: Option<f64>,
    pub gradient_max_rel_error: f64,
    pub xor_property: bool,
    pub xor_grid_certificate: Option<bool>,
    pub deviations: Vec<Deviation>,
    pub contradictions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub rows: Vec<PropertyRow>,
}

pub fn property_row(id: ActivationId, opts: &ReportOptions) -> PropertyRow {
    let act = Activation::new(id);
    let d = descriptor(id);
    let narrow = Interval::symmetric(SCAN_HALF_WIDTH);
    let wide = Interval::symmetric(RANGE_HALF_WIDTH);
    let mut bad = Vec::new();

    let discontinuities = scan::continuity_scan(act, narrow);
    if d.continuous != discontinuities.is_empty() {
        bad.push(format!(
            "continuity: descriptor {} but scan found jumps at {:?}",
            d.continuous, discontinuities
        ));
    }

    let mono = scan::monotonicity_scan(act, narrow);
    if d.monotonic != mono.monotonic {
        bad.push(format!(
            "monotonic: descriptor {} but scan found {} violations",
            d.monotonic, mono.violation_count
        ));
    }

    let range = scan::range_scan(act, wide);
    if !d.range.contains(range.min, RANGE_TOL) || !d.range.contains(range.max, RANGE_TOL) {
        bad.push(format!(
            "range: observed [{}, {}] escapes {}",
            range.min, range.max, d.range
        ));
    }
    if d.range.lo.is_tight() && (range.min - d.range.lo.value).abs() > APPROACH_TOL {
        bad.push(format!(
            "range: lower endpoint {} not approached (min {})",
            d.range.lo.value, range.min
        ));
    }
    if d.range.hi.is_tight() && (range.max - d.range.hi.value).abs() > APPROACH_TOL {
        bad.push(format!(
            "range: upper endpoint {} not approached (max {})",
            d.range.hi.value, range.max
        ));
    }

    let measured_small_value = match scan::small_value_check(act, SMALL_VALUE_TOL) {
        Ok(r) => {
            if !r.pass {
                bad.push(format!(
                    "small_value: expected {:?}, measured {:?}",
                    r.expected, r.measured
                ));
            }
            Some(r.measured)
        }
        Err(_) => None,
    };

    let zeros = scan::zero_crossings(act, narrow);
    let zeros_wide = scan::zero_crossings(act, wide);
    let hyper_ok = match d.hyperplane_count {
        HyperplaneCount::Finite(n) => zeros.locations() == n as usize,
        HyperplaneCount::CountablyInfinite => {
            zeros.locations() >= 2 && zeros_wide.locations() > zeros.locations()
        }
    };
    if !hyper_ok {
        bad.push(format!(
            "hyperplanes: descriptor {:?}, found {} zero locations on [-10,10] and {} on [-20,20]",
            d.hyperplane_count,
            zeros.locations(),
            zeros_wide.locations()
        ));
    }

    let sign_eq = scan::sign_equivalence_scan(act, narrow);
    if sign_eq.equivalent != d.sign_equivalent_identity {
        bad.push(format!(
            "sign_equivalence: descriptor {}, scan {} (counterexample {:?})",
            d.sign_equivalent_identity, sign_eq.equivalent, sign_eq.counterexample
        ));
    }

    let grad_iv = Interval::new(-GRAD_HALF_WIDTH, GRAD_HALF_WIDTH, 0.01).expect("valid interval");
    let grad = scan::gradient_check(act, grad_iv, GRAD_POINTS, GRAD_TOL);
    if !grad.pass {
        bad.push(format!(
            "gradient: max relative error {:e} at z = {}",
            grad.max_rel_error, grad.worst_z
        ));
    }

    let xor_found = opts.with_xor.then(|| {
        xor::grid_search_certificate(act, opts.xor_bound, opts.xor_resolution)
            .map(|c| c.is_valid())
            .unwrap_or(false)
    });
    if let Some(found) = xor_found {
        if d.xor_property && !found {
            bad.push("xor: no certificate on the search grid".to_string());
        }
        if d.sign_equivalent_identity && found {
            bad.push("xor: certificate found for a sign-equivalent activation".to_string());
        }
    }

    PropertyRow {
        id,
        formula: d.formula,
        params: d.params,
        continuous: d.continuous,
        measured_discontinuities: discontinuities,
        nondifferentiable_points: d.nondifferentiable_points,
        monotonic: d.monotonic,
        measured_monotonic: mono.monotonic,
        range: d.range.to_string(),
        observed_min: range.min,
        observed_max: range.max,
        small_value: d.small_value,
        measured_small_value,
        hyperplane_count: d.hyperplane_count,
        zero_locations: zeros.locations(),
        zero_locations_wide: zeros_wide.locations(),
        zero_crossings: zeros.crossings,
        sign_equivalent_identity: d.sign_equivalent_identity,
        measured_sign_equivalent: sign_eq.equivalent,
        sign_counterexample: sign_eq.counterexample,
        gradient_max_rel_error: grad.max_rel_error,
        xor_property: d.xor_property,
        xor_grid_certificate: xor_found,
        deviations: d.deviations,
        contradictions: bad,
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    id: ActivationId,
    formula: &'a str,
    continuous: bool,
    measured_continuous: bool,
    monotonic: bool,
    measured_monotonic: bool,
    range: &'a str,
    observed_min: f64,
    observed_max: f64,
    small_value_c0: Option<f64>,
    small_value_c1: Option<f64>,
    measured_c0: Option<f64>,
    measured_c1: Option<f64>,
    hyperplanes: String,
    zero_locations: usize,
    zero_crossings: usize,
    sign_equivalent_identity: bool,
    measured_sign_equivalent: bool,
    gradient_max_rel_error: f64,
    xor_property: bool,
    xor_grid_certificate: Option<bool>,
    deviations: String,
    contradictions: String,
}

impl PropertyReport {
    /// Rows for [`ActivationId::ALL`].
    pub fn build(opts: &ReportOptions) -> Self {
        Self {
            rows: ActivationId::ALL
                .into_iter()
                .map(|id| property_row(id, opts))
                .collect(),
        }
    }

    pub fn row(&self, id: ActivationId) -> Option<&PropertyRow> {
        self.rows.iter().find(|r| r.id == id)
    }

    pub fn contradictions(&self) -> Vec<(ActivationId, &str)> {
        self.rows
            .iter()
            .flat_map(|r| r.contradictions.iter().map(move |c| (r.id, c.as_str())))
            .collect()
    }

    pub fn is_consistent(&self) -> bool {
        self.rows.iter().all(|r| r.contradictions.is_empty())
    }

    pub fn write_json<W: Write>(&self, out: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(out, self)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(CsvRow {
                id: r.id,
                formula: r.formula,
                continuous: r.continuous,
                measured_continuous: r.measured_discontinuities.is_empty(),
                monotonic: r.monotonic,
                measured_monotonic: r.measured_monotonic,
                range: &r.range,
                observed_min: r.observed_min,
                observed_max: r.observed_max,
                small_value_c0: r.small_value.map(|s| s.0),
                small_value_c1: r.small_value.map(|s| s.1),
                measured_c0: r.measured_small_value.map(|s| s.0),
                measured_c1: r.measured_small_value.map(|s| s.1),
                hyperplanes: match r.hyperplane_count {
                    HyperplaneCount::Finite(n) => n.to_string(),
                    HyperplaneCount::CountablyInfinite => "inf".to_string(),
                },
                zero_locations: r.zero_locations,
                zero_crossings: r.zero_crossings,
                sign_equivalent_identity: r.sign_equivalent_identity,
                measured_sign_equivalent: r.measured_sign_equivalent,
                gradient_max_rel_error: r.gradient_max_rel_error,
                xor_property: r.xor_property,
                xor_grid_certificate: r.xor_grid_certificate,
                deviations: r
                    .deviations
                    .iter()
                    .map(|d| format!("{} (published {}): {}", d.property, d.published, d.note))
                    .collect::<Vec<_>>()
                    .join("; "),
                contradictions: r.contradictions.join("; "),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}
