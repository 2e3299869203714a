//! Error statistics against the binary64 reference, normalization sweeps,
//! and binade histograms of representable and observed values.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::binary16::Binary16;
use crate::flow::{self, FlowError, FlowField, FlowParams, FlowStatus, Frame};
use crate::posit::{self, DecodedPosit};
use crate::scalar::{Float16, FormatSpec, PositFormat, Reference, ScalarFormat, Q16};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("flow fields differ in size: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("empty norm list")]
    NoNorms,
    #[error("normalization factor {0} outside 1..=255")]
    BadNorm(u32),
    #[error("no census for {0}: only 16-bit-or-narrower posits and float16")]
    NoCensus(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Max, RMS and population standard deviation of a set of absolute errors.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stats {
    pub count: usize,
    pub max: f64,
    pub rms: f64,
    pub std: f64,
}

impl Stats {
    /// All zero for an empty sample.
    pub fn from_samples(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let mut max = 0.0f64;
        let mut squares = 0.0;
        let mut spread = 0.0;
        for &e in samples {
            max = max.max(e);
            squares += e * e;
            spread += (e - mean) * (e - mean);
        }
        Self {
            count: samples.len(),
            max,
            rms: (squares / n).sqrt(),
            std: (spread / n).sqrt(),
        }
    }
}

/// Accuracy of one format at one normalization factor. The headline
/// statistics pool the u and v errors.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub format: String,
    pub norm: u8,
    pub max_abs_error: f64,
    pub rms_error: f64,
    pub std_deviation: f64,
    /// Pixels that were compared (OK in both fields).
    pub compared: usize,
    pub exception_count: usize,
    pub singular_count: usize,
    pub u: Stats,
    pub v: Stats,
}

/// Per-pixel absolute error of one flow component.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatMap {
    pub width: usize,
    pub height: usize,
    /// Zero wherever the pixel was not compared.
    pub error: Vec<f64>,
    /// `Ok` where compared, otherwise the reason it was not.
    pub flag: Vec<FlowStatus>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub report: ErrorReport,
    pub heat_u: HeatMap,
    pub heat_v: HeatMap,
}

/// Compares a flow field (already converted to binary64) with the
/// reference field.
pub fn compare(
    format: &str,
    norm: u8,
    test: &FlowField<f64>,
    reference: &FlowField<f64>,
) -> Result<Comparison, AnalysisError> {
    if test.width != reference.width || test.height != reference.height {
        return Err(AnalysisError::DimensionMismatch(
            test.width,
            test.height,
            reference.width,
            reference.height,
        ));
    }
    let len = test.status.len();
    let mut flag = Vec::with_capacity(len);
    let mut eu = vec![0.0; len];
    let mut ev = vec![0.0; len];
    let (mut us, mut vs) = (Vec::new(), Vec::new());
    for i in 0..len {
        let f = match (test.status[i], reference.status[i]) {
            (FlowStatus::Exception, _) | (_, FlowStatus::Exception) => FlowStatus::Exception,
            (FlowStatus::Ok, FlowStatus::Ok) => FlowStatus::Ok,
            _ => FlowStatus::Singular,
        };
        if f == FlowStatus::Ok {
            eu[i] = (test.u[i] - reference.u[i]).abs();
            ev[i] = (test.v[i] - reference.v[i]).abs();
            us.push(eu[i]);
            vs.push(ev[i]);
        }
        flag.push(f);
    }
    let pooled: Vec<f64> = us.iter().chain(&vs).copied().collect();
    let all = Stats::from_samples(&pooled);
    let report = ErrorReport {
        format: format.to_string(),
        norm,
        max_abs_error: all.max,
        rms_error: all.rms,
        std_deviation: all.std,
        compared: us.len(),
        exception_count: test.count(FlowStatus::Exception),
        singular_count: test.count(FlowStatus::Singular),
        u: Stats::from_samples(&us),
        v: Stats::from_samples(&vs),
    };
    let heat = |error| HeatMap {
        width: test.width,
        height: test.height,
        error,
        flag: flag.clone(),
    };
    Ok(Comparison {
        report,
        heat_u: heat(eu),
        heat_v: heat(ev),
    })
}

/// Flow in any named format, returned in binary64.
pub fn run_flow(
    spec: FormatSpec,
    f1: &Frame,
    f2: &Frame,
    params: FlowParams,
) -> Result<FlowField<f64>, FlowError> {
    fn go<F: ScalarFormat + Sync>(
        fmt: &F,
        f1: &Frame,
        f2: &Frame,
        params: FlowParams,
    ) -> Result<FlowField<f64>, FlowError> {
        Ok(flow::flow(fmt, f1, f2, params)?.to_reference(fmt))
    }
    match spec {
        FormatSpec::Reference => go(&Reference::new(), f1, f2, params),
        FormatSpec::Posit(c) => go(&PositFormat::new(c), f1, f2, params),
        FormatSpec::Float16 => go(&Float16, f1, f2, params),
        FormatSpec::Q16 => go(&Q16, f1, f2, params),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub reports: Vec<ErrorReport>,
    /// Smallest maximum error among norms without exceptions, ties to the
    /// smaller norm.
    pub best_norm: Option<u8>,
}

impl Sweep {
    pub fn report(&self, norm: u8) -> Option<&ErrorReport> {
        self.reports.iter().find(|r| r.norm == norm)
    }

    pub fn best(&self) -> Option<&ErrorReport> {
        self.best_norm.and_then(|n| self.report(n))
    }
}

pub fn best_norm(reports: &[ErrorReport]) -> Option<u8> {
    reports
        .iter()
        .filter(|r| r.exception_count == 0)
        .min_by(|a, b| {
            a.max_abs_error
                .total_cmp(&b.max_abs_error)
                .then(a.norm.cmp(&b.norm))
        })
        .map(|r| r.norm)
}

/// Settings shared by every norm in a sweep. `tau` of `None` uses the
/// format's default threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepParams {
    pub window: usize,
    pub tau: Option<f64>,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            window: FlowParams::DEFAULT_WINDOW,
            tau: None,
        }
    }
}

pub fn check_norms(norms: &[u32]) -> Result<Vec<u8>, AnalysisError> {
    if norms.is_empty() {
        return Err(AnalysisError::NoNorms);
    }
    norms
        .iter()
        .map(|&n| match u8::try_from(n) {
            Ok(v) if v >= 1 => Ok(v),
            _ => Err(AnalysisError::BadNorm(n)),
        })
        .collect()
}

/// One comparison per norm against a reference flow computed at that
/// same norm. Reports come back in input order.
pub fn sweep_detailed(
    spec: FormatSpec,
    f1: &Frame,
    f2: &Frame,
    norms: &[u32],
    params: SweepParams,
) -> Result<Vec<Comparison>, AnalysisError> {
    let norms = check_norms(norms)?;
    let tau = params.tau.unwrap_or(spec.default_tau());
    let reference_tau = params.tau.unwrap_or(FormatSpec::Reference.default_tau());
    let name = spec.to_string();
    norms
        .par_iter()
        .map(|&norm| {
            let base = FlowParams::new(norm).with_window(params.window);
            let reference = run_flow(FormatSpec::Reference, f1, f2, base.with_tau(reference_tau))?;
            let test = if spec == FormatSpec::Reference && tau == reference_tau {
                reference.clone()
            } else {
                run_flow(spec, f1, f2, base.with_tau(tau))?
            };
            compare(&name, norm, &test, &reference)
        })
        .collect()
}

pub fn sweep(
    spec: FormatSpec,
    f1: &Frame,
    f2: &Frame,
    norms: &[u32],
    params: SweepParams,
) -> Result<Sweep, AnalysisError> {
    let reports: Vec<ErrorReport> = sweep_detailed(spec, f1, f2, norms, params)?
        .into_iter()
        .map(|c| c.report)
        .collect();
    let best_norm = best_norm(&reports);
    Ok(Sweep { reports, best_norm })
}

/// Index `b` of the binade `[2^b, 2^(b+1))` holding `|x|`; `None` for zero
/// and non-finite values.
pub fn binade(x: f64) -> Option<i32> {
    if x == 0.0 || !x.is_finite() {
        return None;
    }
    let bits = x.abs().to_bits();
    let biased = (bits >> 52) as i32;
    if biased == 0 {
        // subnormal: leading one of the fraction
        let fraction = bits & ((1 << 52) - 1);
        Some(-1074 + 63 - fraction.leading_zeros() as i32)
    } else {
        Some(biased - 1023)
    }
}

/// Enumeration of every finite nonzero pattern of a 16-bit-or-narrower
/// format.
#[derive(Clone, Debug, PartialEq)]
pub struct Census {
    pub format: String,
    /// Positive representable values per binade.
    pub binades: BTreeMap<i32, u64>,
    /// Finite nonzero patterns of either sign.
    pub finite_nonzero: u64,
    pub min_positive: f64,
    pub max_finite: f64,
}

impl Census {
    pub fn count(&self, binade: i32) -> u64 {
        self.binades.get(&binade).copied().unwrap_or(0)
    }

    /// Whether `|x|` lies within the format's dynamic range. Zero is
    /// representable and counts as inside.
    pub fn covers(&self, x: f64) -> bool {
        let a = x.abs();
        a == 0.0 || (a >= self.min_positive && a <= self.max_finite)
    }
}

pub fn representable_census(spec: FormatSpec) -> Result<Census, AnalysisError> {
    let values: Vec<f64> = match spec {
        FormatSpec::Posit(c) if c.n() <= 16 => (0..1u32 << c.n())
            .filter_map(|b| match posit::decode_bits(b, c) {
                d @ DecodedPosit::Real { .. } => Some(posit::decoded_to_f64(d)),
                _ => None,
            })
            .collect(),
        FormatSpec::Float16 => (0..=u16::MAX)
            .map(Binary16::from_bits)
            .filter(|h| h.is_finite() && !h.is_zero())
            .map(Binary16::to_f64)
            .collect(),
        other => return Err(AnalysisError::NoCensus(other.to_string())),
    };
    let mut binades = BTreeMap::new();
    let mut min_positive = f64::INFINITY;
    let mut max_finite = 0.0f64;
    for &v in values.iter().filter(|v| **v > 0.0) {
        *binades.entry(binade(v).expect("nonzero")).or_insert(0) += 1;
        min_positive = min_positive.min(v);
        max_finite = max_finite.max(v);
    }
    Ok(Census {
        format: spec.to_string(),
        binades,
        finite_nonzero: values.len() as u64,
        min_positive,
        max_finite,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverlapRow {
    pub binade: i32,
    /// Data values whose magnitude falls in this binade.
    pub data: u64,
    /// Representable positive values, one entry per census.
    pub representable: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistogramOverlap {
    pub formats: Vec<String>,
    pub total: usize,
    pub zeros: u64,
    pub rows: Vec<OverlapRow>,
    /// Fraction of data values inside each format's dynamic range.
    pub coverage: Vec<f64>,
}

/// Joins harvested data values with format censuses binade by binade.
/// Rows span every binade touched by the data or a census; empty data
/// gives an empty table.
pub fn histogram_overlap(values: &[f64], censuses: &[Census]) -> HistogramOverlap {
    let formats = censuses.iter().map(|c| c.format.clone()).collect();
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return HistogramOverlap {
            formats,
            total: 0,
            zeros: 0,
            rows: Vec::new(),
            coverage: vec![0.0; censuses.len()],
        };
    }
    let mut data: BTreeMap<i32, u64> = BTreeMap::new();
    let mut zeros = 0;
    for &v in &finite {
        match binade(v) {
            Some(b) => *data.entry(b).or_insert(0) += 1,
            None => zeros += 1,
        }
    }
    let mut keys: Vec<i32> = data.keys().copied().collect();
    for c in censuses {
        keys.extend(c.binades.keys());
    }
    keys.sort_unstable();
    keys.dedup();
    let rows = keys
        .into_iter()
        .map(|b| OverlapRow {
            binade: b,
            data: data.get(&b).copied().unwrap_or(0),
            representable: censuses.iter().map(|c| c.count(b)).collect(),
        })
        .collect();
    let coverage = censuses
        .iter()
        .map(|c| finite.iter().filter(|v| c.covers(**v)).count() as f64 / finite.len() as f64)
        .collect();
    HistogramOverlap {
        formats,
        total: finite.len(),
        zeros,
        rows,
        coverage,
    }
}
