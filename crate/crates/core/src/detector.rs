//! Two-sided singularity detection.
//!
//! Criterion (i) measures decay of the windowed transform of the evolved
//! state `u(t0, .)` at `(x0, lambda xi0)`; criterion (ii) measures decay of
//! the transform of the *initial* data against the backward-evolved window at
//! the traced characteristic foot point `(x(0; lambda), lambda xi0)`.  Both
//! produce a fitted decay exponent over a geometric lambda sweep, classified
//! against a calibrated threshold; agreement of the two verdicts is the
//! numerical content of the microlocal equivalence theorem.

use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

use crate::characteristics::{trace, CharSpec};
use crate::coefficient::CoefficientModel;
use crate::error::{Error, Result};
use crate::propagator::{BaseWindow, WindowSpec};
use crate::wpt::{forward_wpt, forward_wpt_spectral, DataSource, WindowSource, WptValue};

/// Magnitudes at or below this floor make a sweep Indeterminate.
pub const UNDERFLOW_FLOOR: f64 = 1e-280;
/// Minimum fit quality for a decisive verdict.
pub const R2_GATE: f64 = 0.9;

/// A point of phase space; directions are nonzero covectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: f64,
    pub xi: f64,
}

impl PhasePoint {
    pub fn new(x: f64, xi: f64) -> Result<PhasePoint> {
        if xi == 0.0 || !x.is_finite() || !xi.is_finite() {
            return Err(Error::Config(format!(
                "phase point needs finite x and nonzero xi, got ({x}, {xi})"
            )));
        }
        Ok(PhasePoint { x, xi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Regular,
    Singular,
    Indeterminate,
}

impl Classification {
    pub fn is_decisive(self) -> bool {
        self != Classification::Indeterminate
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Regular => "regular",
            Classification::Singular => "singular",
            Classification::Indeterminate => "indeterminate",
        }
    }
}

/// Result of one lambda sweep: per-sample values, the fitted exponent, and
/// the verdict.
#[derive(Debug, Clone)]
pub struct DecayFit {
    pub lambdas: Vec<f64>,
    pub values: Vec<Complex64>,
    pub magnitudes: Vec<f64>,
    /// evaluation abscissa per lambda (`x0` for criterion (i), the traced
    /// `x(0; lambda)` for criterion (ii))
    pub x_traced: Vec<f64>,
    /// least-squares slope of `-log |W|` against `log lambda` over the
    /// strict upper geometric half of the sweep
    pub exponent: f64,
    pub r2: f64,
    pub classification: Classification,
}

/// Sweep geometry plus the classification thresholds.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub base: BaseWindow,
    pub d: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub count: usize,
    pub n_thr: f64,
    pub margin: f64,
}

impl SweepConfig {
    /// Ten samples `lambda_k = 2^{k/2}`, k = 0..9, with placeholder
    /// thresholds (run [`calibrate_threshold`] to set them from data).
    pub fn standard(base: BaseWindow, d: f64) -> SweepConfig {
        SweepConfig {
            base,
            d,
            lambda_min: 1.0,
            lambda_max: 2f64.powf(4.5),
            count: 10,
            n_thr: 6.0,
            margin: 2.0,
        }
    }

    /// The long calibration sweep `2^{k/2}`, k = 0..12 (lambda up to 64).
    pub fn long(base: BaseWindow, d: f64) -> SweepConfig {
        SweepConfig {
            count: 13,
            lambda_max: 64.0,
            ..SweepConfig::standard(base, d)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min >= 1.0) || !(self.lambda_max > self.lambda_min) {
            return Err(Error::Config(format!(
                "need 1 <= lambda_min < lambda_max, got [{}, {}]",
                self.lambda_min, self.lambda_max
            )));
        }
        if self.count < 6 {
            return Err(Error::SweepTooShort(self.count));
        }
        Ok(())
    }

    /// Geometric lambda samples, inclusive of both endpoints.
    pub fn lambdas(&self) -> Vec<f64> {
        let n = self.count;
        let r = (self.lambda_max / self.lambda_min).powf(1.0 / (n - 1) as f64);
        (0..n)
            .map(|k| self.lambda_min * r.powi(k as i32))
            .collect()
    }

    pub fn window(&self, lambda: f64) -> WindowSpec {
        WindowSpec::new(self.base.clone(), self.d, lambda)
    }

    pub fn with_thresholds(mut self, n_thr: f64, margin: f64) -> SweepConfig {
        self.n_thr = n_thr;
        self.margin = margin;
        self
    }
}

/// Criterion (i): plain windowed transform of the state at its own time,
/// evaluated at `(x0, lambda xi0)`.  Uses the transform-side path whenever
/// the source carries a spectral closure (relative-accurate far below the
/// physical rounding floor), falling back to physical quadrature for grid
/// or closure-free data.
pub fn coefficient_i(
    u_t0: &DataSource,
    p: PhasePoint,
    lambda: f64,
    wspec: &WindowSpec,
) -> Result<WptValue> {
    if u_t0.hat_closure().is_some() {
        forward_wpt_spectral(u_t0, wspec, 0.0, p.x, lambda * p.xi)
    } else {
        let window = WindowSource::from_spec(wspec);
        forward_wpt(u_t0, &window, p.x, lambda * p.xi)
    }
}

/// Criterion (ii): trace the bicharacteristic from `(x0, t0)` down to time
/// zero, then evaluate the initial data against the backward-evolved window
/// at `(x(0; lambda), lambda xi0)`.  Returns the value and the traced
/// abscissa.
pub fn coefficient_ii(
    u0: &DataSource,
    coeff: &Arc<CoefficientModel>,
    t0: f64,
    p: PhasePoint,
    lambda: f64,
    wspec: &WindowSpec,
) -> Result<(WptValue, f64)> {
    let spec = CharSpec::new(p.x, t0, p.xi, lambda, coeff.clone());
    let path = trace(&spec)?;
    let x_eval = path.x_at_zero;
    let value = if u0.hat_closure().is_some() {
        forward_wpt_spectral(u0, wspec, t0, x_eval, lambda * p.xi)?
    } else if t0 == 0.0 {
        forward_wpt(u0, &WindowSource::from_spec(wspec), x_eval, lambda * p.xi)?
    } else {
        // a closure-free source cannot meet the evolved window's oscillation
        // on a physical lattice at detection scales
        return Err(Error::NoSpectralClosure);
    };
    Ok((value, x_eval))
}

/// Run a sweep of an arbitrary per-lambda evaluator returning
/// `(value, abscissa)` and fit the decay exponent.
pub fn decay_sweep<F>(eval: F, sweep: &SweepConfig) -> Result<DecayFit>
where
    F: Fn(f64) -> Result<(WptValue, f64)>,
{
    sweep.validate()?;
    let lambdas = sweep.lambdas();
    let mut values = Vec::with_capacity(lambdas.len());
    let mut x_traced = Vec::with_capacity(lambdas.len());
    for &l in &lambdas {
        let (v, x) = eval(l)?;
        if !v.value.re.is_finite() || !v.value.im.is_finite() {
            return Err(Error::NonFinite {
                context: format!("sweep value at lambda = {l}"),
            });
        }
        values.push(v.value);
        x_traced.push(x);
    }
    let magnitudes: Vec<f64> = values.iter().map(|z| z.norm()).collect();
    Ok(fit_from_samples(lambdas, values, magnitudes, x_traced, sweep))
}

fn fit_from_samples(
    lambdas: Vec<f64>,
    values: Vec<Complex64>,
    magnitudes: Vec<f64>,
    x_traced: Vec<f64>,
    sweep: &SweepConfig,
) -> DecayFit {
    let split = (lambdas[0] * lambdas[lambdas.len() - 1]).sqrt();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut underflow = false;
    for (&l, &m) in lambdas.iter().zip(&magnitudes) {
        if l <= split {
            continue;
        }
        if m <= UNDERFLOW_FLOOR {
            underflow = true;
        }
        xs.push(l.ln());
        ys.push(-m.max(UNDERFLOW_FLOOR).ln());
    }
    let (exponent, r2) = least_squares_line(&xs, &ys);
    let classification = classify(exponent, r2, underflow, sweep.n_thr, sweep.margin);
    DecayFit {
        lambdas,
        values,
        magnitudes,
        x_traced,
        exponent,
        r2,
        classification,
    }
}

/// Slope and R^2 of the least-squares line through `(x, y)`; exactly flat
/// data fits perfectly (R^2 = 1).
fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let sst: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    (slope, r2)
}

/// Threshold rule: Regular above `n_thr`, Singular below `n_thr - margin`,
/// Indeterminate in the gap, on poor fits, or on underflow.
pub fn classify(exponent: f64, r2: f64, underflow: bool, n_thr: f64, margin: f64) -> Classification {
    if underflow || !(r2 >= R2_GATE) || !exponent.is_finite() {
        return Classification::Indeterminate;
    }
    if exponent >= n_thr {
        Classification::Regular
    } else if exponent <= n_thr - margin {
        Classification::Singular
    } else {
        Classification::Indeterminate
    }
}

/// Criterion-(i) sweep at one point.
pub fn sweep_i(u_t0: &DataSource, p: PhasePoint, sweep: &SweepConfig) -> Result<DecayFit> {
    decay_sweep(
        |l| Ok((coefficient_i(u_t0, p, l, &sweep.window(l))?, p.x)),
        sweep,
    )
}

/// Criterion-(ii) sweep at one point.
pub fn sweep_ii(
    u0: &DataSource,
    coeff: &Arc<CoefficientModel>,
    t0: f64,
    p: PhasePoint,
    sweep: &SweepConfig,
) -> Result<DecayFit> {
    decay_sweep(
        |l| coefficient_ii(u0, coeff, t0, p, l, &sweep.window(l)),
        sweep,
    )
}

fn threshold_from_exponents(n_smooth: f64, n_singular: f64) -> Result<(f64, f64)> {
    let gap = n_smooth - n_singular;
    if !(gap >= 2.0) {
        return Err(Error::CalibrationGapTooSmall { gap });
    }
    Ok(((n_smooth + n_singular) / 2.0, gap / 4.0))
}

/// Data-driven thresholds: run the sweep on a smooth Gaussian (regular
/// everywhere) and on a one-sided Gaussian jump at its singular point, and
/// separate the two fitted exponents by the midpoint with a quarter-gap
/// margin.
pub fn calibrate_threshold(sweep: &SweepConfig) -> Result<(f64, f64)> {
    let p = PhasePoint::new(0.0, 1.0)?;
    let smooth = sweep_i(&DataSource::gaussian(), p, sweep)?;
    let jump = sweep_i(&DataSource::jump_gaussian(), p, sweep)?;
    for fit in [&smooth, &jump] {
        if fit.r2 < R2_GATE {
            return Err(Error::Config(format!(
                "calibration fit quality {:.3} below {R2_GATE}",
                fit.r2
            )));
        }
    }
    threshold_from_exponents(smooth.exponent, jump.exponent)
}

/// Classification map over a rectangle of phase space (criterion (i) on a
/// supplied state).  Cells hold per-point results; failures are stored, not
/// thrown.
pub struct WfMap {
    pub xs: Vec<f64>,
    pub xis: Vec<f64>,
    /// row-major over `(x, xi)`: index `i * xis.len() + j`
    pub cells: Vec<Result<DecayFit>>,
}

impl WfMap {
    pub fn cell(&self, i: usize, j: usize) -> &Result<DecayFit> {
        &self.cells[i * self.xis.len() + j]
    }
}

pub fn wf_map(u: &DataSource, xs: &[f64], xis: &[f64], sweep: &SweepConfig) -> Result<WfMap> {
    sweep.validate()?;
    let points: Vec<PhasePoint> = xs
        .iter()
        .flat_map(|&x| xis.iter().map(move |&xi| PhasePoint { x, xi }))
        .collect();
    for p in &points {
        PhasePoint::new(p.x, p.xi)?;
    }
    let cells: Vec<Result<DecayFit>> = points
        .par_iter()
        .map(|&p| sweep_i(u, p, sweep))
        .collect();
    Ok(WfMap {
        xs: xs.to_vec(),
        xis: xis.to_vec(),
        cells,
    })
}

/// Per-point outcome of running both criteria.
#[derive(Debug, Clone)]
pub struct PointReport {
    pub point: PhasePoint,
    pub fit_i: DecayFit,
    pub fit_ii: DecayFit,
}

impl PointReport {
    pub fn decisive(&self) -> bool {
        self.fit_i.classification.is_decisive() && self.fit_ii.classification.is_decisive()
    }

    pub fn agrees(&self) -> bool {
        self.fit_i.classification == self.fit_ii.classification
    }
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub points: Vec<PointReport>,
    pub decisive_count: usize,
    /// fraction of decisive points whose verdicts agree; 1 when no point is
    /// decisive
    pub agreement_fraction: f64,
}

/// Run criterion (i) on the supplied time-`t0` state and criterion (ii) on
/// the initial data, point by point.
pub fn equivalence_report(
    u0: &DataSource,
    u_t0: &DataSource,
    coeff: &Arc<CoefficientModel>,
    t0: f64,
    points: &[PhasePoint],
    sweep: &SweepConfig,
) -> Result<EquivalenceReport> {
    let mut reports = Vec::with_capacity(points.len());
    for &p in points {
        PhasePoint::new(p.x, p.xi)?;
        reports.push(PointReport {
            point: p,
            fit_i: sweep_i(u_t0, p, sweep)?,
            fit_ii: sweep_ii(u0, coeff, t0, p, sweep)?,
        });
    }
    let decisive: Vec<&PointReport> = reports.iter().filter(|r| r.decisive()).collect();
    let agreement_fraction = if decisive.is_empty() {
        1.0
    } else {
        decisive.iter().filter(|r| r.agrees()).count() as f64 / decisive.len() as f64
    };
    Ok(EquivalenceReport {
        decisive_count: decisive.len(),
        points: reports,
        agreement_fraction,
    })
}
