//! Bicharacteristic tracing: `x'(t) = -3 lambda^2 xi^2 + a(t, x(t))`
//! integrated backward from `(t0, x0)` to time 0 with an adaptive embedded
//! 5(4) pair, an exact-drift fast path far from the coefficient support, a
//! Picard-iteration mode, and the escape-bound checker
//! `|x(s)| >= (3 / 2 b^2) lambda^2 |s - t0|`.

use std::sync::Arc;

use crate::coefficient::CoefficientModel;
use crate::error::{Error, Result};

#[derive(Clone)]
pub struct CharSpec {
    /// position at time `t0`
    pub x0: f64,
    pub t0: f64,
    pub xi: f64,
    pub lambda: f64,
    pub coefficient: Arc<CoefficientModel>,
    pub rtol: f64,
    pub atol: f64,
}

impl CharSpec {
    pub fn new(
        x0: f64,
        t0: f64,
        xi: f64,
        lambda: f64,
        coefficient: Arc<CoefficientModel>,
    ) -> CharSpec {
        CharSpec {
            x0,
            t0,
            xi,
            lambda,
            coefficient,
            rtol: 1e-10,
            atol: 1e-12,
        }
    }

    /// drift speed `3 lambda^2 xi^2`
    pub fn drift(&self) -> f64 {
        3.0 * self.lambda * self.lambda * self.xi * self.xi
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 1.0) {
            return Err(Error::Config(format!(
                "lambda must be >= 1, got {}",
                self.lambda
            )));
        }
        if !self.x0.is_finite() || !self.t0.is_finite() || !self.xi.is_finite() {
            return Err(Error::NonFinite {
                context: "characteristic spec".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CharPath {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub x_at_zero: f64,
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `x' = -drift + a(t, x)` from `(t_start, x_start)` to `t_end`.
/// Whenever the remaining pure-drift segment provably stays outside the
/// coefficient support (`X_far` plus the worst-case perturbation), the drift
/// is applied in closed form instead of stepping.
pub fn flow(
    coeff: &CoefficientModel,
    lambda: f64,
    xi: f64,
    t_start: f64,
    x_start: f64,
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<CharPath> {
    let drift = 3.0 * lambda * lambda * xi * xi;
    let mut times = vec![t_start];
    let mut positions = vec![x_start];
    let span = t_end - t_start;

    if coeff.is_zero() || span == 0.0 {
        let x_end = x_start - drift * span;
        times.push(t_end);
        positions.push(x_end);
        return Ok(CharPath {
            times,
            positions,
            x_at_zero: x_end,
        });
    }

    let x_far = coeff.far_field_radius(t_start.min(t_end), t_start.max(t_end), 1e-14);
    let rhs = |t: f64, x: f64| -> Result<f64> { Ok(-drift + coeff.eval(t, x, 0)?) };
    let dir = span.signum();
    let min_step = 1e-12 * (1.0 + span.abs());

    let mut t = t_start;
    let mut x = x_start;
    let mut h = (span.abs() / 100.0).min(1e-2 / (1.0 + drift)).max(min_step) * dir;

    while (t_end - t) * dir > 0.0 {
        // exact-drift fast path: the straight segment to t_end, padded by the
        // worst-case coefficient displacement, misses the support
        let remaining = t_end - t;
        let pad = coeff.sup_abs() * remaining.abs() + 1.0;
        let x_line_end = x - drift * remaining;
        let lo = x.min(x_line_end) - pad;
        let hi = x.max(x_line_end) + pad;
        if lo > x_far || hi < -x_far {
            t = t_end;
            x = x_line_end;
            times.push(t);
            positions.push(x);
            break;
        }

        if h.abs() > remaining.abs() {
            h = remaining;
        }
        let mut k = [0.0f64; 7];
        k[0] = rhs(t, x)?;
        for i in 0..6 {
            let mut xs = x;
            for (j, kj) in k.iter().enumerate().take(i + 1) {
                xs += h * A[i][j] * kj;
            }
            k[i + 1] = rhs(t + C[i] * h, xs)?;
        }
        let mut x5 = x;
        let mut x4 = x;
        for (j, kj) in k.iter().enumerate() {
            x5 += h * B5[j] * kj;
            x4 += h * B4[j] * kj;
        }
        let err = (x5 - x4).abs();
        let tol = atol + rtol * x5.abs().max(x.abs());
        if !x5.is_finite() {
            return Err(Error::NonFinite {
                context: "characteristic integration".into(),
            });
        }
        if err <= tol {
            t += h;
            x = x5;
            times.push(t);
            positions.push(x);
        }
        // standard PI-free step-size update with safety factor
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h.abs() < min_step {
            return Err(Error::StepUnderflow { t, min_step });
        }
    }

    let x_at_zero = if t_end == 0.0 { x } else { *positions.last().unwrap() };
    Ok(CharPath {
        times,
        positions,
        x_at_zero,
    })
}

/// Backward trace from `(t0, x0)` to time 0.
pub fn trace(spec: &CharSpec) -> Result<CharPath> {
    spec.validate()?;
    flow(
        &spec.coefficient,
        spec.lambda,
        spec.xi,
        spec.t0,
        spec.x0,
        0.0,
        spec.rtol,
        spec.atol,
    )
}

/// Picard iteration on a uniform grid over `[0, t0]` (or `[t0, 0]`):
/// `x_{k+1}(s) = x0 + int_{t0}^s (-3 lambda^2 xi^2 + a(s1, x_k(s1))) ds1`
/// starting from the pure-drift path, integrals by cumulative trapezoid.
/// Returns the successive sup-differences alongside the converged path.
pub fn picard_iterate(
    spec: &CharSpec,
    iterations: usize,
) -> Result<(CharPath, Vec<f64>)> {
    spec.validate()?;
    if iterations < 1 {
        return Err(Error::Config("picard needs at least one iteration".into()));
    }
    let m = 16384usize;
    let t0 = spec.t0;
    let drift = spec.drift();
    // s_i from t0 to 0
    let ds = -t0 / m as f64;
    let times: Vec<f64> = (0..=m).map(|i| t0 + i as f64 * ds).collect();
    let mut xs: Vec<f64> = times.iter().map(|&s| spec.x0 - drift * (s - t0)).collect();

    let coeff = spec.coefficient.as_ref();
    let mut diffs = Vec::new();
    if coeff.is_zero() {
        // the zeroth iterate is already the exact path
        diffs.push(0.0);
    } else {
        for _ in 0..iterations {
            let vel: Vec<f64> = times
                .iter()
                .zip(&xs)
                .map(|(&s, &x)| Ok(-drift + coeff.eval(s, x, 0)?))
                .collect::<Result<_>>()?;
            let mut next = vec![spec.x0; m + 1];
            let mut acc = 0.0;
            for i in 1..=m {
                acc += 0.5 * ds * (vel[i - 1] + vel[i]);
                next[i] = spec.x0 + acc;
            }
            let sup = xs
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            xs = next;
            diffs.push(sup);
            if sup < 1e-8 {
                break;
            }
        }
        if *diffs.last().unwrap() >= 1e-8 {
            return Err(Error::NoConvergence {
                last_diff: *diffs.last().unwrap(),
            });
        }
    }
    let x_at_zero = *xs.last().unwrap();
    Ok((
        CharPath {
            times,
            positions: xs,
            x_at_zero,
        },
        diffs,
    ))
}

/// Fixed-step dense path (classical RK4), used for bound sampling.
pub fn dense_path(
    coeff: &CoefficientModel,
    lambda: f64,
    xi: f64,
    t0: f64,
    x0: f64,
    steps: usize,
) -> Result<CharPath> {
    let drift = 3.0 * lambda * lambda * xi * xi;
    let h = -t0 / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut positions = Vec::with_capacity(steps + 1);
    let mut t = t0;
    let mut x = x0;
    times.push(t);
    positions.push(x);
    for _ in 0..steps {
        let f = |tt: f64, xx: f64| -> Result<f64> { Ok(-drift + coeff.eval(tt, xx, 0)?) };
        let k1 = f(t, x)?;
        let k2 = f(t + h / 2.0, x + h / 2.0 * k1)?;
        let k3 = f(t + h / 2.0, x + h / 2.0 * k2)?;
        let k4 = f(t + h, x + h * k3)?;
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        if !x.is_finite() {
            return Err(Error::NonFinite {
                context: "dense characteristic path".into(),
            });
        }
        times.push(t);
        positions.push(x);
    }
    let x_at_zero = x;
    Ok(CharPath {
        times,
        positions,
        x_at_zero,
    })
}

#[derive(Debug, Clone)]
pub struct Lemma1Report {
    /// smallest swept lambda from which the bound holds for every larger one
    pub lambda0: Option<f64>,
    /// worst bound/|x| ratio over all passing-relevant samples
    pub worst_ratio: f64,
    pub samples: usize,
    /// offending (lambda, x0, xi, s) tuples
    pub failures: Vec<(f64, f64, f64, f64)>,
}

/// Sample the escape bound `|x(s)| >= (3 / 2 b^2) lambda^2 |s - t0|` over
/// `|s - t0| >= lambda^{-theta}` for each `(x0, xi, lambda)` combination.
#[allow(clippy::too_many_arguments)]
pub fn lemma1_check(
    b: f64,
    theta: f64,
    lambdas: &[f64],
    x0_samples: &[f64],
    xi_set: &[f64],
    coeff: &CoefficientModel,
    t0: f64,
    s_count: usize,
) -> Result<Lemma1Report> {
    if !(b >= 1.0) || !(theta > 0.0 && theta < 2.0) {
        return Err(Error::Config(format!(
            "lemma bound needs b >= 1 and theta in (0,2); got b = {b}, theta = {theta}"
        )));
    }
    for &xi in xi_set {
        if !(xi.abs() >= 1.0 / b && xi.abs() <= b) {
            return Err(Error::Config(format!(
                "xi = {xi} outside [1/b, b] = [{}, {b}]",
                1.0 / b
            )));
        }
    }
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut samples = 0usize;
    let mut per_lambda_ok: Vec<(f64, bool)> = Vec::new();
    for &lambda in lambdas {
        let mut ok = true;
        for &x0 in x0_samples {
            for &xi in xi_set {
                let path = dense_path(coeff, lambda, xi, t0, x0, 4096)?;
                let n = path.times.len();
                for i in 0..s_count {
                    let idx = ((i as f64 + 0.5) / s_count as f64 * (n - 1) as f64) as usize;
                    let s = path.times[idx];
                    let gap = (s - t0).abs();
                    if gap < lambda.powf(-theta) {
                        continue;
                    }
                    samples += 1;
                    let bound = 1.5 / (b * b) * lambda * lambda * gap;
                    let ratio = bound / path.positions[idx].abs().max(1e-300);
                    worst = worst.max(ratio);
                    if ratio > 1.0 {
                        ok = false;
                        failures.push((lambda, x0, xi, s));
                    }
                }
            }
        }
        per_lambda_ok.push((lambda, ok));
    }
    // minimal lambda such that all larger swept lambdas pass
    let mut lambda0 = None;
    for (lam, ok) in per_lambda_ok.iter().rev() {
        if *ok {
            lambda0 = Some(*lam);
        } else {
            break;
        }
    }
    Ok(Lemma1Report {
        lambda0,
        worst_ratio: worst,
        samples,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::{soliton_from_ratio, CoefficientModel};

    fn soliton() -> Arc<CoefficientModel> {
        Arc::new(soliton_from_ratio(1.0, 1.0, 1.0, 0.0).unwrap())
    }

    #[test]
    fn free_flow_is_exact() {
        let spec = CharSpec::new(0.0, 1.0, 1.0, 10.0, Arc::new(CoefficientModel::zero()));
        let path = trace(&spec).unwrap();
        assert_eq!(path.x_at_zero, 300.0);
        let spec = CharSpec::new(-2.5, 0.0, 1.0, 10.0, Arc::new(CoefficientModel::zero()));
        assert_eq!(trace(&spec).unwrap().x_at_zero, -2.5);
    }

    #[test]
    fn trace_agrees_with_picard() {
        let spec = CharSpec::new(0.0, 0.5, 1.0, 4.0, soliton());
        let a = trace(&spec).unwrap().x_at_zero;
        let (path, _) = picard_iterate(&spec, 60).unwrap();
        assert!((a - path.x_at_zero).abs() <= 1e-6, "{a} vs {}", path.x_at_zero);
        // and the fixed-step dense path agrees too
        let d = dense_path(&soliton(), 4.0, 1.0, 0.5, 0.0, 8192).unwrap();
        assert!((a - d.x_at_zero).abs() <= 1e-6);
    }

    #[test]
    fn picard_zero_coefficient_exact() {
        let spec = CharSpec::new(1.0, 0.7, 1.0, 3.0, Arc::new(CoefficientModel::zero()));
        let (path, diffs) = picard_iterate(&spec, 5).unwrap();
        assert_eq!(diffs, vec![0.0]);
        assert!((path.x_at_zero - (1.0 + 3.0 * 9.0 * 0.7)).abs() < 1e-12);
    }

    #[test]
    fn picard_contracts_geometrically() {
        let spec = CharSpec::new(0.0, 0.5, 1.0, 8.0, soliton());
        let (_, diffs) = picard_iterate(&spec, 60).unwrap();
        assert!(diffs.len() >= 3);
        // successive sup-differences decrease
        for w in diffs.windows(2).skip(1) {
            assert!(w[1] < w[0] * 0.9 + 1e-12, "diffs {diffs:?}");
        }
    }

    #[test]
    fn time_reversal_consistency() {
        for &lambda in &[2.0, 8.0] {
            let spec = CharSpec::new(0.3, 0.5, 1.0, lambda, soliton());
            let path = trace(&spec).unwrap();
            let back = flow(&soliton(), lambda, 1.0, 0.0, path.x_at_zero, 0.5, 1e-10, 1e-12)
                .unwrap();
            let tol = 1e-7 * (1.0 + spec.drift() * 0.5);
            assert!(
                (back.x_at_zero - 0.3).abs() <= tol,
                "lambda {lambda}: {} vs 0.3",
                back.x_at_zero
            );
        }
    }

    #[test]
    fn tolerance_refinement_is_stable() {
        let mut spec = CharSpec::new(0.0, 0.5, 1.0, 4.0, soliton());
        let coarse = trace(&spec).unwrap().x_at_zero;
        spec.rtol /= 2.0;
        spec.atol /= 2.0;
        let fine = trace(&spec).unwrap().x_at_zero;
        let budget = 1e-8 * (1.0 + spec.drift() * 0.5);
        assert!((coarse - fine).abs() <= budget);
    }

    #[test]
    fn drift_dominates_at_large_lambda() {
        for &lambda in &[8.0, 16.0, 32.0] {
            let spec = CharSpec::new(0.0, 0.5, 1.0, lambda, soliton());
            let x = trace(&spec).unwrap().x_at_zero;
            let drift_end = spec.drift() * 0.5;
            let ratio = x / drift_end;
            assert!(
                (ratio - 1.0).abs() <= 8.0 / (lambda * lambda),
                "lambda {lambda}: ratio {ratio}"
            );
        }
    }

    #[test]
    fn backward_path_is_monotone_when_drift_dominates() {
        let spec = CharSpec::new(0.0, 0.5, 1.0, 4.0, soliton());
        let path = trace(&spec).unwrap();
        for w in path.positions.windows(2) {
            assert!(w[1] >= w[0]); // 3 lambda^2 xi^2 = 48 > sup a = 12
        }
        assert_eq!(path.positions[0], 0.0);
        assert_eq!(path.times[0], 0.5);
    }

    #[test]
    fn lemma1_bound() {
        let lambdas: Vec<f64> = (0..8).map(|k| 2f64.powi(k)).collect();
        let x0s: Vec<f64> = (0..20).map(|i| -1.0 + 0.1 * i as f64 + 0.05).collect();
        let xi_set = [0.5, 1.0, 2.0];

        // zero coefficient: closed form dominates the bound for every lambda
        let r = lemma1_check(
            2.0,
            1.5,
            &lambdas,
            &[0.0],
            &xi_set,
            &CoefficientModel::zero(),
            0.5,
            20,
        )
        .unwrap();
        assert_eq!(r.lambda0, Some(1.0));
        assert!(r.failures.is_empty());

        // soliton: some finite lambda0 exists
        let r = lemma1_check(2.0, 1.5, &lambdas, &x0s, &xi_set, &soliton(), 0.5, 20).unwrap();
        assert!(r.lambda0.is_some(), "worst ratio {}", r.worst_ratio);
        assert!(r.samples > 0);

        // a huge coefficient that cancels the drift produces failures
        let big = CoefficientModel::custom(
            Arc::new(|_t, _x, k| if k == 0 { 190.0 } else { 0.0 }),
            1,
            0.25,
            vec![vec![1e6; 2], vec![1e6; 2]],
        );
        let r = lemma1_check(2.0, 1.5, &[8.0], &[0.0], &[1.0], &big, 0.5, 20).unwrap();
        assert!(!r.failures.is_empty());
        assert_eq!(r.lambda0, None);

        // parameter validation
        assert!(lemma1_check(0.5, 1.5, &lambdas, &x0s, &xi_set, &soliton(), 0.5, 20).is_err());
        assert!(lemma1_check(2.0, 1.5, &lambdas, &x0s, &[5.0], &soliton(), 0.5, 20).is_err());
    }
}
