//! The wave packet transform
//! `W_phi f(x, xi) = int conj(phi(y - x)) f(y) exp(-i y xi) dy`:
//! pointwise evaluation against grid samples or analytic closures, a
//! transform-side (Parseval) evaluation path
//! `W = (1/2pi) int conj(phihat(eta)) exp(i eta x) fhat(eta + xi) deta`,
//! batched slices over x, and the standard inversion used for self-tests.
//!
//! Detection evaluates W at `x ~ 3 lambda^2 xi^2 t0`, far outside any fixed
//! solver box, so analytic sources and floating local quadrature grids are
//! first-class here.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{to_physical, to_spectral, ComplexField, SpectralField};
use crate::propagator::{detector_window_hat, WindowSpec};
use crate::special::jump_gaussian_hat;

pub type CFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Initial datum given by closures; `hat_osc = (c0, c2)` bounds the phase
/// rate of the transform closure by `c0 + c2 u^2` at argument `u`.
#[derive(Clone)]
pub struct AnalyticSource {
    pub phys: Option<CFn>,
    pub hat: Option<CFn>,
    /// physical envelope below ~1e-16 beyond this radius
    pub support_radius: f64,
    /// location of a jump discontinuity, if any (closure must return the
    /// half-sum there)
    pub kink: Option<f64>,
    pub hat_osc: (f64, f64),
    /// transform envelope below ~1e-16 of peak beyond this radius; infinite
    /// for data whose transform decays slower than the window's
    pub band_radius: f64,
}

#[derive(Clone)]
pub enum DataSource {
    Grid(ComplexField),
    Analytic(AnalyticSource),
}

impl DataSource {
    /// `pi^{-1/4} exp(-y^2/2)` with its closed-form transform.
    pub fn gaussian() -> DataSource {
        let c = PI.powf(-0.25);
        DataSource::Analytic(AnalyticSource {
            phys: Some(Arc::new(move |y| Complex64::new(c * (-y * y / 2.0).exp(), 0.0))),
            hat: Some(Arc::new(move |eta| {
                Complex64::new((2.0 * PI).sqrt() * c * (-eta * eta / 2.0).exp(), 0.0)
            })),
            support_radius: 9.5,
            kink: None,
            hat_osc: (0.0, 0.0),
            band_radius: 9.5,
        })
    }

    /// `H(y) exp(-y^2)` (value 1/2 at the jump), transform via Dawson's
    /// integral.
    pub fn jump_gaussian() -> DataSource {
        DataSource::Analytic(AnalyticSource {
            phys: Some(Arc::new(|y: f64| {
                if y > 0.0 {
                    Complex64::new((-y * y).exp(), 0.0)
                } else if y == 0.0 {
                    Complex64::new(0.5, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })),
            hat: Some(Arc::new(|eta| jump_gaussian_hat(eta))),
            support_radius: 6.5,
            kink: Some(0.0),
            hat_osc: (2.0, 0.0),
            band_radius: f64::INFINITY,
        })
    }

    /// The jump datum propagated backward by `t0` under the free flow:
    /// transform `exp(-i eta^3 t0) jump_hat(eta)`.  Only the transform is in
    /// closed form; physical-side evaluation is not offered.
    pub fn backward_evolved_jump(t0: f64) -> DataSource {
        DataSource::Analytic(AnalyticSource {
            phys: None,
            hat: Some(Arc::new(move |eta: f64| {
                let theta = -(eta * eta * eta * t0) % (2.0 * PI);
                jump_gaussian_hat(eta) * Complex64::new(0.0, theta).exp()
            })),
            support_radius: f64::INFINITY,
            kink: None,
            hat_osc: (2.0, 3.0 * t0.abs()),
            band_radius: f64::INFINITY,
        })
    }

    /// Free (Airy) evolution of an analytic source by `t`: transform picks up
    /// `exp(i eta^3 t)`.  Physical-side evaluation is dropped since the
    /// evolved profile has no closed form.
    pub fn airy_evolve(&self, t: f64) -> Result<DataSource> {
        let DataSource::Analytic(a) = self else {
            return Err(Error::NoSpectralClosure);
        };
        let Some(hat) = a.hat.clone() else {
            return Err(Error::NoSpectralClosure);
        };
        Ok(DataSource::Analytic(AnalyticSource {
            phys: None,
            hat: Some(Arc::new(move |eta: f64| {
                let theta = (eta * eta * eta * t) % (2.0 * PI);
                hat(eta) * Complex64::new(0.0, theta).exp()
            })),
            support_radius: f64::INFINITY,
            kink: None,
            hat_osc: (a.hat_osc.0, a.hat_osc.1 + 3.0 * t.abs()),
            band_radius: a.band_radius,
        }))
    }

    pub fn hat_closure(&self) -> Option<&CFn> {
        match self {
            DataSource::Grid(_) => None,
            DataSource::Analytic(a) => a.hat.as_ref(),
        }
    }

    /// Spot-check that the physical and transform closures agree: returns the
    /// worst quadrature mismatch over the probe frequencies.
    pub fn verify_closures(&self, etas: &[f64]) -> Result<f64> {
        let DataSource::Analytic(a) = self else {
            return Ok(0.0);
        };
        let (Some(phys), Some(hat)) = (&a.phys, &a.hat) else {
            return Ok(0.0);
        };
        let r = a.support_radius;
        if !r.is_finite() {
            return Err(Error::UnknownSupport);
        }
        let h = 2e-4;
        let anchor = a.kink.unwrap_or(0.0);
        let mut worst: f64 = 0.0;
        for &eta in etas {
            let mut sum = Complex64::new(0.0, 0.0);
            let m_lo = ((-r - anchor) / h).ceil() as i64;
            let m_hi = ((r - anchor) / h).floor() as i64;
            for m in m_lo..=m_hi {
                let y = anchor + m as f64 * h;
                sum += phys(y) * Complex64::new(0.0, -y * eta).exp();
            }
            worst = worst.max((sum * h - hat(eta)).norm());
        }
        Ok(worst)
    }
}

/// A window usable on floating quadrature grids: a closure plus its support
/// radius and feature width.
#[derive(Clone)]
pub struct WindowSource {
    pub eval: CFn,
    pub support_radius: f64,
    /// narrowest feature scale (quadrature must resolve it)
    pub width: f64,
}

impl WindowSource {
    pub fn from_spec(spec: &WindowSpec) -> WindowSource {
        let spec = spec.clone();
        WindowSource {
            support_radius: spec.support_radius_scaled(),
            width: spec.scaled_width(),
            eval: Arc::new(move |y| spec.eval_scaled(y)),
        }
    }
}

/// A transform value with a one-refinement quadrature error estimate.
#[derive(Debug, Clone, Copy)]
pub struct WptValue {
    pub value: Complex64,
    pub error_estimate: f64,
}

/// Physical-side evaluation: rectangle rule over a local lattice covering the
/// overlap of the window support around `x` with the data support.  The
/// lattice is anchored at a declared jump so the half-sum convention keeps
/// the rule second order there; everywhere else the integrand is smooth and
/// the rule is spectrally accurate.
pub fn forward_wpt(
    f: &DataSource,
    window: &WindowSource,
    x: f64,
    xi: f64,
) -> Result<WptValue> {
    forward_wpt_with(f, window, x, xi, 1)
}

pub(crate) fn forward_wpt_with(
    f: &DataSource,
    window: &WindowSource,
    x: f64,
    xi: f64,
    refine: u32,
) -> Result<WptValue> {
    match f {
        DataSource::Grid(field) => {
            let grid = field.grid();
            let h = grid.spacing() ;
            if h > PI / (2.0 * xi.abs().max(1e-300)) {
                return Err(Error::UnderResolved(format!(
                    "grid spacing {h:.3e} cannot carry xi = {xi}"
                )));
            }
            let mut fine = Complex64::new(0.0, 0.0);
            let mut coarse = Complex64::new(0.0, 0.0);
            for (j, y) in grid.nodes().enumerate() {
                if (y - x).abs() > window.support_radius {
                    continue;
                }
                let term = (window.eval)(y - x).conj()
                    * field.samples()[j]
                    * Complex64::new(0.0, -y * xi).exp();
                fine += term;
                if j % 2 == 0 {
                    coarse += term;
                }
            }
            let value = fine * h;
            Ok(WptValue {
                value,
                error_estimate: (value - coarse * 2.0 * h).norm(),
            })
        }
        DataSource::Analytic(a) => {
            let Some(phys) = &a.phys else {
                return Err(Error::UnknownSupport);
            };
            if !a.support_radius.is_finite() {
                return Err(Error::UnknownSupport);
            }
            let lo = (x - window.support_radius).max(-a.support_radius);
            let hi = (x + window.support_radius).min(a.support_radius);
            if lo >= hi {
                return Ok(WptValue {
                    value: Complex64::new(0.0, 0.0),
                    error_estimate: 0.0,
                });
            }
            let mut h = (PI / (4.0 * (xi.abs() + 1.0)))
                .min(window.width / 8.0)
                .min(0.125);
            let anchor = match a.kink {
                Some(k) if k > lo && k < hi => {
                    // the rule is only second order across the jump; push the
                    // h^2/12 kink term below ~1e-8
                    h = h.min((1.2e-7 / (1.0 + xi.abs())).sqrt());
                    k
                }
                _ => lo,
            };
            let h = h / refine as f64;
            let m_lo = ((lo - anchor) / h).ceil() as i64;
            let m_hi = ((hi - anchor) / h).floor() as i64;
            let mut fine = Complex64::new(0.0, 0.0);
            let mut coarse = Complex64::new(0.0, 0.0);
            for m in m_lo..=m_hi {
                let y = anchor + m as f64 * h;
                let term =
                    (window.eval)(y - x).conj() * phys(y) * Complex64::new(0.0, -y * xi).exp();
                fine += term;
                if m % 2 == 0 {
                    coarse += term;
                }
            }
            let value = fine * h;
            Ok(WptValue {
                value,
                error_estimate: (value - coarse * 2.0 * h).norm(),
            })
        }
    }
}

/// Transform-side evaluation of the (optionally window-evolved) transform:
/// `W = (1/2pi) int conj(m(eta) phihat(eta)) e^{i eta x} fhat(eta+xi) deta`
/// with `m` the backward window-evolution multiplier at `t0` (identity when
/// `t0 = 0`).  Preferred whenever closures exist: it is relative-accurate at
/// magnitudes far below the physical path's rounding floor.
pub fn forward_wpt_spectral(
    f: &DataSource,
    wspec: &WindowSpec,
    t0: f64,
    x: f64,
    xi: f64,
) -> Result<WptValue> {
    forward_wpt_spectral_with(f, wspec, t0, x, xi, 1)
}

pub(crate) fn forward_wpt_spectral_with(
    f: &DataSource,
    wspec: &WindowSpec,
    t0: f64,
    x: f64,
    xi: f64,
    refine: u32,
) -> Result<WptValue> {
    let Some(fhat) = f.hat_closure() else {
        return Err(Error::NoSpectralClosure);
    };
    // The window evolution runs at effective frequency -xi: this is the
    // convention under which the detector value of free-flow data collapses
    // exactly onto the time-zero transform (the total phase reduces to
    // eta x - t0 xi^3), verified against a direct FFT evaluation.
    let Some(whot) = detector_window_hat(wspec, t0, -xi) else {
        return Err(Error::NoSpectralClosure);
    };
    let (a_osc, a_band) = match f {
        DataSource::Analytic(a) => (a.hat_osc, a.band_radius),
        DataSource::Grid(_) => unreachable!(),
    };
    let (c0, c2) = a_osc;
    let b = wspec.band_radius_scaled();
    // Integrate over the convex hull of the window band and the shifted data
    // band: the integrand mass can sit in either, depending on which
    // transform decays faster.
    let mut lo = -b;
    let mut hi = b;
    if a_band.is_finite() {
        lo = lo.min(-xi - a_band);
        hi = hi.max(-xi + a_band);
    }
    let reach = lo.abs().max(hi.abs());
    let env_scale = wspec.scaled_width(); // window-hat envelope scale is 1/width
    let rate = x.abs()
        + 3.0 * t0.abs() * (reach * reach + 2.0 * xi.abs() * reach)
        + c0
        + c2 * (xi.abs() + reach) * (xi.abs() + reach);
    let h = (1.0 / (8.0 * env_scale))
        .min(0.125)
        .min(PI / (4.0 * (rate + 1.0)))
        / refine as f64;
    let n = ((hi - lo) / h).ceil() as i64;
    let mut fine = Complex64::new(0.0, 0.0);
    let mut coarse = Complex64::new(0.0, 0.0);
    for j in 0..=n {
        let eta = lo + j as f64 * h;
        let term = whot(eta).conj()
            * Complex64::new(0.0, (eta * x) % (2.0 * PI)).exp()
            * fhat(eta + xi);
        fine += term;
        if j % 2 == 0 {
            coarse += term;
        }
    }
    let scale = h / (2.0 * PI);
    let value = fine * scale;
    Ok(WptValue {
        value,
        error_estimate: (value - coarse * 2.0 * scale).norm(),
    })
}

/// Batched `W(x_j, xi)` for all grid nodes via one transform-domain product:
/// with `g(y) = f(y) e^{-i y xi}`, `What(eta) = conj(phihat(eta)) ghat(eta)`.
pub fn wpt_slice(f: &ComplexField, window: &ComplexField, xi: f64) -> Result<ComplexField> {
    if f.grid().as_ref() != window.grid().as_ref() {
        return Err(Error::GridMismatch);
    }
    let g = ComplexField::new(
        f.grid().clone(),
        f.grid()
            .nodes()
            .zip(f.samples())
            .map(|(y, z)| z * Complex64::new(0.0, -y * xi).exp())
            .collect(),
    )?;
    let ghat = to_spectral(&g);
    let what = to_spectral(window);
    let coeffs: Vec<Complex64> = what
        .coefficients()
        .iter()
        .zip(ghat.coefficients())
        .map(|(w, g)| w.conj() * g)
        .collect();
    Ok(to_physical(&SpectralField::new(f.grid().clone(), coeffs)?))
}

/// Inversion `f(y) = (1/(2pi ||phi||^2)) sum_k conv(W(.,xi_k), phi)(y)
/// e^{i y xi_k} dxi` over slices on the grid's own frequency lattice.
pub fn inverse_wpt(
    slices: &[ComplexField],
    xis: &[f64],
    window: &ComplexField,
) -> Result<ComplexField> {
    if slices.len() != xis.len() || slices.is_empty() {
        return Err(Error::GridTooCoarse(
            "slice list and xi list must be nonempty and aligned".into(),
        ));
    }
    let grid = window.grid().clone();
    let mut dxi = f64::INFINITY;
    for w in xis.windows(2) {
        dxi = dxi.min(w[1] - w[0]);
    }
    if xis.len() > 1 && dxi > PI / effective_radius(window) {
        return Err(Error::GridTooCoarse(format!(
            "xi spacing {dxi:.3e} exceeds pi / window support"
        )));
    }
    if xis.len() == 1 {
        dxi = 1.0;
    }
    let what = to_spectral(window);
    let norm_sq = window.l2_norm().powi(2);
    let mut out = ComplexField::zeros(grid.clone());
    for (slice, &xi) in slices.iter().zip(xis) {
        if slice.grid().as_ref() != grid.as_ref() {
            return Err(Error::GridMismatch);
        }
        let shat = to_spectral(slice);
        let conv: Vec<Complex64> = shat
            .coefficients()
            .iter()
            .zip(what.coefficients())
            .map(|(s, w)| s * w)
            .collect();
        let conv = to_physical(&SpectralField::new(grid.clone(), conv)?);
        for ((o, c), y) in out.samples_mut().iter_mut().zip(conv.samples()).zip(grid.nodes()) {
            *o += c * Complex64::new(0.0, y * xi).exp();
        }
    }
    let scale = Complex64::new(dxi / (2.0 * PI * norm_sq), 0.0);
    Ok(out.scaled(scale))
}

/// Radius containing all samples of `f` above 1e-14 of its peak.
fn effective_radius(f: &ComplexField) -> f64 {
    let peak = f.samples().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut r: f64 = 0.0;
    for (y, z) in f.grid().nodes().zip(f.samples()) {
        if z.norm() > 1e-14 * peak {
            r = r.max(y.abs());
        }
    }
    r.max(f.grid().spacing())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid1D;
    use crate::propagator::BaseWindow;

    fn gauss_window() -> WindowSource {
        WindowSource::from_spec(&WindowSpec::new(BaseWindow::Gaussian, 0.375, 1.0))
    }

    fn gaussian_wpt_exact(x: f64, xi: f64) -> Complex64 {
        // W(x, xi) = exp(-x^2/4 - xi^2/4 - i x xi / 2) for
        // f = phi = pi^{-1/4} exp(-y^2/2) (Gaussian product integral)
        Complex64::new(-x * x / 4.0 - xi * xi / 4.0, -x * xi / 2.0).exp()
    }

    #[test]
    fn gaussian_gaussian_closed_form() {
        let f = DataSource::gaussian();
        let w = gauss_window();
        let wspec = WindowSpec::new(BaseWindow::Gaussian, 0.375, 1.0);
        for &(x, xi) in &[(0.0, 0.0), (1.0, 0.0), (0.5, 2.0), (-1.5, -3.0), (2.0, 4.0)] {
            let exact = gaussian_wpt_exact(x, xi);
            let phys = forward_wpt(&f, &w, x, xi).unwrap();
            assert!((phys.value - exact).norm() <= 1e-9, "phys ({x},{xi})");
            let spec = forward_wpt_spectral(&f, &wspec, 0.0, x, xi).unwrap();
            assert!((spec.value - exact).norm() <= 1e-9, "spec ({x},{xi})");
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = Grid1D::new(20.0, 256).unwrap();
        let f = DataSource::Grid(ComplexField::zeros(g));
        let v = forward_wpt(&f, &gauss_window(), 0.3, 2.0).unwrap();
        assert_eq!(v.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn modulation_and_translation_covariance() {
        let g = Grid1D::new(20.0, 1024).unwrap();
        let base = |y: f64| Complex64::new((-y * y / 3.0).exp() * (1.3 * y).cos(), 0.0);
        let f = DataSource::Grid(ComplexField::from_fn(g.clone(), base).unwrap());
        let w = gauss_window();

        // modulation: W(e^{i omega y} f)(x, xi) = W(f)(x, xi - omega)
        let omega = 2.0;
        let fm = DataSource::Grid(
            ComplexField::from_fn(g.clone(), |y| base(y) * Complex64::new(0.0, omega * y).exp())
                .unwrap(),
        );
        let a = forward_wpt(&fm, &w, 0.4, 3.0).unwrap().value;
        let b = forward_wpt(&f, &w, 0.4, 3.0 - omega).unwrap().value;
        assert!((a - b).norm() <= 1e-10);

        // translation: W(f(.-s))(x, xi) = e^{-i s xi} W(f)(x - s, xi)
        let s = 1.5;
        let ft = DataSource::Grid(ComplexField::from_fn(g.clone(), |y| base(y - s)).unwrap());
        let xi = 2.0;
        let a = forward_wpt(&ft, &w, 0.8, xi).unwrap().value;
        let b = forward_wpt(&f, &w, 0.8 - s, xi).unwrap().value * Complex64::new(0.0, -s * xi).exp();
        assert!((a - b).norm() <= 1e-10);
    }

    #[test]
    fn linear_in_data_antilinear_in_window() {
        let g = Grid1D::new(20.0, 512).unwrap();
        let f1 = ComplexField::from_fn(g.clone(), |y| Complex64::new((-y * y / 2.0).exp(), 0.0))
            .unwrap();
        let f2 = ComplexField::from_fn(g.clone(), |y| {
            Complex64::new(0.0, (-y * y / 4.0).exp() * y)
        })
        .unwrap();
        let w = gauss_window();
        let alpha = Complex64::new(0.7, -0.4);
        let sum = DataSource::Grid(f1.scaled(alpha).add(&f2).unwrap());
        let a = forward_wpt(&sum, &w, 0.3, 1.0).unwrap().value;
        let b = forward_wpt(&DataSource::Grid(f1.clone()), &w, 0.3, 1.0).unwrap().value * alpha
            + forward_wpt(&DataSource::Grid(f2), &w, 0.3, 1.0).unwrap().value;
        assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));

        // antilinearity: scaling the window by c scales W by conj(c)
        let c = Complex64::new(0.3, 0.9);
        let wc = WindowSource {
            eval: {
                let inner = w.eval.clone();
                Arc::new(move |y| inner(y) * c)
            },
            support_radius: w.support_radius,
            width: w.width,
        };
        let f = DataSource::Grid(f1);
        let a = forward_wpt(&f, &wc, 0.3, 1.0).unwrap().value;
        let b = forward_wpt(&f, &w, 0.3, 1.0).unwrap().value * c.conj();
        assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
    }

    #[test]
    fn jump_paths_agree() {
        let f = DataSource::jump_gaussian();
        let wspec = WindowSpec::new(BaseWindow::Gaussian, 0.375, 1.0);
        let w = gauss_window();
        for &(x, xi) in &[(0.0, 1.0), (0.5, 3.0), (-1.0, 2.0), (2.0, -4.0)] {
            let p = forward_wpt(&f, &w, x, xi).unwrap().value;
            let s = forward_wpt_spectral(&f, &wspec, 0.0, x, xi).unwrap().value;
            assert!((p - s).norm() <= 1e-7, "({x},{xi}): {p} vs {s}");
        }
    }

    #[test]
    fn closure_consistency_spot_check() {
        let probes = [-4.1, -1.0, -0.3, 0.0, 0.7, 1.9, 3.3, 5.0];
        assert!(DataSource::gaussian().verify_closures(&probes).unwrap() <= 1e-6);
        assert!(DataSource::jump_gaussian().verify_closures(&probes).unwrap() <= 1e-6);
        // no physical closure -> nothing to check
        assert_eq!(
            DataSource::backward_evolved_jump(0.3).verify_closures(&probes).unwrap(),
            0.0
        );
    }

    #[test]
    fn spectral_path_requires_closure() {
        let g = Grid1D::new(20.0, 256).unwrap();
        let f = DataSource::Grid(ComplexField::zeros(g));
        let wspec = WindowSpec::new(BaseWindow::Gaussian, 0.375, 1.0);
        assert!(matches!(
            forward_wpt_spectral(&f, &wspec, 0.0, 0.0, 1.0),
            Err(Error::NoSpectralClosure)
        ));
        // physical path on a transform-only source fails too
        assert!(matches!(
            forward_wpt(&DataSource::backward_evolved_jump(0.3), &gauss_window(), 0.0, 1.0),
            Err(Error::UnknownSupport)
        ));
    }

    #[test]
    fn oscillation_guard() {
        let g = Grid1D::new(20.0, 64).unwrap(); // h = 0.625
        let f = DataSource::Grid(ComplexField::zeros(g));
        assert!(matches!(
            forward_wpt(&f, &gauss_window(), 0.0, 50.0),
            Err(Error::UnderResolved(_))
        ));
    }

    #[test]
    fn refinement_within_error_estimate() {
        let f = DataSource::jump_gaussian();
        let w = gauss_window();
        let v1 = forward_wpt_with(&f, &w, 0.3, 2.0, 1).unwrap();
        let v2 = forward_wpt_with(&f, &w, 0.3, 2.0, 2).unwrap();
        assert!((v1.value - v2.value).norm() <= v1.error_estimate + 1e-14);

        let wspec = WindowSpec::new(BaseWindow::Gaussian, 0.375, 2.0);
        let s1 = forward_wpt_spectral_with(&f, &wspec, 0.2, 1.0, 3.0, 1).unwrap();
        let s2 = forward_wpt_spectral_with(&f, &wspec, 0.2, 1.0, 3.0, 2).unwrap();
        assert!((s1.value - s2.value).norm() <= s1.error_estimate + 1e-14);
    }

    #[test]
    fn slice_matches_pointwise() {
        let g = Grid1D::new(20.0, 1024).unwrap();
        let f = ComplexField::from_fn(g.clone(), |y| {
            Complex64::new((-y * y / 3.0).exp(), 0.3 * (-y * y / 5.0).exp() * y)
        })
        .unwrap();
        let wfield =
            ComplexField::from_fn(g.clone(), |y| BaseWindow::Gaussian.eval(y)).unwrap();
        let xi = 1.7;
        let slice = wpt_slice(&f, &wfield, xi).unwrap();
        let fsrc = DataSource::Grid(f.clone());
        let w = gauss_window();
        for j in (0..g.count()).step_by(64) {
            let x = g.node(j);
            if x.abs() > 8.0 {
                continue; // keep periodic wrap effects out of the oracle
            }
            let point = forward_wpt(&fsrc, &w, x, xi).unwrap().value;
            assert!(
                (slice.samples()[j] - point).norm() <= 1e-10,
                "node {j}: {} vs {point}",
                slice.samples()[j]
            );
        }

        let zero = wpt_slice(&ComplexField::zeros(g.clone()), &wfield, xi).unwrap();
        assert_eq!(zero.l2_norm(), 0.0);

        let other = ComplexField::zeros(Grid1D::new(20.0, 512).unwrap());
        assert!(matches!(
            wpt_slice(&f, &other, xi),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn near_delta_window_samples_the_data() {
        let g = Grid1D::new(20.0, 4096).unwrap(); // h ~ 0.0098
        let f = ComplexField::from_fn(g.clone(), |y| {
            Complex64::new((-y * y / 8.0).exp() * (0.4 * y).cos(), 0.0)
        })
        .unwrap();
        let eps = 0.05; // >= 4 cells wide, far narrower than f's features
        let wsrc = WindowSource {
            eval: Arc::new(move |y: f64| {
                Complex64::new((-y * y / (2.0 * eps * eps)).exp(), 0.0)
            }),
            support_radius: 10.0 * eps,
            width: eps,
        };
        let mass = (2.0 * PI).sqrt() * eps; // integral of the near-delta window
        for &x in &[0.0, 1.0, -2.5] {
            let v = forward_wpt(&DataSource::Grid(f.clone()), &wsrc, x, 0.7).unwrap();
            let expect = f.samples()[((x + 20.0) / g.spacing()).round() as usize].norm() * mass;
            assert!(
                (v.value.norm() - expect).abs() <= 0.05 * expect,
                "x = {x}: {} vs {expect}",
                v.value.norm()
            );
        }
    }

    #[test]
    fn isometry_and_inversion() {
        let g = Grid1D::new(20.0, 512).unwrap();
        // band-limited pseudo-random data
        let f = ComplexField::from_fn(g.clone(), |y| {
            Complex64::new(
                (-y * y / 6.0).exp() * ((1.1 * y).sin() + 0.4 * (2.3 * y).cos()),
                (-y * y / 5.0).exp() * (1.7 * y).cos() * 0.6,
            )
        })
        .unwrap();
        let wfield =
            ComplexField::from_fn(g.clone(), |y| BaseWindow::Gaussian.eval(y)).unwrap();

        let xis: Vec<f64> = g.freqs().collect();
        let slices: Vec<ComplexField> = xis
            .iter()
            .map(|&xi| wpt_slice(&f, &wfield, xi).unwrap())
            .collect();

        // isometry: h_x h_xi sum |W|^2 = 2 pi ||phi||^2 ||f||^2
        let h_x = g.spacing();
        let h_xi = PI / g.half_length();
        let total: f64 = slices
            .iter()
            .map(|s| s.samples().iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            * h_x
            * h_xi;
        let expect = 2.0 * PI * wfield.l2_norm().powi(2) * f.l2_norm().powi(2);
        assert!(
            (total - expect).abs() <= 1e-6 * expect,
            "{total} vs {expect}"
        );

        // inversion round trip
        let back = inverse_wpt(&slices, &xis, &wfield).unwrap();
        let err = back.sub(&f).unwrap().l2_norm();
        assert!(err <= 1e-6 * f.l2_norm(), "round-trip error {err}");
        assert!((back.l2_norm() - f.l2_norm()).abs() <= 1e-6 * f.l2_norm());

        // zero transform inverts to zero
        let zeros: Vec<ComplexField> =
            xis.iter().map(|_| ComplexField::zeros(g.clone())).collect();
        assert_eq!(inverse_wpt(&zeros, &xis, &wfield).unwrap().l2_norm(), 0.0);

        // coarse xi lattice is rejected
        let coarse_xis: Vec<f64> = xis.iter().step_by(64).copied().collect();
        let coarse_slices: Vec<ComplexField> =
            coarse_xis.iter().map(|_| ComplexField::zeros(g.clone())).collect();
        assert!(matches!(
            inverse_wpt(&coarse_slices, &coarse_xis, &wfield),
            Err(Error::GridTooCoarse(_))
        ));
    }
}
