//! Free (Airy) flow, the xi-parameterized window evolution, and lambda-scaled
//! windows, all realized as exact Fourier multipliers.
//!
//! Substituting `d_x -> i eta` in `exp(-t (d_x^3 - 3 i xi d_x^2))` gives the
//! multiplier `exp(i t (eta^3 - 3 xi eta^2))`; the xi = 0 case is the Airy
//! multiplier `exp(i t eta^3)`.  Both are unit tested against a
//! method-of-lines integration of the underlying PDE.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{apply_multiplier, ComplexField, Grid1D};

const TWO_PI: f64 = 2.0 * PI;

/// Base window shapes.  Both built-ins have closed-form transforms under the
/// `exp(-i y eta)` convention.
#[derive(Clone)]
pub enum BaseWindow {
    /// `pi^{-1/4} exp(-x^2/2)`, unit L2 norm.
    Gaussian,
    /// Raised-cosine-modulated Gaussian `pi^{-1/4} cos^2(x/2) exp(-x^2/2)`:
    /// a Hann-shaped bump that stays in the Schwartz class.  The modulation
    /// sits at unit frequency so the transform's side lobes stay inside the
    /// main envelope's band.
    HannBump,
    Custom {
        phys: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
        hat: Option<Arc<dyn Fn(f64) -> Complex64 + Send + Sync>>,
        support_radius: f64,
        band_radius: f64,
    },
}

impl std::fmt::Debug for BaseWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BaseWindow::Gaussian => "Gaussian",
            BaseWindow::HannBump => "HannBump",
            BaseWindow::Custom { .. } => "Custom",
        })
    }
}

impl BaseWindow {
    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            BaseWindow::Gaussian => Complex64::new(PI.powf(-0.25) * (-x * x / 2.0).exp(), 0.0),
            BaseWindow::HannBump => {
                let c = (x / 2.0).cos();
                Complex64::new(PI.powf(-0.25) * c * c * (-x * x / 2.0).exp(), 0.0)
            }
            BaseWindow::Custom { phys, .. } => phys(x),
        }
    }

    /// Fourier transform of the base window, when available in closed form.
    pub fn hat(&self, eta: f64) -> Option<Complex64> {
        match self {
            BaseWindow::Gaussian => Some(Complex64::new(
                TWO_PI.sqrt() * PI.powf(-0.25) * (-eta * eta / 2.0).exp(),
                0.0,
            )),
            BaseWindow::HannBump => {
                // cos^2(x/2) = 1/2 + (e^{i x} + e^{-i x})/4
                let g = |u: f64| TWO_PI.sqrt() * (-u * u / 2.0).exp();
                Some(Complex64::new(
                    PI.powf(-0.25) * (0.5 * g(eta) + 0.25 * g(eta - 1.0) + 0.25 * g(eta + 1.0)),
                    0.0,
                ))
            }
            BaseWindow::Custom { hat, .. } => hat.as_ref().map(|h| h(eta)),
        }
    }

    /// Radius beyond which the window envelope is below ~1e-18.
    pub fn support_radius(&self) -> f64 {
        match self {
            BaseWindow::Gaussian | BaseWindow::HannBump => 9.5,
            BaseWindow::Custom { support_radius, .. } => *support_radius,
        }
    }

    /// Radius beyond which the window transform is below ~1e-18 of its peak.
    pub fn band_radius(&self) -> f64 {
        match self {
            BaseWindow::Gaussian => 9.5,
            BaseWindow::HannBump => 10.5,
            BaseWindow::Custom { band_radius, .. } => *band_radius,
        }
    }
}

/// Scaled window `phi_{0,lambda}(x) = lambda^{d/2} phi_0(lambda^d x)`.
#[derive(Clone)]
pub struct WindowSpec {
    pub base: BaseWindow,
    /// scale exponent d
    pub d: f64,
    /// scale lambda >= 1
    pub lambda: f64,
}

impl WindowSpec {
    pub fn new(base: BaseWindow, d: f64, lambda: f64) -> WindowSpec {
        WindowSpec { base, d, lambda }
    }

    /// Admissibility for a coefficient decay exponent rho:
    /// `min(rho, 1/4) < d < 2 min(rho, 1/4)` and `lambda >= 1`.
    pub fn validate(&self, rho: f64) -> Result<()> {
        let m = rho.min(0.25);
        if !(self.d > m && self.d < 2.0 * m) {
            return Err(Error::Config(format!(
                "scale exponent d = {} outside admissible interval ({}, {})",
                self.d,
                m,
                2.0 * m
            )));
        }
        if !(self.lambda >= 1.0) {
            return Err(Error::Config(format!("lambda must be >= 1, got {}", self.lambda)));
        }
        Ok(())
    }

    pub fn scaled_width(&self) -> f64 {
        self.lambda.powf(-self.d)
    }

    /// Scaled window value at x.
    pub fn eval_scaled(&self, x: f64) -> Complex64 {
        let s = self.lambda.powf(self.d);
        self.base.eval(s * x) * s.sqrt()
    }

    /// Transform of the scaled window: `lambda^{-d/2} phi0_hat(lambda^{-d} eta)`.
    pub fn hat_scaled(&self, eta: f64) -> Option<Complex64> {
        let s = self.lambda.powf(self.d);
        self.base.hat(eta / s).map(|v| v / s.sqrt())
    }

    pub fn support_radius_scaled(&self) -> f64 {
        self.base.support_radius() / self.lambda.powf(self.d)
    }

    pub fn band_radius_scaled(&self) -> f64 {
        self.base.band_radius() * self.lambda.powf(self.d)
    }
}

/// Free flow `exp(-t d_x^3)`: multiplier `exp(i eta^3 t)`.
pub fn airy_propagate(u: &ComplexField, t: f64) -> Result<ComplexField> {
    apply_multiplier(u, |eta| phase(eta * eta * eta * t))
}

/// `exp(-t (d_x^3 - 3 i xi d_x^2))`: multiplier `exp(i t (eta^3 - 3 xi eta^2))`.
pub fn window_evolve(phi: &ComplexField, t: f64, xi: f64) -> Result<ComplexField> {
    apply_multiplier(phi, |eta| phase(t * (eta * eta * eta - 3.0 * xi * eta * eta)))
}

/// Unit-modulus phase with the argument reduced mod 2 pi.
fn phase(theta: f64) -> Complex64 {
    Complex64::new(0.0, theta % TWO_PI).exp()
}

/// Sample the scaled window on a grid; errors when the window would be
/// narrower than 4 grid cells.
pub fn scaled_window(spec: &WindowSpec, grid: &Arc<Grid1D>) -> Result<ComplexField> {
    let width = spec.scaled_width();
    let h = grid.spacing();
    if width < 4.0 * h {
        return Err(Error::UnderResolvedWindow { width, h });
    }
    ComplexField::from_fn(grid.clone(), |x| spec.eval_scaled(x))
}

/// The window appearing inside the detection integral: the scaled window
/// evolved backward by t0 at the caller-chosen effective frequency (the
/// detector passes `-lambda xi`; see `wpt::forward_wpt_spectral`).
pub fn detector_window(
    spec: &WindowSpec,
    grid: &Arc<Grid1D>,
    t0: f64,
    xi_eff: f64,
) -> Result<ComplexField> {
    let phi = scaled_window(spec, grid)?;
    window_evolve(&phi, -t0, xi_eff)
}

/// Transform-side closure for the detector window:
/// `exp(-i t0 (eta^3 - 3 xi_eff eta^2)) phi_{0,lambda}_hat(eta)`.
pub fn detector_window_hat(
    spec: &WindowSpec,
    t0: f64,
    xi_eff: f64,
) -> Option<impl Fn(f64) -> Complex64 + '_> {
    if spec.hat_scaled(0.0).is_none() {
        return None;
    }
    Some(move |eta: f64| {
        let m = phase(-t0 * (eta * eta * eta - 3.0 * xi_eff * eta * eta));
        spec.hat_scaled(eta).unwrap() * m
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::to_spectral;

    fn grid(l: f64, n: usize) -> Arc<Grid1D> {
        Grid1D::new(l, n).unwrap()
    }

    fn gaussian(g: &Arc<Grid1D>) -> ComplexField {
        ComplexField::from_fn(g.clone(), |x| BaseWindow::Gaussian.eval(x)).unwrap()
    }

    /// Classical RK4 on the spectral ODE of `u_t = -u_xxx + 3 i xi u_xx`,
    /// i.e. `uhat' = i (eta^3 - 3 xi eta^2) uhat`.
    fn method_of_lines(u: &ComplexField, t: f64, xi: f64, steps: usize) -> ComplexField {
        let spec = to_spectral(u);
        let g = u.grid().clone();
        let dt = t / steps as f64;
        let mut coeffs: Vec<Complex64> = spec.coefficients().to_vec();
        for (s, c) in coeffs.iter_mut().enumerate() {
            let eta = g.freq(s);
            let lam = Complex64::new(0.0, eta * eta * eta - 3.0 * xi * eta * eta);
            let mut y = *c;
            for _ in 0..steps {
                let k1 = lam * y;
                let k2 = lam * (y + k1 * (dt / 2.0));
                let k3 = lam * (y + k2 * (dt / 2.0));
                let k4 = lam * (y + k3 * dt);
                y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            }
            *c = y;
        }
        crate::field::to_physical(
            &crate::field::SpectralField::new(g, coeffs).unwrap(),
        )
    }

    #[test]
    fn airy_identity_and_unitarity() {
        let g = grid(20.0, 512);
        let u = gaussian(&g);
        let same = airy_propagate(&u, 0.0).unwrap();
        assert!(same.sub(&u).unwrap().l2_norm() < 1e-13);
        let moved = airy_propagate(&u, 0.7).unwrap();
        assert!((moved.l2_norm() - u.l2_norm()).abs() <= 1e-12 * u.l2_norm());
    }

    #[test]
    fn airy_group_law() {
        let g = grid(20.0, 512);
        let u = gaussian(&g);
        let a = airy_propagate(&airy_propagate(&u, 0.3).unwrap(), 0.2).unwrap();
        let b = airy_propagate(&u, 0.5).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() <= 1e-12 * u.l2_norm());
    }

    #[test]
    fn airy_matches_method_of_lines() {
        let g = grid(20.0, 512);
        let u = gaussian(&g);
        let exact = airy_propagate(&u, 0.1).unwrap();
        let mol = method_of_lines(&u, 0.1, 0.0, 20000);
        assert!(exact.sub(&mol).unwrap().l2_norm() <= 1e-8);
    }

    #[test]
    fn window_evolve_reduces_to_airy_at_zero_xi() {
        let g = grid(20.0, 512);
        let u = gaussian(&g);
        let a = window_evolve(&u, 0.4, 0.0).unwrap();
        let b = airy_propagate(&u, 0.4).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() == 0.0 || a.sub(&b).unwrap().l2_norm() < 1e-15);
    }

    #[test]
    fn window_evolve_unitary_and_matches_method_of_lines() {
        let g = grid(20.0, 512);
        let u = gaussian(&g);
        let ev = window_evolve(&u, 0.05, 3.0).unwrap();
        assert!((ev.l2_norm() - u.l2_norm()).abs() <= 1e-12 * u.l2_norm());
        let mol = method_of_lines(&u, 0.05, 3.0, 4000);
        assert!(ev.sub(&mol).unwrap().l2_norm() <= 1e-7);
    }

    #[test]
    fn window_evolve_group_law() {
        let g = grid(20.0, 512);
        let u = gaussian(&g);
        let xi = 2.0;
        let a = window_evolve(&window_evolve(&u, 0.2, xi).unwrap(), 0.3, xi).unwrap();
        let b = window_evolve(&u, 0.5, xi).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() <= 1e-12 * u.l2_norm());
    }

    #[test]
    fn scaled_window_isometry_and_value() {
        let g = grid(40.0, 4096);
        for &(lam, d) in &[(1.0, 0.375), (16.0, 0.375), (64.0, 0.3)] {
            let spec = WindowSpec::new(BaseWindow::Gaussian, d, lam);
            let w = scaled_window(&spec, &g).unwrap();
            assert!((w.l2_norm() - 1.0).abs() <= 1e-10, "lambda {lam}");
            // value at the origin node
            let j0 = g.count() / 2;
            assert!((w.samples()[j0].re - lam.powf(d / 2.0) * PI.powf(-0.25)).abs() < 1e-12);
        }
        let spec = WindowSpec::new(BaseWindow::Gaussian, 0.375, 1.0);
        let w = scaled_window(&spec, &g).unwrap();
        let base = ComplexField::from_fn(g.clone(), |x| BaseWindow::Gaussian.eval(x)).unwrap();
        assert!(w.sub(&base).unwrap().l2_norm() < 1e-14);
    }

    #[test]
    fn scaled_window_resolvability_guard() {
        let g = grid(40.0, 256); // h = 0.3125
        let spec = WindowSpec::new(BaseWindow::Gaussian, 0.375, 64.0); // width 0.21
        assert!(matches!(
            scaled_window(&spec, &g),
            Err(Error::UnderResolvedWindow { .. })
        ));
    }

    #[test]
    fn detector_window_basics() {
        let g = grid(40.0, 2048);
        let spec = WindowSpec::new(BaseWindow::Gaussian, 0.375, 4.0);
        let w0 = detector_window(&spec, &g, 0.0, 3.0).unwrap();
        let plain = scaled_window(&spec, &g).unwrap();
        assert!(w0.sub(&plain).unwrap().l2_norm() < 1e-13);
        let w = detector_window(&spec, &g, 0.4, 5.0).unwrap();
        assert!((w.l2_norm() - plain.l2_norm()).abs() <= 1e-12);
    }

    #[test]
    fn detector_window_centroid_drifts_by_the_chirp_rate() {
        // stationary phase: the packet centroid sits at -theta'(eta)
        // averaged over |w_hat|^2.  The evolution phase is
        // theta = -t0 eta^3 + 3 t0 xi_eff eta^2, so with a symmetric base
        // window (E[eta] = 0) the mean shift is 3 t0 E[eta^2] = 3 t0 s^2 / 2
        // for the Gaussian base at scale s, independent of xi_eff.
        let g = grid(60.0, 8192);
        let t0 = 0.3;
        let spec = WindowSpec::new(BaseWindow::Gaussian, 0.375, 4.0);
        let s = 1.0 / spec.scaled_width();
        let w = detector_window(&spec, &g, t0, 2.0).unwrap();
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        for (x, z) in g.nodes().zip(w.samples()) {
            let p = z.norm_sqr();
            m0 += p;
            m1 += x * p;
        }
        let centroid = m1 / m0;
        let expected = 3.0 * t0 * s * s / 2.0;
        assert!(
            (centroid - expected).abs() <= 1e-3 * expected,
            "centroid {centroid} vs {expected}"
        );
    }

    #[test]
    fn window_spec_admissibility() {
        assert!(WindowSpec::new(BaseWindow::Gaussian, 0.375, 2.0).validate(0.25).is_ok());
        assert!(WindowSpec::new(BaseWindow::Gaussian, 0.2, 2.0).validate(0.25).is_err());
        assert!(WindowSpec::new(BaseWindow::Gaussian, 0.55, 2.0).validate(0.25).is_err());
        assert!(WindowSpec::new(BaseWindow::Gaussian, 0.375, 0.5).validate(0.25).is_err());
    }

    #[test]
    fn hann_bump_hat_matches_quadrature() {
        let w = BaseWindow::HannBump;
        let g = grid(20.0, 4096);
        let f = ComplexField::from_fn(g.clone(), |x| w.eval(x)).unwrap();
        let spec = to_spectral(&f);
        for (s, c) in spec.coefficients().iter().enumerate().step_by(97) {
            let eta = g.freq(s);
            if eta.abs() > 20.0 {
                continue;
            }
            let closed = w.hat(eta).unwrap();
            assert!((c - closed).norm() < 1e-10, "eta {eta}");
        }
    }

    #[test]
    fn commuting_field_operator() {
        // K(t) u = x u - 3 t u_xx satisfies K(t) S(t) u0 = S(t) K(0) u0 for
        // the free flow S(t), on band-limited data.  (Direct computation:
        // with v = x u - 3 t u_xx and u_t = -u_xxx, v_t + v_xxx = 0.)
        let g = grid(30.0, 1024);
        let u0 = gaussian(&g);
        let t = 0.2;
        let k0u0 = ComplexField::from_fn(g.clone(), |x| {
            Complex64::new(x, 0.0) * BaseWindow::Gaussian.eval(x)
        })
        .unwrap();
        let rhs = airy_propagate(&k0u0, t).unwrap();
        let ut = airy_propagate(&u0, t).unwrap();
        let uxx = apply_multiplier(&ut, |eta| Complex64::new(-eta * eta, 0.0)).unwrap();
        let mut lhs = ComplexField::zeros(g.clone());
        for (j, x) in g.nodes().enumerate() {
            lhs.samples_mut()[j] =
                Complex64::new(x, 0.0) * ut.samples()[j] - 3.0 * t * uxx.samples()[j];
        }
        assert!(lhs.sub(&rhs).unwrap().l2_norm() <= 1e-8);
    }
}
