//! Periodic 1-D grids, complex fields and Fourier transforms.
//!
//! The forward transform follows the convention
//! `F(eta) = integral f(y) exp(-i y eta) dy`, discretized by the rectangle
//! rule on `[-L, L)`.  Frequencies are stored in symmetric order,
//! `eta_k = pi k / L` for `k = -N/2 .. N/2 - 1`.

use std::cell::RefCell;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Periodic sampled domain `[-L, L)` with `N` equispaced nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    half_length: f64,
    count: usize,
}

impl Grid1D {
    pub fn new(half_length: f64, count: usize) -> Result<Arc<Grid1D>> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half length must be positive, got {half_length}"
            )));
        }
        if count < 16 || !count.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "node count must be a power of two >= 16, got {count}"
            )));
        }
        Ok(Arc::new(Grid1D { half_length, count }))
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.count as f64
    }

    /// Node `x_j = -L + j h`.
    pub fn node(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    /// Frequency at symmetric-order slot `s`: `eta = pi (s - N/2) / L`.
    pub fn freq(&self, s: usize) -> f64 {
        let k = s as i64 - (self.count / 2) as i64;
        std::f64::consts::PI * k as f64 / self.half_length
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |j| self.node(j))
    }

    pub fn freqs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |s| self.freq(s))
    }
}

/// Complex-valued samples on a grid.
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: Arc<Grid1D>,
    samples: Vec<Complex64>,
}

/// Fourier coefficients on the symmetric frequency lattice of a grid.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<Grid1D>,
    coefficients: Vec<Complex64>,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex64], forward: bool) {
    PLANNER.with(|p| {
        let fft = if forward {
            p.borrow_mut().plan_fft_forward(buf.len())
        } else {
            p.borrow_mut().plan_fft_inverse(buf.len())
        };
        fft.process(buf);
    });
}

impl ComplexField {
    pub fn new(grid: Arc<Grid1D>, samples: Vec<Complex64>) -> Result<ComplexField> {
        if samples.len() != grid.count() {
            return Err(Error::InvalidGrid(format!(
                "sample count {} does not match grid count {}",
                samples.len(),
                grid.count()
            )));
        }
        let f = ComplexField { grid, samples };
        f.check_finite("construction")?;
        Ok(f)
    }

    pub fn zeros(grid: Arc<Grid1D>) -> ComplexField {
        let n = grid.count();
        ComplexField {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Sample a closure of position on the grid.
    pub fn from_fn(grid: Arc<Grid1D>, f: impl Fn(f64) -> Complex64) -> Result<ComplexField> {
        let samples = grid.nodes().map(f).collect();
        ComplexField::new(grid, samples)
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    fn check_finite(&self, context: &str) -> Result<()> {
        if self.samples.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite {
                context: context.to_string(),
            })
        }
    }

    fn same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid.as_ref() == other.grid.as_ref() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `sqrt(h sum |f_j|^2)` — rectangle-rule L2 norm.
    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.spacing();
        (h * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `h sum f_j`.
    pub fn mass(&self) -> Complex64 {
        let h = self.grid.spacing();
        self.samples.iter().sum::<Complex64>() * h
    }

    /// `h sum f_j conj(g_j)`.
    pub fn inner_product(&self, other: &ComplexField) -> Result<Complex64> {
        self.same_grid(other)?;
        let h = self.grid.spacing();
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            * h)
    }

    pub fn scaled(&self, c: Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &ComplexField) -> Result<ComplexField> {
        self.same_grid(other)?;
        Ok(ComplexField {
            grid: self.grid.clone(),
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.same_grid(other)?;
        Ok(ComplexField {
            grid: self.grid.clone(),
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Write the field as CSV `x,re,im` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W, digest: Option<&str>) -> Result<()> {
        if let Some(d) = digest {
            writeln!(w, "# config_digest={d}")?;
        }
        writeln!(w, "x,re,im")?;
        for (x, z) in self.grid.nodes().zip(&self.samples) {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", x, z.re, z.im)?;
        }
        Ok(())
    }
}

impl SpectralField {
    pub fn new(grid: Arc<Grid1D>, coefficients: Vec<Complex64>) -> Result<SpectralField> {
        if coefficients.len() != grid.count() {
            return Err(Error::InvalidGrid(format!(
                "coefficient count {} does not match grid count {}",
                coefficients.len(),
                grid.count()
            )));
        }
        Ok(SpectralField { grid, coefficients })
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    /// Coefficients in symmetric frequency order.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }
}

/// Forward transform: `F_k = h sum_j f_j exp(-i x_j eta_k)`.
pub fn to_spectral(f: &ComplexField) -> SpectralField {
    let grid = f.grid.clone();
    let n = grid.count();
    let h = grid.spacing();
    let mut buf = f.samples.clone();
    fft_in_place(&mut buf, true);
    // x_j eta_k = -pi k + 2 pi j k / N, so F_k = h (-1)^k X_{k mod N};
    // with N/2 even, (-1)^k at slot s equals (-1)^s.
    let mut coefficients = vec![Complex64::new(0.0, 0.0); n];
    for (s, c) in coefficients.iter_mut().enumerate() {
        let idx = (s + n / 2) % n;
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        *c = buf[idx] * (h * sign);
    }
    SpectralField { grid, coefficients }
}

/// Inverse transform: `f_j = (1/2L) sum_k F_k exp(i x_j eta_k)`.
pub fn to_physical(spec: &SpectralField) -> ComplexField {
    let grid = spec.grid.clone();
    let n = grid.count();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (s, c) in spec.coefficients.iter().enumerate() {
        let idx = (s + n / 2) % n;
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        buf[idx] = c * sign;
    }
    fft_in_place(&mut buf, false);
    let scale = 1.0 / (2.0 * grid.half_length());
    for z in &mut buf {
        *z *= scale;
    }
    ComplexField { grid, samples: buf }
}

/// Apply a diagonal Fourier multiplier `eta -> m(eta)`.
pub fn apply_multiplier(
    f: &ComplexField,
    m: impl Fn(f64) -> Complex64,
) -> Result<ComplexField> {
    let mut spec = to_spectral(f);
    let grid = spec.grid.clone();
    for (s, c) in spec.coefficients.iter_mut().enumerate() {
        let eta = grid.freq(s);
        let v = m(eta);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFiniteMultiplier { eta });
        }
        *c *= v;
    }
    let out = to_physical(&spec);
    out.check_finite("apply_multiplier")?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(l: f64, n: usize) -> Arc<Grid1D> {
        Grid1D::new(l, n).unwrap()
    }

    fn gaussian_field(g: &Arc<Grid1D>) -> ComplexField {
        ComplexField::from_fn(g.clone(), |x| Complex64::new((-x * x / 2.0).exp(), 0.0)).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(10.0, 8).is_err());
        assert!(Grid1D::new(10.0, 100).is_err());
        assert!(Grid1D::new(-1.0, 64).is_err());
        assert!(Grid1D::new(10.0, 64).is_ok());
    }

    #[test]
    fn zero_field_transforms_to_zero() {
        let g = grid(10.0, 64);
        let f = ComplexField::zeros(g);
        let spec = to_spectral(&f);
        assert!(spec.coefficients().iter().all(|c| c.norm() == 0.0));
        let back = to_physical(&spec);
        assert!(back.samples().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn gaussian_matches_analytic_transform() {
        let g = grid(40.0, 1024);
        let f = gaussian_field(&g);
        let spec = to_spectral(&f);
        let mut max_err: f64 = 0.0;
        for (s, c) in spec.coefficients().iter().enumerate() {
            let eta = g.freq(s);
            let exact = (2.0 * PI).sqrt() * (-eta * eta / 2.0).exp();
            max_err = max_err.max((c - Complex64::new(exact, 0.0)).norm());
        }
        assert!(max_err <= 1e-10, "max err {max_err}");
    }

    #[test]
    fn parseval_identity() {
        let g = grid(40.0, 1024);
        let f = gaussian_field(&g);
        let spec = to_spectral(&f);
        let h = g.spacing();
        let phys: f64 = h * f.samples().iter().map(|z| z.norm_sqr()).sum::<f64>();
        let freq: f64 = (1.0 / (2.0 * PI))
            * (PI / g.half_length())
            * spec.coefficients().iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert!((phys - freq).abs() <= 1e-10 * phys);
    }

    #[test]
    fn single_mode_inverse() {
        let g = grid(8.0, 64);
        let n = g.count();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        // pick eta_5
        let slot = n / 2 + 5;
        coeffs[slot] = Complex64::new(1.0, 0.0);
        let eta = g.freq(slot);
        let f = to_physical(&SpectralField::new(g.clone(), coeffs).unwrap());
        let scale = 1.0 / (2.0 * g.half_length());
        for (x, z) in g.nodes().zip(f.samples()) {
            let exact = Complex64::new(0.0, x * eta).exp() * scale;
            assert!((z - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_multiplier_on_sine() {
        let g = grid(PI, 64); // L = pi, so eta lattice contains 1
        let f = ComplexField::from_fn(g.clone(), |x| Complex64::new(x.sin(), 0.0)).unwrap();
        let df = apply_multiplier(&f, |eta| Complex64::new(0.0, eta)).unwrap();
        for (x, z) in g.nodes().zip(df.samples()) {
            assert!((z.re - x.cos()).abs() < 1e-10 && z.im.abs() < 1e-10);
        }
    }

    #[test]
    fn identity_multiplier_is_identity() {
        let g = grid(10.0, 128);
        let f = gaussian_field(&g);
        let out = apply_multiplier(&f, |_| Complex64::new(1.0, 0.0)).unwrap();
        let diff = out.sub(&f).unwrap().l2_norm();
        assert!(diff <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn unimodular_multiplier_preserves_norm() {
        let g = grid(10.0, 128);
        let f = gaussian_field(&g);
        let t = 0.37;
        let out = apply_multiplier(&f, |eta| Complex64::new(0.0, eta.powi(3) * t).exp()).unwrap();
        assert!((out.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn non_finite_multiplier_rejected() {
        let g = grid(10.0, 64);
        let f = gaussian_field(&g);
        let r = apply_multiplier(&f, |eta| Complex64::new(1.0 / eta, 0.0));
        assert!(matches!(r, Err(Error::NonFiniteMultiplier { .. })));
    }

    #[test]
    fn norms_and_inner_product() {
        let g = grid(40.0, 1024);
        let f = ComplexField::from_fn(g.clone(), |x| {
            Complex64::new(PI.powf(-0.25) * (-x * x / 2.0).exp(), 0.0)
        })
        .unwrap();
        assert!((f.l2_norm() - 1.0).abs() <= 1e-10);
        assert!(ComplexField::zeros(g.clone()).l2_norm() == 0.0);
        let ip = f.inner_product(&f).unwrap();
        assert!((ip.re - f.l2_norm().powi(2)).abs() < 1e-12 && ip.im.abs() < 1e-14);
        let other = ComplexField::zeros(grid(40.0, 512));
        assert!(matches!(f.inner_product(&other), Err(Error::GridMismatch)));
    }

    #[test]
    fn matches_direct_summation() {
        // brute-force O(N^2) oracle on a small grid
        let g = grid(6.0, 64);
        let f = ComplexField::from_fn(g.clone(), |x| {
            Complex64::new((-x * x).exp() * (1.3 * x).cos(), (0.7 * x).sin() * (-x * x).exp())
        })
        .unwrap();
        let spec = to_spectral(&f);
        let h = g.spacing();
        for (s, c) in spec.coefficients().iter().enumerate() {
            let eta = g.freq(s);
            let direct: Complex64 = g
                .nodes()
                .zip(f.samples())
                .map(|(x, z)| z * Complex64::new(0.0, -x * eta).exp())
                .sum::<Complex64>()
                * h;
            assert!((c - direct).norm() <= 1e-10, "slot {s}");
        }
    }

    proptest! {
        #[test]
        fn round_trip_identity(seed in 0u64..200) {
            let g = grid(12.0, 256);
            // cheap deterministic pseudo-random field from the seed
            let f = ComplexField::from_fn(g.clone(), |x| {
                let a = ((x * 13.7 + seed as f64).sin() * 43758.5453).fract();
                let b = ((x * 7.1 - seed as f64 * 0.3).cos() * 12543.123).fract();
                Complex64::new(a, b)
            }).unwrap();
            let back = to_physical(&to_spectral(&f));
            let err = back.sub(&f).unwrap().l2_norm();
            prop_assert!(err <= 1e-12 * (1.0 + f.l2_norm()));
        }

        #[test]
        fn multiplier_linearity(a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let g = grid(10.0, 128);
            let f = gaussian_field(&g);
            let gfield = ComplexField::from_fn(g.clone(), |x| Complex64::new((1.5*x).sin()*(-x*x/3.0).exp(), 0.2*x.cos())).unwrap();
            let m = |eta: f64| Complex64::new(0.0, eta).exp();
            let lhs = apply_multiplier(
                &f.scaled(Complex64::new(a, 0.0)).add(&gfield.scaled(Complex64::new(b, 0.0))).unwrap(), m).unwrap();
            let rhs = apply_multiplier(&f, m).unwrap().scaled(Complex64::new(a, 0.0))
                .add(&apply_multiplier(&gfield, m).unwrap().scaled(Complex64::new(b, 0.0))).unwrap();
            let err = lhs.sub(&rhs).unwrap().l2_norm();
            prop_assert!(err <= 1e-12 * (1.0 + lhs.l2_norm()));
        }
    }
}
