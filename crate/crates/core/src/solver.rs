//! Strang-split pseudospectral propagation of
//! `u_t + u_xxx + (a u)_x = 0`: exact Airy multiplier half-steps around a
//! 4th-order explicit stage for the interaction `u_t = -a u_x - a_x u`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::coefficient::CoefficientModel;
use crate::error::{Error, Result};
use crate::field::{apply_multiplier, to_physical, to_spectral, ComplexField, Grid1D};
use crate::propagator::airy_propagate;

#[derive(Clone)]
pub struct SolveConfig {
    pub dt: f64,
    pub t_final: f64,
    pub grid: Arc<Grid1D>,
    pub coefficient: Arc<CoefficientModel>,
    pub record_stride: usize,
}

impl SolveConfig {
    pub fn stability_guard(&self) -> f64 {
        let sup = self.coefficient.sup_abs();
        (0.5 * self.grid.spacing() / (sup + 1.0)).min(1e-2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        let guard = self.stability_guard();
        if self.dt > guard * (1.0 + 1e-12) {
            return Err(Error::StabilityViolation {
                dt: self.dt,
                guard,
            });
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Recorded time propagation: snapshots every `record_stride` steps plus the
/// per-step energy flux `int a_x |u|^2 dx` used by the energy-law check.
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<ComplexField>,
    pub l2_history: Vec<f64>,
    pub mass_history: Vec<Complex64>,
    pub h3_history: Vec<f64>,
    /// flux at every step boundary, spacing `dt`
    pub energy_flux: Vec<f64>,
    pub dt: f64,
}

impl Trajectory {
    /// `|  ||u(t)||^2 - ||u0||^2 + int_0^t flux  |` by the trapezoid rule.
    pub fn energy_law_residual(&self) -> f64 {
        let l2_0 = self.l2_history[0];
        let l2_t = *self.l2_history.last().unwrap();
        l2_t * l2_t - l2_0 * l2_0 + trapezoid(&self.energy_flux, self.dt)
    }
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    dt * (0.5 * values[0] + inner + 0.5 * values[values.len() - 1])
}

/// Zero all modes with |k| > N/3 (2/3-rule de-aliasing).
fn dealias(f: &ComplexField) -> ComplexField {
    let mut spec = to_spectral(f);
    let n = f.grid().count();
    let cut = n as i64 / 3;
    for (s, c) in spec.coefficients_mut().iter_mut().enumerate() {
        let k = s as i64 - (n / 2) as i64;
        if k.abs() > cut {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    to_physical(&spec)
}

fn interaction_rhs(u: &ComplexField, t: f64, coeff: &CoefficientModel) -> Result<ComplexField> {
    let ux = apply_multiplier(u, |eta| Complex64::new(0.0, eta))?;
    let grid = u.grid().clone();
    let mut out = ComplexField::zeros(grid.clone());
    for (j, x) in grid.nodes().enumerate() {
        let a = coeff.eval(t, x, 0)?;
        let ax = coeff.eval(t, x, 1)?;
        out.samples_mut()[j] = -ux.samples()[j] * a - u.samples()[j] * ax;
    }
    Ok(dealias(&out))
}

/// One Strang step over `[t, t + dt]`.
pub fn step(
    u: &ComplexField,
    t: f64,
    dt: f64,
    coeff: &CoefficientModel,
) -> Result<ComplexField> {
    let guard = (0.5 * u.grid().spacing() / (coeff.sup_abs() + 1.0)).min(1e-2);
    if dt > guard * (1.0 + 1e-12) {
        return Err(Error::StabilityViolation { dt, guard });
    }
    let mut v = airy_propagate(u, dt / 2.0)?;
    if !coeff.is_zero() {
        // classical RK4 on the interaction part, coefficient evaluated at the
        // stage times
        let k1 = interaction_rhs(&v, t, coeff)?;
        let k2 = interaction_rhs(
            &v.add(&k1.scaled(Complex64::new(dt / 2.0, 0.0)))?,
            t + dt / 2.0,
            coeff,
        )?;
        let k3 = interaction_rhs(
            &v.add(&k2.scaled(Complex64::new(dt / 2.0, 0.0)))?,
            t + dt / 2.0,
            coeff,
        )?;
        let k4 = interaction_rhs(&v.add(&k3.scaled(Complex64::new(dt, 0.0)))?, t + dt, coeff)?;
        let incr = k1
            .add(&k2.scaled(Complex64::new(2.0, 0.0)))?
            .add(&k3.scaled(Complex64::new(2.0, 0.0)))?
            .add(&k4)?
            .scaled(Complex64::new(dt / 6.0, 0.0));
        v = v.add(&incr)?;
        if !v.samples().iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "solver step".into(),
            });
        }
    }
    airy_propagate(&v, dt / 2.0)
}

fn energy_flux(u: &ComplexField, t: f64, coeff: &CoefficientModel) -> Result<f64> {
    let grid = u.grid();
    let h = grid.spacing();
    let mut sum = 0.0;
    for (j, x) in grid.nodes().enumerate() {
        sum += coeff.eval(t, x, 1)? * u.samples()[j].norm_sqr();
    }
    Ok(sum * h)
}

/// Repeated Strang stepping with norm recording and an energy-law check at
/// every record stride.
pub fn solve(u0: &ComplexField, cfg: &SolveConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let n_steps = (cfg.t_final / cfg.dt).round().max(1.0) as usize;
    let dt = cfg.t_final / n_steps as f64;
    let coeff = cfg.coefficient.as_ref();

    let mut u = u0.clone();
    let mut t = 0.0;
    let l2_0_sq = u0.l2_norm().powi(2);

    let mut traj = Trajectory {
        times: vec![0.0],
        snapshots: vec![u0.clone()],
        l2_history: vec![u0.l2_norm()],
        mass_history: vec![u0.mass()],
        h3_history: vec![h3_norm(u0)],
        energy_flux: vec![energy_flux(u0, 0.0, coeff)?],
        dt,
    };

    for n in 1..=n_steps {
        u = step(&u, t, dt, coeff)?;
        t = n as f64 * dt;
        traj.energy_flux.push(energy_flux(&u, t, coeff)?);
        if n % cfg.record_stride == 0 || n == n_steps {
            traj.times.push(t);
            traj.l2_history.push(u.l2_norm());
            traj.mass_history.push(u.mass());
            traj.h3_history.push(h3_norm(&u));
            traj.snapshots.push(u.clone());

            let l2_sq = traj.l2_history.last().unwrap().powi(2);
            let flux_int = trapezoid(&traj.energy_flux, dt);
            let residual = (l2_sq - l2_0_sq + flux_int).abs();
            let tol = 1e-5 * l2_0_sq.max(1e-300);
            if l2_0_sq > 0.0 && residual > tol {
                return Err(Error::NonFinite {
                    context: format!(
                        "energy-law violation at t = {t}: residual {residual:.3e} > {tol:.3e}"
                    ),
                });
            }
        }
    }
    Ok(traj)
}

/// Spectral Sobolev norm `( (1/2pi)(pi/L) sum (1+eta^2)^3 |uhat|^2 )^{1/2}`.
pub fn h3_norm(u: &ComplexField) -> f64 {
    let spec = to_spectral(u);
    let grid = u.grid();
    let scale = (std::f64::consts::PI / grid.half_length()) / (2.0 * std::f64::consts::PI);
    let mut sum = 0.0;
    for (s, c) in spec.coefficients().iter().enumerate() {
        let eta = grid.freq(s);
        sum += (1.0 + eta * eta).powi(3) * c.norm_sqr();
    }
    (scale * sum).sqrt()
}
