//! The coefficient `a(t, x)` of the linearized equation: the travelling
//! sech^2 soliton family, the zero coefficient, or a user closure, together
//! with analytic x-derivatives and a decay-bound checker.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{apply_multiplier, ComplexField, Grid1D};

pub type CustomEval = Arc<dyn Fn(f64, f64, usize) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum CoefficientKind {
    Zero,
    Soliton {
        amplitude: f64,
        width: f64,
        speed: f64,
        offset: f64,
        /// generating nonlinearity and dispersion parameters
        a_nl: f64,
        gamma: f64,
    },
    Custom { eval: CustomEval, k_max: usize },
}

#[derive(Clone)]
pub struct CoefficientModel {
    kind: CoefficientKind,
    rho: f64,
    /// decay constants C_{l1,l2}, indexed [l1][l2] with l1 in {0, 1}
    constants: Vec<Vec<f64>>,
}

/// Result of sampling the decay inequality
/// `|d_t^{l1} d_x^{l2} a| <= C_{l1,l2} (1+|x|)^(-rho-l1-l2)`.
#[derive(Debug, Clone)]
pub struct DecayReport {
    /// worst observed |derivative| / bound per (l1, l2)
    pub ratios: Vec<((usize, usize), f64)>,
    pub sample_count: usize,
    pub pass: bool,
}

const MAX_SOLITON_POLY: usize = 17;

/// Derivatives of sech^2 z as polynomials in tanh z times sech^2 z:
/// Q_0 = 1, Q_{k+1}(T) = Q_k'(T)(1 - T^2) - 2 T Q_k(T).
fn sech2_polys() -> &'static Vec<Vec<f64>> {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
        for _ in 1..MAX_SOLITON_POLY {
            let q = polys.last().unwrap();
            let mut next = vec![0.0; q.len() + 1];
            for (i, &c) in q.iter().enumerate() {
                if i >= 1 {
                    // derivative term: i c T^{i-1} (1 - T^2)
                    next[i - 1] += i as f64 * c;
                    next[i + 1] -= i as f64 * c;
                }
                // -2 T Q_k
                next[i + 1] -= 2.0 * c;
            }
            polys.push(next);
        }
        polys
    })
}

fn poly_eval(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

impl CoefficientModel {
    pub fn zero() -> CoefficientModel {
        CoefficientModel {
            kind: CoefficientKind::Zero,
            rho: 0.25,
            constants: vec![vec![0.0; 9], vec![0.0; 9]],
        }
    }

    /// Soliton `c sech^2(b (x - s t - x0))` with decay constants fitted by
    /// sampling `sup |d^k a| (1+|x|)^(rho+l1+l2)` (times a safety factor).
    pub fn soliton(
        amplitude: f64,
        width: f64,
        speed: f64,
        offset: f64,
        a_nl: f64,
        gamma: f64,
        rho: f64,
    ) -> CoefficientModel {
        let mut model = CoefficientModel {
            kind: CoefficientKind::Soliton {
                amplitude,
                width,
                speed,
                offset,
                a_nl,
                gamma,
            },
            rho,
            constants: Vec::new(),
        };
        model.constants = model.fit_constants(8);
        model
    }

    pub fn custom(eval: CustomEval, k_max: usize, rho: f64, constants: Vec<Vec<f64>>) -> CoefficientModel {
        CoefficientModel {
            kind: CoefficientKind::Custom { eval, k_max },
            rho,
            constants,
        }
    }

    pub fn kind(&self) -> &CoefficientKind {
        &self.kind
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn constants(&self) -> &[Vec<f64>] {
        &self.constants
    }

    pub fn set_constants(&mut self, constants: Vec<Vec<f64>>) {
        self.constants = constants;
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, CoefficientKind::Zero)
    }

    /// `d_x^k a(t, x)`.
    pub fn eval(&self, t: f64, x: f64, k: usize) -> Result<f64> {
        match &self.kind {
            CoefficientKind::Zero => Ok(0.0),
            CoefficientKind::Soliton {
                amplitude,
                width,
                speed,
                offset,
                ..
            } => {
                if k >= MAX_SOLITON_POLY {
                    return Err(Error::UnsupportedDerivative {
                        requested: k,
                        max: MAX_SOLITON_POLY - 1,
                    });
                }
                let z = width * (x - speed * t - offset);
                let tn = z.tanh();
                let s = 1.0 - tn * tn;
                Ok(amplitude * width.powi(k as i32) * poly_eval(&sech2_polys()[k], tn) * s)
            }
            CoefficientKind::Custom { eval, k_max } => {
                if k > *k_max {
                    Err(Error::UnsupportedDerivative {
                        requested: k,
                        max: *k_max,
                    })
                } else {
                    Ok(eval(t, x, k))
                }
            }
        }
    }

    /// `d_t^{l1} d_x^{l2} a(t, x)` with `l1` in {0, 1}.  For the travelling
    /// soliton the time derivative is `-speed` times the next x-derivative;
    /// custom coefficients fall back to central differences in t.
    pub fn eval_t(&self, t: f64, x: f64, l1: usize, l2: usize) -> Result<f64> {
        match l1 {
            0 => self.eval(t, x, l2),
            1 => match &self.kind {
                CoefficientKind::Zero => Ok(0.0),
                CoefficientKind::Soliton { speed, .. } => {
                    let speed = *speed;
                    Ok(-speed * self.eval(t, x, l2 + 1)?)
                }
                CoefficientKind::Custom { .. } => {
                    let dt = 1e-4;
                    Ok((self.eval(t + dt, x, l2)? - self.eval(t - dt, x, l2)?) / (2.0 * dt))
                }
            },
            _ => Err(Error::UnsupportedDerivative {
                requested: l1,
                max: 1,
            }),
        }
    }

    /// Exact sup-norm for the built-ins; sampled for custom coefficients.
    pub fn sup_abs(&self) -> f64 {
        match &self.kind {
            CoefficientKind::Zero => 0.0,
            CoefficientKind::Soliton { amplitude, .. } => amplitude.abs(),
            CoefficientKind::Custom { eval, .. } => {
                let mut sup: f64 = 0.0;
                for i in 0..4001 {
                    let x = -100.0 + 0.05 * i as f64;
                    sup = sup.max(eval(0.0, x, 0).abs());
                }
                sup
            }
        }
    }

    /// Radius beyond which `sup_{t in [t_lo, t_hi], k <= 1} |d_x^k a|` stays
    /// below `eps`.  Zero for the zero coefficient.
    pub fn far_field_radius(&self, t_lo: f64, t_hi: f64, eps: f64) -> f64 {
        match &self.kind {
            CoefficientKind::Zero => 0.0,
            CoefficientKind::Soliton {
                amplitude,
                width,
                speed,
                offset,
                ..
            } => {
                let scale = amplitude.abs() * (1.0 + 2.0 * width.abs());
                // c sech^2(b w) <= 4 c exp(-2 b w)
                let w = ((4.0 * scale / eps).ln() / (2.0 * width.abs())).max(1.0);
                let tmax = t_lo.abs().max(t_hi.abs());
                speed.abs() * tmax + offset.abs() + w + 5.0
            }
            CoefficientKind::Custom { eval, .. } => {
                let mut r: f64 = 500.0;
                'outer: while r > 1.0 {
                    for &t in &[t_lo, 0.5 * (t_lo + t_hi), t_hi] {
                        for k in 0..2 {
                            if eval(t, r - 1.0, k).abs() >= eps || eval(t, -(r - 1.0), k).abs() >= eps {
                                break 'outer;
                            }
                        }
                    }
                    r -= 1.0;
                }
                r
            }
        }
    }

    fn fit_constants(&self, l2_max: usize) -> Vec<Vec<f64>> {
        let mut table = vec![vec![0.0; l2_max + 1], vec![0.0; l2_max + 1]];
        for l1 in 0..2usize {
            for l2 in 0..=l2_max {
                let mut sup: f64 = 0.0;
                for it in 0..5 {
                    let t = -1.0 + 0.5 * it as f64;
                    for ix in 0..2001 {
                        let x = -50.0 + 0.05 * ix as f64;
                        let v = self.eval_t(t, x, l1, l2).unwrap_or(0.0).abs();
                        let w = (1.0 + x.abs()).powf(self.rho + (l1 + l2) as f64);
                        sup = sup.max(v * w);
                    }
                }
                table[l1][l2] = sup * 1.5;
            }
        }
        table
    }
}

/// Soliton from the parameter ratio `a c = 12 b^2 gamma = 3 d`:
/// amplitude `c = 12 b^2 gamma / a_nl`, speed `d = 4 b^2 gamma`.
pub fn soliton_from_ratio(a_nl: f64, gamma: f64, b_w: f64, x0: f64) -> Result<CoefficientModel> {
    if a_nl == 0.0 {
        return Err(Error::ZeroNonlinearity);
    }
    let c = 12.0 * b_w * b_w * gamma / a_nl;
    let s = 4.0 * b_w * b_w * gamma;
    Ok(CoefficientModel::soliton(c, b_w, s, x0, a_nl, gamma, 0.25))
}

/// Sample the decay inequality of the declared constants; reports the worst
/// ratio per derivative pair.
pub fn verify_decay(
    model: &CoefficientModel,
    t_samples: &[f64],
    x_samples: &[f64],
    l2_max: usize,
) -> DecayReport {
    let mut ratios = Vec::new();
    let mut pass = true;
    for l1 in 0..2usize {
        for l2 in 0..=l2_max {
            let c = model
                .constants
                .get(l1)
                .and_then(|row| row.get(l2))
                .copied()
                .unwrap_or(0.0);
            let mut worst: f64 = 0.0;
            for &t in t_samples {
                for &x in x_samples {
                    let v = model.eval_t(t, x, l1, l2).unwrap_or(f64::INFINITY).abs();
                    let bound = c * (1.0 + x.abs()).powf(-model.rho - (l1 + l2) as f64);
                    let ratio = if v == 0.0 {
                        0.0
                    } else if bound == 0.0 {
                        f64::INFINITY
                    } else {
                        v / bound
                    };
                    worst = worst.max(ratio);
                }
            }
            if worst > 1.0 {
                pass = false;
            }
            ratios.push(((l1, l2), worst));
        }
    }
    DecayReport {
        ratios,
        sample_count: t_samples.len() * x_samples.len(),
        pass,
    }
}

/// Sup-norm of `f_t + a_nl f f_x + gamma f_xxx` on the grid, with spectral
/// x-derivatives and the travelling-wave identity `f_t = -speed f_x`.
pub fn kdv_residual(model: &CoefficientModel, grid: &std::sync::Arc<Grid1D>, t: f64) -> Result<f64> {
    let CoefficientKind::Soliton {
        speed, a_nl, gamma, ..
    } = model.kind
    else {
        return Err(Error::NotASoliton);
    };
    let f = ComplexField::from_fn(grid.clone(), |x| {
        Complex64::new(model.eval(t, x, 0).unwrap(), 0.0)
    })?;
    let fx = apply_multiplier(&f, |eta| Complex64::new(0.0, eta))?;
    let fxxx = apply_multiplier(&f, |eta| Complex64::new(0.0, -eta * eta * eta))?;
    let mut sup: f64 = 0.0;
    for ((u, ux), uxxx) in f.samples().iter().zip(fx.samples()).zip(fxxx.samples()) {
        let r = (a_nl * u.re - speed) * ux.re + gamma * uxxx.re;
        sup = sup.max(r.abs());
    }
    Ok(sup)
}
