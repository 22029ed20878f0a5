//! The Gelfand-Graev Gamma function `Γ_q^(n)(z) = (1 − q^{z−n}) / (1 − q^{−z})`.
//!
//! Simple poles sit on `(2πi / ln q) Z`, zeros on `n + (2πi / ln q) Z`, and
//! `Γ(z) Γ(n − z) = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::cmath::{expm1, qpow};
use crate::error::{Error, Result};
use crate::field::{sphere_character_integral_f64, FieldParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaConfig {
    /// Minimum admissible `|z ln q mod 2πi|`.
    pub pole_eps: f64,
    /// Absolute target for the crown-sum oracle.
    pub tol: f64,
    /// Maximal number of crowns in the oracle.
    pub budget: usize,
}

impl Default for GammaConfig {
    fn default() -> Self {
        GammaConfig { pole_eps: 1e-8, tol: 1e-13, budget: 20_000 }
    }
}

/// `|w mod 2πi|` with the imaginary part reduced to `(−π, π]`.
pub fn lattice_distance(w: Complex64) -> f64 {
    let im = w.im - 2.0 * PI * (w.im / (2.0 * PI)).round();
    Complex64::new(w.re, im).norm()
}

/// Distance of `z ln q` from the pole lattice `2πiZ`.
pub fn pole_distance(z: Complex64, params: &FieldParams) -> f64 {
    lattice_distance(z * params.qf().ln())
}

/// Distance of `(z − n) ln q` from `2πiZ`; zero exactly on the zero set.
pub fn zero_distance(z: Complex64, params: &FieldParams) -> f64 {
    lattice_distance((z - params.nf()) * params.qf().ln())
}

pub fn gamma_qn(z: Complex64, params: &FieldParams, cfg: &GammaConfig) -> Result<Complex64> {
    if pole_distance(z, params) < cfg.pole_eps {
        return Err(Error::Pole(format!("z = {z}")));
    }
    let lnq = params.qf().ln();
    let num = -expm1((z - params.nf()) * lnq);
    let den = -expm1(-z * lnq);
    Ok(num / den)
}

/// `|Γ(z) Γ(n − z) − 1|`
pub fn reflection_defect(z: Complex64, params: &FieldParams, cfg: &GammaConfig) -> Result<f64> {
    let a = gamma_qn(z, params, cfg)?;
    let b = gamma_qn(params.nf() - z, params, cfg)?;
    Ok((a * b - 1.0).norm())
}

/// `Γ(z)` as the improper integral `∫ ‖x‖^{z−n} χ(u·x) dx` with `‖u‖ = 1`,
/// summed crown by crown from the sphere-character integrals.
///
/// Only the crowns `k ≥ −1` contribute. The partial sum stops once the tail
/// bound `(1 − q^{−n}) q^{−(K+1)Re z} / (1 − q^{−Re z})` drops below `tol`;
/// the geometric tail is then added in closed form.
pub fn gamma_via_integral(z: Complex64, params: &FieldParams, cfg: &GammaConfig) -> Result<Complex64> {
    if !(z.re > 0.0) {
        return Err(Error::Domain(format!("integral representation needs Re z > 0, got {z}")));
    }
    let q = params.qf();
    let shrink = q.powf(-z.re);
    let lead = 1.0 - q.powf(-params.nf());
    let zn = z - params.nf();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut bound = f64::INFINITY;
    for k in -1..cfg.budget as i64 {
        let weight = sphere_character_integral_f64(k, Some(0), params);
        sum += qpow(q, -zn * k as f64) * weight;
        if k >= 0 {
            bound = lead * shrink.powf((k + 1) as f64) / (1.0 - shrink);
            if bound < cfg.tol {
                let ratio = qpow(q, -z);
                let tail = qpow(q, -z * (k + 1) as f64) * lead / (Complex64::new(1.0, 0.0) - ratio);
                return Ok(sum + tail);
            }
        }
    }
    Err(Error::BudgetExceeded { tol: cfg.tol, budget: cfg.budget, bound })
}
