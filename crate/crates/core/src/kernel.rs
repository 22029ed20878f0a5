//! The complex-time heat kernel `K_z(x) = ∫ e^{−z‖ξ‖^α} χ(x·ξ) dξ`.
//!
//! Three evaluators, each returning a value together with a rigorous bound
//! on the discarded tail:
//!
//! * [`kernel_exp_form`]: telescoped differences of exponentials, the
//!   production route;
//! * [`kernel_series`]: the factorial series in `z`, valid only for small
//!   `|z|‖x‖^{−α}`;
//! * [`kernel_crown_sum`]: the crown sum of the defining integral.

use std::f64::consts::PI;

use num_complex::Complex64;
use rug::ops::Pow;
use rug::Float;

use crate::cmath::expm1;
use crate::error::{Error, Result};
use crate::field::{sphere_character_integral_f64, FieldParams};
use crate::par::Exec;
use crate::radial::{InnerTail, RadialProfile};

/// A time with strictly positive real part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexTime(Complex64);

impl ComplexTime {
    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.re > 0.0) || !z.is_finite() {
            return Err(Error::Domain(format!("complex time needs Re z > 0, got {z}")));
        }
        Ok(ComplexTime(z))
    }

    pub fn real(t: f64) -> Result<Self> {
        Self::new(Complex64::new(t, 0.0))
    }

    pub fn polar(r: f64, theta: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(r, theta))
    }

    pub fn z(self) -> Complex64 {
        self.0
    }

    pub fn conj(self) -> Self {
        ComplexTime(self.0.conj())
    }

}

impl std::ops::Add for ComplexTime {
    type Output = ComplexTime;

    fn add(self, other: Self) -> Self {
        ComplexTime(self.0 + other.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEvalConfig {
    /// Maximal number of terms or crowns summed by any evaluator.
    pub tail_budget: usize,
    /// Absolute tail target.
    pub tol: f64,
    /// Relative tail target; a sum also stops once its tail bound is below
    /// `rel_tol · |partial sum|`.
    pub rel_tol: f64,
    /// Largest `|z|‖x‖^{−α}` accepted by the factorial series.
    pub series_switch: f64,
    /// The factorial series fails when `ε · max term · terms` exceeds this
    /// fraction of the result.
    pub cancellation_rel: f64,
    /// Target for the discarded mass in L¹ norms and auto-sized windows.
    pub mass_tol: f64,
}

impl Default for KernelEvalConfig {
    fn default() -> Self {
        KernelEvalConfig {
            tail_budget: 4096,
            tol: 1e-300,
            rel_tol: 1e-15,
            series_switch: 8.0,
            cancellation_rel: 1e-11,
            mass_tol: 1e-13,
        }
    }
}

impl KernelEvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.tail_budget < 8 || !(self.rel_tol >= 0.0) {
            return Err(Error::InvalidParams("kernel config needs tol > 0 and tail_budget ≥ 8".into()));
        }
        Ok(())
    }

    fn done(&self, bound: f64, sum: Complex64) -> bool {
        bound <= self.tol || bound <= self.rel_tol * sum.norm()
    }
}

/// Evaluated sum with a bound on the remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    pub tail_bound: f64,
    pub terms: usize,
}

fn norm_x(params: &FieldParams, k_x: i64) -> f64 {
    params.qpow(-(k_x as f64))
}

/// `K_z(x)` on `‖x‖ = q^{−k_x}` as `Σ_{l≥0} q^{−ln}‖x‖^{−n}(e^{−q^{−lα}w} − e^{−q^{(1−l)α}w})`
/// with `w = z‖x‖^{−α}`.
pub fn kernel_exp_form(z: ComplexTime, k_x: i64, params: &FieldParams, cfg: &KernelEvalConfig) -> Result<KernelValue> {
    let (q, n, a) = (params.qf(), params.nf(), params.alpha());
    let xn = norm_x(params, k_x);
    let scale = xn.powf(-n);
    let w = z.0 * xn.powf(-a);
    let qa = q.powf(a);
    let (rn, rna) = (q.powf(-n), q.powf(-(n + a)));
    let mut sum = Complex64::new(0.0, 0.0);
    let mut bound = f64::INFINITY;
    for l in 0..cfg.tail_budget {
        let lf = l as f64;
        let u_prev = w * q.powf((1.0 - lf) * a);
        let gap = w * q.powf(-lf * a) * (qa - 1.0);
        let diff = if gap.norm() < 1.0 {
            // e^{−u_l} − e^{−u_{l−1}} = e^{−u_{l−1}} (e^{u_{l−1} − u_l} − 1)
            (-u_prev).exp() * expm1(gap)
        } else {
            (gap - u_prev).exp() - (-u_prev).exp()
        };
        sum += diff * (q.powf(-lf * n) * scale);
        let next = lf + 1.0;
        bound = scale
            * (2.0 * rn.powf(next) / (1.0 - rn)).min(w.norm() * (qa - 1.0) * rna.powf(next) / (1.0 - rna));
        if cfg.done(bound, sum) {
            return Ok(KernelValue { value: sum, tail_bound: bound, terms: l + 1 });
        }
    }
    Err(Error::BudgetExceeded { tol: cfg.tol, budget: cfg.tail_budget, bound })
}

/// `K_z(x) = Σ_{k≥1} (−z)^k / k! · Γ(kα + n) / ‖x‖^{kα+n}`.
///
/// The terms grow like `(|w| q^α)^k / k!` before the factorial wins, so the
/// partial sums are carried in MPFR with enough bits to absorb that growth.
pub fn kernel_series(z: ComplexTime, k_x: i64, params: &FieldParams, cfg: &KernelEvalConfig) -> Result<KernelValue> {
    let (q, a) = (params.qf(), params.alpha());
    let xn = norm_x(params, k_x);
    let w = z.0 * xn.powf(-a);
    if w.norm() > cfg.series_switch {
        return Err(Error::Cancellation(format!(
            "|z|·‖x‖^-α = {:.3e} exceeds the series switch {}",
            w.norm(),
            cfg.series_switch
        )));
    }
    let growth = w.norm() * q.powf(a);
    let bits = 128 + (2.0 * growth) as u32;
    let first = series_mp(z, k_x, params, cfg, bits)?;
    let noise = 2f64.powi(-(bits as i32)) * first.max_term * first.value.terms as f64;
    if noise <= cfg.cancellation_rel * first.value.value.norm() {
        return Ok(first.value);
    }
    let second = series_mp(z, k_x, params, cfg, 2 * bits)?;
    let noise = 2f64.powi(-(2 * bits as i32)) * second.max_term * second.value.terms as f64;
    if noise > cfg.cancellation_rel * second.value.value.norm() {
        return Err(Error::Cancellation(format!(
            "largest term {:.3e} against result {:.3e}",
            second.max_term,
            second.value.value.norm()
        )));
    }
    Ok(second.value)
}

struct SeriesRun {
    value: KernelValue,
    max_term: f64,
}

fn series_mp(z: ComplexTime, k_x: i64, params: &FieldParams, cfg: &KernelEvalConfig, bits: u32) -> Result<SeriesRun> {
    let (q, n, a) = (params.qf(), params.nf(), params.alpha());
    let f = |v: f64| Float::with_val(bits, v);
    let qm = f(q);
    let qa = qm.clone().pow(&f(a));
    let qx = qm.clone().pow(&f(k_x as f64)); // ‖x‖^{-1}
    let inv_xa = qx.clone().pow(&f(a));
    let scale = qx.pow(&f(n));
    let q_minus_n = qm.pow(&f(-n));
    // −w = −z ‖x‖^{−α}
    let (mut wr, mut wi) = (f(-z.0.re), f(-z.0.im));
    wr *= &inv_xa;
    wi *= &inv_xa;
    let mut pr = scale.clone();
    let mut pi = f(0.0);
    let mut qka = f(1.0);
    let mut qkan = q_minus_n.clone();
    let (mut sr, mut si) = (f(0.0), f(0.0));
    let growth = z.0.norm() * params.qpow(k_x as f64 * a) * q.powf(a);
    let scale_f = scale.to_f64();
    let gamma_bound = 1.0 / (1.0 - q.powf(-(n + a)));
    let mut mag = 1.0f64;
    let mut max_term = 0.0f64;
    let mut bound = f64::INFINITY;
    for k in 1..=cfg.tail_budget {
        let kf = k as f64;
        // p ← p · (−w) / k
        let nr = Float::with_val(bits, &pr * &wr) - Float::with_val(bits, &pi * &wi);
        let ni = Float::with_val(bits, &pr * &wi) + Float::with_val(bits, &pi * &wr);
        pr = nr / kf;
        pi = ni / kf;
        qka *= &qa;
        qkan /= &qa;
        // Γ(kα + n) = (1 − q^{kα}) / (1 − q^{−kα−n})
        let g = (f(1.0) - &qka) / (f(1.0) - &qkan);
        let tr = Float::with_val(bits, &pr * &g);
        let ti = Float::with_val(bits, &pi * &g);
        max_term = max_term.max(Complex64::new(tr.to_f64(), ti.to_f64()).norm());
        sr += &tr;
        si += &ti;
        mag *= growth / kf;
        if kf + 2.0 > growth {
            let next = mag * growth / (kf + 1.0);
            bound = scale_f * gamma_bound * next / (1.0 - growth / (kf + 2.0));
            let sum = Complex64::new(sr.to_f64(), si.to_f64());
            if cfg.done(bound, sum) {
                return Ok(SeriesRun { value: KernelValue { value: sum, tail_bound: bound, terms: k }, max_term });
            }
        }
    }
    Err(Error::BudgetExceeded { tol: cfg.tol, budget: cfg.tail_budget, bound })
}

/// `K_z(x) = (1 − q^{−n}) Σ_{k≥n0} e^{−zq^{−kα}} q^{−kn} − e^{−zq^α/‖x‖^α}‖x‖^{−n}`
/// for `‖x‖ = q^{n0}`, summed over Fourier crowns `k ≥ n0 − 1` with weights
/// taken from the sphere-character integrals.
pub fn kernel_crown_sum(z: ComplexTime, k_x: i64, params: &FieldParams, cfg: &KernelEvalConfig) -> Result<KernelValue> {
    let n0 = -k_x;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut bound = f64::INFINITY;
    for (i, k) in ((n0 - 1)..).take(cfg.tail_budget).enumerate() {
        let weight = sphere_character_integral_f64(k, Some(n0), params);
        sum += (-z.0 * params.eigenvalue(k)).exp() * weight;
        bound = params.ball(k + 1);
        if i > 0 && cfg.done(bound, sum) {
            return Ok(KernelValue { value: sum, tail_bound: bound, terms: i + 1 });
        }
    }
    Err(Error::BudgetExceeded { tol: cfg.tol, budget: cfg.tail_budget, bound })
}

/// `K_z(0) = (1 − q^{−n}) Σ_{k∈Z} e^{−zq^{−kα}} q^{−kn}`, summed outward from
/// `k = 0` in both directions.
pub fn kernel_at_zero(z: ComplexTime, params: &FieldParams, cfg: &KernelEvalConfig) -> Result<KernelValue> {
    let (q, n, a) = (params.qf(), params.nf(), params.alpha());
    let term = |k: i64| (-z.0 * params.eigenvalue(k)).exp() * params.sphere(k);
    let re = z.0.re;
    // outer side k = −m < 0: |term| = e^{−Re z q^{mα}} q^{mn}(1 − q^{−n}); once the
    // ratio of consecutive moduli is below 1/2 the remainder is at most twice the next term
    let ratio = |m: f64| q.powf(n) * (-re * q.powf(m * a) * (q.powf(a) - 1.0)).exp();
    let modulus = |m: f64| (-re * q.powf(m * a)).exp() * q.powf(m * n) * (1.0 - q.powf(-n));
    let mut sum = term(0);
    let mut terms = 1;
    // inner side k > 0: remainder after k is μ(G_{k+1})
    let (mut k, mut inner_bound) = (0i64, params.ball(1));
    let (mut m, mut outer_bound) = (0i64, f64::INFINITY);
    // extend whichever side has the larger remainder until the total is small
    while !cfg.done(inner_bound + outer_bound, sum) {
        if terms >= cfg.tail_budget {
            return Err(Error::BudgetExceeded { tol: cfg.tol, budget: cfg.tail_budget, bound: inner_bound + outer_bound });
        }
        if outer_bound >= inner_bound {
            m += 1;
            sum += term(-m);
            let r = ratio(m as f64 + 1.0);
            if r <= 0.5 {
                outer_bound = modulus(m as f64 + 1.0) / (1.0 - r);
            }
        } else {
            k += 1;
            sum += term(k);
            inner_bound = params.ball(k + 1);
        }
        terms += 1;
    }
    let bound = inner_bound + outer_bound;
    Ok(KernelValue { value: sum, tail_bound: bound, terms })
}

/// Production evaluator: exponential-difference form, or the two-sided
/// crown sum at `x = 0` (`k_x = None`).
pub fn kernel_value(z: ComplexTime, k_x: Option<i64>, params: &FieldParams, cfg: &KernelEvalConfig) -> Result<KernelValue> {
    match k_x {
        Some(k) => kernel_exp_form(z, k, params, cfg),
        None => kernel_at_zero(z, params, cfg),
    }
}

/// Pointwise envelope `|K_z(x)| ≤ |z|(q^α − 1)/(1 − q^{−(n+α)}) · ‖x‖^{−α−n}`.
pub fn outer_envelope_constant(z: ComplexTime, params: &FieldParams) -> f64 {
    let (q, n, a) = (params.qf(), params.nf(), params.alpha());
    z.0.norm() * (q.powf(a) - 1.0) / (1.0 - q.powf(-(n + a)))
}

/// Bound on `Σ_{k<kmin} sup|K_z| μ(S_k)` from the outer envelope.
pub fn outer_mass_bound(z: ComplexTime, kmin: i64, params: &FieldParams) -> f64 {
    let (q, n, a) = (params.qf(), params.nf(), params.alpha());
    // Σ_{k<kmin} q^{k(α+n)} q^{−kn}(1 − q^{−n}) = (1 − q^{−n}) q^{(kmin−1)α} / (1 − q^{−α})
    outer_envelope_constant(z, params) * (1.0 - q.powf(-n)) * q.powf((kmin - 1) as f64 * a) / (1.0 - q.powf(-a))
}

/// Flat interior bound `|K_z(x)| ≤ K_{Re z}(0)`.
pub fn flat_bound(z: ComplexTime, params: &FieldParams, cfg: &KernelEvalConfig) -> Result<f64> {
    let v = kernel_at_zero(ComplexTime(Complex64::new(z.0.re, 0.0)), params, cfg)?;
    Ok(v.value.re + v.tail_bound)
}

/// Crown window outside of which the kernel carries less than `mass_tol`
/// mass (in L¹) on either side.
pub fn kernel_window(z: ComplexTime, params: &FieldParams, cfg: &KernelEvalConfig) -> Result<(i64, i64)> {
    let (q, n, a) = (params.qf(), params.nf(), params.alpha());
    let flat = flat_bound(z, params, cfg)?;
    let tol = cfg.mass_tol;
    // inner: flat · q^{−(kmax+1)n} ≤ tol
    let kmax = ((flat / tol).ln() / (n * q.ln())).ceil() as i64;
    // outer: E (1 − q^{−n}) q^{(kmin−1)α} / (1 − q^{−α}) ≤ tol
    let c = outer_envelope_constant(z, params) * (1.0 - q.powf(-n)) / (1.0 - q.powf(-a));
    let kmin = ((tol / c).ln() / (a * q.ln())).floor() as i64 + 1;
    let kmin = kmin.min(kmax);
    Ok((kmin, kmax.max(kmin)))
}

/// Kernel restricted to a finite crown window.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelProfile {
    /// Crown values on the window; inner tail left `Zero`.
    pub profile: RadialProfile,
    pub center: Complex64,
    /// Bound on `|K_z|` integrated over the crowns inside the window.
    pub inner_mass_bound: f64,
    /// Bound on `|K_z|` integrated over the crowns outside the window.
    pub outer_mass_bound: f64,
}

impl KernelProfile {
    /// `∫ K_z` estimated as window mass plus `K_z(0) μ(G_{kmax+1})`; the
    /// neglected outer mass is at most `outer_mass_bound`.
    pub fn mass(&self) -> Complex64 {
        let p = self.profile.params();
        self.profile.improper_integral() + self.center * p.ball(self.profile.kmax() + 1)
    }
}

pub fn kernel_profile(
    z: ComplexTime,
    window: (i64, i64),
    params: &FieldParams,
    cfg: &KernelEvalConfig,
) -> Result<KernelProfile> {
    let (kmin, kmax) = window;
    if kmax < kmin {
        return Err(Error::InvalidParams(format!("empty window [{kmin}, {kmax}]")));
    }
    let coeffs = (kmin..=kmax)
        .map(|k| kernel_exp_form(z, k, params, cfg).map(|v| v.value))
        .collect::<Result<Vec<_>>>()?;
    let profile = RadialProfile::new(*params, kmin, coeffs, InnerTail::Zero)?;
    let center = kernel_at_zero(z, params, cfg)?.value;
    Ok(KernelProfile {
        profile,
        center,
        inner_mass_bound: flat_bound(z, params, cfg)? * params.ball(kmax + 1),
        outer_mass_bound: outer_mass_bound(z, kmin, params),
    })
}

/// L¹ norms of `K_z` and of its radially decreasing majorant.
///
/// Both are summed exactly on the window from [`kernel_window`]; the true
/// values lie in `[l1, l1 + tail_bound]` and `[majorant_l1, majorant_l1 + tail_bound]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Norms {
    pub l1: f64,
    pub majorant_l1: f64,
    pub tail_bound: f64,
}

pub fn kernel_l1_norm(z: ComplexTime, params: &FieldParams, cfg: &KernelEvalConfig) -> Result<L1Norms> {
    let window = kernel_window(z, params, cfg)?;
    let kp = kernel_profile(z, window, params, cfg)?;
    let l1 = kp.profile.lp_norm(1.0)?;
    let majorant_l1 = kp.profile.majorant().lp_norm(1.0)?;
    // the majorant's inner tail stays below the flat bound as well
    let flat = flat_bound(z, params, cfg)?;
    let tail_bound = kp.outer_mass_bound + flat * params.ball(window.1 + 1);
    Ok(L1Norms { l1, majorant_l1, tail_bound })
}

/// `|K_z(x)| · [(Re z)^{1/α} + ‖x‖]^{α+n} / |z|`
pub fn bound_ratio(z: ComplexTime, k_x: i64, params: &FieldParams, cfg: &KernelEvalConfig) -> Result<f64> {
    let k = kernel_exp_form(z, k_x, params, cfg)?.value.norm();
    Ok(bound_ratio_from(z, k_x, k, params))
}

fn bound_ratio_from(z: ComplexTime, k_x: i64, abs_k: f64, params: &FieldParams) -> f64 {
    let (n, a) = (params.nf(), params.alpha());
    let radius = z.0.re.powf(1.0 / a) + norm_x(params, k_x);
    abs_k * radius.powf(a + n) / z.0.norm()
}

/// `‖K_z‖₁ · Re z / |z|`
pub fn l1_ratio(z: ComplexTime, params: &FieldParams, cfg: &KernelEvalConfig) -> Result<f64> {
    let norms = kernel_l1_norm(z, params, cfg)?;
    Ok((norms.l1 + norms.tail_bound) * z.0.re / z.0.norm())
}

/// Sector grid: `args` angles and `mods` radii, ordered angle-major.
pub fn sector_grid(args: &[f64], mods: &[f64]) -> Vec<ComplexTime> {
    args.iter()
        .flat_map(|&t| mods.iter().map(move |&r| ComplexTime(Complex64::from_polar(r, t))))
        .filter(|z| z.0.re > 0.0)
        .collect()
}

pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    (0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect()
}

pub fn logspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), count).into_iter().map(f64::exp).collect()
}

/// The standard sweep: 15 angles in `[−1.4, 1.4]`, 9 radii in `[1e−2, 1e2]`,
/// `k_x ∈ [−4, 4]`.
pub fn standard_sweep_grid() -> (Vec<ComplexTime>, Vec<i64>) {
    (sector_grid(&linspace(-1.4, 1.4, 15), &logspace(1e-2, 1e2, 9)), (-4..=4).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub q: u32,
    pub n: u32,
    pub alpha: f64,
    pub z: Complex64,
    pub k_x: i64,
    pub abs_k: f64,
    pub bound_ratio: f64,
    pub l1_ratio: f64,
}

pub const SWEEP_HEADER: &str = "q,n,alpha,re_z,im_z,k_x,abs_K,bound_ratio,l1_ratio";

impl SweepRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{:e},{:e},{},{:e},{:e},{:e}",
            self.q, self.n, self.alpha, self.z.re, self.z.im, self.k_x, self.abs_k, self.bound_ratio, self.l1_ratio
        )
    }
}

/// One row per `(z, k_x)`, ordered by `z` then `k_x` whatever the policy.
pub fn kernel_sweep(
    params: &FieldParams,
    times: &[ComplexTime],
    kxs: &[i64],
    cfg: &KernelEvalConfig,
    exec: Exec,
) -> Result<Vec<SweepRow>> {
    let blocks = exec.map(times, |&z| -> Result<Vec<SweepRow>> {
        let l1 = l1_ratio(z, params, cfg)?;
        kxs.iter()
            .map(|&k_x| {
                let abs_k = kernel_exp_form(z, k_x, params, cfg)?.value.norm();
                Ok(SweepRow {
                    q: params.q(),
                    n: params.n(),
                    alpha: params.alpha(),
                    z: z.0,
                    k_x,
                    abs_k,
                    bound_ratio: bound_ratio_from(z, k_x, abs_k, params),
                    l1_ratio: l1,
                })
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(times.len() * kxs.len());
    for b in blocks {
        rows.extend(b?);
    }
    Ok(rows)
}

/// The three-way agreement grid: `arg z ∈ {0, ±π/3}`, `|z| ∈ {0.1, 1, 10}`,
/// `k_x ∈ [−2, 2]`.
pub fn agreement_grid() -> (Vec<ComplexTime>, Vec<i64>) {
    (sector_grid(&[-PI / 3.0, 0.0, PI / 3.0], &[0.1, 1.0, 10.0]), (-2..=2).collect())
}
