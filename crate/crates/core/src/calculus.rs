//! Functional calculus of `D^α` on radial profiles.
//!
//! Everything acts on the Fourier diagonal: crown `j` of `ĝ` is multiplied by
//! `m(λ_j)` with `λ_j = q^{−jα}`. Profiles must be mean zero, so that `ĝ` has
//! finite support away from the origin and every output is again a finite
//! profile.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::kernel::{logspace, ComplexTime};
use crate::par::Exec;
use crate::radial::{Direction, InnerTail, RadialProfile};
use crate::vilenkin::instance_rng;

/// Relative size of `∫g` against `‖g‖₁` below which the zero-frequency
/// coefficient is treated as rounding noise.
pub const MASS_TOL: f64 = 1e-12;

/// Default relative standoff of the resolvent from the spectrum.
pub const DEFAULT_STANDOFF: f64 = 1e-6;

/// `|f(z)| ≤ c · min(|z|^s, |z|^{−s})` on the sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayCertificate {
    pub s: f64,
    pub c: f64,
}

#[derive(Clone)]
pub struct SymbolFunction {
    name: String,
    eval: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
    decay: DecayCertificate,
    sector_angle: f64,
}

impl std::fmt::Debug for SymbolFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymbolFunction")
            .field("name", &self.name)
            .field("decay", &self.decay)
            .field("sector_angle", &self.sector_angle)
            .finish()
    }
}

impl SymbolFunction {
    /// Checks the certificate on the rays `arg z = ±θ` and on the positive
    /// axis, at 161 radii in `[1e−8, 1e8]`.
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        decay: DecayCertificate,
        sector_angle: f64,
    ) -> Result<Self> {
        let name = name.into();
        if !(sector_angle > 0.0 && sector_angle < PI) {
            return Err(Error::InvalidParams(format!("sector angle {sector_angle} outside (0, π)")));
        }
        if !(decay.s > 0.0 && decay.c > 0.0) {
            return Err(Error::InvalidParams(format!("decay certificate {decay:?} must be positive")));
        }
        for &r in &logspace(1e-8, 1e8, 161) {
            for theta in [-sector_angle, 0.0, sector_angle] {
                let v = eval(Complex64::from_polar(r, theta)).norm();
                let bound = decay.c * r.powf(decay.s).min(r.powf(-decay.s));
                if !(v <= bound * (1.0 + 1e-9)) {
                    return Err(Error::InvalidParams(format!(
                        "{name}: |f| = {v:e} exceeds the certified {bound:e} at r = {r:e}, arg = {theta}"
                    )));
                }
            }
        }
        Ok(SymbolFunction { name, eval: Arc::new(eval), decay, sector_angle })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn decay(&self) -> DecayCertificate {
        self.decay
    }

    pub fn sector_angle(&self) -> f64 {
        self.sector_angle
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.eval)(z)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let inner = self.eval.clone();
        SymbolFunction {
            name: format!("{}*{c}", self.name),
            eval: Arc::new(move |z| c * inner(z)),
            decay: DecayCertificate { s: self.decay.s, c: self.decay.c * c.norm().max(f64::MIN_POSITIVE) },
            sector_angle: self.sector_angle,
        }
    }

    /// `z/(1+z)²` on `Σ_{1.5}`.
    pub fn bump() -> Self {
        Self::new("z/(1+z)^2", |z| z / ((1.0 + z) * (1.0 + z)), DecayCertificate { s: 1.0, c: 1.0 }, 1.5)
            .expect("certified")
    }

    /// `z^{1/2}/(1+z)` on `Σ_{1.5}`.
    pub fn sqrt_bump() -> Self {
        Self::new("z^(1/2)/(1+z)", |z| z.sqrt() / (1.0 + z), DecayCertificate { s: 0.5, c: 1.0 }, 1.5)
            .expect("certified")
    }

    /// `z/(1+z²)` on `Σ_{1.2}`; its poles at `±i` lie outside.
    pub fn lorentz() -> Self {
        Self::new("z/(1+z^2)", |z| z / (1.0 + z * z), DecayCertificate { s: 1.0, c: 2.5 }, 1.2)
            .expect("certified")
    }
}

/// Random profile on crowns `[kmin, kmax]` with `∫g = 0`: uniform complex
/// coefficients, the outermost crown chosen to cancel the mass.
pub fn random_mean_zero_profile<R: Rng>(params: &FieldParams, kmin: i64, kmax: i64, rng: &mut R) -> RadialProfile {
    assert!(kmax > kmin, "need at least two crowns");
    let inner: Vec<Complex64> = (kmin + 1..=kmax)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let mass: Complex64 = inner.iter().enumerate().map(|(i, c)| c * params.sphere(kmin + 1 + i as i64)).sum();
    let mut coeffs = vec![-mass / params.sphere(kmin)];
    coeffs.extend(inner);
    RadialProfile::new(*params, kmin, coeffs, InnerTail::Zero).expect("finite coefficients")
}

/// `ĝ` with the zero-frequency tail removed; errors if `∫g` is not negligible.
pub fn spectrum(g: &RadialProfile) -> Result<RadialProfile> {
    let hat = g.fourier(Direction::Forward);
    let mass = hat.inner_tail().value().norm();
    let scale = g.lp_norm(1.0)?;
    // subnormal masses arise from profiles that have underflowed to zero
    if mass > (MASS_TOL * scale).max(f64::MIN_POSITIVE) {
        return Err(Error::ZeroFrequencyMass(mass));
    }
    RadialProfile::new(*hat.params(), hat.kmin(), hat.coeffs().to_vec(), InnerTail::Zero)
}

fn from_spectrum(hat: &RadialProfile) -> RadialProfile {
    hat.fourier(Direction::Inverse)
}

fn eigenvalue_window(hat: &RadialProfile) -> (f64, f64) {
    let p = hat.params();
    let a = p.eigenvalue(hat.kmin());
    let b = p.eigenvalue(hat.kmax());
    (a.min(b), a.max(b))
}

/// Multiplies Fourier crown `j` by `m(λ_j)`.
pub fn apply_multiplier(g: &RadialProfile, m: impl Fn(f64) -> Complex64) -> Result<RadialProfile> {
    let hat = spectrum(g)?;
    Ok(from_spectrum(&multiply(&hat, m)))
}

fn multiply(hat: &RadialProfile, m: impl Fn(f64) -> Complex64) -> RadialProfile {
    let p = *hat.params();
    let coeffs = hat
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, &c)| if c == Complex64::new(0.0, 0.0) { c } else { c * m(p.eigenvalue(hat.kmin() + i as i64)) })
        .collect();
    RadialProfile::new(p, hat.kmin(), coeffs, InnerTail::Zero).expect("finite multiplier")
}

/// `R(z, D^α) g = (z − D^α)^{−1} g`.
///
/// Fails when `z = 0` or `|z − λ| ≤ standoff · λ` for an eigenvalue `λ` on
/// the Fourier window of `g`.
pub fn resolvent_apply(z: Complex64, g: &RadialProfile, standoff: f64) -> Result<RadialProfile> {
    if z == Complex64::new(0.0, 0.0) || !z.is_finite() {
        return Err(Error::Spectrum(format!("z = {z}")));
    }
    let hat = spectrum(g)?;
    let p = *hat.params();
    for j in hat.kmin()..=hat.kmax() {
        let lam = p.eigenvalue(j);
        if (z - lam).norm() <= standoff * lam {
            return Err(Error::Spectrum(format!("z = {z} (eigenvalue {lam:e} of crown {j})")));
        }
    }
    Ok(from_spectrum(&multiply(&hat, |lam| 1.0 / (z - lam))))
}

/// `f(D^α) g` for a bounded function on the eigenvalues.
pub fn hinf_apply_direct(f: impl Fn(f64) -> Complex64, g: &RadialProfile) -> Result<RadialProfile> {
    apply_multiplier(g, f)
}

/// `T_z g = e^{−z D^α} g`.
pub fn semigroup_apply(z: ComplexTime, g: &RadialProfile) -> Result<RadialProfile> {
    let z = z.z();
    apply_multiplier(g, |lam| (-z * lam).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourConfig {
    /// Half-angle of the contour `∂Σ_ν`.
    pub nu: f64,
    pub nodes_per_decade: usize,
    /// `None` selects `[λ_min/100, λ_max·100]`, widened until the neglected
    /// ends of both rays are below `tol` by the decay certificate.
    pub radius_range: Option<(f64, f64)>,
    /// Accepted change under node doubling, relative to `c · ‖g‖₂`.
    pub tol: f64,
    pub max_nodes_per_decade: usize,
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig { nu: 0.5, nodes_per_decade: 16, radius_range: None, tol: 1e-9, max_nodes_per_decade: 1024 }
    }
}

impl ContourConfig {
    pub fn with_nu(nu: f64) -> Self {
        ContourConfig { nu, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourResult {
    pub profile: RadialProfile,
    /// L² change between the last two node counts.
    pub error_estimate: f64,
    pub nodes_per_decade: usize,
    pub radius_range: (f64, f64),
}

pub fn contour_radius_range(f: &SymbolFunction, lam_min: f64, lam_max: f64, tol: f64) -> (f64, f64) {
    let DecayCertificate { s, .. } = f.decay();
    // ∫_0^r c ρ^s / (λ/2) dρ / π ≤ tol c  and  ∫_R^∞ c ρ^{−s} (2/ρ) dρ / π ≤ tol c
    let r_min = (tol * PI * (s + 1.0) * lam_min / 2.0).powf(1.0 / (s + 1.0));
    let r_max = (2.0 / (tol * PI * s)).powf(1.0 / s);
    ((lam_min / 100.0).min(r_min), (lam_max * 100.0).max(r_max))
}

/// `(1/2πi) ∫_{∂Σ_ν} f(z) (z − λ)^{−1} dz` for each `λ`, the contour running
/// from `∞e^{iν}` through 0 to `∞e^{−iν}`, by the trapezoid rule in `log|z|`.
fn contour_values(f: &SymbolFunction, lams: &[f64], nu: f64, range: (f64, f64), per_decade: usize) -> Vec<Complex64> {
    let (a, b) = (range.0.ln(), range.1.ln());
    let steps = (((b - a) / std::f64::consts::LN_10) * per_decade as f64).ceil().max(1.0) as usize;
    let h = (b - a) / steps as f64;
    let up = Complex64::from_polar(1.0, nu);
    let down = up.conj();
    let mut acc = vec![Complex64::new(0.0, 0.0); lams.len()];
    for i in 0..=steps {
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        let r = (a + h * i as f64).exp();
        let (zu, zd) = (up * r, down * r);
        let (fu, fd) = (f.eval(zu), f.eval(zd));
        for (s, &lam) in acc.iter_mut().zip(lams) {
            *s += w * r * (fd * down / (zd - lam) - fu * up / (zu - lam));
        }
    }
    let scale = h / (2.0 * PI * Complex64::i());
    acc.into_iter().map(|s| s * scale).collect()
}

/// `f(D^α) g` from the Cauchy integral over `∂Σ_ν`, doubling the node count
/// until consecutive results agree to `tol`.
pub fn hinf_apply_contour(f: &SymbolFunction, g: &RadialProfile, cfg: &ContourConfig) -> Result<ContourResult> {
    if !(cfg.nu > 0.0 && cfg.nu < f.sector_angle()) {
        return Err(Error::InvalidParams(format!(
            "contour angle {} outside (0, {})",
            cfg.nu,
            f.sector_angle()
        )));
    }
    if cfg.nodes_per_decade == 0 {
        return Err(Error::InvalidParams("nodes_per_decade must be positive".into()));
    }
    let hat = spectrum(g)?;
    let p = *hat.params();
    let lams: Vec<f64> = (hat.kmin()..=hat.kmax()).map(|j| p.eigenvalue(j)).collect();
    let (lo, hi) = eigenvalue_window(&hat);
    let range = cfg.radius_range.unwrap_or_else(|| contour_radius_range(f, lo, hi, cfg.tol));
    let weight: Vec<f64> = (hat.kmin()..=hat.kmax()).map(|j| p.sphere(j)).collect();
    let norm_hat = hat.lp_norm(2.0)?;
    let target = cfg.tol * f.decay().c * norm_hat;

    let mut nodes = cfg.nodes_per_decade;
    let mut prev = contour_values(f, &lams, cfg.nu, range, nodes);
    loop {
        let next_nodes = nodes * 2;
        let next = contour_values(f, &lams, cfg.nu, range, next_nodes);
        let change = prev
            .iter()
            .zip(&next)
            .zip(hat.coeffs())
            .zip(&weight)
            .map(|(((a, b), c), w)| ((a - b) * c).norm_sqr() * w)
            .sum::<f64>()
            .sqrt();
        if change <= target {
            let out = multiply_by(&hat, &next);
            return Ok(ContourResult {
                profile: from_spectrum(&out),
                error_estimate: change,
                nodes_per_decade: next_nodes,
                radius_range: range,
            });
        }
        if next_nodes >= cfg.max_nodes_per_decade {
            return Err(Error::Quadrature(change));
        }
        prev = next;
        nodes = next_nodes;
    }
}

fn multiply_by(hat: &RadialProfile, factors: &[Complex64]) -> RadialProfile {
    let coeffs = hat.coeffs().iter().zip(factors).map(|(c, m)| c * m).collect();
    RadialProfile::new(*hat.params(), hat.kmin(), coeffs, InnerTail::Zero).expect("finite factors")
}

/// Geometric `t`-grid for the square function, centred on the spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareGrid {
    pub points_per_decade: usize,
    pub decades: usize,
}

impl Default for SquareGrid {
    fn default() -> Self {
        SquareGrid { points_per_decade: 12, decades: 14 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SquareFunctionReport {
    /// `‖(Σ_j |φ(t_j D^α) g|² Δlog t)^{1/2}‖_p`
    pub value: f64,
    /// Share of the first and last grid points in `Σ_j ‖φ(t_j D^α) g‖₂²`.
    pub boundary_fraction: f64,
    /// Set when `boundary_fraction` exceeds 1%.
    pub coverage_warning: bool,
}

pub fn square_function(g: &RadialProfile, phi: &SymbolFunction, grid: SquareGrid, p: f64) -> Result<SquareFunctionReport> {
    if grid.points_per_decade == 0 || grid.decades == 0 {
        return Err(Error::InvalidParams("empty square-function grid".into()));
    }
    let hat = spectrum(g)?;
    let (lo, hi) = eigenvalue_window(&hat);
    let centre = -(lo.log10() + hi.log10()) / 2.0;
    let count = grid.points_per_decade * grid.decades;
    let dlog = std::f64::consts::LN_10 / grid.points_per_decade as f64;
    let start = centre - grid.decades as f64 / 2.0;

    let mut sq: Option<RadialProfile> = None;
    let mut energies = Vec::with_capacity(count);
    for j in 0..count {
        let t = 10f64.powf(start + (j as f64 + 0.5) / grid.points_per_decade as f64);
        let piece = multiply(&hat, |lam| phi.eval(Complex64::new(t * lam, 0.0)));
        energies.push(piece.lp_norm(2.0)?.powi(2));
        let h = from_spectrum(&piece).map(|v| Complex64::new(v.norm_sqr() * dlog, 0.0));
        sq = Some(match sq {
            None => h,
            Some(acc) => acc.add(&h)?,
        });
    }
    let s = sq.expect("non-empty grid").map(|v| Complex64::new(v.re.sqrt(), 0.0));
    let total: f64 = energies.iter().sum();
    let boundary_fraction = if total > 0.0 { (energies[0] + energies[count - 1]) / total } else { 0.0 };
    Ok(SquareFunctionReport {
        value: s.lp_norm(p)?,
        boundary_fraction,
        coverage_warning: boundary_fraction > 0.01,
    })
}

/// `points` times on the rays `arg z = ±θ` (the extra one on `+θ` when odd),
/// `|z|` log-spaced in `[1e−2, 1e2]` on each ray.
pub fn sector_family(theta: f64, points: usize) -> Vec<ComplexTime> {
    let ray = |count: usize, arg: f64| {
        logspace(1e-2, 1e2, count).into_iter().map(move |r| ComplexTime::polar(r, arg).expect("Re z > 0"))
    };
    let plus = points.div_ceil(2);
    ray(plus, theta).chain(ray(points - plus, -theta)).take(points).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RademacherConfig {
    pub p: f64,
    pub trials: usize,
    /// Sign vectors drawn per trial to average over `ε`.
    pub sign_samples: usize,
    /// Crown window of the random profiles `g_j`.
    pub window: (i64, i64),
}

impl Default for RademacherConfig {
    fn default() -> Self {
        RademacherConfig { p: 2.0, trials: 200, sign_samples: 32, window: (-3, 3) }
    }
}

/// `max_trials E_ε‖Σ ε_j cos(arg z_j) T_{z_j} g_j‖_p / E_ε‖Σ ε_j g_j‖_p`.
///
/// Trial `i` draws from stream `i` of the ChaCha generator seeded by `seed`.
pub fn rademacher_ratio(
    family: &[ComplexTime],
    params: &FieldParams,
    cfg: &RademacherConfig,
    seed: u64,
    exec: Exec,
) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::InvalidParams("empty operator family".into()));
    }
    if cfg.trials < 100 {
        return Err(Error::InvalidParams(format!("{} trials; at least 100 required", cfg.trials)));
    }
    if cfg.sign_samples == 0 {
        return Err(Error::InvalidParams("sign_samples must be positive".into()));
    }
    let (kmin, kmax) = cfg.window;
    let ratios = exec.map_range(cfg.trials, |trial| -> Result<f64> {
        let mut rng = instance_rng(seed, trial as u64);
        let hats: Vec<RadialProfile> = family
            .iter()
            .map(|_| spectrum(&random_mean_zero_profile(params, kmin, kmax, &mut rng)))
            .collect::<Result<_>>()?;
        let images: Vec<RadialProfile> = family
            .iter()
            .zip(&hats)
            .map(|(z, h)| {
                let (zz, c) = (z.z(), z.z().re / z.z().norm());
                multiply(h, |lam| c * (-zz * lam).exp())
            })
            .collect();
        let (mut num, mut den) = (0.0, 0.0);
        for _ in 0..cfg.sign_samples {
            let signs: Vec<f64> = family.iter().map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
            num += from_spectrum(&signed_sum(&images, &signs)?).lp_norm(cfg.p)?;
            den += from_spectrum(&signed_sum(&hats, &signs)?).lp_norm(cfg.p)?;
        }
        Ok(num / den)
    });
    let mut worst = 0.0f64;
    for r in ratios {
        worst = worst.max(r?);
    }
    Ok(worst)
}

fn signed_sum(items: &[RadialProfile], signs: &[f64]) -> Result<RadialProfile> {
    let mut acc = items[0].scale(Complex64::new(signs[0], 0.0));
    for (h, &s) in items.iter().zip(signs).skip(1) {
        acc = acc.add(&h.scale(Complex64::new(s, 0.0)))?;
    }
    Ok(acc)
}

/// Experiment record for R-bound witnesses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RademacherRecord {
    pub family: String,
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
    pub ratio: f64,
    pub baseline: Option<f64>,
    pub pass: Option<bool>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{kernel_profile, kernel_window, KernelEvalConfig};
    use crate::radial::convolve;

    fn params() -> FieldParams {
        FieldParams::new(3, 1, 1.0).unwrap()
    }

    fn l2_rel(a: &RadialProfile, b: &RadialProfile) -> f64 {
        a.sub(b).unwrap().lp_norm(2.0).unwrap() / b.lp_norm(2.0).unwrap()
    }

    #[test]
    fn eigen_layer_resolvent() {
        let p = params();
        // inverse transform of a single Fourier crown is an eigenfunction
        let layer = RadialProfile::crown(p, 1, Complex64::new(1.0, 0.0)).fourier(Direction::Inverse);
        let z = Complex64::new(-0.5, 2.0);
        let lam = p.eigenvalue(1);
        let out = resolvent_apply(z, &layer, DEFAULT_STANDOFF).unwrap();
        assert!(out.max_diff(&layer.scale(1.0 / (z - lam))) < 1e-14);
        assert!(matches!(
            resolvent_apply(Complex64::new(lam, 0.0), &layer, DEFAULT_STANDOFF),
            Err(Error::Spectrum(_))
        ));
        assert!(matches!(resolvent_apply(Complex64::new(0.0, 0.0), &layer, DEFAULT_STANDOFF), Err(Error::Spectrum(_))));
    }

    #[test]
    fn resolvent_identity_and_sectorial_bound() {
        let p = params();
        let mut rng = instance_rng(11, 0);
        let g = random_mean_zero_profile(&p, -2, 3, &mut rng);
        let (z, w) = (Complex64::new(0.3, 1.1), Complex64::new(-2.0, -0.4));
        let lhs = resolvent_apply(z, &g, DEFAULT_STANDOFF)
            .unwrap()
            .sub(&resolvent_apply(w, &g, DEFAULT_STANDOFF).unwrap())
            .unwrap();
        let rr = resolvent_apply(z, &resolvent_apply(w, &g, DEFAULT_STANDOFF).unwrap(), DEFAULT_STANDOFF).unwrap();
        assert!(lhs.sub(&rr.scale(w - z)).unwrap().sup_abs() < 1e-11 * lhs.sup_abs().max(1.0));
        for x in [-1e-3, -0.7, -10.0, -1e4] {
            let zr = resolvent_apply(Complex64::new(x, 0.0), &g, DEFAULT_STANDOFF).unwrap().scale(Complex64::new(x, 0.0));
            assert!(zr.lp_norm(2.0).unwrap() <= g.lp_norm(2.0).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn zero_frequency_mass_rejected() {
        let g = RadialProfile::ball_indicator(params(), 0);
        assert!(matches!(semigroup_apply(ComplexTime::real(1.0).unwrap(), &g), Err(Error::ZeroFrequencyMass(_))));
    }

    #[test]
    fn direct_calculus_basics() {
        let p = params();
        let mut rng = instance_rng(12, 0);
        let g = random_mean_zero_profile(&p, -3, 2, &mut rng);
        let id = hinf_apply_direct(|_| Complex64::new(1.0, 0.0), &g).unwrap();
        assert!(id.max_diff(&g) < 1e-13);
        let t = ComplexTime::real(0.7).unwrap();
        let heat = hinf_apply_direct(|l| Complex64::new((-0.7 * l).exp(), 0.0), &g).unwrap();
        assert!(heat.max_diff(&semigroup_apply(t, &g).unwrap()) < 1e-15);
        let bump = hinf_apply_direct(|l| Complex64::new(l / (1.0 + l).powi(2), 0.0), &g).unwrap();
        assert!(bump.lp_norm(2.0).unwrap() <= 0.25 * g.lp_norm(2.0).unwrap() * (1.0 + 1e-12));
        // multiplicativity
        let f = |l: f64| Complex64::new(1.0 / (1.0 + l), l.sin());
        let h = |l: f64| Complex64::new(l.cos(), -0.5) ;
        let fh = hinf_apply_direct(|l| f(l) * h(l), &g).unwrap();
        let composed = hinf_apply_direct(f, &hinf_apply_direct(h, &g).unwrap()).unwrap();
        assert!(fh.max_diff(&composed) < 1e-12);
    }

    #[test]
    fn contour_matches_direct() {
        let p = params();
        let mut rng = instance_rng(13, 0);
        let g = random_mean_zero_profile(&p, -3, 3, &mut rng);
        for f in [SymbolFunction::bump(), SymbolFunction::sqrt_bump(), SymbolFunction::lorentz()] {
            let direct = hinf_apply_direct(|l| f.eval(Complex64::new(l, 0.0)), &g).unwrap();
            let mut outs = Vec::new();
            for nu in [0.3, 0.6, 1.0] {
                let c = hinf_apply_contour(&f, &g, &ContourConfig::with_nu(nu)).unwrap();
                assert!(l2_rel(&c.profile, &direct) < 1e-6, "{} nu={nu}", f.name());
                outs.push(c.profile);
            }
            assert!(l2_rel(&outs[0], &outs[2]) < 1e-6);
        }
        let f = SymbolFunction::bump();
        let c = Complex64::new(-2.0, 0.5);
        let a = hinf_apply_contour(&f.scaled(c), &g, &ContourConfig::default()).unwrap().profile;
        let b = hinf_apply_contour(&f, &g, &ContourConfig::default()).unwrap().profile.scale(c);
        assert!(l2_rel(&a, &b) < 1e-9);
    }

    #[test]
    fn contour_rejects_bad_angle_and_certificate() {
        let g = random_mean_zero_profile(&params(), -1, 1, &mut instance_rng(14, 0));
        assert!(hinf_apply_contour(&SymbolFunction::lorentz(), &g, &ContourConfig::with_nu(1.3)).is_err());
        assert!(SymbolFunction::new("bad", |z| z, DecayCertificate { s: 1.0, c: 1.0 }, 1.0).is_err());
        let cfg = ContourConfig { max_nodes_per_decade: 2, nodes_per_decade: 1, tol: 1e-14, ..ContourConfig::default() };
        assert!(matches!(hinf_apply_contour(&SymbolFunction::bump(), &g, &cfg), Err(Error::Quadrature(_))));
    }

    #[test]
    fn semigroup_matches_kernel_convolution() {
        let p = params();
        let cfg = KernelEvalConfig::default();
        let mut rng = instance_rng(15, 0);
        let g = random_mean_zero_profile(&p, -2, 2, &mut rng);
        for z in [ComplexTime::real(0.4).unwrap(), ComplexTime::polar(2.0, 0.8).unwrap()] {
            let kp = kernel_profile(z, kernel_window(z, &p, &cfg).unwrap(), &p, &cfg).unwrap();
            let conv = convolve(&kp.profile, &g).unwrap();
            let diag = semigroup_apply(z, &g).unwrap();
            let (lo, hi) = (diag.kmin(), diag.kmax() + 2);
            assert!(l2_rel(&conv.widen(lo, hi), &diag.widen(lo, hi)) < 1e-8);
        }
    }

    #[test]
    fn semigroup_laws() {
        let p = params();
        let mut rng = instance_rng(16, 0);
        let g = random_mean_zero_profile(&p, -3, 3, &mut rng);
        let z = ComplexTime::polar(0.5, 0.9).unwrap();
        let w = ComplexTime::polar(1.5, -0.3).unwrap();
        let zw = semigroup_apply(z, &semigroup_apply(w, &g).unwrap()).unwrap();
        assert!(zw.max_diff(&semigroup_apply(z + w, &g).unwrap()) < 1e-12);
        for t in [1e-3, 0.1, 1.0, 10.0] {
            let tg = semigroup_apply(ComplexTime::real(t).unwrap(), &g).unwrap();
            for pp in [1.0, 2.0, 4.0] {
                assert!(tg.lp_norm(pp).unwrap() <= g.lp_norm(pp).unwrap() * (1.0 + 1e-12));
            }
        }
        let small = semigroup_apply(ComplexTime::real(1e-12).unwrap(), &g).unwrap();
        assert!(small.max_diff(&g) < 1e-9 * g.sup_abs());
    }

    #[test]
    fn square_function_l2_constant() {
        let p = params();
        let phi = SymbolFunction::bump();
        let mut rng = instance_rng(17, 0);
        let g = random_mean_zero_profile(&p, -2, 2, &mut rng);
        let r = square_function(&g, &phi, SquareGrid::default(), 2.0).unwrap();
        assert!((r.value / g.lp_norm(2.0).unwrap() - (1.0f64 / 6.0).sqrt()).abs() < 1e-5);
        assert!(!r.coverage_warning);
        let zero = RadialProfile::zero(p);
        assert_eq!(square_function(&zero, &phi, SquareGrid::default(), 2.0).unwrap().value, 0.0);
        let narrow = square_function(&g, &phi, SquareGrid { points_per_decade: 12, decades: 2 }, 2.0).unwrap();
        assert!(narrow.coverage_warning);
    }

    #[test]
    fn rademacher_single_contraction_and_replay() {
        let p = params();
        let cfg = RademacherConfig { trials: 100, sign_samples: 4, ..RademacherConfig::default() };
        let single = [ComplexTime::real(0.5).unwrap()];
        let r = rademacher_ratio(&single, &p, &cfg, 3, Exec::Parallel).unwrap();
        assert!(r <= 1.0 + 1e-8);
        let fam = sector_family(1.3, 16);
        assert_eq!(fam.len(), 16);
        let a = rademacher_ratio(&fam, &p, &cfg, 9, Exec::Parallel).unwrap();
        let b = rademacher_ratio(&fam, &p, &cfg, 9, Exec::Sequential).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(rademacher_ratio(&fam, &p, &RademacherConfig { trials: 50, ..cfg }, 9, Exec::Sequential).is_err());
    }
}
