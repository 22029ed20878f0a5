//! Verification suites, one per acceptance criterion.
//!
//! Each suite returns a [`Verdict`] carrying its metrics and, for the
//! regression-guarded experiments, the measured constants in a form that can
//! be written back to the baseline file.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::One;
use rand::Rng;
use serde_json::{json, Map, Value};

use crate::baseline::{BaselineKey, Baselines, SLACK};
use crate::calculus::{
    hinf_apply_contour, hinf_apply_direct, random_mean_zero_profile, rademacher_ratio, sector_family, square_function,
    ContourConfig, RademacherConfig, SquareGrid, SymbolFunction,
};
use crate::cmath::rel_diff;
use crate::error::{Error, Result};
use crate::evolution::{max_regularity_report, random_forcing, rk4_oracle, single_mode_forcing, solve_master, RegularityQuadrature};
use crate::field::{
    brute_sphere_character_integral, frequency_with_norm, lattice_for_sphere, sphere_character_integral_f64, FieldParams,
    QuotientLattice, ScaleIndex,
};
use crate::gamma::{gamma_qn, gamma_via_integral, reflection_defect, GammaConfig};
use crate::kernel::{
    agreement_grid, kernel_crown_sum, kernel_exp_form, kernel_profile, kernel_series, kernel_sweep, kernel_window, linspace,
    standard_sweep_grid, ComplexTime, KernelEvalConfig,
};
use crate::operator::{levy_khinchin_check, levy_khinchin_exact, taibleson_fourier, taibleson_hypersingular, taibleson_hypersingular_image, LevyMode};
use crate::par::Exec;
use crate::radial::{convolve, RadialProfile};
use crate::vilenkin::{doob_batch, doob_l2_ratio, domination_batch, instance_rng, random_function};

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Sphere,
    Gamma,
    Levy,
    KernelAgreement,
    Semigroup,
    KernelBounds,
    Taibleson,
    Calculus,
    SquareFn,
    Doob,
    Domination,
    RBound,
    MaxReg,
}

impl Suite {
    pub const ALL: [Suite; 13] = [
        Suite::Sphere,
        Suite::Gamma,
        Suite::Levy,
        Suite::KernelAgreement,
        Suite::Semigroup,
        Suite::KernelBounds,
        Suite::Taibleson,
        Suite::Calculus,
        Suite::SquareFn,
        Suite::Doob,
        Suite::Domination,
        Suite::RBound,
        Suite::MaxReg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Sphere => "sphere",
            Suite::Gamma => "gamma",
            Suite::Levy => "levy",
            Suite::KernelAgreement => "kernel-agreement",
            Suite::Semigroup => "semigroup",
            Suite::KernelBounds => "kernel-bounds",
            Suite::Taibleson => "taibleson",
            Suite::Calculus => "calculus",
            Suite::SquareFn => "squarefn",
            Suite::Doob => "doob",
            Suite::Domination => "domination",
            Suite::RBound => "rbound",
            Suite::MaxReg => "maxreg",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Acceptance criterion checked by the suite.
    pub fn criterion(self) -> u8 {
        match self {
            Suite::Sphere => 1,
            Suite::Gamma => 2,
            Suite::Levy => 3,
            Suite::KernelAgreement => 4,
            Suite::Semigroup => 5,
            Suite::KernelBounds => 6,
            Suite::Taibleson => 7,
            Suite::Calculus => 8,
            Suite::SquareFn => 9,
            Suite::Doob | Suite::Domination => 10,
            Suite::RBound => 11,
            Suite::MaxReg => 12,
        }
    }

    /// Stated wall-clock budget in seconds.
    pub fn budget_secs(self) -> f64 {
        match self.criterion() {
            1 | 7 => 10.0,
            2 | 3 => 5.0,
            4 | 5 | 9 | 12 => 30.0,
            8 => 20.0,
            _ => 60.0,
        }
    }

    pub fn run(self, scope: &Scope, baselines: &Baselines) -> Result<Verdict> {
        match self {
            Suite::Sphere => sphere(scope),
            Suite::Gamma => gamma(scope),
            Suite::Levy => levy(scope),
            Suite::KernelAgreement => kernel_agreement(scope),
            Suite::Semigroup => semigroup(scope),
            Suite::KernelBounds => kernel_bounds(scope, baselines),
            Suite::Taibleson => taibleson(scope),
            Suite::Calculus => calculus(scope),
            Suite::SquareFn => squarefn(scope, baselines),
            Suite::Doob => doob(scope),
            Suite::Domination => domination(scope),
            Suite::RBound => rbound(scope, baselines),
            Suite::MaxReg => maxreg(scope, baselines),
        }
    }
}

/// Restricts a suite to one `(q, n, α)` and fixes the seed and policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scope {
    pub params: Option<(u32, u32, f64)>,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for Scope {
    fn default() -> Self {
        Scope { params: None, seed: DEFAULT_SEED, exec: Exec::default() }
    }
}

impl Scope {
    fn grid(&self, qs: &[u32], ns: &[u32], alphas: &[f64]) -> Result<Vec<FieldParams>> {
        match self.params {
            Some((q, n, a)) => Ok(vec![FieldParams::new(q, n, a)?]),
            None => {
                let mut out = Vec::new();
                for &q in qs {
                    for &n in ns {
                        for &a in alphas {
                            out.push(FieldParams::new(q, n, a)?);
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub suite: Suite,
    pub pass: bool,
    pub metrics: Map<String, Value>,
    /// Constants measured against the baseline file.
    pub measured: Vec<(BaselineKey, f64)>,
}

impl Verdict {
    fn new(suite: Suite) -> Self {
        Verdict { suite, pass: true, metrics: Map::new(), measured: Vec::new() }
    }

    fn metric(&mut self, key: &str, value: impl Into<Value>) {
        self.metrics.insert(key.to_string(), value.into());
    }

    fn require(&mut self, ok: bool) {
        self.pass &= ok;
    }

    /// Guards `value ≤ SLACK × baseline`; `lower` guards
    /// `value ≥ baseline / SLACK` instead.
    fn guard(&mut self, baselines: &Baselines, key: BaselineKey, value: f64, lower: bool) {
        let label = format!("{}[q={},n={},alpha={}]", key.key, key.q, key.n, key.alpha);
        let base = baselines.get(&key);
        let ok = value.is_finite()
            && match base {
                Some(b) if lower => value >= b / SLACK,
                Some(b) => value <= b * SLACK,
                None => false,
            };
        self.metrics
            .insert(label, json!({ "value": value, "baseline": base, "pass": ok }));
        self.pass &= ok;
        self.measured.push((key, value));
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("suite".into(), json!(self.suite.name()));
        m.insert("criterion".into(), json!(self.suite.criterion()));
        m.insert("pass".into(), json!(self.pass));
        for (k, v) in &self.metrics {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }

    /// Writes the measured constants into `baselines`.
    pub fn record(&self, baselines: &mut Baselines) {
        for (k, v) in &self.measured {
            baselines.set(k.clone(), *v);
        }
    }
}

fn sphere(scope: &Scope) -> Result<Verdict> {
    let mut v = Verdict::new(Suite::Sphere);
    let combos: Vec<(u32, u32)> = match scope.params {
        Some((q, n, _)) => vec![(q, n)],
        None => vec![(2, 1), (2, 2), (3, 1), (3, 2)],
    };
    let (mut worst, mut cases) = (0.0f64, 0usize);
    let mut seen = [false; 3];
    for (q, n) in combos {
        let p = FieldParams::qadic(q, n, 1.0)?;
        for k in -2..=2 {
            let lat = lattice_for_sphere(p, k)?;
            for e in [None, Some(k - 1), Some(k), Some(k + 1), Some(k + 2)] {
                let x = frequency_with_norm(&lat, e)?;
                let brute = brute_sphere_character_integral(ScaleIndex(k), &x, &lat)?;
                let closed = sphere_character_integral_f64(k, e, &p);
                worst = worst.max((brute - closed).norm());
                cases += 1;
                let case = match e {
                    Some(e) if e == k + 1 => 1,
                    Some(e) if e > k + 1 => 2,
                    _ => 0,
                };
                seen[case] = true;
            }
        }
    }
    v.metric("max_defect", worst);
    v.metric("cases", cases);
    v.require(worst <= 1e-12 && seen.iter().all(|&s| s));
    Ok(v)
}

fn gamma(scope: &Scope) -> Result<Verdict> {
    let mut v = Verdict::new(Suite::Gamma);
    let cfg = GammaConfig::default();
    let combos: Vec<(u32, u32)> = match scope.params {
        Some((q, n, _)) => vec![(q, n)],
        None => vec![(2, 1), (3, 2), (5, 3)],
    };
    let (mut refl, mut integral, mut points) = (0.0f64, 0.0f64, 0usize);
    for (q, n) in combos {
        let p = FieldParams::new(q, n, 1.0)?;
        let nf = n as f64;
        let period = PI / (q as f64).ln();
        for &re in &linspace(0.1, nf - 0.1, 10) {
            for &im in &linspace(-period, period, 10) {
                refl = refl.max(reflection_defect(Complex64::new(re, im), &p, &cfg)?);
                points += 1;
            }
        }
        for &re in &linspace(0.25, 4.0, 6) {
            for &im in &linspace(-period * 0.9, period * 0.9, 5) {
                let z = Complex64::new(re, im);
                let a = gamma_via_integral(z, &p, &cfg)?;
                let b = gamma_qn(z, &p, &cfg)?;
                integral = integral.max(rel_diff(a, b, 1.0));
            }
        }
    }
    v.metric("reflection_points", points);
    v.metric("max_reflection_defect", refl);
    v.metric("max_integral_defect", integral);
    v.require(refl <= 1e-12 && integral <= 1e-9);
    Ok(v)
}

fn levy(scope: &Scope) -> Result<Verdict> {
    let mut v = Verdict::new(Suite::Levy);
    let grid = scope.grid(&[2, 3, 5], &[1, 2], &[0.5, 1.0, 2.0, 3.7])?;
    let mut worst = 0.0f64;
    for p in &grid {
        for n0 in -3..=3 {
            worst = worst.max(levy_khinchin_check(Some(-n0), p, LevyMode::ClosedForm)?.defect());
        }
    }
    v.metric("max_defect", worst);
    v.require(worst <= 1e-12);
    if scope.params.is_none() {
        let (lhs, rhs) = levy_khinchin_exact(0, 2, 1, 1);
        let exact = lhs.is_one() && rhs.is_one();
        let mut rational_ok = true;
        for (q, n, a) in [(2, 1, 1), (3, 2, 2), (5, 1, 3)] {
            for n0 in -3..=3 {
                let (l, r) = levy_khinchin_exact(-n0, q, n, a);
                rational_ok &= l == r;
            }
        }
        v.metric("worked_case_exact", exact);
        v.metric("integer_alpha_exact", rational_ok);
        v.require(exact && rational_ok);
    }
    Ok(v)
}

fn kernel_grid(scope: &Scope) -> Result<Vec<FieldParams>> {
    scope.grid(&[2, 3], &[1, 2], &[0.5, 1.0, 2.0])
}

fn kernel_agreement(scope: &Scope) -> Result<Verdict> {
    let mut v = Verdict::new(Suite::KernelAgreement);
    let cfg = KernelEvalConfig::default();
    let (times, kxs) = agreement_grid();
    let grid = kernel_grid(scope)?;
    let mut jobs: Vec<(FieldParams, ComplexTime, i64)> = Vec::new();
    for p in &grid {
        for &z in &times {
            jobs.extend(kxs.iter().map(|&k| (*p, z, k)));
        }
    }
    let rows = scope.exec.map(&jobs, |(p, z, k)| -> Result<(f64, Option<(f64, f64)>)> {
        let e = kernel_exp_form(*z, *k, p, &cfg)?.value;
        let c = kernel_crown_sum(*z, *k, p, &cfg)?.value;
        let s = match kernel_series(*z, *k, p, &cfg) {
            Ok(s) => Some((rel_diff(e, s.value, 0.0), rel_diff(c, s.value, 0.0))),
            Err(Error::Cancellation(_)) => None,
            Err(err) => return Err(err),
        };
        Ok((rel_diff(e, c, 0.0), s))
    });
    let (mut ec, mut es, mut cs, mut series_points) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for r in rows {
        let (a, s) = r?;
        ec = ec.max(a);
        if let Some((b, c)) = s {
            es = es.max(b);
            cs = cs.max(c);
            series_points += 1;
        }
    }
    v.metric("points", jobs.len());
    v.metric("series_points", series_points);
    v.metric("max_rel_exp_crown", ec);
    v.metric("max_rel_exp_series", es);
    v.metric("max_rel_crown_series", cs);
    v.require(ec <= 1e-10 && es <= 1e-10 && cs <= 1e-10 && series_points > 0);
    Ok(v)
}

fn semigroup(scope: &Scope) -> Result<Verdict> {
    let mut v = Verdict::new(Suite::Semigroup);
    let cfg = KernelEvalConfig::default();
    let grid = kernel_grid(scope)?;
    let mut mass = 0.0f64;
    for p in &grid {
        for t in [0.1, 1.0, 10.0] {
            let z = ComplexTime::real(t)?;
            let kp = kernel_profile(z, kernel_window(z, p, &cfg)?, p, &cfg)?;
            mass = mass.max((kp.mass() - 1.0).norm());
        }
    }
    let pairs = scope.exec.map_range(20, |i| -> Result<f64> {
        let mut rng = instance_rng(scope.seed, i as u64);
        let p = grid[i % grid.len()];
        let mut draw = || ComplexTime::polar(10f64.powf(rng.random_range(-1.0..1.0)), rng.random_range(-1.2..1.2));
        let (z, w) = (draw()?, draw()?);
        let zw = z + w;
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for t in [z, w, zw] {
            let (a, b) = kernel_window(t, &p, &cfg)?;
            lo = lo.min(a);
            hi = hi.max(b);
        }
        let kz = kernel_profile(z, (lo, hi), &p, &cfg)?.profile;
        let kw = kernel_profile(w, (lo, hi), &p, &cfg)?.profile;
        let kzw = kernel_profile(zw, (lo, hi), &p, &cfg)?.profile;
        convolve(&kz, &kw)?.sub(&kzw)?.lp_norm(1.0)
    });
    let mut semi = 0.0f64;
    for d in pairs {
        semi = semi.max(d?);
    }
    v.metric("max_mass_defect", mass);
    v.metric("max_semigroup_l1_defect", semi);
    v.require(mass <= 1e-10 && semi <= 1e-8);
    Ok(v)
}

fn kernel_bounds(scope: &Scope, baselines: &Baselines) -> Result<Verdict> {
    let mut v = Verdict::new(Suite::KernelBounds);
    let cfg = KernelEvalConfig::default();
    let (times, kxs) = standard_sweep_grid();
    let mut points = 0;
    for p in &kernel_grid(scope)? {
        let rows = kernel_sweep(p, &times, &kxs, &cfg, scope.exec)?;
        points += rows.len();
        let br = rows.iter().map(|r| r.bound_ratio).fold(0.0, f64::max);
        let l1 = rows.iter().map(|r| r.l1_ratio).fold(0.0, f64::max);
        let finite = rows.iter().all(|r| r.bound_ratio.is_finite() && r.l1_ratio.is_finite());
        v.require(finite);
        v.guard(baselines, BaselineKey::new("kernel-bounds", p, "bound_ratio"), br, false);
        v.guard(baselines, BaselineKey::new("kernel-bounds", p, "l1_ratio"), l1, false);
    }
    v.metric("points", points);
    Ok(v)
}

fn taibleson(scope: &Scope) -> Result<Verdict> {
    let mut v = Verdict::new(Suite::Taibleson);
    let grid = scope.grid(&[2, 3, 5], &[1, 2], &[0.5, 1.0, 2.0, 3.7])?;
    let (mut worst_abs, mut worst_rel, mut cases) = (0.0f64, 0.0f64, 0usize);
    for p in &grid {
        for k0 in -4..=4 {
            let f = RadialProfile::crown(*p, k0, Complex64::new(1.0, 0.0));
            let h = taibleson_hypersingular_image(&f, p)?;
            let g = taibleson_fourier(&f, p)?;
            // ten crowns around the support
            let d = h.max_diff(&g, k0 - 5, k0 + 4);
            worst_abs = worst_abs.max(d);
            // defect in units of the image size, absolute once the image is below 1
            worst_rel = worst_rel.max(d / h.profile.sup_abs().max(1.0));
            cases += 1;
        }
    }
    v.metric("cases", cases);
    v.metric("max_abs_defect", worst_abs);
    v.metric("max_scaled_defect", worst_rel);
    v.require(worst_rel <= 1e-10);
    let p = FieldParams::new(2, 1, 1.0)?;
    let ind = RadialProfile::ball_indicator(p, 0);
    let hyper = taibleson_hypersingular(&ind, None, &p);
    let fourier = taibleson_fourier(&ind, &p)?.value_at_zero();
    let worked = (hyper - 2.0 / 3.0).norm().max((fourier - 2.0 / 3.0).norm());
    v.metric("worked_value_defect", worked);
    v.require(worked <= 1e-10);
    Ok(v)
}

fn calculus_grid(scope: &Scope) -> Result<Vec<FieldParams>> {
    match scope.params {
        Some((q, n, a)) => Ok(vec![FieldParams::new(q, n, a)?]),
        None => Ok(vec![FieldParams::new(2, 1, 1.0)?, FieldParams::new(3, 1, 0.5)?, FieldParams::new(3, 2, 2.0)?]),
    }
}

fn l2_rel(a: &RadialProfile, b: &RadialProfile) -> Result<f64> {
    Ok(a.sub(b)?.lp_norm(2.0)? / b.lp_norm(2.0)?)
}

fn calculus(scope: &Scope) -> Result<Verdict> {
    let mut v = Verdict::new(Suite::Calculus);
    let symbols = [SymbolFunction::bump(), SymbolFunction::sqrt_bump(), SymbolFunction::lorentz()];
    let (mut direct_err, mut nu_spread, mut cases) = (0.0f64, 0.0f64, 0usize);
    for (pi, p) in calculus_grid(scope)?.iter().enumerate() {
        for trial in 0..4u64 {
            let mut rng = instance_rng(scope.seed, pi as u64 * 16 + trial);
            let g = random_mean_zero_profile(p, -3, 3, &mut rng);
            for f in &symbols {
                let direct = hinf_apply_direct(|l| f.eval(Complex64::new(l, 0.0)), &g)?;
                let outs = [0.3, 0.6, 1.0]
                    .iter()
                    .map(|&nu| hinf_apply_contour(f, &g, &ContourConfig::with_nu(nu)).map(|c| c.profile))
                    .collect::<Result<Vec<_>>>()?;
                for o in &outs {
                    direct_err = direct_err.max(l2_rel(o, &direct)?);
                }
                for a in &outs {
                    for b in &outs {
                        nu_spread = nu_spread.max(l2_rel(a, b)?);
                    }
                }
                cases += 1;
            }
        }
    }
    v.metric("cases", cases);
    v.metric("max_rel_contour_vs_direct", direct_err);
    v.metric("max_rel_nu_spread", nu_spread);
    v.require(direct_err <= 1e-6 && nu_spread <= 1e-6);
    Ok(v)
}

fn squarefn(scope: &Scope, baselines: &Baselines) -> Result<Verdict> {
    let mut v = Verdict::new(Suite::SquareFn);
    let phi = SymbolFunction::bump();
    let target = (1.0f64 / 6.0).sqrt();
    let mut l2_err = 0.0f64;
    let mut warnings = 0usize;
    for (pi, p) in calculus_grid(scope)?.iter().enumerate() {
        let mut bands = [(f64::INFINITY, 0.0f64); 2];
        for trial in 0..50u64 {
            let mut rng = instance_rng(scope.seed, 1000 + pi as u64 * 64 + trial);
            let g = random_mean_zero_profile(p, -3, 3, &mut rng);
            let r2 = square_function(&g, &phi, SquareGrid::default(), 2.0)?;
            l2_err = l2_err.max((r2.value / g.lp_norm(2.0)? - target).abs());
            warnings += usize::from(r2.coverage_warning);
            for (b, pp) in bands.iter_mut().zip([1.5, 3.0]) {
                let r = square_function(&g, &phi, SquareGrid::default(), pp)?.value / g.lp_norm(pp)?;
                b.0 = b.0.min(r);
                b.1 = b.1.max(r);
            }
        }
        for ((lo, hi), name) in bands.into_iter().zip(["p1.5", "p3"]) {
            v.guard(baselines, BaselineKey::new("squarefn", p, &format!("{name}_lo")), lo, true);
            v.guard(baselines, BaselineKey::new("squarefn", p, &format!("{name}_hi")), hi, false);
        }
    }
    v.metric("l2_target", target);
    v.metric("max_l2_ratio_error", l2_err);
    v.metric("coverage_warnings", warnings);
    v.require(l2_err <= 1e-5);
    Ok(v)
}

fn lattice_qs(scope: &Scope) -> Vec<u32> {
    match scope.params {
        Some((q, _, _)) => vec![q],
        None => vec![2, 3],
    }
}

fn doob(scope: &Scope) -> Result<Verdict> {
    let mut v = Verdict::new(Suite::Doob);
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut l2_constant = 0.0f64;
    for q in lattice_qs(scope) {
        let lat = QuotientLattice::new(FieldParams::qadic(q, 1, 1.0)?, 3, 3)?;
        for (i, p) in [1.5, 2.0, 4.0].into_iter().enumerate() {
            let b = doob_batch(&lat, p, 500, scope.seed + i as u64, scope.exec)?;
            worst = worst.max(b.worst);
            failures += b.failures;
        }
        let ratios = scope.exec.map_range(50, |i| {
            let mut rng = instance_rng(scope.seed ^ 0x5eed, i as u64);
            let tuple: Vec<_> = (0..4).map(|_| random_function(&lat, &mut rng)).collect();
            doob_l2_ratio(&tuple, 2.0)
        });
        for r in ratios {
            l2_constant = l2_constant.max(r?);
        }
    }
    v.metric("instances_per_p", 500);
    v.metric("failures", failures);
    v.metric("max_lhs_over_rhs", worst);
    v.metric("empirical_l2_valued_constant", l2_constant);
    v.require(failures == 0);
    Ok(v)
}

fn domination(scope: &Scope) -> Result<Verdict> {
    let mut v = Verdict::new(Suite::Domination);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for q in lattice_qs(scope) {
        let lat = QuotientLattice::new(FieldParams::qadic(q, 1, 1.0)?, 3, 3)?;
        let b = domination_batch(&lat, 500, scope.seed, scope.exec)?;
        worst = worst.max(b.worst);
        failures += b.failures;
    }
    v.metric("instances", 500);
    v.metric("failures", failures);
    v.metric("max_defect", worst);
    v.require(failures == 0 && worst <= 1e-12);
    Ok(v)
}

/// Parameters of the R-bound witness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RBoundSetup {
    pub theta: f64,
    pub points: usize,
    pub trials: usize,
}

impl Default for RBoundSetup {
    fn default() -> Self {
        RBoundSetup { theta: 1.3, points: 16, trials: 200 }
    }
}

pub fn rbound_ratio(p: &FieldParams, setup: RBoundSetup, seed: u64, exec: Exec) -> Result<f64> {
    let family = sector_family(setup.theta, setup.points);
    let cfg = RademacherConfig { trials: setup.trials, ..RademacherConfig::default() };
    rademacher_ratio(&family, p, &cfg, seed, exec)
}

fn rbound(scope: &Scope, baselines: &Baselines) -> Result<Verdict> {
    let mut v = Verdict::new(Suite::RBound);
    for p in &calculus_grid(scope)? {
        let a = rbound_ratio(p, RBoundSetup::default(), scope.seed, scope.exec)?;
        let b = rbound_ratio(p, RBoundSetup::default(), scope.seed + 1, scope.exec)?;
        let stability = (a / b - 1.0).abs();
        v.metrics.insert(
            format!("seed_stability[q={},n={},alpha={}]", p.q(), p.n(), p.alpha()),
            json!(stability),
        );
        v.require(stability <= 0.1);
        v.guard(baselines, BaselineKey::new("rbound", p, "ratio"), a, false);
    }
    Ok(v)
}

fn maxreg(scope: &Scope, baselines: &Baselines) -> Result<Verdict> {
    let mut v = Verdict::new(Suite::MaxReg);
    let quad = RegularityQuadrature::default();
    let (mut single, mut random, mut oracle) = (0.0f64, 0.0f64, 0.0f64);
    for (pi, p) in calculus_grid(scope)?.iter().enumerate() {
        for j in -2..=2 {
            let f = single_mode_forcing(p, j, vec![0.0, 1.0], &[Complex64::new(1.0, 0.0)])?;
            single = single.max(max_regularity_report(&f, 2.0, 2.0, &quad)?.ratio);
        }
        let mut p4 = 0.0f64;
        for trial in 0..8u64 {
            let mut rng = instance_rng(scope.seed, 5000 + pi as u64 * 64 + trial);
            let f = random_forcing(p, (-2, 2), 6, 2.0, &mut rng)?;
            random = random.max(max_regularity_report(&f, 2.0, 2.0, &quad)?.ratio);
            p4 = p4.max(max_regularity_report(&f, 4.0, 4.0, &quad)?.ratio);
            if trial < 2 {
                // stiffness λ_max·h stays well inside the RK4 stability region
                let x0 = random_mean_zero_profile(p, -2, 1, &mut rng);
                let exact = solve_master(&x0, &f, &[f.horizon()])?.pop().expect("one output");
                let rk = rk4_oracle(&x0, &f, 4000)?;
                oracle = oracle.max(exact.sub(&rk)?.lp_norm(2.0)?);
            }
        }
        v.guard(baselines, BaselineKey::new("maxreg", p, "ratio_p4"), p4, false);
    }
    v.metric("max_single_mode_ratio", single);
    v.metric("max_random_ratio", random);
    v.metric("max_rk4_l2_defect", oracle);
    v.require(single <= 1.0 + 1e-6 && random <= 1.0 + 1e-6 && oracle <= 1e-8);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for s in Suite::ALL {
            assert_eq!(Suite::from_name(s.name()), Some(s));
        }
        let mut crits: Vec<u8> = Suite::ALL.iter().map(|s| s.criterion()).collect();
        crits.dedup();
        assert_eq!(crits, (1..=12).collect::<Vec<_>>());
    }

    #[test]
    fn missing_baseline_fails_guard() {
        let scope = Scope { params: Some((2, 1, 1.0)), ..Scope::default() };
        let v = Suite::RBound.run(&scope, &Baselines::default()).unwrap();
        assert!(!v.pass);
        let mut b = Baselines::default();
        v.record(&mut b);
        assert!(Suite::RBound.run(&scope, &b).unwrap().pass);
    }
}
