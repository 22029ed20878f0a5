//! The Taibleson operator `D^α`, as the Fourier multiplier `‖ξ‖^α` and as the
//! hypersingular integral
//! `D^α f(x) = C ∫ (f(y) − f(x)) ‖y − x‖^{−α−n} dy`, `C = (1 − q^α)/(1 − q^{−α−n})`,
//! together with the Lévy-Khinchin representation of `‖x‖^α`.

use num_complex::Complex64;
use num_traits::One;
use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{
    character, qpow_rational, sphere_character_integral_f64, FieldParams, LatticeElement, QNorm, QuotientLattice,
    Rational,
};
use crate::gamma::{gamma_qn, GammaConfig};
use crate::radial::{Direction, InnerTail, RadialProfile};
use crate::vilenkin::QuotientFunction;

/// `(1 − q^α) / (1 − q^{−α−n})`, equal to `1 / Γ(−α)`.
pub fn hypersingular_constant(params: &FieldParams) -> f64 {
    let (q, n, a) = (params.qf(), params.nf(), params.alpha());
    (1.0 - q.powf(a)) / (1.0 - q.powf(-a - n))
}

/// A radial function that may carry the outer power tail
/// `outer_coeff · ‖x‖^{−α−n}` on the crowns `k < profile.kmin()`.
///
/// `D^α f` has this shape with `outer_coeff = C ∫ f`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialImage {
    pub profile: RadialProfile,
    pub outer_coeff: Complex64,
}

impl RadialImage {
    pub fn value(&self, k: i64) -> Complex64 {
        if k < self.profile.kmin() {
            let p = self.profile.params();
            self.outer_coeff * p.qpow(k as f64 * (p.alpha() + p.nf()))
        } else {
            self.profile.value(k)
        }
    }

    pub fn value_at_zero(&self) -> Complex64 {
        self.profile.value_at_zero()
    }

    /// Largest `|a(k) − b(k)|` over `[lo, hi]`, the centre and the outer coefficients.
    pub fn max_diff(&self, other: &Self, lo: i64, hi: i64) -> f64 {
        (lo..=hi)
            .map(|k| (self.value(k) - other.value(k)).norm())
            .chain([(self.value_at_zero() - other.value_at_zero()).norm()])
            .chain([(self.outer_coeff - other.outer_coeff).norm()])
            .fold(0.0, f64::max)
    }

    /// The finite-window part, when the outer tail vanishes.
    pub fn into_profile(self) -> Result<RadialProfile> {
        if self.outer_coeff.norm() > 0.0 {
            return Err(Error::Domain(format!(
                "image carries an outer tail {:e}·‖x‖^(-α-n)",
                self.outer_coeff
            )));
        }
        Ok(self.profile)
    }
}

/// `D^α f` through `F^{-1}(‖ξ‖^α f̂)`.
///
/// `f̂` equals `∫f` near the origin; that constant piece is split off and
/// its image `F^{-1}(‖ξ‖^α 1_{G_j})` is added in closed form.
pub fn taibleson_fourier(f: &RadialProfile, params: &FieldParams) -> Result<RadialImage> {
    let p = *params;
    let (n, a) = (p.nf(), p.alpha());
    let hat = f.fourier(Direction::Forward);
    let mass = hat.value_at_zero();
    let j0 = hat.kmax() + 1; // f̂ = mass on G_{j0}
    let windowed = RadialProfile::from_fn(p, hat.kmin(), hat.kmax(), InnerTail::Zero, |j| {
        hat.value(j) * p.eigenvalue(j)
    })?;
    let part = windowed.fourier(Direction::Inverse);
    // F^{-1}(‖ξ‖^α 1_{G_{j0}}) is constant on ‖x‖ ≤ q^{j0} and C‖x‖^{−α−n} outside
    let flat = (1.0 - p.qpow(-n)) * p.qpow(-(j0 as f64) * (a + n)) / (1.0 - p.qpow(-(a + n)));
    let ball = RadialProfile::ball_indicator(p, -j0).scale(mass * flat);
    let profile = part.add(&ball)?;
    if profile.coeffs().iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("multiplier image overflowed".into()));
    }
    Ok(RadialImage { profile, outer_coeff: mass * hypersingular_constant(&p) })
}

/// `D^α f` on crown `k` (or at the origin for `None`) from the hypersingular
/// integral, summed crown by crown around the evaluation point.
///
/// On crown `k`: `C[Σ_{l<k}(c_l − c_k) q^{lα}(1 − q^{−n}) + q^{k(α+n)}(Σ_{m>k} c_m μ(S_m) − c_k μ(G_{k+1}))]`,
/// with the crowns outside the window summed as geometric series.
pub fn taibleson_hypersingular(f: &RadialProfile, x: Option<i64>, params: &FieldParams) -> Complex64 {
    let p = params;
    let (q, n, a) = (p.qf(), p.nf(), p.alpha());
    let c = hypersingular_constant(p);
    let (kmin, kmax) = (f.kmin(), f.kmax());
    let lead = 1.0 - q.powf(-n);
    // Σ_{l ≤ top} (c_l − v) q^{lα}(1 − q^{−n}) including the empty outer crowns l < kmin
    let outer = |top: i64, v: Complex64| -> Complex64 {
        let below = -v * lead * q.powf((kmin.min(top + 1) - 1) as f64 * a) / (1.0 - q.powf(-a));
        let window: Complex64 = (kmin..=top.min(kmax)).map(|l| (f.value(l) - v) * q.powf(l as f64 * a) * lead).sum();
        let tail = if top > kmax {
            (kmax + 1..=top).map(|l| (f.value(l) - v) * q.powf(l as f64 * a) * lead).sum()
        } else {
            Complex64::new(0.0, 0.0)
        };
        below + window + tail
    };
    match x {
        None => c * outer(kmax, f.value_at_zero()),
        Some(k) => {
            let v = f.value(k);
            let inner_sum: Complex64 = if k >= kmax {
                f.value_at_zero() * p.ball(k + 1)
            } else {
                let w: Complex64 = (k.max(kmin - 1) + 1..=kmax).map(|m| f.value(m) * p.sphere(m)).sum();
                w + f.value_at_zero() * p.ball(kmax + 1)
            };
            let near = (inner_sum - v * p.ball(k + 1)) * q.powf(k as f64 * (a + n));
            c * (outer(k - 1, v) + near)
        }
    }
}

/// `D^α f` on every crown of `[kmin, kmax + 1]`, with the centre value as the
/// inner tail and the outer tail `C ∫f`.
pub fn taibleson_hypersingular_image(f: &RadialProfile, params: &FieldParams) -> Result<RadialImage> {
    let profile = RadialProfile::from_fn(
        *params,
        f.kmin(),
        f.kmax() + 1,
        InnerTail::Constant(taibleson_hypersingular(f, None, params)),
        |k| taibleson_hypersingular(f, Some(k), params),
    )?;
    Ok(RadialImage { profile, outer_coeff: hypersingular_constant(params) * f.improper_integral() })
}

/// `D^α f` for a function supported in the lattice window `G_{−M}` and
/// constant on cosets of `G_N`: the coset double sum plus the exterior
/// `‖y‖ > q^M`, where `f = 0`.
pub fn taibleson_lattice(f: &QuotientFunction, params: &FieldParams) -> QuotientFunction {
    let lat = *f.lattice();
    let (q, n, a) = (params.qf(), params.nf(), params.alpha());
    let c = hypersingular_constant(params);
    let mu = lat.coset_measure();
    let order = lat.order();
    let weights: Vec<f64> = (0..order)
        .map(|h| match lat.norm_of_index(h) {
            QNorm::Zero => 0.0,
            QNorm::Pow(e) => q.powf(-(e as f64) * (a + n)) * mu,
        })
        .collect();
    let exterior = (1.0 - q.powf(-n)) * q.powf(-(lat.outer() as f64 + 1.0) * a) / (1.0 - q.powf(-a));
    let values = f.values();
    let out = (0..order)
        .map(|x| {
            let fx = values[x];
            let s: Complex64 = (0..order)
                .filter(|&y| y != x)
                .map(|y| (values[y] - fx) * weights[lat.sub_index(y, x)])
                .sum();
            c * (s - fx * exterior)
        })
        .collect();
    QuotientFunction::new(lat, out).expect("same lattice")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevyMode {
    ClosedForm,
    /// Crown-by-crown sum over the given number of crowns, no tail.
    Truncated(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl LevyCheck {
    /// `|lhs − rhs| / max(lhs, 1)`
    pub fn defect(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.lhs.abs().max(1.0)
    }
}

/// `‖x‖^α` against `−S / Γ(−α)` with `S = ∫ (1 − χ(x·y)) ‖y‖^{−α−n} dy`.
///
/// For `‖x‖ = q^{n0}` only the crowns `‖y‖ ≥ q^{1−n0}` contribute:
/// `S = (1 − q^{−n}) Σ_{j ≤ n0−2} q^{jα} + q^{(n0−1)α}` in scale indices `j`.
pub fn levy_khinchin_check(k_x: Option<i64>, params: &FieldParams, mode: LevyMode) -> Result<LevyCheck> {
    let Some(k_x) = k_x else {
        return Ok(LevyCheck { lhs: 0.0, rhs: 0.0 });
    };
    let (q, n, a) = (params.qf(), params.nf(), params.alpha());
    let n0 = -k_x;
    let g = gamma_qn(Complex64::new(-a, 0.0), params, &GammaConfig::default())?;
    // crown j contributes q^{j(α+n)}(μ(S_j) − ∫_{S_j} χ(x·y) dy)
    let crown = |j: i64| q.powf(j as f64 * (a + n)) * (params.sphere(j) - sphere_character_integral_f64(j, Some(n0), params));
    let s = match mode {
        LevyMode::ClosedForm => {
            let geometric = (1.0 - q.powf(-n)) * q.powf((n0 - 2) as f64 * a) / (1.0 - q.powf(-a));
            geometric + crown(n0 - 1)
        }
        LevyMode::Truncated(budget) => (0..budget as i64).map(|i| crown(n0 - 1 - i)).sum(),
    };
    Ok(LevyCheck { lhs: q.powf(n0 as f64 * a), rhs: -s / g.re })
}

/// Exact rational Lévy-Khinchin pair for integral `α`.
pub fn levy_khinchin_exact(k_x: i64, q: u32, n: u32, alpha: u32) -> (Rational, Rational) {
    let (n0, ai, ni) = (-k_x, alpha as i64, n as i64);
    let one = Rational::one();
    let lead = &one - qpow_rational(q, -ni);
    let geometric = &lead * qpow_rational(q, (n0 - 2) * ai) / (&one - qpow_rational(q, -ai));
    let s = geometric + qpow_rational(q, (n0 - 1) * ai);
    // −1/Γ(−α) = −(1 − q^α)/(1 − q^{−α−n})
    let inv_gamma = (&one - qpow_rational(q, ai)) / (&one - qpow_rational(q, -ai - ni));
    let rhs = -s * inv_gamma;
    (qpow_rational(q, n0 * ai), rhs)
}

/// `|Im Σ_{y ≠ 0} χ(x·y) ‖y‖^{−α−n} μ(coset)|` over the lattice; vanishes by the
/// pairing `y ↔ −y`.
pub fn real_part_variant_check(x: &LatticeElement, params: &FieldParams, lattice: &QuotientLattice) -> Result<f64> {
    if *x.lattice() != lattice.dual() {
        return Err(Error::LatticeMismatch("x must live on the dual lattice".into()));
    }
    let (q, n, a) = (params.qf(), params.nf(), params.alpha());
    let mu = lattice.coset_measure();
    let mut sum = Complex64::new(0.0, 0.0);
    for idx in 1..lattice.order() {
        if let QNorm::Pow(e) = lattice.norm_of_index(idx) {
            let y = lattice.element(idx);
            sum += character(&y, x)? * (q.powf(-(e as f64) * (a + n)) * mu);
        }
    }
    Ok(sum.im.abs())
}

/// `Re Σ_{i,j} c_i c̄_j ‖x_i − x_j‖^α` for `m` random lattice points and random
/// complex weights summing to zero; nonpositive for a conditionally negative
/// definite function.
pub fn negative_definite_witness<R: Rng>(lattice: &QuotientLattice, m: usize, rng: &mut R) -> f64 {
    let q = lattice.params().q();
    let a = lattice.params().alpha();
    let pts: Vec<usize> = (0..m).map(|_| rng.random_range(0..lattice.order())).collect();
    let mut c: Vec<Complex64> = (0..m)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let mean = c.iter().sum::<Complex64>() / m as f64;
    c.iter_mut().for_each(|ci| *ci -= mean);
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            let d = lattice.norm_of_index(lattice.sub_index(pts[i], pts[j])).to_f64(q).powf(a);
            total += c[i] * c[j].conj() * d;
        }
    }
    total.re
}

/// Checks `C = 1/Γ(−α)`; returns the relative discrepancy.
pub fn constant_consistency(params: &FieldParams) -> Result<f64> {
    let g = gamma_qn(Complex64::new(-params.alpha(), 0.0), params, &GammaConfig::default())?;
    let c = hypersingular_constant(params);
    Ok((c * g.re - 1.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn p(q: u32, n: u32, a: f64) -> FieldParams {
        FieldParams::new(q, n, a).unwrap()
    }

    #[test]
    fn worked_value_both_routes() {
        let pp = p(2, 1, 1.0);
        let ind = RadialProfile::ball_indicator(pp, 0);
        assert!((taibleson_hypersingular(&ind, None, &pp) - c(2.0 / 3.0)).norm() < 1e-15);
        let img = taibleson_fourier(&ind, &pp).unwrap();
        assert!((img.value_at_zero() - c(2.0 / 3.0)).norm() < 1e-14);
    }

    #[test]
    fn annihilates_constants_and_zero() {
        let pp = p(3, 2, 0.7);
        let zero = RadialProfile::zero(pp);
        let img = taibleson_fourier(&zero, &pp).unwrap();
        assert!(img.max_diff(&taibleson_hypersingular_image(&zero, &pp).unwrap(), -5, 5) == 0.0);
        // constants are not integrable; on a finite ball, D^α is constant inside far from the edge
        let ind = RadialProfile::ball_indicator(pp, -3);
        let v: Vec<Complex64> = (2..6).map(|k| taibleson_hypersingular(&ind, Some(k), &pp)).collect();
        assert!(v.windows(2).all(|w| (w[0] - w[1]).norm() < 1e-14));
    }

    #[test]
    fn routes_agree_on_crown_indicators() {
        for &(q, n, a) in &[(2, 1, 1.0), (3, 2, 0.5), (5, 1, 2.0), (2, 2, 3.7)] {
            let pp = p(q, n, a);
            for k0 in -3..=3 {
                let f = RadialProfile::crown(pp, k0, c(1.0));
                let h = taibleson_hypersingular_image(&f, &pp).unwrap();
                let g = taibleson_fourier(&f, &pp).unwrap();
                let scale = h.profile.sup_abs().max(1.0);
                assert!(h.max_diff(&g, k0 - 6, k0 + 6) < 1e-10 * scale, "q={q} n={n} a={a} k0={k0}");
            }
        }
    }

    #[test]
    fn eigen_layer_scales() {
        let pp = p(3, 1, 1.5);
        let j = 2;
        let layer = RadialProfile::crown(pp, j, c(1.0)).fourier(Direction::Inverse);
        let img = taibleson_fourier(&layer, &pp).unwrap();
        let lam = pp.eigenvalue(j);
        for k in layer.kmin() - 3..layer.kmax() + 3 {
            assert!((img.value(k) - layer.value(k) * lam).norm() < 1e-12);
        }
        assert!(img.outer_coeff.norm() < 1e-15);
    }

    #[test]
    fn constant_is_inverse_gamma() {
        for &(q, n, a) in &[(2, 1, 1.0), (3, 2, 0.5), (5, 3, 3.7)] {
            assert!(constant_consistency(&p(q, n, a)).unwrap() < 1e-13);
        }
    }

    #[test]
    fn levy_worked_case() {
        let pp = p(2, 1, 1.0);
        let r = levy_khinchin_check(Some(0), &pp, LevyMode::ClosedForm).unwrap();
        assert!(r.defect() < 1e-14);
        let (lhs, rhs) = levy_khinchin_exact(0, 2, 1, 1);
        assert_eq!(lhs, Rational::one());
        assert_eq!(rhs, Rational::one());
        assert_eq!(levy_khinchin_check(None, &pp, LevyMode::ClosedForm).unwrap(), LevyCheck { lhs: 0.0, rhs: 0.0 });
    }

    #[test]
    fn levy_truncated() {
        let pp = p(3, 2, 0.5);
        let closed = levy_khinchin_check(Some(-3), &pp, LevyMode::ClosedForm).unwrap();
        let trunc = levy_khinchin_check(Some(-3), &pp, LevyMode::Truncated(40)).unwrap();
        assert!(closed.defect() < 1e-12);
        assert!(trunc.defect() < 1e-6);
    }

    #[test]
    fn imaginary_part_vanishes() {
        let pp = FieldParams::qadic(2, 1, 1.0).unwrap();
        let lat = QuotientLattice::new(pp, 3, 3).unwrap();
        for idx in [0, 1, 5, 17, 40] {
            let x = lat.dual().element(idx);
            assert!(real_part_variant_check(&x, &pp, &lat).unwrap() < 1e-13);
        }
    }

    #[test]
    fn negative_definite() {
        let pp = FieldParams::qadic(3, 2, 1.3).unwrap();
        let lat = QuotientLattice::new(pp, 1, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            assert!(negative_definite_witness(&lat, 7, &mut rng) <= 1e-10);
        }
    }

    #[test]
    fn lattice_route_matches_radial() {
        let pp = FieldParams::qadic(2, 1, 1.0).unwrap();
        let lat = QuotientLattice::new(pp, 3, 3).unwrap();
        let f = RadialProfile::from_real(pp, -2, &[1.0, -0.5, 2.0, 0.25]).unwrap();
        let lifted = QuotientFunction::from_radial(&lat, &f).unwrap();
        let d = taibleson_lattice(&lifted, &pp);
        // f is constant on G_{N−1} ⊃ cosets, so the zero coset carries D^α f(0)
        assert!((d.values()[0] - taibleson_hypersingular(&f, None, &pp)).norm() < 1e-12);
        for idx in 1..lat.order() {
            let k = lat.norm_of_index(idx).scale().unwrap().0;
            assert!((d.values()[idx] - taibleson_hypersingular(&f, Some(k), &pp)).norm() < 1e-12, "idx={idx}");
        }
    }
}
