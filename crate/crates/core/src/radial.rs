//! Radial functions on K^n stored crown by crown.
//!
//! A profile holds `c_k` for `k ∈ [kmin, kmax]`, meaning `f = c_k` on
//! `‖x‖ = q^{-k}`, zero on the outer crowns `k < kmin`, and either zero or a
//! constant on the inner crowns `k > kmax`. All integral operations are
//! closed-form on this representation.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::FieldParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerTail {
    Zero,
    Constant(Complex64),
}

impl InnerTail {
    pub fn value(self) -> Complex64 {
        match self {
            InnerTail::Zero => Complex64::new(0.0, 0.0),
            InnerTail::Constant(c) => c,
        }
    }

    fn from_value(c: Complex64) -> Self {
        if c == Complex64::new(0.0, 0.0) {
            InnerTail::Zero
        } else {
            InnerTail::Constant(c)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    params: FieldParams,
    kmin: i64,
    coeffs: Vec<Complex64>,
    inner_tail: InnerTail,
}

impl RadialProfile {
    pub fn new(params: FieldParams, kmin: i64, coeffs: Vec<Complex64>, inner_tail: InnerTail) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParams("a profile needs at least one crown".into()));
        }
        if coeffs.iter().chain(std::iter::once(&inner_tail.value())).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParams("profile coefficients must be finite".into()));
        }
        Ok(RadialProfile { params, kmin, coeffs, inner_tail })
    }

    /// Real coefficients, zero inner tail.
    pub fn from_real(params: FieldParams, kmin: i64, coeffs: &[f64]) -> Result<Self> {
        Self::new(params, kmin, coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(), InnerTail::Zero)
    }

    pub fn from_fn(
        params: FieldParams,
        kmin: i64,
        kmax: i64,
        inner_tail: InnerTail,
        f: impl Fn(i64) -> Complex64,
    ) -> Result<Self> {
        if kmax < kmin {
            return Err(Error::InvalidParams(format!("empty window [{kmin}, {kmax}]")));
        }
        Self::new(params, kmin, (kmin..=kmax).map(f).collect(), inner_tail)
    }

    pub fn zero(params: FieldParams) -> Self {
        RadialProfile { params, kmin: 0, coeffs: vec![Complex64::new(0.0, 0.0)], inner_tail: InnerTail::Zero }
    }

    /// `1_{G_k}`
    pub fn ball_indicator(params: FieldParams, k: i64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        RadialProfile { params, kmin: k, coeffs: vec![one], inner_tail: InnerTail::Constant(one) }
    }

    /// `1_{G_k} / μ(G_k)`
    pub fn normalized_ball(params: FieldParams, k: i64) -> Self {
        Self::ball_indicator(params, k).scale(Complex64::new(1.0 / params.ball(k), 0.0))
    }

    /// `c · 1_{‖x‖ = q^{-k}}`
    pub fn crown(params: FieldParams, k: i64, c: Complex64) -> Self {
        RadialProfile { params, kmin: k, coeffs: vec![c], inner_tail: InnerTail::Zero }
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn kmin(&self) -> i64 {
        self.kmin
    }

    pub fn kmax(&self) -> i64 {
        self.kmin + self.coeffs.len() as i64 - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn inner_tail(&self) -> InnerTail {
        self.inner_tail
    }

    /// Value on crown `k`.
    pub fn value(&self, k: i64) -> Complex64 {
        if k < self.kmin {
            Complex64::new(0.0, 0.0)
        } else if k > self.kmax() {
            self.inner_tail.value()
        } else {
            self.coeffs[(k - self.kmin) as usize]
        }
    }

    /// Value at the origin, i.e. the inner tail.
    pub fn value_at_zero(&self) -> Complex64 {
        self.inner_tail.value()
    }

    /// Same function on the wider window `[lo, hi]`.
    pub fn widen(&self, lo: i64, hi: i64) -> Self {
        let lo = lo.min(self.kmin);
        let hi = hi.max(self.kmax());
        RadialProfile {
            params: self.params,
            kmin: lo,
            coeffs: (lo..=hi).map(|k| self.value(k)).collect(),
            inner_tail: self.inner_tail,
        }
    }

    /// Drops leading zero crowns and trailing crowns equal to the tail.
    pub fn trimmed(&self) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let tail = self.inner_tail.value();
        let first = self.coeffs.iter().position(|&c| c != zero);
        let Some(first) = first else {
            return RadialProfile { params: self.params, kmin: self.kmax(), coeffs: vec![zero], inner_tail: self.inner_tail };
        };
        let mut last = self.coeffs.len() - 1;
        while last > first && self.coeffs[last] == tail {
            last -= 1;
        }
        RadialProfile {
            params: self.params,
            kmin: self.kmin + first as i64,
            coeffs: self.coeffs[first..=last].to_vec(),
            inner_tail: self.inner_tail,
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        assert!(f(zero).norm() == 0.0, "map must send 0 to 0 to keep the outer tail");
        RadialProfile {
            params: self.params,
            kmin: self.kmin,
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
            inner_tail: InnerTail::from_value(f(self.inner_tail.value())),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|c| c * s)
    }

    /// Pointwise `|f|`.
    pub fn abs(&self) -> Self {
        self.map(|c| Complex64::new(c.norm(), 0.0))
    }

    /// Pointwise combination over the union window. `op(0, 0)` must be 0.
    pub fn zip_with(&self, other: &Self, op: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_params(other)?;
        let lo = self.kmin.min(other.kmin);
        let hi = self.kmax().max(other.kmax());
        Ok(RadialProfile {
            params: self.params,
            kmin: lo,
            coeffs: (lo..=hi).map(|k| op(self.value(k), other.value(k))).collect(),
            inner_tail: InnerTail::from_value(op(self.inner_tail.value(), other.inner_tail.value())),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    fn check_params(&self, other: &Self) -> Result<()> {
        if self.params.q() != other.params.q() || self.params.n() != other.params.n() {
            return Err(Error::InvalidParams(format!(
                "profiles over different fields: {} vs {}",
                self.params, other.params
            )));
        }
        Ok(())
    }

    /// Largest modulus over the whole support, tail included.
    pub fn sup_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.norm())
            .chain(std::iter::once(self.inner_tail.value().norm()))
            .fold(0.0, f64::max)
    }

    /// Largest `|f(x) − g(x)|` over all crowns.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let lo = self.kmin.min(other.kmin);
        let hi = self.kmax().max(other.kmax());
        (lo..=hi)
            .map(|k| (self.value(k) - other.value(k)).norm())
            .chain(std::iter::once((self.inner_tail.value() - other.inner_tail.value()).norm()))
            .fold(0.0, f64::max)
    }

    pub fn improper_integral(&self) -> Complex64 {
        let window: Complex64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * self.params.sphere(self.kmin + i as i64))
            .sum();
        window + self.inner_tail.value() * self.params.ball(self.kmax() + 1)
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidParams(format!("p = {p} must be at least 1")));
        }
        if p.is_infinite() {
            return Ok(self.sup_abs());
        }
        let window: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.norm().powf(p) * self.params.sphere(self.kmin + i as i64))
            .sum();
        let tail = self.inner_tail.value().norm().powf(p) * self.params.ball(self.kmax() + 1);
        Ok((window + tail).powf(1.0 / p))
    }

    /// Radial Fourier transform. Both directions agree on radial inputs.
    ///
    /// The output at `‖ξ‖ = q^m` (crown `-m`) is
    /// `Σ_{k ≥ m} c_k μ(S_k) − c_{m-1} q^{-nm}`.
    pub fn fourier(&self, _direction: Direction) -> Self {
        let kmax = self.kmax();
        let p = &self.params;
        // m runs over [kmin, kmax + 1]; suffix[m - kmin] = Σ_{k ≥ m} c_k μ(S_k)
        let len = self.coeffs.len() + 1;
        let mut suffix = vec![Complex64::new(0.0, 0.0); len];
        let mut acc = self.inner_tail.value() * p.ball(kmax + 1);
        suffix[len - 1] = acc;
        for i in (0..self.coeffs.len()).rev() {
            acc += self.coeffs[i] * p.sphere(self.kmin + i as i64);
            suffix[i] = acc;
        }
        // output crown j = -m, window [-(kmax+1), -kmin], increasing j
        let coeffs = (0..len)
            .rev()
            .map(|i| {
                let m = self.kmin + i as i64;
                suffix[i] - self.value(m - 1) * p.ball(m)
            })
            .collect();
        RadialProfile {
            params: self.params,
            kmin: -(kmax + 1),
            coeffs,
            inner_tail: InnerTail::from_value(suffix[0]),
        }
    }

    /// Per-crown evaluation of the transform from the sphere-character
    /// integrals, without suffix sums.
    pub fn fourier_naive(&self) -> Self {
        let p = &self.params;
        let kmax = self.kmax();
        let eval = |e: Option<i64>| -> Complex64 {
            let window: Complex64 = (self.kmin..=kmax)
                .map(|k| self.value(k) * crate::field::sphere_character_integral_f64(k, e, p))
                .sum();
            // inner crowns: for ‖ξ‖ > q^{kmax+1} the crown e-1 cancels the ball G_e
            let tail = match e {
                Some(e) if e > kmax + 1 => Complex64::new(0.0, 0.0),
                _ => self.inner_tail.value() * p.ball(kmax + 1),
            };
            window + tail
        };
        RadialProfile {
            params: self.params,
            kmin: -(kmax + 1),
            coeffs: (-(kmax + 1)..=-self.kmin).map(|j| eval(Some(-j))).collect(),
            inner_tail: InnerTail::from_value(eval(None)),
        }
    }

    /// `|f|` replaced by its radially decreasing majorant
    /// `sup_{‖y‖ ≥ ‖x‖} |f(y)|`.
    pub fn majorant(&self) -> Self {
        let mut run = 0.0f64;
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                run = run.max(c.norm());
                Complex64::new(run, 0.0)
            })
            .collect();
        let tail = run.max(self.inner_tail.value().norm());
        RadialProfile {
            params: self.params,
            kmin: self.kmin,
            coeffs,
            inner_tail: InnerTail::from_value(Complex64::new(tail, 0.0)),
        }
    }

    /// CSV with a header comment: `# q=..,n=..,kmin=..,kmax=..,inner_tail=re:im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let tail = match self.inner_tail {
            InnerTail::Zero => "zero".to_string(),
            InnerTail::Constant(c) => format!("{:e}:{:e}", c.re, c.im),
        };
        let _ = writeln!(
            out,
            "# q={},n={},kmin={},kmax={},inner_tail={}",
            self.params.q(),
            self.params.n(),
            self.kmin,
            self.kmax(),
            tail
        );
        out.push_str("k,re,im\n");
        for (i, c) in self.coeffs.iter().enumerate() {
            let _ = writeln!(out, "{},{:e},{:e}", self.kmin + i as i64, c.re, c.im);
        }
        out
    }

    /// Inverse of [`to_csv`](Self::to_csv). `alpha` is not stored in the file.
    pub fn from_csv(text: &str, alpha: f64) -> Result<Self> {
        let mut header = None;
        let mut rows = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(h) = line.strip_prefix('#') {
                header = Some(h.trim().to_string());
            } else if line.starts_with('k') {
                continue;
            } else {
                let parts: Vec<&str> = line.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(Error::Parse(format!("expected k,re,im in `{line}`")));
                }
                let k: i64 = parts[0].parse().map_err(|_| Error::Parse(format!("bad crown `{}`", parts[0])))?;
                let re: f64 = parse_f64(parts[1])?;
                let im: f64 = parse_f64(parts[2])?;
                rows.push((k, Complex64::new(re, im)));
            }
        }
        let header = header.ok_or_else(|| Error::Parse("missing `# q=...` header".into()))?;
        let mut q = None;
        let mut n = None;
        let mut tail = InnerTail::Zero;
        for kv in header.split(',') {
            let (key, val) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("bad header field `{kv}`")))?;
            match key.trim() {
                "q" => q = Some(val.trim().parse::<u32>().map_err(|_| Error::Parse("bad q".into()))?),
                "n" => n = Some(val.trim().parse::<u32>().map_err(|_| Error::Parse("bad n".into()))?),
                "inner_tail" => tail = parse_tail(val.trim())?,
                _ => {}
            }
        }
        let params = FieldParams::new(
            q.ok_or_else(|| Error::Parse("header lacks q".into()))?,
            n.ok_or_else(|| Error::Parse("header lacks n".into()))?,
            alpha,
        )?;
        rows.sort_by_key(|r| r.0);
        let Some(&(kmin, _)) = rows.first() else {
            return Err(Error::Parse("no crown rows".into()));
        };
        for (i, (k, _)) in rows.iter().enumerate() {
            if *k != kmin + i as i64 {
                return Err(Error::Parse(format!("crowns must be contiguous; gap before k = {k}")));
            }
        }
        Self::new(params, kmin, rows.into_iter().map(|r| r.1).collect(), tail)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("bad number `{s}`")))
}

fn parse_tail(s: &str) -> Result<InnerTail> {
    if s.eq_ignore_ascii_case("zero") {
        return Ok(InnerTail::Zero);
    }
    let c = parse_complex(s)?;
    Ok(InnerTail::from_value(c))
}

/// `re:im` or a bare real.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    match s.split_once(':') {
        Some((re, im)) => Ok(Complex64::new(parse_f64(re.trim())?, parse_f64(im.trim())?)),
        None => Ok(Complex64::new(parse_f64(s.trim())?, 0.0)),
    }
}

pub fn radial_fourier(f: &RadialProfile, direction: Direction) -> RadialProfile {
    f.fourier(direction)
}

/// `g ∗ f` through the product of transforms.
pub fn convolve(g: &RadialProfile, f: &RadialProfile) -> Result<RadialProfile> {
    let prod = g.fourier(Direction::Forward).mul(&f.fourier(Direction::Forward))?;
    Ok(prod.fourier(Direction::Inverse))
}

/// Direct crown double sum for `g ∗ f`; quadratic in the window.
///
/// On crown `j` the integrand splits as `k < j: g_k f_k μ(S_k)`,
/// `k > j: g_k f_j μ(S_k)` and `k = j: g_j (f_j q^{-jn}(1 − 2q^{-n}) + Σ_{l>j} f_l μ(S_l))`.
pub fn convolve_direct(g: &RadialProfile, f: &RadialProfile) -> Result<RadialProfile> {
    g.check_params(f)?;
    let p = g.params;
    let lo = g.kmin.min(f.kmin);
    let top = g.kmax().max(f.kmax()) + 1;
    let qn = p.qpow(-p.nf());
    // Σ_{k > j} h_k μ(S_k) where h is constant from `top` on
    let tail_sum = |h: &dyn Fn(i64) -> Complex64, j: i64| -> Complex64 {
        let start = j + 1;
        if start >= top {
            return h(start) * p.ball(start);
        }
        let window: Complex64 = (start..top).map(|k| h(k) * p.sphere(k)).sum();
        window + h(top) * p.ball(top)
    };
    let value = |j: i64| -> Complex64 {
        let outer: Complex64 = (lo..j).map(|k| g.value(k) * f.value(k) * p.sphere(k)).sum();
        let inner = f.value(j) * tail_sum(&|k| g.value(k), j);
        let diag = g.value(j) * (f.value(j) * p.ball(j) * (1.0 - 2.0 * qn) + tail_sum(&|k| f.value(k), j));
        outer + inner + diag
    };
    let gf_integral = g.mul(f)?.improper_integral();
    Ok(RadialProfile {
        params: p,
        kmin: lo,
        coeffs: (lo..=top).map(value).collect(),
        inner_tail: InnerTail::from_value(gf_integral),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn p(q: u32, n: u32) -> FieldParams {
        FieldParams::new(q, n, 1.0).unwrap()
    }

    #[test]
    fn integrals() {
        assert!((RadialProfile::ball_indicator(p(3, 2), 0).improper_integral() - c(1.0)).norm() < 1e-15);
        let f = RadialProfile::crown(p(3, 1), 0, c(1.0));
        assert!((f.improper_integral() - c(2.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn norms() {
        assert_eq!(RadialProfile::zero(p(2, 1)).lp_norm(2.0).unwrap(), 0.0);
        let ind = RadialProfile::ball_indicator(p(3, 1), 0);
        for q in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((ind.lp_norm(q).unwrap() - 1.0).abs() < 1e-15);
        }
        let f = RadialProfile::crown(p(2, 1), 0, c(2.0));
        assert!((f.lp_norm(2.0).unwrap() - 2.0 * 0.5f64.sqrt()).abs() < 1e-15);
        assert!(f.lp_norm(0.5).is_err());
    }

    #[test]
    fn ball_indicator_is_self_dual() {
        for &(q, n) in &[(2, 1), (3, 2), (5, 1)] {
            let ind = RadialProfile::ball_indicator(p(q, n), 0);
            let hat = ind.fourier(Direction::Forward);
            assert!(hat.max_diff(&ind) < 1e-15, "{hat:?}");
            // general ball: 1_{G_k} ↦ q^{-kn} 1_{G_{-k}}
            let ind3 = RadialProfile::ball_indicator(p(q, n), 3);
            let expect = RadialProfile::ball_indicator(p(q, n), -3).scale(c(p(q, n).ball(3)));
            assert!(ind3.fourier(Direction::Forward).max_diff(&expect) < 1e-15);
        }
    }

    #[test]
    fn crown_transform_matches_sphere_integrals() {
        let pp = p(3, 1);
        let k0 = 2;
        let f = RadialProfile::crown(pp, k0, c(1.0 / pp.sphere(k0)));
        let hat = f.fourier(Direction::Forward);
        for j in -6..6 {
            let e = -j;
            let expect = crate::field::sphere_character_integral_f64(k0, Some(e), &pp) / pp.sphere(k0);
            assert!((hat.value(j) - c(expect)).norm() < 1e-13, "j={j}");
        }
        assert!((hat.value_at_zero() - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn suffix_sum_agrees_with_naive() {
        let pp = p(2, 2);
        let f = RadialProfile::from_fn(pp, -3, 4, InnerTail::Constant(Complex64::new(0.5, -1.0)), |k| {
            Complex64::new(k as f64 * 0.3 - 1.0, (k * k) as f64 * 0.1)
        })
        .unwrap();
        let a = f.fourier(Direction::Forward);
        let b = f.fourier_naive();
        assert!(a.max_diff(&b) < 1e-12 * f.sup_abs().max(1.0) * pp.ball(-3));
    }

    #[test]
    fn majorant_running_max() {
        let f = RadialProfile::from_real(p(2, 1), 0, &[0.0, 5.0, 1.0]).unwrap();
        let m = f.majorant();
        assert_eq!(m.coeffs(), &[c(0.0), c(5.0), c(5.0)]);
        assert_eq!(m.inner_tail(), InnerTail::Constant(c(5.0)));
        let dec = RadialProfile::from_real(p(2, 1), 0, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(dec.majorant().coeffs(), dec.abs().coeffs());
    }

    #[test]
    fn convolution_with_normalized_ball_averages() {
        let pp = p(3, 1);
        let f = RadialProfile::from_real(pp, -2, &[1.0, -2.0, 0.5, 4.0, 3.0]).unwrap();
        let k = 0;
        let avg = convolve(&f, &RadialProfile::normalized_ball(pp, k)).unwrap();
        // on ‖x‖ > q^{-k} the ball average is f itself; inside G_k it is the mean over G_k
        let mean: Complex64 = f.mul(&RadialProfile::ball_indicator(pp, k)).unwrap().improper_integral() / pp.ball(k);
        for j in -4..6 {
            let expect = if j < k { f.value(j) } else { mean };
            assert!((avg.value(j) - expect).norm() < 1e-12, "j={j}");
        }
    }

    #[test]
    fn convolution_routes_agree() {
        let pp = p(2, 1);
        let g = RadialProfile::from_real(pp, -1, &[0.3, 1.0, -0.7, 2.0]).unwrap();
        let f = RadialProfile::new(
            pp,
            0,
            vec![Complex64::new(1.0, 1.0), c(-0.5), c(0.25)],
            InnerTail::Constant(c(0.1)),
        )
        .unwrap();
        let a = convolve(&g, &f).unwrap();
        let b = convolve_direct(&g, &f).unwrap();
        assert!(a.max_diff(&b) < 1e-12, "{a:?} vs {b:?}");
    }

    #[test]
    fn csv_roundtrip() {
        let f = RadialProfile::new(p(3, 2), -1, vec![c(1.0), Complex64::new(0.25, -2.0)], InnerTail::Constant(c(0.5)))
            .unwrap();
        let g = RadialProfile::from_csv(&f.to_csv(), 1.0).unwrap();
        assert_eq!(f, g);
    }
}
