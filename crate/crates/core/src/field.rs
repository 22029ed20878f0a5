//! Local-field models: q-power norms, scale indexing, Haar measures of balls
//! and spheres, and additive characters on finite quotients of Q_q^n.
//!
//! Scale convention: a [`ScaleIndex`] `k` always denotes the sphere
//! `{‖x‖ = q^{-k}}` and the ball `G_k = {‖x‖ ≤ q^{-k}}`. Sums that enumerate
//! spheres by their radius `q^k` translate with `k ↦ -k` at the call site.
//!
//! Measures are exact rationals; the Haar measure is normalised by
//! `μ(O^n) = 1`.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldModel {
    /// Only `(q, n, α)` are known; no element representation.
    GenericRadial,
    /// `Q_q^n` with `q` prime, modelled on finite quotients `G_{-M}/G_N`.
    QadicQuotient,
}

/// `(q, n, α)` plus the concrete-field tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    q: u32,
    n: u32,
    alpha: f64,
    model: FieldModel,
}

impl FieldParams {
    /// Generic radial model: any residue cardinality `q ≥ 2`.
    pub fn new(q: u32, n: u32, alpha: f64) -> Result<Self> {
        Self::with_model(q, n, alpha, FieldModel::GenericRadial)
    }

    /// The q-adic model; requires `q` prime.
    pub fn qadic(q: u32, n: u32, alpha: f64) -> Result<Self> {
        Self::with_model(q, n, alpha, FieldModel::QadicQuotient)
    }

    pub fn with_model(q: u32, n: u32, alpha: f64, model: FieldModel) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParams(format!("q = {q} must be at least 2")));
        }
        if n < 1 {
            return Err(Error::InvalidParams("dimension n must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParams(format!("alpha = {alpha} must be positive")));
        }
        if model == FieldModel::QadicQuotient && !is_prime(q) {
            return Err(Error::InvalidParams(format!(
                "q = {q} is not prime; the q-adic quotient model needs a prime q"
            )));
        }
        Ok(FieldParams { q, n, alpha, model })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn model(&self) -> FieldModel {
        self.model
    }

    /// Same field, different exponent.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::with_model(self.q, self.n, alpha, self.model)
    }

    pub fn qf(&self) -> f64 {
        self.q as f64
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// `q^e` in floating point.
    pub fn qpow(&self, e: f64) -> f64 {
        self.qf().powf(e)
    }

    /// `μ(G_k) = q^{-kn}`.
    pub fn ball(&self, k: i64) -> f64 {
        self.qpow(-(k as f64) * self.nf())
    }

    /// `μ(G_k − G_{k+1}) = q^{-kn}(1 − q^{-n})`.
    pub fn sphere(&self, k: i64) -> f64 {
        self.ball(k) * (1.0 - self.qpow(-self.nf()))
    }

    /// Eigenvalue `‖ξ‖^α` of the Taibleson operator on the Fourier crown `j`.
    pub fn eigenvalue(&self, j: i64) -> f64 {
        self.qpow(-(j as f64) * self.alpha)
    }
}

impl fmt::Display for FieldParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q={},n={},alpha={}", self.q, self.n, self.alpha)
    }
}

fn is_prime(q: u32) -> bool {
    q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| !q.is_multiple_of(d))
}

/// Sphere/ball index: `k` names `{‖x‖ = q^{-k}}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScaleIndex(pub i64);

impl ScaleIndex {
    pub fn norm(self) -> QNorm {
        QNorm::Pow(-self.0)
    }
}

/// A value of `‖·‖` on `K^n`: zero or an integral power of `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QNorm {
    Zero,
    /// `q^e`
    Pow(i64),
}

impl QNorm {
    pub fn of_scale(k: i64) -> Self {
        QNorm::Pow(-k)
    }

    /// The sphere index of a nonzero norm.
    pub fn scale(self) -> Option<ScaleIndex> {
        match self {
            QNorm::Zero => None,
            QNorm::Pow(e) => Some(ScaleIndex(-e)),
        }
    }

    pub fn to_f64(self, q: u32) -> f64 {
        match self {
            QNorm::Zero => 0.0,
            QNorm::Pow(e) => (q as f64).powi(e as i32),
        }
    }

    pub fn to_rational(self, q: u32) -> Rational {
        match self {
            QNorm::Zero => Rational::zero(),
            QNorm::Pow(e) => qpow_rational(q, e),
        }
    }

    /// Validates that `r` is `0` or an integral power of `q`.
    pub fn from_rational(q: u32, r: &Rational) -> Result<Self> {
        if r.is_zero() {
            return Ok(QNorm::Zero);
        }
        let qb = BigInt::from(q);
        let (mut num, mut den) = (r.numer().clone(), r.denom().clone());
        if num < BigInt::zero() {
            return Err(Error::InvalidParams(format!("norm {r} is negative")));
        }
        let mut e = 0i64;
        while num > BigInt::one() && (&num % &qb).is_zero() {
            num /= &qb;
            e += 1;
        }
        while den > BigInt::one() && (&den % &qb).is_zero() {
            den /= &qb;
            e -= 1;
        }
        if num.is_one() && den.is_one() {
            Ok(QNorm::Pow(e))
        } else {
            Err(Error::InvalidParams(format!("{r} is not an integral power of q = {q}")))
        }
    }
}

impl PartialOrd for QNorm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QNorm {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (QNorm::Zero, QNorm::Zero) => Ordering::Equal,
            (QNorm::Zero, _) => Ordering::Less,
            (_, QNorm::Zero) => Ordering::Greater,
            (QNorm::Pow(a), QNorm::Pow(b)) => a.cmp(b),
        }
    }
}

/// Exact `q^e`.
pub fn qpow_rational(q: u32, e: i64) -> Rational {
    let base = BigInt::from(q).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        Rational::from_integer(base)
    } else {
        Rational::new(BigInt::one(), base)
    }
}

pub fn ball_measure(k: ScaleIndex, params: &FieldParams) -> Rational {
    qpow_rational(params.q, -k.0 * params.n as i64)
}

pub fn sphere_measure(k: ScaleIndex, params: &FieldParams) -> Rational {
    let n = params.n as i64;
    qpow_rational(params.q, -k.0 * n) - qpow_rational(params.q, -(k.0 + 1) * n)
}

/// `∫_{‖y‖ = q^{-k}} χ(x·y) dy` as a function of `‖x‖` alone.
pub fn sphere_character_integral(k: ScaleIndex, norm_x: QNorm, params: &FieldParams) -> Rational {
    let n = params.n as i64;
    match norm_x {
        QNorm::Pow(e) if e > k.0 + 1 => Rational::zero(),
        QNorm::Pow(e) if e == k.0 + 1 => -qpow_rational(params.q, -n * (k.0 + 1)),
        _ => sphere_measure(k, params),
    }
}

/// Floating-point twin of [`sphere_character_integral`], used inside sums.
pub fn sphere_character_integral_f64(k: i64, norm_exp: Option<i64>, params: &FieldParams) -> f64 {
    match norm_exp {
        Some(e) if e > k + 1 => 0.0,
        Some(e) if e == k + 1 => -params.ball(k + 1),
        _ => params.sphere(k),
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// The finite quotient `G_{-M}/G_N` of `Q_q^n`.
///
/// Each coordinate is an integer `a ∈ [0, q^{M+N})` standing for
/// `a·q^{-M} = Σ_{j=-M}^{N-1} x_j q^j`; addition carries and wraps modulo
/// `q^{M+N}`. The flat index of an element is the mixed-radix encoding of its
/// digits, little-endian in `j` within a coordinate and coordinate-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientLattice {
    params: FieldParams,
    outer: u32,
    resolution: u32,
}

impl QuotientLattice {
    /// `outer = M` (support in the ball of radius `q^M`), `resolution = N`
    /// (constancy on cosets of `G_N`).
    pub fn new(params: FieldParams, outer: u32, resolution: u32) -> Result<Self> {
        if params.model != FieldModel::QadicQuotient {
            return Err(Error::InvalidParams(
                "quotient lattices need the QadicQuotient model".into(),
            ));
        }
        let lattice = QuotientLattice { params, outer, resolution };
        let bits = (lattice.digits() * params.n) as f64 * (params.q as f64).log2();
        if bits > 40.0 {
            return Err(Error::InvalidParams(format!(
                "lattice of order q^{} is too large to enumerate",
                lattice.digits() * params.n
            )));
        }
        Ok(lattice)
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn outer(&self) -> u32 {
        self.outer
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Digits per coordinate, `M + N`.
    pub fn digits(&self) -> u32 {
        self.outer + self.resolution
    }

    /// Size of each cyclic coordinate group, `q^{M+N}`.
    pub fn modulus(&self) -> u64 {
        (self.params.q as u64).pow(self.digits())
    }

    /// Group order `q^{n(M+N)}`.
    pub fn order(&self) -> usize {
        (self.modulus() as usize).pow(self.params.n)
    }

    /// Pontryagin dual `G_{-N}/G_M`: the frequencies that pair with this
    /// lattice through `χ(x·y)`.
    pub fn dual(&self) -> Self {
        QuotientLattice { params: self.params, outer: self.resolution, resolution: self.outer }
    }

    /// Haar measure of one coset of `G_N`, `q^{-Nn}`.
    pub fn coset_measure(&self) -> f64 {
        self.params.ball(self.resolution as i64)
    }

    pub fn coset_measure_rational(&self) -> Rational {
        qpow_rational(self.params.q, -(self.resolution as i64) * self.params.n as i64)
    }

    pub fn element(&self, index: usize) -> LatticeElement {
        let m = self.modulus() as usize;
        let mut rest = index;
        let coords = (0..self.params.n)
            .map(|_| {
                let c = (rest % m) as u64;
                rest /= m;
                c
            })
            .collect();
        LatticeElement { lattice: *self, coords }
    }

    /// Element from its coordinate integers, reduced modulo `q^{M+N}`.
    pub fn from_coords(&self, coords: &[u64]) -> Result<LatticeElement> {
        if coords.len() != self.params.n as usize {
            return Err(Error::LatticeMismatch(format!(
                "expected {} coordinates, got {}",
                self.params.n,
                coords.len()
            )));
        }
        let m = self.modulus();
        Ok(LatticeElement { lattice: *self, coords: coords.iter().map(|c| c % m).collect() })
    }

    pub fn zero(&self) -> LatticeElement {
        LatticeElement { lattice: *self, coords: vec![0; self.params.n as usize] }
    }

    pub fn elements(&self) -> impl Iterator<Item = LatticeElement> + '_ {
        (0..self.order()).map(move |i| self.element(i))
    }

    /// Exponent `e` with `|a·q^{-M}| = q^e`, or `None` for the zero coset.
    pub fn coord_norm_exp(&self, a: u64) -> Option<i64> {
        if a == 0 {
            return None;
        }
        let q = self.params.q as u64;
        let mut v = 0i64;
        let mut a = a;
        while a.is_multiple_of(q) {
            a /= q;
            v += 1;
        }
        Some(self.outer as i64 - v)
    }

    /// `‖x‖` for the flat index without materialising the element.
    pub fn norm_of_index(&self, index: usize) -> QNorm {
        let m = self.modulus() as usize;
        let mut rest = index;
        let mut best: Option<i64> = None;
        for _ in 0..self.params.n {
            let c = (rest % m) as u64;
            rest /= m;
            if let Some(e) = self.coord_norm_exp(c) {
                best = Some(best.map_or(e, |b| b.max(e)));
            }
        }
        best.map_or(QNorm::Zero, QNorm::Pow)
    }

    /// Index of the element with every coordinate negated.
    pub fn neg_index(&self, index: usize) -> usize {
        self.combine_index(0, index, |_, b, m| (m - b) % m)
    }

    /// Index of `x + y`.
    pub fn add_index(&self, x: usize, y: usize) -> usize {
        self.combine_index(x, y, |a, b, m| (a + b) % m)
    }

    /// Index of `x − y`.
    pub fn sub_index(&self, x: usize, y: usize) -> usize {
        self.combine_index(x, y, |a, b, m| (a + m - b) % m)
    }

    fn combine_index(&self, x: usize, y: usize, op: impl Fn(usize, usize, usize) -> usize) -> usize {
        let m = self.modulus() as usize;
        let (mut xr, mut yr) = (x, y);
        let mut out = 0usize;
        let mut stride = 1usize;
        for _ in 0..self.params.n {
            out += op(xr % m, yr % m, m) * stride;
            xr /= m;
            yr /= m;
            stride *= m;
        }
        out
    }

    /// Index of the coset of `G_i` containing `index`, among the
    /// `q^{n(i+M)}` cosets of `G_i/G_N` in the lattice.
    pub fn coset_key(&self, index: usize, i: i64) -> usize {
        let m = self.modulus() as usize;
        let width = (self.params.q as usize).pow((i + self.outer as i64) as u32);
        let mut rest = index;
        let mut key = 0usize;
        let mut stride = 1usize;
        for _ in 0..self.params.n {
            key += (rest % m % width) * stride;
            rest /= m;
            stride *= width;
        }
        key
    }

    /// Representative of `x` in a lattice with at least as many digits on
    /// both sides. Digits beyond the source resolution are set to zero.
    pub fn embed(&self, x: &LatticeElement, target: &QuotientLattice) -> Result<LatticeElement> {
        if x.lattice != *self {
            return Err(Error::LatticeMismatch("element does not belong to this lattice".into()));
        }
        if target.params.q != self.params.q
            || target.params.n != self.params.n
            || target.outer < self.outer
            || target.resolution < self.resolution
        {
            return Err(Error::LatticeMismatch("target lattice does not refine the source".into()));
        }
        let shift = (self.params.q as u64).pow(target.outer - self.outer);
        target.from_coords(&x.coords.iter().map(|c| c * shift).collect::<Vec<_>>())
    }
}

/// One element of a [`QuotientLattice`].
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeElement {
    lattice: QuotientLattice,
    coords: Vec<u64>,
}

impl LatticeElement {
    pub fn lattice(&self) -> &QuotientLattice {
        &self.lattice
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn index(&self) -> usize {
        let m = self.lattice.modulus() as usize;
        self.coords.iter().rev().fold(0usize, |acc, &c| acc * m + c as usize)
    }

    pub fn add(&self, other: &LatticeElement) -> Result<LatticeElement> {
        self.same_lattice(other)?;
        let m = self.lattice.modulus();
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| (a + b) % m).collect();
        Ok(LatticeElement { lattice: self.lattice, coords })
    }

    pub fn neg(&self) -> LatticeElement {
        let m = self.lattice.modulus();
        let coords = self.coords.iter().map(|a| (m - a) % m).collect();
        LatticeElement { lattice: self.lattice, coords }
    }

    fn same_lattice(&self, other: &LatticeElement) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch("operands live on different lattices".into()));
        }
        Ok(())
    }
}

/// `‖x‖ = max_i |x_i|_q`; the zero coset maps to `0`.
pub fn norm_of(x: &LatticeElement) -> QNorm {
    x.coords
        .iter()
        .filter_map(|&a| x.lattice.coord_norm_exp(a))
        .max()
        .map_or(QNorm::Zero, QNorm::Pow)
}

/// `{x·y}_q` as the residue `r` of `r / q^{M+N}`, for `x` on a lattice and `y`
/// on its dual (either order).
pub fn character_residue(x: &LatticeElement, y: &LatticeElement) -> Result<u64> {
    if y.lattice != x.lattice.dual() {
        return Err(Error::LatticeMismatch(format!(
            "character pairs G_-M/G_N with its dual; got (M,N) = ({},{}) and ({},{})",
            x.lattice.outer, x.lattice.resolution, y.lattice.outer, y.lattice.resolution
        )));
    }
    let m = x.lattice.modulus() as u128;
    let r = x
        .coords
        .iter()
        .zip(&y.coords)
        .fold(0u128, |acc, (&a, &b)| (acc + (a as u128 * b as u128) % m) % m);
    Ok(r as u64)
}

/// Exact fractional part `{x·y}_q`.
pub fn character_phase(x: &LatticeElement, y: &LatticeElement) -> Result<Rational> {
    let r = character_residue(x, y)?;
    Ok(Rational::new(BigInt::from(r), BigInt::from(x.lattice.modulus())))
}

/// `χ_q(x·y) = e^{2πi {x·y}_q}`.
pub fn character(x: &LatticeElement, y: &LatticeElement) -> Result<Complex64> {
    let r = character_residue(x, y)?;
    Ok(root_of_unity(r, x.lattice.modulus()))
}

/// `e^{2πi r/m}` with the reduction done in integers.
pub fn root_of_unity(r: u64, m: u64) -> Complex64 {
    let r = r % m;
    if r == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if 2 * r == m {
        return Complex64::new(-1.0, 0.0);
    }
    if 4 * r == m {
        return Complex64::new(0.0, 1.0);
    }
    if 4 * r == 3 * m {
        return Complex64::new(0.0, -1.0);
    }
    Complex64::from_polar(1.0, 2.0 * PI * (r as f64) / (m as f64))
}

/// Exhaustive coset sum of `χ(x·y)` over the lattice sphere `‖y‖ = q^{-k}`.
///
/// `x` must live on `lattice.dual()`; the sphere must be resolved by the
/// lattice, i.e. `-M ≤ k ≤ N − 1`.
pub fn brute_sphere_character_integral(
    k: ScaleIndex,
    x: &LatticeElement,
    lattice: &QuotientLattice,
) -> Result<Complex64> {
    if x.lattice != lattice.dual() {
        return Err(Error::LatticeMismatch("frequency must live on the dual lattice".into()));
    }
    let (m_out, n_res) = (lattice.outer as i64, lattice.resolution as i64);
    if k.0 < -m_out || k.0 > n_res - 1 {
        return Err(Error::WindowTooSmall(format!(
            "sphere k = {} not resolved by lattice with M = {m_out}, N = {n_res}",
            k.0
        )));
    }
    let modulus = lattice.modulus();
    let mut counts = vec![0u64; modulus as usize];
    let target = k.norm();
    for idx in 0..lattice.order() {
        if lattice.norm_of_index(idx) == target {
            let y = lattice.element(idx);
            counts[character_residue(&y, x)? as usize] += 1;
        }
    }
    let sum: Complex64 = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(r, &c)| root_of_unity(r as u64, modulus) * c as f64)
        .sum();
    Ok(sum * lattice.coset_measure())
}

/// Smallest lattice that resolves sphere `k` and carries frequencies with
/// norms in `[q^{k-1}, q^{k+2}]`.
pub fn lattice_for_sphere(params: FieldParams, k: i64) -> Result<QuotientLattice> {
    let outer = (2 - k).max(0) as u32;
    let resolution = (k + 2).max(0) as u32;
    QuotientLattice::new(params, outer, resolution)
}

/// A dual-lattice frequency of norm exactly `q^e` (first coordinate only).
pub fn frequency_with_norm(lattice: &QuotientLattice, e: Option<i64>) -> Result<LatticeElement> {
    let dual = lattice.dual();
    let mut coords = vec![0u64; lattice.params.n as usize];
    if let Some(e) = e {
        // dual coordinate b represents b·q^{-N}, norm q^{N - v(b)}
        let v = dual.outer as i64 - e;
        if v < 0 || v >= dual.digits() as i64 {
            return Err(Error::WindowTooSmall(format!(
                "norm q^{e} not representable on the dual lattice"
            )));
        }
        coords[0] = (lattice.params.q as u64).pow(v as u32);
    }
    dual.from_coords(&coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn rejects_bad_params() {
        assert!(FieldParams::new(1, 1, 1.0).is_err());
        assert!(FieldParams::new(2, 0, 1.0).is_err());
        assert!(FieldParams::new(2, 1, 0.0).is_err());
        assert!(FieldParams::new(4, 1, 1.0).is_ok());
        assert!(FieldParams::qadic(4, 1, 1.0).is_err());
        assert!(FieldParams::qadic(5, 1, 1.0).is_ok());
    }

    #[test]
    fn norm_of_examples() {
        let p = FieldParams::qadic(2, 1, 1.0).unwrap();
        let lat = QuotientLattice::new(p, 4, 2).unwrap();
        assert_eq!(norm_of(&lat.zero()), QNorm::Zero);
        // lowest nonzero digit at j = -3: a = q^{M-3} = 2
        let x = lat.from_coords(&[2]).unwrap();
        assert_eq!(norm_of(&x), QNorm::Pow(3));
        assert_eq!(norm_of(&x).to_f64(2), 8.0);

        let p3 = FieldParams::qadic(3, 2, 1.0).unwrap();
        let lat3 = QuotientLattice::new(p3, 2, 2).unwrap();
        // (unit, 3·unit): a = 9 is a unit (q^M), 27 is 3·unit
        let y = lat3.from_coords(&[9, 27]).unwrap();
        assert_eq!(norm_of(&y).to_f64(3), 1.0);
        assert_eq!(lat3.norm_of_index(y.index()), QNorm::Pow(0));
    }

    #[test]
    fn measures() {
        let p31 = FieldParams::new(3, 1, 1.0).unwrap();
        let p32 = FieldParams::new(3, 2, 1.0).unwrap();
        let p21 = FieldParams::new(2, 1, 1.0).unwrap();
        assert_eq!(sphere_measure(ScaleIndex(0), &p31), rat(2, 3));
        assert_eq!(sphere_measure(ScaleIndex(1), &p32), rat(8, 81));
        assert_eq!(ball_measure(ScaleIndex(0), &p21), rat(1, 1));
        assert_eq!(ball_measure(ScaleIndex(3), &p21), rat(1, 8));
        for k in -5..5 {
            let ratio = ball_measure(ScaleIndex(k + 1), &p32) / ball_measure(ScaleIndex(k), &p32);
            assert_eq!(ratio, rat(1, 9));
        }
    }

    #[test]
    fn sphere_plus_inner_ball_is_ball() {
        for &(q, n) in &[(2, 1), (3, 2), (5, 3), (4, 1)] {
            let p = FieldParams::new(q, n, 1.0).unwrap();
            for k in -6..6 {
                let lhs = sphere_measure(ScaleIndex(k), &p) + ball_measure(ScaleIndex(k + 1), &p);
                assert_eq!(lhs, ball_measure(ScaleIndex(k), &p));
            }
        }
    }

    #[test]
    fn sphere_character_cases() {
        let p31 = FieldParams::new(3, 1, 1.0).unwrap();
        let p21 = FieldParams::new(2, 1, 1.0).unwrap();
        assert_eq!(sphere_character_integral(ScaleIndex(0), QNorm::Zero, &p31), rat(2, 3));
        assert_eq!(sphere_character_integral(ScaleIndex(0), QNorm::Pow(1), &p21), rat(-1, 2));
        assert_eq!(sphere_character_integral(ScaleIndex(0), QNorm::Pow(2), &p21), rat(0, 1));
    }

    #[test]
    fn q_power_validation() {
        assert_eq!(QNorm::from_rational(3, &rat(1, 27)).unwrap(), QNorm::Pow(-3));
        assert_eq!(QNorm::from_rational(3, &rat(9, 1)).unwrap(), QNorm::Pow(2));
        assert_eq!(QNorm::from_rational(3, &rat(0, 1)).unwrap(), QNorm::Zero);
        assert!(QNorm::from_rational(3, &rat(2, 3)).is_err());
        assert!(QNorm::from_rational(2, &Rational::from_f64(0.75).unwrap()).is_err());
    }

    #[test]
    fn character_examples() {
        let p = FieldParams::qadic(2, 1, 1.0).unwrap();
        let lat = QuotientLattice::new(p, 2, 2).unwrap();
        let dual = lat.dual();
        // x·y integral: x = 1 (a = 4), y = 1 (b = 4): product has no negative digits
        let x = lat.from_coords(&[4]).unwrap();
        let y = dual.from_coords(&[4]).unwrap();
        assert_eq!(character(&x, &y).unwrap(), Complex64::new(1.0, 0.0));
        // x = 1/2 (a = 2), y = 1: {x·y} = 1/2
        let xh = lat.from_coords(&[2]).unwrap();
        assert_eq!(character_phase(&xh, &y).unwrap(), rat(1, 2));
        assert_eq!(character(&xh, &y).unwrap(), Complex64::new(-1.0, 0.0));
        // mismatched lattices are rejected
        let skew = QuotientLattice::new(p, 2, 1).unwrap();
        assert!(character(&x, &skew.from_coords(&[1]).unwrap()).is_err());
    }

    #[test]
    fn character_homomorphism_and_symmetry() {
        let p = FieldParams::qadic(3, 2, 1.0).unwrap();
        let lat = QuotientLattice::new(p, 1, 2).unwrap();
        let dual = lat.dual();
        for xi in (0..lat.order()).step_by(17) {
            for xj in (0..lat.order()).step_by(23) {
                let x = lat.element(xi);
                let x2 = lat.element(xj);
                let sum = x.add(&x2).unwrap();
                for yi in (0..dual.order()).step_by(13) {
                    let y = dual.element(yi);
                    let lhs = character(&sum, &y).unwrap();
                    let rhs = character(&x, &y).unwrap() * character(&x2, &y).unwrap();
                    assert!((lhs - rhs).norm() < 1e-12);
                    assert_eq!(character(&x, &y).unwrap(), character(&y, &x).unwrap());
                }
            }
        }
    }

    #[test]
    fn character_orthogonality() {
        let p = FieldParams::qadic(2, 2, 1.0).unwrap();
        let lat = QuotientLattice::new(p, 2, 1).unwrap();
        let dual = lat.dual();
        for xi in 0..dual.order() {
            let x = dual.element(xi);
            let s: Complex64 = lat.elements().map(|y| character(&y, &x).unwrap()).sum::<Complex64>()
                * lat.coset_measure();
            if xi == 0 {
                assert!((s - Complex64::new(lat.coset_measure() * lat.order() as f64, 0.0)).norm() < 1e-12);
            } else {
                assert!(s.norm() < 1e-12, "xi = {xi}: {s}");
            }
        }
    }

    #[test]
    fn brute_force_matches_closed_form_small() {
        let p = FieldParams::qadic(3, 1, 1.0).unwrap();
        for k in -2..=2 {
            let lat = lattice_for_sphere(p, k).unwrap();
            for e in [None, Some(k - 1), Some(k), Some(k + 1), Some(k + 2)] {
                let x = frequency_with_norm(&lat, e).unwrap();
                let brute = brute_sphere_character_integral(ScaleIndex(k), &x, &lat).unwrap();
                let exact = sphere_character_integral_f64(k, e, &p);
                assert!((brute - Complex64::new(exact, 0.0)).norm() < 1e-12, "k={k} e={e:?}");
            }
        }
    }

    #[test]
    fn brute_force_zero_frequency_is_sphere_measure() {
        let p = FieldParams::qadic(2, 2, 1.0).unwrap();
        let lat = QuotientLattice::new(p, 2, 2).unwrap();
        for k in -2..=1 {
            let v = brute_sphere_character_integral(ScaleIndex(k), &lat.dual().zero(), &lat).unwrap();
            assert!((v.re - p.sphere(k)).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
    }

    #[test]
    fn refinement_leaves_brute_force_unchanged() {
        let p = FieldParams::qadic(2, 1, 1.0).unwrap();
        let lat = lattice_for_sphere(p, 0).unwrap();
        let fine = QuotientLattice::new(p, lat.outer(), 2 * lat.resolution()).unwrap();
        for e in [Some(-1), Some(0), Some(1), Some(2)] {
            let x = frequency_with_norm(&lat, e).unwrap();
            let xf = lat.dual().embed(&x, &fine.dual()).unwrap();
            let a = brute_sphere_character_integral(ScaleIndex(0), &x, &lat).unwrap();
            let b = brute_sphere_character_integral(ScaleIndex(0), &xf, &fine).unwrap();
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn unresolved_sphere_is_rejected() {
        let p = FieldParams::qadic(2, 1, 1.0).unwrap();
        let lat = QuotientLattice::new(p, 1, 1).unwrap();
        let x = lat.dual().zero();
        assert!(matches!(
            brute_sphere_character_integral(ScaleIndex(1), &x, &lat),
            Err(Error::WindowTooSmall(_))
        ));
        let skew = QuotientLattice::new(p, 2, 1).unwrap();
        assert!(matches!(
            brute_sphere_character_integral(ScaleIndex(0), &skew.zero(), &skew),
            Err(Error::LatticeMismatch(_))
        ));
    }

    #[test]
    fn index_roundtrip_and_arithmetic() {
        let p = FieldParams::qadic(3, 2, 1.0).unwrap();
        let lat = QuotientLattice::new(p, 1, 1).unwrap();
        for i in 0..lat.order() {
            let x = lat.element(i);
            assert_eq!(x.index(), i);
            assert_eq!(lat.neg_index(i), x.neg().index());
            assert_eq!(lat.add_index(i, lat.neg_index(i)), 0);
            assert_eq!(norm_of(&x), lat.norm_of_index(i));
        }
    }
}
