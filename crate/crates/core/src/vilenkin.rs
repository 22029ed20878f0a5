//! Functions on the finite quotient `G_{−M}/G_N` of `Q_q^n`: coset averages
//! `A_i` (conditional expectations of the filtration by `G_i`), the maximal
//! operator `M f = sup_i A_i|f|`, Doob's inequality, domination of radial
//! convolutions by `M`, and the group Fourier transform.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{character_residue, root_of_unity, QNorm, QuotientLattice};
use crate::par::Exec;
use crate::radial::{Direction, RadialProfile};

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientFunction {
    lattice: QuotientLattice,
    values: Vec<Complex64>,
}

impl QuotientFunction {
    pub fn new(lattice: QuotientLattice, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != lattice.order() {
            return Err(Error::LatticeMismatch(format!(
                "{} values for a lattice of order {}",
                values.len(),
                lattice.order()
            )));
        }
        Ok(QuotientFunction { lattice, values })
    }

    pub fn from_fn(lattice: QuotientLattice, f: impl Fn(usize) -> Complex64) -> Self {
        QuotientFunction { lattice, values: (0..lattice.order()).map(f).collect() }
    }

    pub fn constant(lattice: QuotientLattice, c: Complex64) -> Self {
        Self::from_fn(lattice, |_| c)
    }

    /// Restriction of a radial profile supported in `G_{−M}` and constant on `G_N`.
    pub fn from_radial(lattice: &QuotientLattice, f: &RadialProfile) -> Result<Self> {
        let (m, n) = (lattice.outer() as i64, lattice.resolution() as i64);
        let f = &f.trimmed();
        let tail = f.value_at_zero();
        let zero = Complex64::new(0.0, 0.0);
        let unsupported = (f.kmin()..-m).any(|k| f.value(k) != zero);
        let unresolved = (n..=f.kmax()).any(|k| f.value(k) != tail);
        if unsupported || unresolved {
            return Err(Error::WindowTooSmall(format!(
                "profile window [{}, {}] does not fit the lattice crowns [{}, {}]",
                f.kmin(),
                f.kmax(),
                -m,
                n - 1
            )));
        }
        Ok(Self::from_fn(*lattice, |idx| match lattice.norm_of_index(idx) {
            QNorm::Zero => f.value_at_zero(),
            QNorm::Pow(e) => f.value(-e),
        }))
    }

    pub fn lattice(&self) -> &QuotientLattice {
        &self.lattice
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        QuotientFunction { lattice: self.lattice, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn abs(&self) -> Self {
        self.map(|v| Complex64::new(v.norm(), 0.0))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        let mu = self.lattice.coset_measure();
        (self.values.iter().map(|v| v.norm().powf(p)).sum::<f64>() * mu).powf(1.0 / p)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Average over each coset of `G_i`, `−M ≤ i ≤ N`.
    pub fn average(&self, i: i64) -> Result<Self> {
        let lat = &self.lattice;
        if i < -(lat.outer() as i64) || i > lat.resolution() as i64 {
            return Err(Error::Domain(format!(
                "averaging scale {i} outside [{}, {}]",
                -(lat.outer() as i64),
                lat.resolution()
            )));
        }
        let cosets = (lat.params().q() as usize).pow((i + lat.outer() as i64) as u32 * lat.params().n());
        let keys: Vec<usize> = (0..lat.order()).map(|idx| lat.coset_key(idx, i)).collect();
        let mut sums = vec![Complex64::new(0.0, 0.0); cosets];
        for (v, &k) in self.values.iter().zip(&keys) {
            sums[k] += v;
        }
        let size = (lat.order() / cosets) as f64;
        Ok(QuotientFunction { lattice: *lat, values: keys.iter().map(|&k| sums[k] / size).collect() })
    }

    /// `M f = max_i A_i|f|`.
    pub fn maximal(&self) -> Self {
        let abs = self.abs();
        let lat = &self.lattice;
        let mut out = vec![0.0f64; lat.order()];
        for i in -(lat.outer() as i64)..=lat.resolution() as i64 {
            let avg = abs.average(i).expect("scale in window");
            for (o, v) in out.iter_mut().zip(&avg.values) {
                *o = o.max(v.re);
            }
        }
        QuotientFunction { lattice: *lat, values: out.into_iter().map(|v| Complex64::new(v, 0.0)).collect() }
    }

    /// `(φ ∗ f)(s) = Σ_y φ(y) f(s − y) μ(coset)`.
    pub fn convolve(&self, f: &Self) -> Result<Self> {
        if self.lattice != f.lattice {
            return Err(Error::LatticeMismatch("convolution of functions on different lattices".into()));
        }
        let lat = &self.lattice;
        let mu = lat.coset_measure();
        let values = (0..lat.order())
            .map(|s| {
                self.values
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.norm() > 0.0)
                    .map(|(y, &v)| v * f.values[lat.sub_index(s, y)])
                    .sum::<Complex64>()
                    * mu
            })
            .collect();
        Ok(QuotientFunction { lattice: *lat, values })
    }

    /// Crown values around 0 when the function is radial: entry `k + M` for
    /// crown `k ∈ [−M, N−1]`, last entry for the zero coset.
    pub fn radial_values(&self, tol: f64) -> Result<Vec<Complex64>> {
        let lat = &self.lattice;
        let (m, n) = (lat.outer() as i64, lat.resolution() as i64);
        let mut slots: Vec<Option<Complex64>> = vec![None; (m + n + 1) as usize];
        for (idx, &v) in self.values.iter().enumerate() {
            let slot = match lat.norm_of_index(idx) {
                QNorm::Zero => (m + n) as usize,
                QNorm::Pow(e) => (-e + m) as usize,
            };
            match slots[slot] {
                None => slots[slot] = Some(v),
                Some(w) if (w - v).norm() <= tol => {}
                Some(w) => {
                    return Err(Error::NotRadial(format!("values {w} and {v} share a crown")));
                }
            }
        }
        Ok(slots.into_iter().map(|s| s.unwrap_or_default()).collect())
    }

    /// `‖ℛ_φ‖₁`: running maximum of `|φ|` from the outermost crown inward,
    /// weighted by crown measures.
    pub fn majorant_l1(&self) -> Result<f64> {
        let lat = &self.lattice;
        let p = lat.params();
        let crowns = self.radial_values(0.0)?;
        let m = lat.outer() as i64;
        let mut run = 0.0f64;
        let mut total = 0.0;
        for (i, v) in crowns.iter().enumerate() {
            run = run.max(v.norm());
            let measure = if i + 1 == crowns.len() {
                p.ball(lat.resolution() as i64)
            } else {
                p.sphere(i as i64 - m)
            };
            total += run * measure;
        }
        Ok(total)
    }

    /// CSV `index,re,im` with a `# q=..,n=..,M=..,N=..` comment header.
    pub fn to_csv(&self) -> String {
        let lat = &self.lattice;
        let mut out = format!(
            "# q={},n={},M={},N={}\nindex,re,im\n",
            lat.params().q(),
            lat.params().n(),
            lat.outer(),
            lat.resolution()
        );
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{i},{:e},{:e}", v.re, v.im);
        }
        out
    }

    pub fn from_csv(text: &str, alpha: f64) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        let mut rows = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(h) = line.strip_prefix('#') {
                for kv in h.split(',') {
                    if let Some((k, v)) = kv.split_once('=') {
                        fields.insert(k.trim().to_string(), v.trim().to_string());
                    }
                }
            } else if !line.starts_with("index") {
                let parts: Vec<&str> = line.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(Error::Parse(format!("expected index,re,im in `{line}`")));
                }
                let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}`")));
                let idx: usize = parts[0].parse().map_err(|_| Error::Parse(format!("bad index `{}`", parts[0])))?;
                rows.push((idx, Complex64::new(num(parts[1])?, num(parts[2])?)));
            }
        }
        let get = |k: &str| -> Result<u32> {
            fields
                .get(k)
                .ok_or_else(|| Error::Parse(format!("header lacks {k}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad header value for {k}")))
        };
        let params = crate::field::FieldParams::qadic(get("q")?, get("n")?, alpha)?;
        let lat = QuotientLattice::new(params, get("M")?, get("N")?)?;
        let mut values = vec![Complex64::new(0.0, 0.0); lat.order()];
        let mut seen = vec![false; lat.order()];
        for (i, v) in rows {
            if i >= values.len() || seen[i] {
                return Err(Error::Parse(format!("index {i} out of range or repeated")));
            }
            values[i] = v;
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Parse("missing lattice indices".into()));
        }
        Self::new(lat, values)
    }
}

/// `F f(ξ) = Σ_y f(y) χ̄(ξ·y) μ` onto the dual lattice; the inverse uses `χ`
/// and the dual coset measure.
pub fn group_dft(f: &QuotientFunction, direction: Direction) -> QuotientFunction {
    let src = f.lattice;
    let dst = src.dual();
    let modulus = src.modulus();
    let mu = src.coset_measure();
    let src_elems: Vec<_> = src.elements().collect();
    let roots: Vec<Complex64> = (0..modulus).map(|r| root_of_unity(r, modulus)).collect();
    let values = dst
        .elements()
        .map(|xi| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (y, v) in src_elems.iter().zip(&f.values) {
                let r = character_residue(y, &xi).expect("dual lattices");
                let r = match direction {
                    Direction::Forward => (modulus - r) % modulus,
                    Direction::Inverse => r,
                };
                acc += v * roots[r as usize];
            }
            acc * mu
        })
        .collect();
    QuotientFunction { lattice: dst, values }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoobCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `‖M f‖_p` against `(p/(p−1)) ‖f‖_p`.
pub fn doob_check(f: &QuotientFunction, p: f64) -> Result<DoobCheck> {
    if !(p > 1.0) {
        return Err(Error::InvalidParams(format!("Doob's inequality needs p > 1, got {p}")));
    }
    let lhs = f.maximal().lp_norm(p);
    let rhs = p / (p - 1.0) * f.lp_norm(p);
    Ok(DoobCheck { lhs, rhs, pass: lhs <= rhs + 1e-10 })
}

/// `‖(Σ_k |M f_k|²)^{1/2}‖_p / ‖(Σ_k |f_k|²)^{1/2}‖_p`.
pub fn doob_l2_ratio(fs: &[QuotientFunction], p: f64) -> Result<f64> {
    let Some(first) = fs.first() else {
        return Err(Error::InvalidParams("empty tuple".into()));
    };
    let lat = *first.lattice();
    let square = |gs: &[QuotientFunction]| {
        QuotientFunction::from_fn(lat, |i| {
            Complex64::new(gs.iter().map(|g| g.values[i].norm_sqr()).sum::<f64>().sqrt(), 0.0)
        })
    };
    let maxed: Vec<QuotientFunction> = fs.iter().map(QuotientFunction::maximal).collect();
    Ok(square(&maxed).lp_norm(p) / square(fs).lp_norm(p))
}

/// `max_s |(φ ∗ f)(s)| − ‖ℛ_φ‖₁ (M f)(s)`.
pub fn domination_check(phi: &QuotientFunction, f: &QuotientFunction) -> Result<f64> {
    let r1 = phi.majorant_l1()?;
    let conv = phi.convolve(f)?;
    let mf = f.maximal();
    Ok(conv
        .values
        .iter()
        .zip(&mf.values)
        .map(|(c, m)| c.norm() - r1 * m.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Random values with independent standard-normal-ish real and imaginary parts,
/// scaled per coset of `G_i` at a random depth so that several scales carry mass.
pub fn random_function<R: Rng>(lattice: &QuotientLattice, rng: &mut R) -> QuotientFunction {
    let depth = rng.random_range(-(lattice.outer() as i64)..=lattice.resolution() as i64);
    let base: Vec<Complex64> = (0..lattice.order())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let sparse = rng.random_bool(0.3);
    QuotientFunction::from_fn(*lattice, |i| {
        let keep = !sparse || lattice.coset_key(i, depth) == 0;
        if keep {
            base[i]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Random radial function on the lattice: independent crown values, or a
/// radially decreasing profile when `decreasing` is set.
pub fn random_radial<R: Rng>(lattice: &QuotientLattice, decreasing: bool, rng: &mut R) -> QuotientFunction {
    let (m, n) = (lattice.outer() as i64, lattice.resolution() as i64);
    let mut crowns: Vec<f64> = (0..=(m + n)).map(|_| rng.random_range(0.0..1.0)).collect();
    if decreasing {
        // nondecreasing toward the centre
        crowns.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let phase: Vec<Complex64> = (0..=(m + n))
        .map(|_| {
            if decreasing {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
            }
        })
        .collect();
    QuotientFunction::from_fn(*lattice, |i| {
        let slot = match lattice.norm_of_index(i) {
            QNorm::Zero => (m + n) as usize,
            QNorm::Pow(e) => (-e + m) as usize,
        };
        phase[slot] * crowns[slot]
    })
}

/// Independent stream `index` of the ChaCha generator seeded with `seed`.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSummary {
    pub instances: usize,
    pub failures: usize,
    /// Largest `lhs / rhs` for Doob, largest defect for domination.
    pub worst: f64,
}

/// Doob's inequality on `instances` random functions.
pub fn doob_batch(lattice: &QuotientLattice, p: f64, instances: usize, seed: u64, exec: Exec) -> Result<BatchSummary> {
    let results = exec.map_range(instances, |i| {
        let mut rng = instance_rng(seed, i as u64);
        doob_check(&random_function(lattice, &mut rng), p)
    });
    let mut worst = 0.0f64;
    let mut failures = 0;
    for r in results {
        let r = r?;
        worst = worst.max(r.lhs / r.rhs);
        failures += usize::from(!r.pass);
    }
    Ok(BatchSummary { instances, failures, worst })
}

/// Domination on `instances` random pairs (radial `φ`, arbitrary `f`).
pub fn domination_batch(lattice: &QuotientLattice, instances: usize, seed: u64, exec: Exec) -> Result<BatchSummary> {
    let results = exec.map_range(instances, |i| {
        let mut rng = instance_rng(seed, i as u64);
        let decreasing = i % 2 == 0;
        let phi = random_radial(lattice, decreasing, &mut rng);
        let f = random_function(lattice, &mut rng);
        domination_check(&phi, &f)
    });
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for r in results {
        let d = r?;
        worst = worst.max(d);
        failures += usize::from(d > 1e-12);
    }
    Ok(BatchSummary { instances, failures, worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldParams;

    fn lat(q: u32, n: u32, m: u32, nn: u32) -> QuotientLattice {
        QuotientLattice::new(FieldParams::qadic(q, n, 1.0).unwrap(), m, nn).unwrap()
    }

    #[test]
    fn averaging_extremes() {
        let l = lat(2, 1, 3, 3);
        let mut rng = instance_rng(1, 0);
        let f = random_function(&l, &mut rng);
        assert!(f.average(3).unwrap().max_diff(&f) == 0.0);
        let mean = f.values().iter().sum::<Complex64>() / l.order() as f64;
        assert!(f.average(-3).unwrap().max_diff(&QuotientFunction::constant(l, mean)) < 1e-15);
        let c = QuotientFunction::constant(l, Complex64::new(2.5, -1.0));
        for i in -3..=3 {
            assert!(c.average(i).unwrap().max_diff(&c) < 1e-15);
        }
        assert!(f.average(4).is_err());
    }

    #[test]
    fn tower_property() {
        let l = lat(3, 1, 2, 2);
        let mut rng = instance_rng(2, 0);
        let f = random_function(&l, &mut rng);
        for i in -2..=2 {
            for j in -2..=2 {
                let lhs = f.average(i).unwrap().average(j).unwrap();
                let rhs = f.average(i.min(j)).unwrap();
                assert!(lhs.max_diff(&rhs) < 1e-14);
            }
        }
    }

    #[test]
    fn averages_contract() {
        let l = lat(2, 1, 3, 3);
        for inst in 0..20 {
            let mut rng = instance_rng(9, inst);
            let f = random_function(&l, &mut rng);
            for i in -3..=3 {
                let e = f.average(i).unwrap();
                for p in [1.0, 2.0, f64::INFINITY] {
                    assert!(e.lp_norm(p) <= f.lp_norm(p) * (1.0 + 1e-14), "i={i} p={p}");
                }
            }
        }
    }

    #[test]
    fn maximal_single_coset() {
        // q = 2, M = N = 2: indicator of the zero coset of G_2
        let l = lat(2, 1, 2, 2);
        let f = QuotientFunction::from_fn(l, |i| Complex64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0));
        let mf = f.maximal();
        // at a point with ‖s‖ = q^{-k} the best ball is G_k, holding 1 of q^{N-k} cosets
        for idx in 0..l.order() {
            let expect = match l.norm_of_index(idx) {
                QNorm::Zero => 1.0,
                QNorm::Pow(e) => 2f64.powi(-(2 + e as i32)),
            };
            assert!((mf.values()[idx].re - expect).abs() < 1e-15, "idx={idx}");
        }
        let scaled = f.scale(Complex64::new(0.0, -3.0)).maximal();
        assert!(scaled.max_diff(&mf.scale(Complex64::new(3.0, 0.0))) < 1e-15);
    }

    #[test]
    fn doob_and_domination_small() {
        let l = lat(2, 1, 3, 3);
        let d = doob_batch(&l, 2.0, 50, 7, Exec::Sequential).unwrap();
        assert_eq!(d.failures, 0);
        let c = QuotientFunction::constant(l, Complex64::new(-2.0, 0.0));
        let r = doob_check(&c, 3.0).unwrap();
        assert!((r.lhs - c.lp_norm(3.0)).abs() < 1e-14 && r.pass);
        let dom = domination_batch(&l, 50, 7, Exec::Parallel).unwrap();
        assert_eq!(dom.failures, 0, "{dom:?}");
    }

    #[test]
    fn domination_by_ball_average() {
        let l = lat(3, 1, 2, 2);
        let pp = *l.params();
        let mut rng = instance_rng(4, 0);
        let f = random_function(&l, &mut rng);
        for i in -2..=2 {
            let ball = QuotientFunction::from_radial(&l, &RadialProfile::normalized_ball(pp, i)).unwrap();
            assert!((ball.majorant_l1().unwrap() - 1.0).abs() < 1e-14);
            let conv = ball.convolve(&f).unwrap();
            assert!(conv.max_diff(&f.average(i).unwrap()) < 1e-13);
            assert!(domination_check(&ball, &f).unwrap() <= 1e-13);
        }
    }

    #[test]
    fn dft_roundtrip_plancherel() {
        let l = lat(2, 1, 3, 3);
        let mut rng = instance_rng(5, 0);
        let f = random_function(&l, &mut rng);
        let hat = group_dft(&f, Direction::Forward);
        let back = group_dft(&hat, Direction::Inverse);
        assert!(back.max_diff(&f) < 1e-12);
        assert!((hat.lp_norm(2.0) - f.lp_norm(2.0)).abs() < 1e-12);
    }

    #[test]
    fn dft_matches_radial_transform() {
        let l = lat(3, 1, 2, 2);
        let pp = *l.params();
        let f = RadialProfile::new(
            pp,
            -2,
            vec![Complex64::new(1.0, 0.5), Complex64::new(-2.0, 0.0), Complex64::new(0.3, 0.0)],
            crate::radial::InnerTail::Constant(Complex64::new(0.7, 0.0)),
        )
        .unwrap();
        let lifted = QuotientFunction::from_radial(&l, &f).unwrap();
        let hat = group_dft(&lifted, Direction::Forward);
        let radial = f.fourier(Direction::Forward);
        let dual = l.dual();
        for idx in 0..dual.order() {
            let expect = match dual.norm_of_index(idx) {
                QNorm::Zero => radial.value_at_zero(),
                QNorm::Pow(e) => radial.value(-e),
            };
            assert!((hat.values()[idx] - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn dft_diagonalizes_convolution() {
        let l = lat(2, 2, 1, 1);
        let mut rng = instance_rng(6, 0);
        let a = random_function(&l, &mut rng);
        let b = random_function(&l, &mut rng);
        let lhs = group_dft(&a.convolve(&b).unwrap(), Direction::Forward);
        let fa = group_dft(&a, Direction::Forward);
        let fb = group_dft(&b, Direction::Forward);
        let rhs = QuotientFunction::from_fn(*fa.lattice(), |i| fa.values()[i] * fb.values()[i]);
        assert!(lhs.max_diff(&rhs) < 1e-11);
    }

    #[test]
    fn metric_identity() {
        // |x| = μ of the smallest ball containing x equals ‖x‖^n
        let l = lat(3, 2, 1, 1);
        let p = *l.params();
        for idx in 1..l.order() {
            let e = match l.norm_of_index(idx) {
                QNorm::Pow(e) => e,
                QNorm::Zero => unreachable!(),
            };
            let metric = p.ball(-e);
            assert!((metric - (3f64.powi(e as i32)).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_roundtrip() {
        let l = lat(2, 1, 1, 2);
        let mut rng = instance_rng(8, 0);
        let f = random_function(&l, &mut rng);
        let g = QuotientFunction::from_csv(&f.to_csv(), 1.0).unwrap();
        assert!(g.max_diff(&f) < 1e-15);
    }

    #[test]
    fn rejects_nonradial_phi() {
        let l = lat(2, 1, 2, 2);
        let f = QuotientFunction::from_fn(l, |i| Complex64::new(i as f64, 0.0));
        assert!(matches!(f.majorant_l1(), Err(Error::NotRadial(_))));
    }
}
