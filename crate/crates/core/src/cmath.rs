//! Complex helpers missing from `num-complex`.

use num_complex::Complex64;

/// `e^w − 1` without cancellation near `w = 0`.
pub fn expm1(w: Complex64) -> Complex64 {
    let (x, y) = (w.re, w.im);
    let half = (0.5 * y).sin();
    Complex64::new(x.exp_m1() * y.cos() - 2.0 * half * half, x.exp() * y.sin())
}

/// `q^w = e^{w ln q}`.
pub fn qpow(q: f64, w: Complex64) -> Complex64 {
    (w * q.ln()).exp()
}

/// Relative distance `|a − b| / max(|a|, |b|, floor)`.
pub fn rel_diff(a: Complex64, b: Complex64, floor: f64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm1_small_and_large() {
        let w = Complex64::new(1e-12, -2e-12);
        let e = expm1(w);
        assert!((e - w).norm() < 1e-23);
        let w = Complex64::new(0.7, 2.1);
        assert!((expm1(w) - (w.exp() - 1.0)).norm() < 1e-15);
    }
}
