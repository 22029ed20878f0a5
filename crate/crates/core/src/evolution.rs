//! The master equation `y′ + D^α y = f`, `y(0) = x0`, solved mode by mode
//! on the Fourier diagonal for forcing that is piecewise constant in time.

use std::fmt::Write as _;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::calculus::{random_mean_zero_profile, spectrum};
use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::radial::{Direction, InnerTail, RadialProfile};

/// `f(t) = profiles[i]` for `t ∈ [t_grid[i], t_grid[i+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSignal {
    t_grid: Vec<f64>,
    profiles: Vec<RadialProfile>,
}

impl ForcingSignal {
    pub fn new(t_grid: Vec<f64>, profiles: Vec<RadialProfile>) -> Result<Self> {
        if t_grid.len() < 2 || t_grid[0] != 0.0 {
            return Err(Error::InvalidParams("the time grid must start at 0 and contain an interval".into()));
        }
        if t_grid.windows(2).any(|w| !(w[1] > w[0])) || !t_grid.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidParams("the time grid must be strictly increasing".into()));
        }
        if profiles.len() + 1 != t_grid.len() {
            return Err(Error::InvalidParams(format!(
                "{} profiles for {} intervals",
                profiles.len(),
                t_grid.len() - 1
            )));
        }
        let first = &profiles[0];
        for g in &profiles[1..] {
            if g.kmin() != first.kmin() || g.kmax() != first.kmax() || g.params() != first.params() {
                return Err(Error::InvalidParams("forcing profiles must share one crown window".into()));
            }
        }
        Ok(ForcingSignal { t_grid, profiles })
    }

    /// Zero forcing on `[0, horizon]` over the window of `like`.
    pub fn zero(horizon: f64, like: &RadialProfile) -> Result<Self> {
        let zero = RadialProfile::new(
            *like.params(),
            like.kmin(),
            vec![Complex64::new(0.0, 0.0); like.coeffs().len()],
            InnerTail::Zero,
        )?;
        Self::new(vec![0.0, horizon], vec![zero])
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn profiles(&self) -> &[RadialProfile] {
        &self.profiles
    }

    pub fn horizon(&self) -> f64 {
        *self.t_grid.last().expect("non-empty grid")
    }

    pub fn params(&self) -> &FieldParams {
        self.profiles[0].params()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        ForcingSignal { t_grid: self.t_grid.clone(), profiles: self.profiles.iter().map(|g| g.scale(c)).collect() }
    }

    /// `‖f‖` in `L^p([0,T]; L^{q_space})`, exact for piecewise-constant forcing.
    pub fn mixed_norm(&self, p: f64, q_space: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (w, g) in self.t_grid.windows(2).zip(&self.profiles) {
            acc += (w[1] - w[0]) * g.lp_norm(q_space)?.powf(p);
        }
        Ok(acc.powf(1.0 / p))
    }
}

/// `∫_a^b e^{−λ(t−s)} ds` for `a ≤ b ≤ t`; `b − a` when `λ = 0`.
pub fn duhamel_weight(lambda: f64, a: f64, b: f64, t: f64) -> f64 {
    if lambda == 0.0 {
        return b - a;
    }
    -(-lambda * (t - b)).exp() * (-lambda * (b - a)).exp_m1() / lambda
}

/// Spectral form of the solution, shared by all output times.
#[derive(Debug, Clone)]
pub struct MasterSolution {
    params: FieldParams,
    jmin: i64,
    lambdas: Vec<f64>,
    x0: Vec<Complex64>,
    t_grid: Vec<f64>,
    forcing: Vec<Vec<Complex64>>,
}

impl MasterSolution {
    pub fn new(x0: &RadialProfile, f: &ForcingSignal) -> Result<Self> {
        let params = *f.params();
        if x0.params().q() != params.q() || x0.params().n() != params.n() {
            return Err(Error::InvalidParams("initial value and forcing live on different fields".into()));
        }
        let x_hat = spectrum(x0)?;
        let f_hats = f.profiles.iter().map(spectrum).collect::<Result<Vec<_>>>()?;
        let jmin = x_hat.kmin().min(f_hats[0].kmin());
        let jmax = x_hat.kmax().max(f_hats[0].kmax());
        let collect = |h: &RadialProfile| (jmin..=jmax).map(|j| h.value(j)).collect::<Vec<_>>();
        Ok(MasterSolution {
            params,
            jmin,
            lambdas: (jmin..=jmax).map(|j| params.eigenvalue(j)).collect(),
            x0: collect(&x_hat),
            t_grid: f.t_grid.clone(),
            forcing: f_hats.iter().map(collect).collect(),
        })
    }

    pub fn horizon(&self) -> f64 {
        *self.t_grid.last().expect("non-empty grid")
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(Error::Domain(format!("time {t} outside [0, {}]", self.horizon())));
        }
        Ok(())
    }

    /// `ŷ_j(t)` on the Fourier window.
    pub fn modes_at(&self, t: f64) -> Result<Vec<Complex64>> {
        self.check_time(t)?;
        Ok(self
            .lambdas
            .iter()
            .enumerate()
            .map(|(j, &lam)| {
                let mut y = (-t * lam).exp() * self.x0[j];
                for (w, fh) in self.t_grid.windows(2).zip(&self.forcing) {
                    if w[0] >= t {
                        break;
                    }
                    y += fh[j] * duhamel_weight(lam, w[0], w[1].min(t), t);
                }
                y
            })
            .collect())
    }

    fn profile_from_modes(&self, modes: Vec<Complex64>) -> RadialProfile {
        RadialProfile::new(self.params, self.jmin, modes, InnerTail::Zero)
            .expect("finite modes")
            .fourier(Direction::Inverse)
    }

    pub fn at(&self, t: f64) -> Result<RadialProfile> {
        Ok(self.profile_from_modes(self.modes_at(t)?))
    }

    /// `D^α y(t)`.
    pub fn generator_at(&self, t: f64) -> Result<RadialProfile> {
        let modes = self.modes_at(t)?.into_iter().zip(&self.lambdas).map(|(y, &l)| y * l).collect();
        Ok(self.profile_from_modes(modes))
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambdas.iter().copied().fold(0.0, f64::max)
    }
}

pub fn solve_master(x0: &RadialProfile, f: &ForcingSignal, out_times: &[f64]) -> Result<Vec<RadialProfile>> {
    let sol = MasterSolution::new(x0, f)?;
    out_times.iter().map(|&t| sol.at(t)).collect()
}

/// CSV `t,k,re,im`, one row per time per crown. Each block extends one crown
/// past the window, so the last row of a block is the value on all inner crowns.
pub fn time_series_csv(times: &[f64], profiles: &[RadialProfile]) -> String {
    let mut out = String::from("t,k,re,im\n");
    for (t, y) in times.iter().zip(profiles) {
        for k in y.kmin()..=y.kmax() + 1 {
            let v = y.value(k);
            let _ = writeln!(out, "{t:e},{k},{:e},{:e}", v.re, v.im);
        }
    }
    out
}

/// Time quadrature for the maximal-regularity norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityQuadrature {
    /// Gauss-Legendre nodes per panel.
    pub nodes: usize,
    /// Panels halve towards each forcing breakpoint until
    /// `length · λ_max ≤ layer_resolution`.
    pub layer_resolution: f64,
}

impl Default for RegularityQuadrature {
    fn default() -> Self {
        RegularityQuadrature { nodes: 16, layer_resolution: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityReport {
    pub p: f64,
    pub q_space: f64,
    /// `‖D^α y‖_{L^p(L^{q_space})}`
    pub lhs: f64,
    /// `‖f‖_{L^p(L^{q_space})}`
    pub rhs: f64,
    pub ratio: f64,
}

/// Ratio `‖D^α y‖ / ‖f‖` in `L^p([0,T]; L^{q_space})` for `y(0) = 0`.
pub fn max_regularity_report(f: &ForcingSignal, p: f64, q_space: f64, quad: &RegularityQuadrature) -> Result<RegularityReport> {
    if !(p >= 1.0 && q_space >= 1.0) {
        return Err(Error::InvalidParams(format!("exponents p = {p}, q = {q_space} must be at least 1")));
    }
    let nodes = NonZeroUsize::new(quad.nodes).ok_or_else(|| Error::InvalidParams("no quadrature nodes".into()))?;
    let rule = GaussLegendre::new(nodes);
    let zero = ForcingSignal::zero(f.horizon(), &f.profiles[0])?;
    let x0 = zero.profiles[0].clone();
    let sol = MasterSolution::new(&x0, f)?;
    let lam = sol.lambda_max();
    let mut acc = 0.0;
    for w in f.t_grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let levels = if lam > 0.0 {
            ((b - a) * lam / quad.layer_resolution).log2().ceil().max(0.0) as i32
        } else {
            0
        };
        let mut edges: Vec<f64> = (0..=levels).map(|k| a + (b - a) * 0.5f64.powi(k)).collect();
        edges.push(a);
        edges.reverse();
        for e in edges.windows(2) {
            let (lo, hi) = (e[0], e[1]);
            let half = 0.5 * (hi - lo);
            for (x, wt) in rule.iter() {
                let t = lo + half * (x + 1.0);
                acc += half * wt * sol.generator_at(t)?.lp_norm(q_space)?.powf(p);
            }
        }
    }
    let lhs = acc.powf(1.0 / p);
    let rhs = f.mixed_norm(p, q_space)?;
    Ok(RegularityReport { p, q_space, lhs, rhs, ratio: lhs / rhs })
}

/// Classical fourth-order Runge-Kutta on the modal system, `steps` equal
/// steps per forcing interval. Returns `y(T)`.
pub fn rk4_oracle(x0: &RadialProfile, f: &ForcingSignal, steps: usize) -> Result<RadialProfile> {
    let sol = MasterSolution::new(x0, f)?;
    let mut y = sol.x0.clone();
    for (w, fh) in sol.t_grid.windows(2).zip(&sol.forcing) {
        let h = (w[1] - w[0]) / steps as f64;
        for _ in 0..steps {
            for ((yj, &lam), &fj) in y.iter_mut().zip(&sol.lambdas).zip(fh) {
                let rhs = |v: Complex64| fj - lam * v;
                let k1 = rhs(*yj);
                let k2 = rhs(*yj + 0.5 * h * k1);
                let k3 = rhs(*yj + 0.5 * h * k2);
                let k4 = rhs(*yj + h * k3);
                *yj += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
    }
    Ok(sol.profile_from_modes(y))
}

/// Forcing whose Fourier transform sits on the single crown `j`.
pub fn single_mode_forcing(params: &FieldParams, j: i64, t_grid: Vec<f64>, amplitudes: &[Complex64]) -> Result<ForcingSignal> {
    let profiles = amplitudes
        .iter()
        .map(|&c| RadialProfile::crown(*params, j, c).fourier(Direction::Inverse))
        .collect();
    ForcingSignal::new(t_grid, profiles)
}

/// `intervals` random mean-zero profiles on crowns `[kmin, kmax]` over a
/// uniform grid of `[0, horizon]`.
pub fn random_forcing<R: Rng>(
    params: &FieldParams,
    window: (i64, i64),
    intervals: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<ForcingSignal> {
    let t_grid = (0..=intervals).map(|i| horizon * i as f64 / intervals as f64).collect();
    let profiles = (0..intervals).map(|_| random_mean_zero_profile(params, window.0, window.1, rng)).collect();
    ForcingSignal::new(t_grid, profiles)
}
