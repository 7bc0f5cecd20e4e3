//! Pseudomode assembly `f_λ = ξ·g`: turning point, window width, β-curve
//! and the smooth cut-off.

use alloc::vec::Vec;

#[allow(unused_imports)] // resolved to inherent methods in some feature sets
use num_traits::Float;

use crate::gridfn::{Grid, GridFunction};
use crate::profiles::{Damping, Family, Potential};
use crate::residual::{linear_fit, LineFit};
use crate::wkb::{build_phases, SpectralPoint, WkbPhases};
use crate::{Error, Result, C64};

/// Nodes added beyond `b ± δ`, where `ξ ≡ 0`, so that edge stencils never
/// touch the support.
pub const PAD_NODES: usize = 8;

/// Minimum number of samples across each transition band `[δ/2, δ]`.
pub const MIN_LAYER_SAMPLES: usize = 100;

/// Solves `a(b) = α` for `b ≥ x_min`.
pub fn solve_b(a: &Damping, alpha: f64) -> Result<f64> {
    let x_min = a.x_min();
    let a_min = a.eval(x_min)?;
    if !(alpha >= a_min) || !alpha.is_finite() {
        return Err(Error::AlphaTooSmall { alpha, min: a_min });
    }
    if alpha == a_min {
        return Ok(x_min);
    }
    if let Some(b) = a.inverse(alpha).filter(|&b| b >= x_min) {
        return Ok(polish(a, alpha, b));
    }
    let (mut lo, mut hi) = (x_min, 2.0 * x_min.max(0.5));
    let mut a_lo = a_min;
    loop {
        let a_hi = a.eval(hi)?;
        if a_hi <= a_lo {
            return Err(Error::NonMonotone { x: hi });
        }
        if a_hi >= alpha {
            break;
        }
        lo = hi;
        a_lo = a_hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("no bracket for α = {alpha}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if a.eval(mid)? < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(polish(a, alpha, 0.5 * (lo + hi)))
}

/// Newton steps against rounding in the closed-form inverses.
fn polish(a: &Damping, alpha: f64, mut b: f64) -> f64 {
    for _ in 0..3 {
        let (Ok(v), Ok(d)) = (a.eval(b), a.eval_deriv(1, b)) else { break };
        if (v - alpha).abs() <= 1e-15 * alpha || d <= 0.0 {
            break;
        }
        let next = b - (v - alpha) / d;
        if !next.is_finite() {
            break;
        }
        b = next;
    }
    b
}

/// `β` as a function of the turning point `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BetaCurve {
    Constant(f64),
    /// `β = b^s`
    Power { s: f64 },
    /// `β = b^s e^{b^p}`
    ExpMatched { s: f64, p: f64 },
}

impl BetaCurve {
    pub fn eval(&self, b: f64) -> f64 {
        match *self {
            BetaCurve::Constant(c) => c,
            BetaCurve::Power { s } => b.powf(s),
            BetaCurve::ExpMatched { s, p } => b.powf(s) * b.powf(p).exp(),
        }
    }

    /// Default curve for a damping/potential pair and expansion order `n`,
    /// chosen inside the admissible range of the example families.
    pub fn preset(a: &Damping, q: &Potential, n: usize) -> Self {
        match *a.family() {
            Family::Monomial { p } => {
                let r = match *q.family() {
                    Family::Monomial { p: r } => r,
                    _ => 0.0,
                };
                if r >= 2.0 * p {
                    let s = if n == 0 { r / 2.0 } else { r - p };
                    BetaCurve::Power { s: s + 0.5 }
                } else {
                    BetaCurve::Power { s: 0.0 }
                }
            }
            Family::Exponential { p } if p >= 1.0 => BetaCurve::ExpMatched { s: p - 1.0 + 0.1, p },
            _ => BetaCurve::Constant(1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PseudomodeConfig {
    /// Expansion order; `0` is the basic ansatz.
    pub n: usize,
    /// `δ = b^{−ν−ε}`.
    pub epsilon: f64,
    pub beta_curve: BetaCurve,
    /// Divides the default grid spacing.
    pub density: f64,
}

impl Default for PseudomodeConfig {
    fn default() -> Self {
        PseudomodeConfig { n: 0, epsilon: 0.1, beta_curve: BetaCurve::Constant(1.0), density: 1.0 }
    }
}

impl PseudomodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("ε = {} must be positive", self.epsilon)));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("density = {}", self.density)));
        }
        Ok(())
    }

    /// Half-width of the pseudomode support.
    pub fn delta(&self, a: &Damping, b: f64) -> f64 {
        b.powf(-a.nu() - self.epsilon)
    }
}

/// Spacing bound `min(2π/(α+β)/20, δ/200) / density`.
pub fn max_spacing(point: &SpectralPoint, delta: f64, density: f64) -> f64 {
    let wave = 2.0 * core::f64::consts::PI / point.scale() / 20.0;
    wave.min(delta / 200.0) / density
}

/// Odd grid centered at `b` with `b ± δ` on nodes and [`PAD_NODES`] beyond.
pub fn window_grid(point: &SpectralPoint, delta: f64, density: f64) -> Result<Grid> {
    let h_max = max_spacing(point, delta, density);
    let m = (delta / h_max).ceil();
    if !(m.is_finite() && m < 5.0e7) {
        return Err(Error::InvalidParameter(alloc::format!("window needs {m} nodes per side")));
    }
    let m = m as usize;
    Grid::centered(point.b(), delta / m as f64, m + PAD_NODES)
}

/// `S(t) = φ(t)/(φ(t)+φ(1−t))`, `φ(t) = e^{−1/t}`, and its first two
/// derivatives. Evaluated as a logistic of `−w`, `w = 1/t − 1/(1−t)`.
fn transition(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let u = 1.0 - t;
    let z = 1.0 / u - 1.0 / t;
    let sigma = |z: f64| if z >= 0.0 { 1.0 / (1.0 + (-z).exp()) } else { z.exp() / (1.0 + z.exp()) };
    let s = sigma(z);
    let ds = s * sigma(-z);
    let d2s = ds * (1.0 - 2.0 * s);
    let z1 = 1.0 / (u * u) + 1.0 / (t * t);
    let z2 = 2.0 / (u * u * u) - 2.0 / (t * t * t);
    (s, ds * z1, d2s * z1 * z1 + ds * z2)
}

/// `ξ, ξ′, ξ″` at offset `s = x − b`.
pub fn cutoff_at(s: f64, delta: f64) -> (f64, f64, f64) {
    let t = 2.0 - 2.0 * s.abs() / delta;
    let (v, d1, d2) = transition(t);
    let dt = -2.0 * s.signum() / delta;
    (v, d1 * dt, d2 * dt * dt)
}

/// Sampled cut-off: `ξ(b+s) = 1` on `|s| ≤ δ/2`, `0` on `|s| ≥ δ`.
#[derive(Clone, Debug)]
pub struct CutoffSpec {
    pub b: f64,
    pub delta: f64,
    pub xi: GridFunction,
    pub xi1: GridFunction,
    pub xi2: GridFunction,
}

pub fn build_cutoff(b: f64, delta: f64, grid: Grid) -> Result<CutoffSpec> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("δ = {delta}")));
    }
    let samples = (0.5 * delta / grid.h() * (1.0 + 1e-12)).floor() as usize;
    if samples < MIN_LAYER_SAMPLES {
        return Err(Error::UnderResolved { samples, min: MIN_LAYER_SAMPLES });
    }
    let mut xi = Vec::with_capacity(grid.len());
    let mut xi1 = Vec::with_capacity(grid.len());
    let mut xi2 = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let (v, d1, d2) = cutoff_at(grid.x(i) - b, delta);
        xi.push(C64::new(v, 0.0));
        xi1.push(C64::new(d1, 0.0));
        xi2.push(C64::new(d2, 0.0));
    }
    Ok(CutoffSpec {
        b,
        delta,
        xi: GridFunction::new(grid, xi)?,
        xi1: GridFunction::new(grid, xi1)?,
        xi2: GridFunction::new(grid, xi2)?,
    })
}

/// `f_λ = ξ g` with everything needed to evaluate its residual.
#[derive(Clone, Debug)]
pub struct Pseudomode {
    pub point: SpectralPoint,
    pub delta: f64,
    pub phases: WkbPhases,
    pub cutoff: CutoffSpec,
    /// `g = e^h`, anchored at `g(b) = 1`.
    pub g: GridFunction,
    pub f: GridFunction,
}

/// Builds the pseudomode for `α`, taking `β` from the configured curve.
pub fn assemble(a: &Damping, q: &Potential, cfg: &PseudomodeConfig, alpha: f64) -> Result<Pseudomode> {
    let b = solve_b(a, alpha)?;
    let point = SpectralPoint::with_b(a, alpha, cfg.beta_curve.eval(b), b)?;
    assemble_at(a, q, cfg, &point)
}

/// Builds the pseudomode at an explicit spectral point; `cfg.beta_curve`
/// is ignored.
pub fn assemble_at(a: &Damping, q: &Potential, cfg: &PseudomodeConfig, point: &SpectralPoint) -> Result<Pseudomode> {
    cfg.validate()?;
    let delta = cfg.delta(a, point.b());
    let grid = window_grid(point, delta, cfg.density)?;
    assemble_on(a, q, cfg.n, point, delta, grid)
}

/// Builds the pseudomode on a caller-chosen grid.
pub fn assemble_on(
    a: &Damping,
    q: &Potential,
    n: usize,
    point: &SpectralPoint,
    delta: f64,
    grid: Grid,
) -> Result<Pseudomode> {
    let window = (point.b() - delta, point.b() + delta);
    if grid.x0() > window.0 || grid.x_end() < window.1 {
        return Err(Error::SupportTouchesBoundary);
    }
    let phases = build_phases(a, q, point, n, window, grid)?;
    let cutoff = build_cutoff(point.b(), delta, grid)?;
    let g = phases.g()?;
    let f = cutoff.xi.zip_with(&g, |x, g| if x.re == 0.0 { C64::new(0.0, 0.0) } else { x * g })?;
    if !f.is_finite() {
        return Err(Error::NonFinite("pseudomode samples".into()));
    }
    Ok(Pseudomode { point: *point, delta, phases, cutoff, g, f })
}

impl Pseudomode {
    /// `(β/(α+β))·a′(b)`, the Gaussian width parameter.
    pub fn localization(&self, a: &Damping) -> Result<f64> {
        let p = &self.point;
        Ok(p.beta().abs() / p.scale() * a.eval_deriv(1, p.b())?)
    }

    /// Fits `−log|g(b+s)|` against `X = (β/(α+β))a′(b)s²` on `|s| ≤ δ/2`.
    pub fn gaussian_fit(&self, a: &Damping) -> Result<GaussianFit> {
        let k = self.localization(a)?;
        let b = self.point.b();
        let grid = self.g.grid();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let (mut lower, mut upper) = (f64::INFINITY, 0.0f64);
        for i in 0..grid.len() {
            let s = grid.x(i) - b;
            if s.abs() > 0.5 * self.delta {
                continue;
            }
            let x = k * s * s;
            let y = -self.g.values()[i].norm().ln();
            if !y.is_finite() {
                continue;
            }
            if x > 0.0 {
                lower = lower.min(y / x);
                upper = upper.max(y / x);
            }
            xs.push(x);
            ys.push(y);
        }
        let line = linear_fit(&xs, &ys)?;
        Ok(GaussianFit { line, lower, upper })
    }
}

/// Linear fit of the Gaussian profile plus the tightest sandwich
/// constants `c₂ ≤ −log|g| / X ≤ c₁` seen on the plateau.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianFit {
    pub line: LineFit,
    pub lower: f64,
    pub upper: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Profile;

    fn damping(p: Profile) -> Damping {
        Damping::new(p).unwrap()
    }

    #[test]
    fn solve_b_examples() {
        let rel = |x: f64, y: f64| (x - y).abs() / y;
        assert_eq!(solve_b(&damping(Profile::monomial(2.0).unwrap()), 4.0).unwrap(), 2.0);
        let b = solve_b(&damping(Profile::exponential(1.0).unwrap()), 10.0).unwrap();
        assert!(rel(b, core::f64::consts::LN_10) < 1e-14);
        let b = solve_b(&damping(Profile::logarithmic()), 3.0).unwrap();
        assert!(rel(b, 20.085536923187668) < 1e-14);
        assert!(matches!(
            solve_b(&damping(Profile::monomial(2.0).unwrap()), 0.5),
            Err(Error::AlphaTooSmall { .. })
        ));
    }

    #[test]
    fn solve_b_by_bisection() {
        #[derive(Debug)]
        struct Cubic;
        impl crate::profiles::ClosedForm for Cubic {
            fn derivative(&self, m: usize, x: f64) -> f64 {
                match m {
                    0 => x * x * x + x,
                    1 => 3.0 * x * x + 1.0,
                    2 => 6.0 * x,
                    3 => 6.0,
                    _ => 0.0,
                }
            }
            fn max_order(&self) -> usize {
                6
            }
            fn nu(&self) -> f64 {
                -1.0
            }
        }
        let a = damping(Profile::custom(alloc::sync::Arc::new(Cubic)));
        for alpha in [3.0, 30.0, 12345.0] {
            let b = solve_b(&a, alpha).unwrap();
            assert!((a.eval(b).unwrap() - alpha).abs() <= 1e-12 * alpha);
        }
    }

    #[test]
    fn cutoff_plateau_and_support() {
        let grid = Grid::centered(10.0, 0.01, 300).unwrap();
        let c = build_cutoff(10.0, 2.0, grid).unwrap();
        let at = |x: f64| c.xi.values()[grid.nearest(x).unwrap()].re;
        assert_eq!(at(10.0), 1.0);
        assert_eq!(at(10.8), 1.0);
        assert_eq!(at(12.0), 0.0);
        assert_eq!(at(8.0), 0.0);
        for i in 0..grid.len() {
            let s = (grid.x(i) - 10.0).abs();
            let v = c.xi.values()[i].re;
            assert!((0.0..=1.0).contains(&v));
            if !(1.0..=2.0).contains(&s) {
                assert_eq!(c.xi1.values()[i].re, 0.0);
                assert_eq!(c.xi2.values()[i].re, 0.0);
            }
        }
    }

    #[test]
    fn cutoff_derivatives_scale_with_delta() {
        let measure = |delta: f64| {
            let grid = Grid::centered(0.0, delta / 2000.0, 2100).unwrap();
            let c = build_cutoff(0.0, delta, grid).unwrap();
            (c.xi1.sup_norm() * delta, c.xi2.sup_norm() * delta * delta)
        };
        let (d1, d2) = measure(1.0);
        for delta in [10.0, 100.0] {
            let (e1, e2) = measure(delta);
            assert!((e1 / d1 - 1.0).abs() < 0.01 && (e2 / d2 - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn cutoff_derivatives_match_finite_differences() {
        let delta = 3.0;
        for &s in &[1.6, 2.0, 2.5, 2.9, -1.7, -2.4] {
            let e = 1e-5;
            let (_, d1, d2) = cutoff_at(s, delta);
            let fd1 = (cutoff_at(s + e, delta).0 - cutoff_at(s - e, delta).0) / (2.0 * e);
            let fd2 = (cutoff_at(s + e, delta).1 - cutoff_at(s - e, delta).1) / (2.0 * e);
            assert!((fd1 - d1).abs() < 1e-6 * (1.0 + d1.abs()));
            assert!((fd2 - d2).abs() < 1e-5 * (1.0 + d2.abs()));
        }
    }

    #[test]
    fn under_resolved_layer_is_rejected() {
        let grid = Grid::centered(0.0, 0.1, 50).unwrap();
        assert!(matches!(build_cutoff(0.0, 2.0, grid), Err(Error::UnderResolved { samples: 10, .. })));
    }

    #[test]
    fn assembled_pseudomode_is_normalized_and_compact() {
        let a = damping(Profile::monomial(2.0).unwrap());
        let q = Potential::zero();
        for n in [0, 2] {
            let cfg = PseudomodeConfig { n, beta_curve: BetaCurve::Power { s: 1.0 }, ..Default::default() };
            let pm = assemble(&a, &q, &cfg, 64.0).unwrap();
            assert_eq!(pm.point.b(), 8.0);
            assert_eq!(pm.point.beta(), 8.0);
            let c = pm.phases.anchor();
            assert!((pm.f.values()[c].norm() - 1.0).abs() < 1e-15);
            let grid = pm.f.grid();
            for i in 0..grid.len() {
                if (grid.x(i) - 8.0).abs() >= pm.delta {
                    assert_eq!(pm.f.values()[i], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn presets_follow_the_admissible_ranges() {
        let x2 = damping(Profile::monomial(2.0).unwrap());
        let q5 = Potential::new(Profile::monomial(5.0).unwrap()).unwrap();
        assert_eq!(BetaCurve::preset(&x2, &q5, 0), BetaCurve::Power { s: 3.0 });
        assert_eq!(BetaCurve::preset(&x2, &q5, 3), BetaCurve::Power { s: 3.5 });
        assert_eq!(BetaCurve::preset(&x2, &Potential::zero(), 3), BetaCurve::Power { s: 0.0 });
        let e = damping(Profile::exponential(2.0).unwrap());
        assert!(matches!(BetaCurve::preset(&e, &Potential::zero(), 1), BetaCurve::ExpMatched { p, .. } if p == 2.0));
        let l = damping(Profile::logarithmic());
        assert_eq!(BetaCurve::preset(&l, &Potential::zero(), 0), BetaCurve::Constant(1.0));
    }

    #[test]
    fn window_width_follows_the_growth_exponent() {
        let cfg = PseudomodeConfig::default();
        let x2 = damping(Profile::monomial(2.0).unwrap());
        assert!((cfg.delta(&x2, 10.0) - 10f64.powf(0.9)).abs() < 1e-12);
        let e = damping(Profile::exponential(2.0).unwrap());
        assert!((cfg.delta(&e, 3.0) - 3f64.powf(-1.1)).abs() < 1e-12);
    }
}
