//! Residual of `Ψ_λ = (f_λ, λf_λ)` in the energy norm, `κ` predictions,
//! hypothesis diagnostics and b-sweeps with rate fits.
//!
//! Since `(G−λ)Ψ_λ = (0, −T(λ)f_λ)`, the quality ratio reduces to
//!
//! ```text
//! ‖T(λ)f‖ / (‖f′‖² + ‖q^{1/2} f‖² + |λ|²‖f‖²)^{1/2}.
//! ```

use alloc::vec::Vec;

#[allow(unused_imports)] // resolved to inherent methods in some feature sets
use num_traits::Float;

use crate::gridfn::GridFunction;
use crate::profiles::{Damping, Family, Potential, Profile};
use crate::pseudomode::{assemble_at, Pseudomode, PseudomodeConfig};
use crate::wkb::{remainder_collected, SpectralPoint};
use crate::{Error, Result, C64};

/// Least-squares line `y ≈ slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter(alloc::format!("{} points for a line fit", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("line-fit data".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("line fit with constant abscissa".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit { slope, intercept: my - slope * mx, r2 })
}

fn pointwise(f: &GridFunction, mut v: impl FnMut(usize, C64) -> Result<C64>) -> Result<GridFunction> {
    let values = f.values().iter().enumerate().map(|(i, &x)| v(i, x)).collect::<Result<Vec<_>>>()?;
    GridFunction::new(*f.grid(), values)
}

/// `u·v`, taking `0·∞` as `0` where the cut-off vanishes.
fn guarded(u: C64, v: C64) -> C64 {
    if u.re == 0.0 && u.im == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        u * v
    }
}

/// `T(λ)f = −f″ + (q + 2λa + λ²)f` by grid differentiation.
pub fn apply_pencil(a: &Profile, q: &Profile, lambda: C64, f: &GridFunction) -> Result<GridFunction> {
    let n = f.len();
    if f.values()[..2].iter().chain(&f.values()[n - 2..]).any(|v| v.norm() != 0.0) {
        return Err(Error::SupportTouchesBoundary);
    }
    let f2 = f.derivative(2)?;
    pointwise(f, |i, v| {
        let x = f.x(i);
        let pot = q.eval(x)? + lambda * (2.0 * a.eval(x)?) + lambda * lambda;
        Ok(-f2.values()[i] + pot * v)
    })
}

/// `∫ q|f|²`.
fn potential_energy(q: &Profile, f: &GridFunction) -> Result<f64> {
    if q.is_zero() {
        return Ok(0.0);
    }
    let weighted = pointwise(f, |i, v| Ok(v * q.eval(f.x(i))?.abs().sqrt()))?;
    Ok(weighted.l2_norm_sq())
}

/// Numerator and denominator pieces of the energy-norm ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioParts {
    /// `‖T(λ)f‖`
    pub numerator: f64,
    /// `‖f′‖²`
    pub fprime_sq: f64,
    /// `‖q^{1/2} f‖²`
    pub q_sq: f64,
    /// `|λ|²‖f‖²`
    pub lambda_sq: f64,
    pub ratio: f64,
}

impl RatioParts {
    fn new(numerator: f64, fprime_sq: f64, q_sq: f64, lambda_sq: f64) -> Result<Self> {
        let denom = fprime_sq + q_sq + lambda_sq;
        if !(denom > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let ratio = numerator / denom.sqrt();
        if !ratio.is_finite() {
            return Err(Error::NonFinite("residual ratio".into()));
        }
        Ok(RatioParts { numerator, fprime_sq, q_sq, lambda_sq, ratio })
    }

    pub fn denominator(&self) -> f64 {
        (self.fprime_sq + self.q_sq + self.lambda_sq).sqrt()
    }
}

/// The ratio for an arbitrary compactly supported `f`, with `T(λ)f` and
/// `f′` from finite differences.
pub fn residual_ratio(a: &Profile, q: &Profile, lambda: C64, f: &GridFunction) -> Result<RatioParts> {
    let tf = apply_pencil(a, q, lambda, f)?;
    let fp = f.derivative(1)?;
    RatioParts::new(tf.l2_norm(), fp.l2_norm_sq(), potential_energy(q, f)?, lambda.norm_sqr() * f.l2_norm_sq())
}

/// `T(λ)f_λ = −ξ″g − 2ξ′g′ + ξ r_n g` and `f_λ′ = ξ′g + ξg′`, with
/// `g′ = h′g` and the collected remainder.
#[derive(Clone, Debug)]
pub struct PencilSplit {
    pub xi2_g: GridFunction,
    pub xi1_g1: GridFunction,
    pub xi_r_g: GridFunction,
    pub tf: GridFunction,
    pub fprime: GridFunction,
}

pub fn pencil_split(pm: &Pseudomode) -> Result<PencilSplit> {
    let c = &pm.cutoff;
    let g = &pm.g;
    let g1 = pm.phases.h_prime().zip_with(g, |h, g| h * g)?;
    let r = remainder_collected(&pm.phases);
    let xi2_g = c.xi2.zip_with(g, guarded)?;
    let xi1_g1 = c.xi1.zip_with(&g1, guarded)?;
    let xi_r_g = pointwise(&c.xi, |i, x| Ok(guarded(x, r.values()[i] * g.values()[i])))?;
    let tf = pointwise(&xi2_g, |i, v| Ok(-v - xi1_g1.values()[i] * 2.0 + xi_r_g.values()[i]))?;
    let fprime = pointwise(&c.xi, |i, x| {
        Ok(guarded(c.xi1.values()[i], g.values()[i]) + guarded(x, g1.values()[i]))
    })?;
    Ok(PencilSplit { xi2_g, xi1_g1, xi_r_g, tf, fprime })
}

/// `‖apply_pencil(f_λ) − (−ξ″g − 2ξ′g′ + ξ r_n g)‖ / ‖f_λ‖`.
pub fn pencil_identity_gap(a: &Damping, q: &Potential, pm: &Pseudomode) -> Result<f64> {
    let direct = apply_pencil(a, q, pm.point.lambda(), &pm.f)?;
    let split = pencil_split(pm)?;
    let diff = direct.zip_with(&split.tf, |u, v| u - v)?;
    Ok(diff.l2_norm() / pm.f.l2_norm())
}

/// `(κ₁(b, c), κ₂(b))`.
pub fn predict_kappas(a: &Damping, point: &SpectralPoint, delta: f64, n: usize, c: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("κ₁ constant c = {c} must be positive")));
    }
    let (alpha, b, s) = (point.alpha(), point.b(), point.scale());
    let nu = a.nu();
    let width = point.beta().abs() / s * a.eval_deriv(1, b)? * delta * delta;
    let kappa1 = (1.0 / delta + 1.0 / (s * delta * delta)) * (-c * width).exp();
    let nf = n as f64;
    let mut kappa2 = alpha * b.powf(nu * (nf + 1.0)) / s.powf(nf);
    for k in 1..n {
        let kf = k as f64;
        kappa2 += b.powf(nu * (nf + kf + 1.0)) * alpha * alpha / s.powf(nf + 1.0 + kf);
    }
    Ok((kappa1, kappa2))
}

/// Per-point hypothesis ratios; the flags compare consecutive points.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisRatios {
    /// `q_b^{(0)} / (α² + β²)`, must vanish.
    pub q0: f64,
    /// `(α² b^{2ν} + q_b^{(1)}) / (α² + β²)`, must vanish (basic ansatz).
    pub aq: f64,
    /// `q_b^{(j)} / (α(α+β) b^{jν})`, `j = 1..n`, must stay bounded.
    pub qj: Vec<f64>,
    /// `b^ν / (α+β)`, must stay bounded.
    pub cutoff2: f64,
    /// `κ₁(b, c)`, must vanish.
    pub kappa1: f64,
}

pub fn check_hypotheses(
    a: &Damping,
    q: &Potential,
    point: &SpectralPoint,
    delta: f64,
    n: usize,
    c: f64,
) -> Result<HypothesisRatios> {
    let (alpha, beta, b, s) = (point.alpha(), point.beta(), point.b(), point.scale());
    let nu = a.nu();
    let mod2 = alpha * alpha + beta * beta;
    let sup = |j: usize| if q.is_zero() { Ok(0.0) } else { q.window_sup(j, b, delta) };
    let q1 = if q.is_zero() || q.max_order() >= 1 { sup(1)? } else { f64::NAN };
    let qj = (1..=n)
        .map(|j| Ok(sup(j)? / (alpha * s * b.powf(j as f64 * nu))))
        .collect::<Result<Vec<_>>>()?;
    Ok(HypothesisRatios {
        q0: sup(0)? / mod2,
        aq: (alpha * alpha * b.powf(2.0 * nu) + q1) / mod2,
        qj,
        cutoff2: b.powf(nu) / s,
        kappa1: predict_kappas(a, point, delta, n, c)?.0,
    })
}

/// `true` marks a condition that failed between this point and the previous one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HypothesisFlags {
    pub q0: bool,
    pub aq: bool,
    pub qj: bool,
    pub cutoff2: bool,
    pub kappa1: bool,
}

impl HypothesisFlags {
    pub fn any(&self) -> bool {
        self.q0 || self.aq || self.qj || self.cutoff2 || self.kappa1
    }

    pub fn merge(&mut self, other: HypothesisFlags) {
        self.q0 |= other.q0;
        self.aq |= other.aq;
        self.qj |= other.qj;
        self.cutoff2 |= other.cutoff2;
        self.kappa1 |= other.kappa1;
    }
}

/// A little-o ratio must strictly shrink (or be identically zero).
fn fails_to_vanish(prev: f64, cur: f64) -> bool {
    !(cur == 0.0 || cur < prev)
}

/// A big-O ratio must not grow beyond rounding.
fn fails_to_stay_bounded(prev: f64, cur: f64) -> bool {
    !(cur <= prev * (1.0 + 1e-9) || cur == 0.0)
}

pub fn compare_hypotheses(prev: &HypothesisRatios, cur: &HypothesisRatios) -> HypothesisFlags {
    HypothesisFlags {
        q0: fails_to_vanish(prev.q0, cur.q0),
        aq: fails_to_vanish(prev.aq, cur.aq),
        qj: prev.qj.iter().zip(&cur.qj).any(|(&p, &c)| fails_to_stay_bounded(p, c)),
        cutoff2: fails_to_stay_bounded(prev.cutoff2, cur.cutoff2),
        kappa1: fails_to_vanish(prev.kappa1, cur.kappa1),
    }
}

/// Flags for each point of an increasing-b sequence; the first point has none.
pub fn hypothesis_flags(ratios: &[HypothesisRatios]) -> Vec<HypothesisFlags> {
    let mut out = alloc::vec![HypothesisFlags::default(); ratios.len()];
    for i in 1..ratios.len() {
        out[i] = compare_hypotheses(&ratios[i - 1], &ratios[i]);
    }
    out
}

/// One sweep row.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub n: usize,
    pub parts: RatioParts,
    /// `‖ξ″g‖`
    pub xi2_g: f64,
    /// `‖ξ′g′‖`
    pub xi1_g1: f64,
    /// `‖ξ r_n g‖`
    pub xi_r_g: f64,
    /// Constant used in `κ₁`.
    pub c: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub hypotheses: HypothesisRatios,
    pub flags: HypothesisFlags,
}

impl ResidualReport {
    pub fn ratio(&self) -> f64 {
        self.parts.ratio
    }

    /// `1/ratio ≤ ‖(G−λ)^{-1}‖`.
    pub fn resolvent_lower_bound(&self) -> f64 {
        1.0 / self.parts.ratio
    }
}

/// Default `κ₁` constant: an eighth of the smallest plateau value of
/// `−log|g| / X` (`1/8` when the fit is unusable).
pub fn default_kappa_constant(a: &Damping, pm: &Pseudomode) -> f64 {
    match pm.gaussian_fit(a) {
        Ok(fit) if fit.lower.is_finite() && fit.lower > 0.0 => fit.lower / 8.0,
        _ => 0.125,
    }
}

/// Residual report for an assembled pseudomode.
pub fn pseudomode_report(a: &Damping, q: &Potential, pm: &Pseudomode, c: Option<f64>) -> Result<ResidualReport> {
    let split = pencil_split(pm)?;
    let lambda = pm.point.lambda();
    let parts = RatioParts::new(
        split.tf.l2_norm(),
        split.fprime.l2_norm_sq(),
        potential_energy(q, &pm.f)?,
        lambda.norm_sqr() * pm.f.l2_norm_sq(),
    )?;
    let c = c.unwrap_or_else(|| default_kappa_constant(a, pm));
    let n = pm.phases.n();
    let (kappa1, kappa2) = predict_kappas(a, &pm.point, pm.delta, n, c)?;
    let hypotheses = check_hypotheses(a, q, &pm.point, pm.delta, n, c)?;
    Ok(ResidualReport {
        b: pm.point.b(),
        alpha: pm.point.alpha(),
        beta: pm.point.beta(),
        delta: pm.delta,
        n,
        parts,
        xi2_g: split.xi2_g.l2_norm(),
        xi1_g1: split.xi1_g1.l2_norm(),
        xi_r_g: split.xi_r_g.l2_norm(),
        c,
        kappa1,
        kappa2,
        hypotheses,
        flags: HypothesisFlags::default(),
    })
}

/// Builds and evaluates the pseudomode at turning point `b`.
pub fn sweep_point(a: &Damping, q: &Potential, cfg: &PseudomodeConfig, b: f64, c: Option<f64>) -> Result<ResidualReport> {
    let point = SpectralPoint::with_b(a, a.eval(b)?, cfg.beta_curve.eval(b), b)?;
    let pm = assemble_at(a, q, cfg, &point)?;
    pseudomode_report(a, q, &pm, c)
}

pub fn validate_b_list(b_list: &[f64]) -> Result<()> {
    if b_list.len() < 3 {
        return Err(Error::InvalidParameter(alloc::format!("{} sweep points, need ≥ 3", b_list.len())));
    }
    if b_list.windows(2).any(|w| !(w[1] > w[0])) || b_list.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidParameter("sweep b values must be finite and increasing".into()));
    }
    Ok(())
}

/// Fills the `flags` column from consecutive hypothesis ratios.
pub fn finalize_sweep(reports: &mut [ResidualReport]) {
    let ratios: Vec<_> = reports.iter().map(|r| r.hypotheses.clone()).collect();
    for (r, f) in reports.iter_mut().zip(hypothesis_flags(&ratios)) {
        r.flags = f;
    }
}

/// Hypothesis ratios and flags along `b_list` without assembling pseudomodes,
/// so points where the construction breaks down are still diagnosed.
pub fn hypothesis_sweep(
    a: &Damping,
    q: &Potential,
    cfg: &PseudomodeConfig,
    b_list: &[f64],
    c: f64,
) -> Result<Vec<(HypothesisRatios, HypothesisFlags)>> {
    validate_b_list(b_list)?;
    let ratios = b_list
        .iter()
        .map(|&b| {
            let point = SpectralPoint::with_b(a, a.eval(b)?, cfg.beta_curve.eval(b), b)?;
            check_hypotheses(a, q, &point, cfg.delta(a, b), cfg.n, c)
        })
        .collect::<Result<Vec<_>>>()?;
    let flags = hypothesis_flags(&ratios);
    Ok(ratios.into_iter().zip(flags).collect())
}

/// Sequential sweep over increasing `b`.
pub fn sweep(
    a: &Damping,
    q: &Potential,
    cfg: &PseudomodeConfig,
    b_list: &[f64],
    c: Option<f64>,
) -> Result<Vec<ResidualReport>> {
    validate_b_list(b_list)?;
    let mut reports = b_list
        .iter()
        .map(|&b| sweep_point(a, q, cfg, b, c))
        .collect::<Result<Vec<_>>>()?;
    finalize_sweep(&mut reports);
    Ok(reports)
}

/// Abscissa of the rate regression.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateAxis {
    LogB,
    /// `b^p`, for exponential dampings.
    PowerB(f64),
}

impl RateAxis {
    pub fn for_damping(a: &Damping) -> Self {
        match *a.family() {
            Family::Exponential { p } => RateAxis::PowerB(p),
            _ => RateAxis::LogB,
        }
    }

    fn apply(&self, b: f64) -> f64 {
        match *self {
            RateAxis::LogB => b.ln(),
            RateAxis::PowerB(p) => b.powf(p),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub axis: RateAxis,
    pub line: LineFit,
    /// Number of leading (smallest-b) points excluded.
    pub dropped: usize,
    pub b_min: f64,
    pub b_max: f64,
}

/// Fits `log(ratio)` against the axis; refits without the smallest `b`
/// when `R² < 0.98` and at least three points remain.
pub fn fit_rate(reports: &[ResidualReport], axis: RateAxis) -> Result<RateFit> {
    if reports.len() < 3 {
        return Err(Error::InvalidParameter(alloc::format!("{} sweep rows, need ≥ 3", reports.len())));
    }
    if reports.iter().any(|r| !(r.ratio().is_finite() && r.ratio() > 0.0)) {
        return Err(Error::NonFinite("sweep ratio".into()));
    }
    let fit = |rows: &[ResidualReport]| {
        let xs: Vec<f64> = rows.iter().map(|r| axis.apply(r.b)).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.ratio().ln()).collect();
        linear_fit(&xs, &ys)
    };
    let mut dropped = 0;
    let mut line = fit(reports)?;
    if line.r2 < 0.98 && reports.len() >= 4 {
        dropped = 1;
        line = fit(&reports[1..])?;
    }
    Ok(RateFit { axis, line, dropped, b_min: reports[dropped].b, b_max: reports[reports.len() - 1].b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::Grid;
    use crate::pseudomode::{assemble, BetaCurve};

    fn x2() -> Damping {
        Damping::new(Profile::monomial(2.0).unwrap()).unwrap()
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| -3.0 * x + 0.5).collect();
        let l = linear_fit(&xs, &ys).unwrap();
        assert!((l.slope + 3.0).abs() < 1e-14 && (l.intercept - 0.5).abs() < 1e-13);
        assert!((l.r2 - 1.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pencil_of_gaussian() {
        let grid = Grid::centered(0.0, 0.01, 1000).unwrap();
        let f = GridFunction::from_real_fn(grid, |x| (-x * x).exp());
        let z = Profile::zero();
        // the Gaussian tail at |x| = 10 is far below rounding
        let f = f.map(|v| if v.norm() < 1e-40 { C64::new(0.0, 0.0) } else { v });
        let t = apply_pencil(&z, &z, C64::new(0.0, 0.0), &f).unwrap();
        for i in 10..grid.len() - 10 {
            let x = grid.x(i);
            let exact = (2.0 - 4.0 * x * x) * (-x * x).exp();
            assert!((t.values()[i].re - exact).abs() < 1e-6);
        }
    }

    #[test]
    fn pencil_rejects_support_on_the_boundary() {
        let grid = Grid::spanning(0.0, 1.0, 21).unwrap();
        let f = GridFunction::from_real_fn(grid, |_| 1.0);
        let z = Profile::zero();
        assert_eq!(apply_pencil(&z, &z, C64::new(1.0, 0.0), &f).unwrap_err(), Error::SupportTouchesBoundary);
    }

    #[test]
    fn ratio_is_homogeneous_and_conjugation_symmetric() {
        let a = x2();
        let q = Profile::monomial(1.0).unwrap();
        let cfg = PseudomodeConfig { n: 1, beta_curve: BetaCurve::Constant(3.0), ..Default::default() };
        let pm = assemble(&a, &Potential::new(q.clone()).unwrap(), &cfg, 36.0).unwrap();
        let lambda = pm.point.lambda();
        let r = residual_ratio(&a, &q, lambda, &pm.f).unwrap();
        let r2 = residual_ratio(&a, &q, lambda, &pm.f.scale(C64::new(2.0, 0.0))).unwrap();
        let rc = residual_ratio(&a, &q, lambda.conj(), &pm.f.conj()).unwrap();
        assert!((r.ratio - r2.ratio).abs() <= 1e-12 * r.ratio);
        assert!((r.ratio - rc.ratio).abs() <= 1e-12 * r.ratio);
        assert!(r.ratio * r.ratio <= r.numerator * r.numerator / r.lambda_sq);
    }

    #[test]
    fn kappa_examples() {
        let a = x2();
        // n = 1: empty sum, κ₂ = α b^{2ν} / (α+β)
        let p = SpectralPoint::new(&a, 100.0, 10.0).unwrap();
        let (_, k2) = predict_kappas(&a, &p, 5.0, 1, 1.0).unwrap();
        assert!((k2 - 100.0 * 10f64.powi(-2) / 110.0).abs() < 1e-15);
        // n = 3, β = b, α = b²: leading behavior b^{-8}
        let ratio = |b: f64| {
            let p = SpectralPoint::new(&a, b * b, b).unwrap();
            predict_kappas(&a, &p, 1.0, 3, 1.0).unwrap().1
        };
        let slope = (ratio(2e4).ln() - ratio(1e4).ln()) / 2f64.ln();
        assert!((slope + 8.0).abs() < 1e-3, "{slope}");
        assert!(predict_kappas(&a, &p, 1.0, 3, 0.0).is_err());
    }

    #[test]
    fn kappa2_for_logarithmic_damping() {
        let a = Damping::new(Profile::logarithmic()).unwrap();
        let n = 3;
        let model = |b: f64| b.ln().powi(1 - n as i32) * b.powi(-(n as i32) - 1);
        let k = |b: f64| {
            let p = SpectralPoint::new(&a, b.ln(), 1.0).unwrap();
            predict_kappas(&a, &p, 1.0, n, 1.0).unwrap().1
        };
        let r1 = k(1e6) / model(1e6);
        let r2 = k(1e12) / model(1e12);
        assert!((r1 / r2 - 1.0).abs() < 0.2, "{r1} {r2}");
    }

    #[test]
    fn zero_potential_passes_q_conditions() {
        let a = x2();
        let q = Potential::zero();
        let ratios: Vec<_> = [8.0, 12.0, 16.0]
            .iter()
            .map(|&b: &f64| {
                let p = SpectralPoint::with_b(&a, b * b, 1.0, b).unwrap();
                check_hypotheses(&a, &q, &p, b.powf(0.9), 2, 0.1).unwrap()
            })
            .collect();
        for f in hypothesis_flags(&ratios) {
            assert!(!f.q0 && !f.qj);
        }
        assert!(ratios.iter().all(|r| r.q0 == 0.0));
    }

    #[test]
    fn steep_potential_needs_large_beta() {
        let a = x2();
        let q = Potential::new(Profile::monomial(5.0).unwrap()).unwrap();
        let flags = |beta: &dyn Fn(f64) -> f64| {
            let ratios: Vec<_> = [8.0, 12.0, 16.0, 24.0, 32.0]
                .iter()
                .map(|&b: &f64| {
                    let p = SpectralPoint::with_b(&a, b * b, beta(b), b).unwrap();
                    check_hypotheses(&a, &q, &p, b.powf(0.9), 0, 0.1).unwrap()
                })
                .collect();
            hypothesis_flags(&ratios).into_iter().fold(HypothesisFlags::default(), |mut acc, f| {
                acc.merge(f);
                acc
            })
        };
        assert!(flags(&|_| 1.0).q0);
        assert!(!flags(&|b| b.powi(3)).q0);
    }

    #[test]
    fn exponential_damping_imposes_no_beta_restriction_on_q() {
        let a = Damping::new(Profile::exponential(2.0).unwrap()).unwrap();
        let q = Potential::new(Profile::exponential(1.0).unwrap()).unwrap();
        let ratios: Vec<_> = [2.0, 2.5, 3.0, 3.5]
            .iter()
            .map(|&b: &f64| {
                let p = SpectralPoint::with_b(&a, a.eval(b).unwrap(), 1.0, b).unwrap();
                check_hypotheses(&a, &q, &p, b.powf(-1.1), 2, 0.1).unwrap()
            })
            .collect();
        for f in hypothesis_flags(&ratios).iter().skip(1) {
            assert!(!f.q0 && !f.qj, "{f:?}");
        }
    }

    #[test]
    fn rate_fit_drops_a_contaminated_first_point() {
        let mk = |b: f64, ratio: f64| ResidualReport {
            b,
            alpha: b * b,
            beta: b,
            delta: 1.0,
            n: 0,
            parts: RatioParts { numerator: ratio, fprime_sq: 0.0, q_sq: 0.0, lambda_sq: 1.0, ratio },
            xi2_g: 0.0,
            xi1_g1: 0.0,
            xi_r_g: 0.0,
            c: 1.0,
            kappa1: 0.0,
            kappa2: 0.0,
            hypotheses: HypothesisRatios { q0: 0.0, aq: 0.0, qj: Vec::new(), cutoff2: 0.0, kappa1: 0.0 },
            flags: HypothesisFlags::default(),
        };
        let clean: Vec<_> = [8.0, 12.0, 16.0, 24.0, 32.0].iter().map(|&b: &f64| mk(b, b.powi(-4))).collect();
        let fit = fit_rate(&clean, RateAxis::LogB).unwrap();
        assert_eq!(fit.dropped, 0);
        assert!((fit.line.slope + 4.0).abs() < 1e-12);
        let mut dirty = clean.clone();
        dirty[0].parts.ratio = 1e-9;
        let fit = fit_rate(&dirty, RateAxis::LogB).unwrap();
        assert_eq!(fit.dropped, 1);
        assert!((fit.line.slope + 4.0).abs() < 1e-12);
        assert!(fit_rate(&clean[..2], RateAxis::LogB).is_err());
        assert!(validate_b_list(&[1.0, 3.0, 2.0]).is_err());
    }
}
