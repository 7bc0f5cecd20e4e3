//! WKB phases for the pencil `T(λ) = −∂² + q + 2λa + λ²`.
//!
//! With `λ = −α + iβ` and `ζ = −λ² − 2λa − q`, the leading phase is
//! `ψ₋₁′ = √ζ / λ` (principal root), so that `λ²(ψ₋₁′)² = ζ` and
//! `Re(−iλψ₋₁)` is negative on both sides of the turning point when β > 0.
//! Higher phases follow from the Riccati equation for `h = log g`,
//!
//! ```text
//! ψ₀′     = ζ′ / (4ζ)
//! ψ_{j+1}′ = (ψ_j″ − Σ_{ω+χ=j} ψ_ω′ ψ_χ′) / (2i ψ₋₁′)
//! ```
//!
//! with `ψ_j″` taken from grid differentiation of `ψ_j′`.

use alloc::vec::Vec;

#[allow(unused_imports)] // resolved to inherent methods in some feature sets
use num_traits::Float;

use crate::gridfn::{Grid, GridFunction};
use crate::profiles::{Damping, Potential};
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// `λ = −α + iβ` together with the turning point `b`, `a(b) = α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPoint {
    alpha: f64,
    beta: f64,
    b: f64,
}

impl SpectralPoint {
    /// Solves `a(b) = α` and builds the point.
    pub fn new(a: &Damping, alpha: f64, beta: f64) -> Result<Self> {
        let b = crate::pseudomode::solve_b(a, alpha)?;
        Self::with_b(a, alpha, beta, b)
    }

    /// Builds the point from a known turning point, re-checking `a(b) = α`.
    pub fn with_b(a: &Damping, alpha: f64, beta: f64, b: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("α = {alpha} must be positive")));
        }
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("β = {beta}")));
        }
        let ab = a.eval(b)?;
        if (ab - alpha).abs() > 1e-12 * alpha {
            return Err(Error::InvalidParameter(alloc::format!(
                "a({b}) = {ab} does not match α = {alpha}"
            )));
        }
        Ok(SpectralPoint { alpha, beta, b })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn lambda(&self) -> C64 {
        C64::new(-self.alpha, self.beta)
    }

    /// `α + |β|`, the size of `|λ|` up to a factor √2.
    pub fn scale(&self) -> f64 {
        self.alpha + self.beta.abs()
    }

    pub fn conj(&self) -> Self {
        SpectralPoint { beta: -self.beta, ..*self }
    }
}

/// Principal square root, cut along `(−∞, 0]`.
pub fn principal_sqrt(z: C64) -> Result<C64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite(alloc::format!("square root of {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 {
        return Err(Error::BranchCut { re: z.re, im: z.im });
    }
    let m = z.re.hypot(z.im);
    // pick the well-conditioned half and recover the other from im = 2·re·im'
    if z.re >= 0.0 {
        let t = (0.5 * (m + z.re)).sqrt();
        Ok(C64::new(t, z.im / (2.0 * t)))
    } else {
        let t = (0.5 * (m - z.re)).sqrt();
        Ok(C64::new(z.im.abs() / (2.0 * t), t.copysign(z.im)))
    }
}

/// `ζ(t) = −λ² − 2λa(t) − q(t)`, split into real and imaginary parts so
/// that `Im ζ(b) = 2β(α − a(b))` vanishes to rounding.
pub fn zeta(a: &Damping, q: &Potential, point: &SpectralPoint, t: f64) -> Result<C64> {
    let (alpha, beta) = (point.alpha, point.beta);
    let at = a.eval(t)?;
    let qt = q.eval(t)?;
    Ok(C64::new(
        beta * beta - alpha * alpha + 2.0 * alpha * at - qt,
        2.0 * beta * (alpha - at),
    ))
}

/// `ζ′(t) = −2λa′(t) − q′(t)`.
pub fn zeta_prime(a: &Damping, q: &Potential, point: &SpectralPoint, t: f64) -> Result<C64> {
    let ap = a.eval_deriv(1, t)?;
    let qp = if q.is_zero() { 0.0 } else { q.eval_deriv(1, t)? };
    Ok(-point.lambda() * (2.0 * ap) - qp)
}

/// Sampled phase derivatives `ψ_k′`, `k = −1..n−1`, and their
/// antiderivatives anchored at the turning point.
#[derive(Clone, Debug)]
pub struct WkbPhases {
    n: usize,
    point: SpectralPoint,
    window: (f64, f64),
    anchor: usize,
    zeta: GridFunction,
    /// `[k + 1]` holds `ψ_k′`.
    psi_prime: Vec<GridFunction>,
    /// `[0]` is the closed-form `ψ₋₁″`, the rest are grid derivatives.
    psi_second: Vec<GridFunction>,
    psi: Vec<GridFunction>,
}

/// Builds the phases on `grid`, which must carry `b` as a node.
///
/// `β < 0` is served by building for `λ̄` and conjugating.
pub fn build_phases(
    a: &Damping,
    q: &Potential,
    point: &SpectralPoint,
    n: usize,
    window: (f64, f64),
    grid: Grid,
) -> Result<WkbPhases> {
    if point.beta == 0.0 {
        return Err(Error::DegenerateBeta);
    }
    if point.beta < 0.0 {
        let mut phases = build_phases(a, q, &point.conj(), n, window, grid)?;
        phases.point = *point;
        for f in phases
            .psi_prime
            .iter_mut()
            .chain(phases.psi_second.iter_mut())
            .chain(phases.psi.iter_mut())
            .chain(core::iter::once(&mut phases.zeta))
        {
            f.conj_in_place();
        }
        // conj(−iλψ₋₁′) = −iλ̄·(−conj ψ₋₁′), so g_λ̄ = conj g_λ needs the sign flip
        for f in [&mut phases.psi_prime[0], &mut phases.psi_second[0], &mut phases.psi[0]] {
            *f = f.map(|v| -v);
        }
        return Ok(phases);
    }
    for profile in [a.profile(), q.profile()] {
        if !profile.is_zero() && profile.max_order() < n + 1 {
            return Err(Error::OrderTooHigh { order: n + 1, max: profile.max_order() });
        }
    }
    let anchor = grid
        .nearest(point.b)
        .filter(|&i| (grid.x(i) - point.b).abs() <= 1e-9 * grid.h())
        .ok_or_else(|| Error::InvalidParameter(alloc::format!("b = {} is not a grid node", point.b)))?;

    let lambda = point.lambda();
    let zeta_g = GridFunction::try_from_fn(grid, |t| zeta(a, q, point, t))?;
    let zeta_p = GridFunction::try_from_fn(grid, |t| zeta_prime(a, q, point, t))?;
    let roots = zeta_g.values().iter().map(|&z| principal_sqrt(z)).collect::<Result<Vec<_>>>()?;

    let psi_m1 = GridFunction::new(grid, roots.iter().map(|&r| r / lambda).collect())?;
    let psi_m1_second = GridFunction::new(
        grid,
        roots.iter().zip(zeta_p.values()).map(|(&r, &zp)| zp / (lambda * r * 2.0)).collect(),
    )?;

    let mut psi_prime = alloc::vec![psi_m1];
    let mut psi_second = alloc::vec![psi_m1_second];
    if n >= 1 {
        let psi_0 = zeta_p.zip_with(&zeta_g, |zp, z| zp / (z * 4.0))?;
        psi_second.push(psi_0.derivative(1)?);
        psi_prime.push(psi_0);
    }
    for j in 0..n.saturating_sub(1) {
        // ψ_{j+1}′ from ψ_j″ and the products ψ_ω′ψ_χ′ with ω + χ = j
        let denom = psi_prime[0].scale(I * 2.0);
        let values = (0..grid.len())
            .map(|i| {
                let mut acc = psi_second[j + 1].values()[i];
                for w in 0..=j {
                    acc -= psi_prime[w + 1].values()[i] * psi_prime[j - w + 1].values()[i];
                }
                acc / denom.values()[i]
            })
            .collect();
        let next = GridFunction::new(grid, values)?;
        psi_second.push(next.derivative(1)?);
        psi_prime.push(next);
    }
    let psi = psi_prime
        .iter()
        .map(|f| f.cumulative_integral(anchor))
        .collect::<Result<Vec<_>>>()?;
    for f in psi_prime.iter().chain(&psi_second) {
        if !f.is_finite() {
            return Err(Error::NonFinite("WKB phase derivative".into()));
        }
    }
    Ok(WkbPhases { n, point: *point, window, anchor, zeta: zeta_g, psi_prime, psi_second, psi })
}

impl WkbPhases {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn point(&self) -> &SpectralPoint {
        &self.point
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn grid(&self) -> &Grid {
        self.zeta.grid()
    }

    /// Node index of the turning point.
    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn zeta(&self) -> &GridFunction {
        &self.zeta
    }

    fn slot(&self, k: isize) -> usize {
        assert!(k >= -1 && k < self.n as isize, "phase index {k} outside -1..{}", self.n);
        (k + 1) as usize
    }

    /// `ψ_k′` for `k = −1..n−1`.
    pub fn psi_prime(&self, k: isize) -> &GridFunction {
        &self.psi_prime[self.slot(k)]
    }

    pub fn psi_second(&self, k: isize) -> &GridFunction {
        &self.psi_second[self.slot(k)]
    }

    /// `ψ_k` with `ψ_k(b) = 0`.
    pub fn psi(&self, k: isize) -> &GridFunction {
        &self.psi[self.slot(k)]
    }

    fn lambda_pow(&self, k: isize) -> C64 {
        self.point.lambda().powi(-(k as i32))
    }

    /// `h′ = −iλψ₋₁′ − Σ_{k<n} λ^{−k} ψ_k′`.
    pub fn h_prime(&self) -> GridFunction {
        let lambda = self.point.lambda();
        let mut out = self.psi_prime[0].scale(-I * lambda);
        for k in 0..self.n as isize {
            let c = self.lambda_pow(k);
            out = out.zip_with(self.psi_prime(k), |u, v| u - v * c).expect("shared grid");
        }
        out
    }

    /// The exponent `h = −iλψ₋₁ − Σ λ^{−k} ψ_k`.
    pub fn phase(&self) -> GridFunction {
        let lambda = self.point.lambda();
        let mut out = self.psi[0].scale(-I * lambda);
        for k in 0..self.n as isize {
            let c = self.lambda_pow(k);
            out = out.zip_with(self.psi(k), |u, v| u - v * c).expect("shared grid");
        }
        out
    }

    /// `g = e^h`, marched cell by cell from `g(b) = 1`.
    pub fn g(&self) -> Result<GridFunction> {
        self.h_prime().exp_integral(self.anchor)
    }

    /// `V = q + 2λa + λ² = −ζ`.
    pub fn potential(&self) -> GridFunction {
        self.zeta.map(|z| -z)
    }
}

/// `r_n = −h″ − (h′)² + V`, with `h″` from one grid differentiation of `h′`.
///
/// Exact up to the finite-difference error in `h″`, but the leading terms
/// `(λψ₋₁′)²` and `V` cancel, so the result carries a rounding floor of
/// order `ε·|λ|²`.
pub fn remainder_rn(phases: &WkbPhases) -> Result<GridFunction> {
    let hp = phases.h_prime();
    let hpp = hp.derivative(1)?;
    let v = phases.potential();
    let values = (0..hp.len())
        .map(|i| -hpp.values()[i] - hp.values()[i] * hp.values()[i] + v.values()[i])
        .collect();
    GridFunction::new(*hp.grid(), values)
}

/// The same remainder with the cancelling orders removed analytically:
///
/// ```text
/// r₀ = iλψ₋₁″
/// r_n = λ^{1−n} ψ_{n−1}″ − Σ_{j=n−1}^{2n−2} λ^{−j} Σ_{ω+χ=j, ω,χ<n} ψ_ω′ψ_χ′
/// ```
pub fn remainder_collected(phases: &WkbPhases) -> GridFunction {
    let n = phases.n;
    let lambda = phases.point.lambda();
    if n == 0 {
        return phases.psi_second(-1).scale(I * lambda);
    }
    let grid = *phases.grid();
    let top = phases.lambda_pow(n as isize - 1);
    let lead = phases.psi_second(n as isize - 1);
    let values = (0..grid.len())
        .map(|i| {
            let mut acc = lead.values()[i] * top;
            for j in (n - 1)..=(2 * n - 2) {
                let mut sum = C64::new(0.0, 0.0);
                for w in (j + 1).saturating_sub(n)..=j.min(n - 1) {
                    sum += phases.psi_prime[w + 1].values()[i] * phases.psi_prime[j - w + 1].values()[i];
                }
                acc -= sum * phases.lambda_pow(j as isize);
            }
            acc
        })
        .collect();
    GridFunction::new(grid, values).expect("shared grid")
}
