//! Finite-difference discretization of the damped wave generator on
//! `[−L, L]` with Dirichlet ends, in the energy inner product.
//!
//! With `K + Q = LLᵀ` (bidiagonal `L`) and `C = blockdiag(Lᵀ, I)`,
//!
//! ```text
//! C A C⁻¹ = [[0, Lᵀ], [−L, −2D]] =: Ã,
//! ```
//!
//! so the weighted resolvent norm of `A` is the Euclidean one of `Ã`.

use alloc::vec::Vec;

use faer::{Mat, Side};
#[allow(unused_imports)] // resolved to inherent methods in some feature sets
use num_traits::Float;

use crate::profiles::Profile;
use crate::{Error, Result, C64};

/// Fewest interior nodes accepted.
pub const MIN_NODES: usize = 100;

/// Share of `[−L, L]` at each end treated as the boundary layer.
const OUTER_FRACTION: f64 = 0.1;
/// Eigenvectors with more than this share of their energy in the outer
/// layer are flagged.
const BOUNDARY_MASS_LIMIT: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct OperatorDiscretization {
    l: f64,
    n: usize,
    h: f64,
    x: Vec<f64>,
    a: Vec<f64>,
    q: Vec<f64>,
    /// `L[i][i]`
    chol_diag: Vec<f64>,
    /// `L[i][i−1]`, with `chol_sub[0] = 0`.
    chol_sub: Vec<f64>,
}

/// Samples profiles at `|x|` (profiles live on the half-line), builds the
/// FD Laplacian and the bidiagonal Cholesky factor of `K + Q`.
pub fn build_operator(a: &Profile, q: &Profile, l: f64, n: usize) -> Result<OperatorDiscretization> {
    if n < MIN_NODES {
        return Err(Error::GridTooShort { len: n, min: MIN_NODES });
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("truncation L = {l}")));
    }
    let h = 2.0 * l / (n + 1) as f64;
    let x: Vec<f64> = (1..=n).map(|i| -l + i as f64 * h).collect();
    let a_s = x.iter().map(|&t| a.eval(t.abs())).collect::<Result<Vec<_>>>()?;
    let q_s = x.iter().map(|&t| q.eval(t.abs())).collect::<Result<Vec<_>>>()?;
    log::debug!("discretized on [-{l}, {l}] with {n} nodes, profiles sampled at |x|");

    let inv_h2 = 1.0 / (h * h);
    let mut chol_diag = Vec::with_capacity(n);
    let mut chol_sub = Vec::with_capacity(n);
    for i in 0..n {
        let sub = if i == 0 { 0.0 } else { -inv_h2 / chol_diag[i - 1] };
        let pivot = 2.0 * inv_h2 + q_s[i] - sub * sub;
        if !(pivot > 0.0) {
            return Err(Error::NotPositiveDefinite { index: i });
        }
        chol_diag.push(pivot.sqrt());
        chol_sub.push(sub);
    }
    Ok(OperatorDiscretization { l, n, h, x, a: a_s, q: q_s, chol_diag, chol_sub })
}

impl OperatorDiscretization {
    pub fn half_length(&self) -> f64 {
        self.l
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn damping(&self) -> &[f64] {
        &self.a
    }

    pub fn potential(&self) -> &[f64] {
        &self.q
    }

    /// Logs when `a(L) < 2·|Re λ|`: the truncation then reaches into the
    /// region the scan probes.
    pub fn check_reach(&self, re_lambda: f64) -> bool {
        let a_end = self.a.first().copied().unwrap_or(0.0).min(self.a.last().copied().unwrap_or(0.0));
        let ok = a_end >= 2.0 * re_lambda.abs();
        if !ok {
            log::warn!("a(L) = {a_end} < 2|Re λ| = {}: truncation may pollute the scan", 2.0 * re_lambda.abs());
        }
        ok
    }

    /// The original block operator `A = [[0, I], [−K−Q, −2D]]`.
    pub fn generator(&self) -> Mat<f64> {
        let n = self.n;
        let inv_h2 = 1.0 / (self.h * self.h);
        Mat::from_fn(2 * n, 2 * n, |i, j| {
            if i < n {
                if j == i + n { 1.0 } else { 0.0 }
            } else {
                let r = i - n;
                if j < n {
                    if j == r {
                        -(2.0 * inv_h2 + self.q[r])
                    } else if j + 1 == r || r + 1 == j {
                        inv_h2
                    } else {
                        0.0
                    }
                } else if j - n == r {
                    -2.0 * self.a[r]
                } else {
                    0.0
                }
            }
        })
    }

    /// `Ã = [[0, Lᵀ], [−L, −2D]]`.
    pub fn symmetrized(&self) -> Mat<f64> {
        let n = self.n;
        Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, false) => self.lt_entry(i, j - n),
            (false, true) => -self.lt_entry(j, i - n),
            (false, false) if i == j => -2.0 * self.a[i - n],
            _ => 0.0,
        })
    }

    /// `Lᵀ[i][j]`.
    fn lt_entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.chol_diag[i]
        } else if j == i + 1 {
            self.chol_sub[j]
        } else {
            0.0
        }
    }

    /// `Lᵀ x` for the first block of a state vector.
    pub fn apply_lt(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| {
                let next = if i + 1 < self.n { x[i + 1] * self.chol_sub[i + 1] } else { C64::new(0.0, 0.0) };
                x[i] * self.chol_diag[i] + next
            })
            .collect()
    }

    fn apply_l(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| {
                let prev = if i > 0 { x[i - 1] * self.chol_sub[i] } else { C64::new(0.0, 0.0) };
                x[i] * self.chol_diag[i] + prev
            })
            .collect()
    }

    fn solve_l(&self, y: &mut [C64]) {
        for i in 0..self.n {
            if i > 0 {
                let prev = y[i - 1];
                y[i] -= prev * self.chol_sub[i];
            }
            y[i] /= self.chol_diag[i];
        }
    }

    /// Dense `Ã − λI`.
    pub fn shifted(&self, lambda: C64) -> Mat<C64> {
        let n = self.n;
        Mat::from_fn(2 * n, 2 * n, |i, j| {
            let base = match (i < n, j < n) {
                (true, false) => self.lt_entry(i, j - n),
                (false, true) => -self.lt_entry(j, i - n),
                (false, false) if i == j => -2.0 * self.a[i - n],
                _ => 0.0,
            };
            if i == j {
                C64::new(base, 0.0) - lambda
            } else {
                C64::new(base, 0.0)
            }
        })
    }

    /// `‖Ψ‖_M` for a state `(u, v)` given on the nodes.
    pub fn energy_norm(&self, u: &[C64], v: &[C64]) -> f64 {
        let lu = self.apply_lt(u);
        let s: f64 = lu.iter().chain(v).map(|z| z.norm_sqr()).sum();
        (s * self.h).sqrt()
    }

    /// `‖(A−λ)Ψ‖_M / ‖Ψ‖_M` for `Ψ = (u, λu)`.
    pub fn state_residual(&self, u: &[C64], lambda: C64) -> f64 {
        let n = self.n;
        let inv_h2 = 1.0 / (self.h * self.h);
        let v: Vec<C64> = u.iter().map(|&z| z * lambda).collect();
        // first component of (A−λ)Ψ vanishes: v − λu = 0
        let tu: Vec<C64> = (0..n)
            .map(|i| {
                let left = if i > 0 { u[i - 1] } else { C64::new(0.0, 0.0) };
                let right = if i + 1 < n { u[i + 1] } else { C64::new(0.0, 0.0) };
                (u[i] * 2.0 - left - right) * inv_h2 + u[i] * self.q[i] + v[i] * (2.0 * self.a[i]) + v[i] * lambda
            })
            .collect();
        let zero = alloc::vec![C64::new(0.0, 0.0); n];
        self.energy_norm(&zero, &tu) / self.energy_norm(u, &v)
    }
}

/// One eigenvalue with its truncation diagnostic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenpair {
    pub value: C64,
    /// Share of the eigenvector's energy in the outer 10% of `[−L, L]`.
    pub boundary_mass: f64,
    pub spurious: bool,
}

/// All eigenvalues of `A`, sorted by `|Im λ|` then `Re λ`.
pub fn spectrum(disc: &OperatorDiscretization) -> Result<Vec<Eigenpair>> {
    let n = disc.n;
    let evd = disc.symmetrized().eigen().map_err(|e| Error::Solver(alloc::format!("{e:?}")))?;
    let u = evd.U();
    let s = evd.S().column_vector();
    let outer = |i: usize| {
        let x = disc.x[i % n].abs();
        x > (1.0 - OUTER_FRACTION) * disc.l
    };
    let mut out: Vec<Eigenpair> = (0..2 * n)
        .map(|k| {
            let (mut total, mut edge) = (0.0, 0.0);
            for i in 0..2 * n {
                let m = u[(i, k)].norm_sqr();
                total += m;
                if outer(i) {
                    edge += m;
                }
            }
            let boundary_mass = if total > 0.0 { edge / total } else { 0.0 };
            Eigenpair { value: s[k], boundary_mass, spurious: boundary_mass > BOUNDARY_MASS_LIMIT }
        })
        .collect();
    out.sort_by(|p, q| {
        p.value.im.abs().total_cmp(&q.value.im.abs()).then(p.value.re.total_cmp(&q.value.re))
    });
    Ok(out)
}

/// Nonreal eigenvalues in the upper half-plane (`Im λ > tol`), nearest to
/// the origin first.
pub fn upper_nonreal(pairs: &[Eigenpair], tol: f64) -> Vec<C64> {
    let mut v: Vec<C64> = pairs.iter().map(|p| p.value).filter(|z| z.im > tol).collect();
    v.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    v
}

/// `σ_min(Ã − λ)` by dense complex SVD.
pub fn sigma_min_weighted(disc: &OperatorDiscretization, lambda: C64) -> Result<f64> {
    let sv = disc.shifted(lambda).singular_values().map_err(|e| Error::Solver(alloc::format!("{e:?}")))?;
    sv.iter().copied().reduce(f64::min).ok_or_else(|| Error::Solver("empty spectrum".into()))
}

/// Pivoted LU of the complex tridiagonal `S = K + Q + 2λD + λ²`.
#[derive(Clone, Debug)]
struct TridiagonalLu {
    dl: Vec<C64>,
    d: Vec<C64>,
    du: Vec<C64>,
    du2: Vec<C64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(disc: &OperatorDiscretization, lambda: C64) -> Option<Self> {
        let n = disc.n;
        let off = C64::new(-1.0 / (disc.h * disc.h), 0.0);
        let mut dl = alloc::vec![off; n - 1];
        let mut du = alloc::vec![off; n - 1];
        let mut du2 = alloc::vec![C64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swapped = alloc::vec![false; n - 1];
        let mut d: Vec<C64> = (0..n)
            .map(|i| lambda * lambda + lambda * (2.0 * disc.a[i]) + (2.0 / (disc.h * disc.h) + disc.q[i]))
            .collect();
        for i in 0..n - 1 {
            if d[i].l1_norm() >= dl[i].l1_norm() {
                if d[i].l1_norm() == 0.0 {
                    return None;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d[n - 1].l1_norm() == 0.0 {
            return None;
        }
        Some(TridiagonalLu { dl, d, du, du2, swapped })
    }

    fn solve(&self, b: &mut [C64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - self.dl[i] * b[i];
            } else {
                let t = b[i];
                b[i + 1] -= self.dl[i] * t;
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    /// Solves `S̄ z = w` via `z = conj(S⁻¹ conj w)`.
    fn solve_conj(&self, b: &mut [C64]) {
        b.iter_mut().for_each(|z| *z = z.conj());
        self.solve(b);
        b.iter_mut().for_each(|z| *z = z.conj());
    }
}

/// Solves with `B = Ã − λ` and `B*` in `O(N)` by block elimination onto
/// the tridiagonal pencil `S = LLᵀ + λ(2D + λ)`.
struct ShiftedSolver<'a> {
    disc: &'a OperatorDiscretization,
    lambda: C64,
    lu: TridiagonalLu,
}

impl<'a> ShiftedSolver<'a> {
    fn new(disc: &'a OperatorDiscretization, lambda: C64) -> Option<Self> {
        Some(ShiftedSolver { disc, lambda, lu: TridiagonalLu::factor(disc, lambda)? })
    }

    /// `B x = y`: `x₂ = S⁻¹(L y₁ − λ y₂)`, `x₁ = −L⁻¹(y₂ + (2D+λ) x₂)`.
    fn solve(&self, y: &[C64]) -> Vec<C64> {
        let n = self.disc.n;
        let (y1, y2) = y.split_at(n);
        let ly1 = self.disc.apply_l(y1);
        let mut x2: Vec<C64> = (0..n).map(|i| ly1[i] - self.lambda * y2[i]).collect();
        self.lu.solve(&mut x2);
        let mut x1: Vec<C64> =
            (0..n).map(|i| -(y2[i] + x2[i] * (self.lambda + 2.0 * self.disc.a[i]))).collect();
        self.disc.solve_l(&mut x1);
        x1.extend(x2);
        x1
    }

    /// `B* z = w`: `z₂ = −S̄⁻¹(L w₁ + λ̄ w₂)`, `z₁ = L⁻¹(w₂ + (2D+λ̄) z₂)`.
    fn solve_adjoint(&self, w: &[C64]) -> Vec<C64> {
        let n = self.disc.n;
        let lc = self.lambda.conj();
        let (w1, w2) = w.split_at(n);
        let lw1 = self.disc.apply_l(w1);
        let mut z2: Vec<C64> = (0..n).map(|i| -(lw1[i] + lc * w2[i])).collect();
        self.lu.solve_conj(&mut z2);
        let mut z1: Vec<C64> = (0..n).map(|i| w2[i] + z2[i] * (lc + 2.0 * self.disc.a[i])).collect();
        self.disc.solve_l(&mut z1);
        z1.extend(z2);
        z1
    }
}

fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm(u: &[C64]) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `σ_min(Ã − λ)` as `‖(Ã − λ)⁻¹‖⁻¹`, by Lanczos with full
/// reorthogonalization on `B⁻*B⁻¹` using the structured solves.
pub fn sigma_min_structured(disc: &OperatorDiscretization, lambda: C64) -> Result<f64> {
    const MAX_STEPS: usize = 120;
    const TOL: f64 = 1e-14;
    let Some(solver) = ShiftedSolver::new(disc, lambda) else { return Ok(0.0) };
    let dim = 2 * disc.n;
    let steps = MAX_STEPS.min(dim);
    // fixed start vector keeps scans reproducible
    let mut v: Vec<C64> = (0..dim).map(|i| C64::new(1.0 + ((i * 7919) % 101) as f64 / 101.0, 0.0)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(steps);
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    let mut theta_prev = 0.0;
    let mut settled = 0;
    for k in 0..steps {
        let mut w = solver.solve_adjoint(&solver.solve(&v));
        if w.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Ok(0.0);
        }
        let alpha = dot(&v, &w).re;
        basis.push(v);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(z, bz)| *z -= *bz * c);
            }
        }
        alphas.push(alpha);
        let beta = norm(&w);
        let t = Mat::from_fn(k + 1, k + 1, |i, j| {
            if i == j {
                alphas[i]
            } else if i == j + 1 {
                betas[j]
            } else if j == i + 1 {
                betas[i]
            } else {
                0.0
            }
        });
        let theta = t
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Solver(alloc::format!("{e:?}")))?
            .last()
            .copied()
            .unwrap_or(0.0);
        if (theta - theta_prev).abs() <= TOL * theta {
            settled += 1;
            if settled >= 2 {
                return Ok(1.0 / theta.sqrt());
            }
        } else {
            settled = 0;
        }
        theta_prev = theta;
        if beta <= 1e-300 || beta <= 1e-15 * theta {
            break;
        }
        betas.push(beta);
        v = w.into_iter().map(|z| z / beta).collect();
    }
    if theta_prev > 0.0 {
        Ok(1.0 / theta_prev.sqrt())
    } else {
        Ok(0.0)
    }
}

/// Which σ_min kernel a scan uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SigmaMethod {
    /// Dense SVD of the full `2N × 2N` matrix.
    Dense,
    /// Structured inverse Lanczos, `O(N)` per solve.
    #[default]
    Structured,
}

pub fn sigma_min(disc: &OperatorDiscretization, lambda: C64, method: SigmaMethod) -> Result<f64> {
    match method {
        SigmaMethod::Dense => sigma_min_weighted(disc, lambda),
        SigmaMethod::Structured => sigma_min_structured(disc, lambda),
    }
}

/// Rectangle `[x0, x1] × [y0, y1]` sampled on `nx × ny` points
/// (a single point per axis sits at the lower corner).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanSpec {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.x0, self.x1, self.y0, self.y1].iter().all(|v| v.is_finite());
        if !finite || self.nx == 0 || self.ny == 0 || self.x1 < self.x0 || self.y1 < self.y0 {
            return Err(Error::InvalidParameter(alloc::format!("scan rectangle {self:?}")));
        }
        Ok(())
    }

    fn coord(lo: f64, hi: f64, count: usize, i: usize) -> f64 {
        if count == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (count - 1) as f64
        }
    }

    /// Grid points in row-major order (`Im λ` outer, `Re λ` inner).
    pub fn points(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            let y = Self::coord(self.y0, self.y1, self.ny, j);
            for i in 0..self.nx {
                out.push(C64::new(Self::coord(self.x0, self.x1, self.nx, i), y));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PseudospectrumGrid {
    pub spec: ScanSpec,
    /// `(λ, σ_min)` in [`ScanSpec::points`] order.
    pub values: Vec<(C64, f64)>,
}

impl PseudospectrumGrid {
    pub fn min_where(&self, mut keep: impl FnMut(C64) -> bool) -> Option<f64> {
        self.values.iter().filter(|(z, _)| keep(*z)).map(|&(_, s)| s).reduce(f64::min)
    }
}

/// Sequential scan; the std front-end fans the same points out to workers.
pub fn pseudospectrum_scan(
    disc: &OperatorDiscretization,
    spec: &ScanSpec,
    method: SigmaMethod,
) -> Result<PseudospectrumGrid> {
    spec.validate()?;
    disc.check_reach(spec.x0.min(0.0));
    let values = spec
        .points()
        .into_iter()
        .map(|z| Ok((z, sigma_min(disc, z, method)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PseudospectrumGrid { spec: *spec, values })
}
