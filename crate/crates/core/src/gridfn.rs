//! Complex samples on a uniform 1-D grid: finite differences, cumulative
//! quadrature and norms.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::{Error, Result, C64};

/// Fewest nodes accepted by [`Grid::new`]; the one-sided second-derivative
/// stencils span six nodes from each edge.
pub const MIN_NODES: usize = 9;

/// Uniform node layout `x_i = x0 + i·h`, `i < len`, with `len` odd.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    x0: f64,
    h: f64,
    len: usize,
}

impl Grid {
    pub fn new(x0: f64, h: f64, len: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite() && x0.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("grid spacing h = {h}, x0 = {x0}")));
        }
        if len < MIN_NODES {
            return Err(Error::GridTooShort { len, min: MIN_NODES });
        }
        if len.is_multiple_of(2) {
            return Err(Error::EvenGrid(len));
        }
        Ok(Grid { x0, h, len })
    }

    /// `2·half + 1` nodes with `center` at index `half`.
    pub fn centered(center: f64, h: f64, half: usize) -> Result<Self> {
        Self::new(center - half as f64 * h, h, 2 * half + 1)
    }

    /// Grid over `[lo, hi]` with both endpoints as nodes.
    pub fn spanning(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if len < 2 || !(hi > lo) {
            return Err(Error::InvalidParameter(alloc::format!("interval [{lo}, {hi}]")));
        }
        Self::new(lo, (hi - lo) / (len - 1) as f64, len)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn x_end(&self) -> f64 {
        self.x(self.len - 1)
    }

    pub fn center_index(&self) -> usize {
        self.len / 2
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.x(i)).collect()
    }

    /// Index of the node nearest to `x`, if `x` lies on the grid span.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        let t = (x - self.x0) / self.h;
        if t < -0.5 || t > self.len as f64 - 0.5 || !t.is_finite() {
            return None;
        }
        Some((t.round() as usize).min(self.len - 1))
    }

    /// Same spacing halved, same span (`2·len − 1` nodes).
    pub fn refined(&self) -> Self {
        Grid { x0: self.x0, h: 0.5 * self.h, len: 2 * self.len - 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<C64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(alloc::format!(
                "{} samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.x(i))).collect();
        GridFunction { grid, values }
    }

    pub fn from_real_fn(grid: Grid, mut f: impl FnMut(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    pub fn try_from_fn(grid: Grid, mut f: impl FnMut(f64) -> Result<C64>) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.x(i))).collect::<Result<Vec<_>>>()?;
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFunction { grid, values: alloc::vec![C64::zero(); grid.len()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn x(&self, i: usize) -> f64 {
        self.grid.x(i)
    }

    pub fn map(&self, mut f: impl FnMut(C64) -> C64) -> Self {
        GridFunction { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination; both operands must share one grid.
    pub fn zip_with(&self, other: &GridFunction, mut f: impl FnMut(C64, C64) -> C64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidParameter("grid functions live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&u, &v)| f(u, v)).collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn conj_in_place(&mut self) {
        self.values.iter_mut().for_each(|v| *v = v.conj());
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// 4th-order finite differences: central in the interior, one-sided on
    /// the two outermost nodes at each edge.
    pub fn derivative(&self, order: usize) -> Result<Self> {
        let n = self.len();
        if n < MIN_NODES {
            return Err(Error::GridTooShort { len: n, min: MIN_NODES });
        }
        let f = &self.values;
        let h = self.grid.h;
        let mut d = alloc::vec![C64::zero(); n];
        let dot = |coef: &[f64], start: usize| -> C64 {
            coef.iter().enumerate().map(|(k, &c)| f[start + k] * c).sum()
        };
        let dot_rev = |coef: &[f64], end: usize| -> C64 {
            coef.iter().enumerate().map(|(k, &c)| f[end - k] * c).sum()
        };
        match order {
            1 => {
                let s = 1.0 / (12.0 * h);
                for i in 2..n - 2 {
                    d[i] = (f[i - 2] - f[i - 1] * 8.0 + f[i + 1] * 8.0 - f[i + 2]) * s;
                }
                const E0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
                const E1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
                d[0] = dot(&E0, 0) * s;
                d[1] = dot(&E1, 0) * s;
                d[n - 1] = -dot_rev(&E0, n - 1) * s;
                d[n - 2] = -dot_rev(&E1, n - 1) * s;
            }
            2 => {
                let s = 1.0 / (12.0 * h * h);
                for i in 2..n - 2 {
                    d[i] = (-f[i - 2] + f[i - 1] * 16.0 - f[i] * 30.0 + f[i + 1] * 16.0 - f[i + 2]) * s;
                }
                const E0: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
                const E1: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];
                d[0] = dot(&E0, 0) * s;
                d[1] = dot(&E1, 0) * s;
                d[n - 1] = dot_rev(&E0, n - 1) * s;
                d[n - 2] = dot_rev(&E1, n - 1) * s;
            }
            other => return Err(Error::UnsupportedOrder(other)),
        }
        Ok(GridFunction { grid: self.grid, values: d })
    }

    /// `∫ f` over each cell `[x_k, x_{k+1}]`, integrating the cubic through
    /// the four nearest nodes.
    pub fn interval_integrals(&self) -> Vec<C64> {
        let n = self.len();
        let f = &self.values;
        let s = self.grid.h / 24.0;
        (0..n - 1)
            .map(|k| {
                if k == 0 {
                    (f[0] * 9.0 + f[1] * 19.0 - f[2] * 5.0 + f[3]) * s
                } else if k == n - 2 {
                    (f[n - 4] - f[n - 3] * 5.0 + f[n - 2] * 19.0 + f[n - 1] * 9.0) * s
                } else {
                    (-f[k - 1] + f[k] * 13.0 + f[k + 1] * 13.0 - f[k + 2]) * s
                }
            })
            .collect()
    }

    /// `F(x_i) = ∫_{x_anchor}^{x_i} f`: composite Simpson over node pairs
    /// marching outwards from the anchor, one cubic cell for odd offsets.
    pub fn cumulative_integral(&self, anchor: usize) -> Result<Self> {
        let n = self.len();
        if anchor >= n {
            return Err(Error::AnchorOutOfRange { index: anchor, len: n });
        }
        let f = &self.values;
        let cells = self.interval_integrals();
        let simpson = self.grid.h / 3.0;
        let mut out = alloc::vec![C64::zero(); n];

        let mut acc = C64::zero();
        let mut i = anchor;
        while i + 2 < n {
            out[i + 1] = acc + cells[i];
            acc += (f[i] + f[i + 1] * 4.0 + f[i + 2]) * simpson;
            out[i + 2] = acc;
            i += 2;
        }
        if i + 1 < n {
            out[i + 1] = acc + cells[i];
        }

        let mut acc = C64::zero();
        let mut i = anchor;
        while i >= 2 {
            out[i - 1] = acc - cells[i - 1];
            acc -= (f[i] + f[i - 1] * 4.0 + f[i - 2]) * simpson;
            out[i - 2] = acc;
            i -= 2;
        }
        if i == 1 {
            out[0] = acc - cells[0];
        }
        Ok(GridFunction { grid: self.grid, values: out })
    }

    /// `exp(∫_{x_anchor}^{x_i} f)` by multiplying per-cell factors, which
    /// keeps the phase of a fast oscillation accurate cell to cell.
    pub fn exp_integral(&self, anchor: usize) -> Result<Self> {
        let n = self.len();
        if anchor >= n {
            return Err(Error::AnchorOutOfRange { index: anchor, len: n });
        }
        let cells = self.interval_integrals();
        let mut out = alloc::vec![C64::zero(); n];
        out[anchor] = C64::new(1.0, 0.0);
        for k in anchor..n - 1 {
            out[k + 1] = out[k] * cells[k].exp();
        }
        for k in (0..anchor).rev() {
            out[k] = out[k + 1] * (-cells[k]).exp();
        }
        Ok(GridFunction { grid: self.grid, values: out })
    }

    /// Trapezoidal `∫ |f|²`.
    pub fn l2_norm_sq(&self) -> f64 {
        let n = self.len();
        let inner: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        let ends = 0.5 * (self.values[0].norm_sqr() + self.values[n - 1].norm_sqr());
        ((inner - ends) * self.grid.h).max(0.0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Cubic Lagrange interpolation; zero outside the grid span.
    pub fn interpolate(&self, x: f64) -> C64 {
        let n = self.len();
        let t = (x - self.grid.x0) / self.grid.h;
        if !(t >= 0.0 && t <= (n - 1) as f64) {
            return C64::zero();
        }
        let base = (t.floor() as usize).saturating_sub(1).min(n - 4);
        let mut acc = C64::zero();
        for j in 0..4 {
            let mut w = 1.0;
            for m in 0..4 {
                if m != j {
                    w *= (t - (base + m) as f64) / (j as f64 - m as f64);
                }
            }
            acc += self.values[base + j] * w;
        }
        acc
    }
}
