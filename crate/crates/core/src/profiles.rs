//! Damping and potential families with closed-form derivatives.
//!
//! Every family exposes exact derivatives up to `max_order`, the growth
//! exponent `ν` of the derivative-control condition
//! `|a^{(m)}(x)| ≲ x^{mν} a(x)`, and the threshold `x_min` beyond which
//! positivity and monotonicity are required.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

#[allow(unused_imports)] // resolved to inherent methods in some feature sets
use num_traits::Float;

use crate::{Error, Result};

/// Highest derivative order available by default for the built-in families.
pub const DEFAULT_MAX_ORDER: usize = 16;

/// Upper end of the sample grid used for invariant checks.
const CHECK_X_MAX: f64 = 1.0e3;
const CHECK_SAMPLES: usize = 200;

/// User-supplied profile with closed-form derivatives.
///
/// There is deliberately no way to build a profile from a bare callable:
/// the WKB recursion consumes derivatives up to order `n + 1` and numeric
/// differentiation cannot deliver them at the required accuracy.
pub trait ClosedForm: fmt::Debug + Send + Sync {
    /// The `m`-th derivative at `x`.
    fn derivative(&self, m: usize, x: f64) -> f64;
    fn max_order(&self) -> usize;
    fn nu(&self) -> f64;
    fn x_min(&self) -> f64 {
        1.0
    }
    /// Solves `f(x) = value` when an analytic inverse exists.
    fn inverse(&self, _value: f64) -> Option<f64> {
        None
    }
    fn in_domain(&self, _x: f64) -> bool {
        true
    }
}

#[derive(Clone, Debug)]
pub enum Family {
    /// `x^p`
    Monomial { p: f64 },
    /// `e^{x^p}`
    Exponential { p: f64 },
    /// `ln x`
    Logarithmic,
    /// `0`, for potentials only.
    Zero,
    Custom(Arc<dyn ClosedForm>),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Monomial { .. } => "monomial",
            Family::Exponential { .. } => "exponential",
            Family::Logarithmic => "logarithmic",
            Family::Zero => "zero",
            Family::Custom(_) => "custom",
        }
    }
}

/// One term `coef · x^{pow_p·p − pow_x}` of the polynomial-like factor
/// multiplying `e^{x^p}` in its derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Term {
    coef: f64,
    pow_p: i32,
    pow_x: i32,
}

/// `d^m/dx^m e^{x^p} = e^{x^p} Σ terms`, for m = 0..=max_order.
fn exponential_jets(p: f64, max_order: usize) -> Vec<Vec<Term>> {
    let mut jets = Vec::with_capacity(max_order + 1);
    jets.push(alloc::vec![Term { coef: 1.0, pow_p: 0, pow_x: 0 }]);
    for m in 0..max_order {
        let mut next: Vec<Term> = Vec::new();
        let mut push = |t: Term| {
            if t.coef == 0.0 {
                return;
            }
            match next.iter_mut().find(|u| u.pow_p == t.pow_p && u.pow_x == t.pow_x) {
                Some(u) => u.coef += t.coef,
                None => next.push(t),
            }
        };
        for t in &jets[m] {
            // (x^p)' · term
            push(Term { coef: t.coef * p, pow_p: t.pow_p + 1, pow_x: t.pow_x + 1 });
            // term'
            let exponent = f64::from(t.pow_p) * p - f64::from(t.pow_x);
            push(Term { coef: t.coef * exponent, pow_p: t.pow_p, pow_x: t.pow_x + 1 });
        }
        next.retain(|t| t.coef != 0.0);
        jets.push(next);
    }
    jets
}

fn is_integer(p: f64) -> bool {
    p.fract() == 0.0 && p.abs() < f64::from(i32::MAX)
}

/// `x^e`, using `powi` whenever the exponent is integral so that negative
/// arguments stay admissible.
fn power(x: f64, e: f64) -> f64 {
    if is_integer(e) {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

fn falling_factorial(p: f64, m: usize) -> f64 {
    (0..m).map(|i| p - i as f64).product()
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

/// Log-spaced samples on `[lo, hi]`.
pub fn log_samples(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    let steps = (count.max(2) - 1) as f64;
    (0..count.max(2)).map(move |i| (llo + (lhi - llo) * i as f64 / steps).exp())
}

#[derive(Clone, Debug)]
pub struct Profile {
    family: Family,
    scale: f64,
    max_order: usize,
    nu: f64,
    x_min: f64,
    jets: Vec<Vec<Term>>,
}

impl Profile {
    fn closed(family: Family, nu: f64, x_min: f64) -> Self {
        let mut profile = Profile {
            family,
            scale: 1.0,
            max_order: DEFAULT_MAX_ORDER,
            nu,
            x_min,
            jets: Vec::new(),
        };
        profile.rebuild_jets();
        profile
    }

    fn rebuild_jets(&mut self) {
        if let Family::Exponential { p } = self.family {
            self.jets = exponential_jets(p, self.max_order);
        }
    }

    fn check_exponent(p: f64) -> Result<f64> {
        if p.is_finite() && p > 0.0 {
            Ok(p)
        } else {
            Err(Error::InvalidParameter(format!("exponent p = {p} must be positive")))
        }
    }

    /// `x^p`, with `ν = -1`.
    pub fn monomial(p: f64) -> Result<Self> {
        let p = Self::check_exponent(p)?;
        Ok(Self::closed(Family::Monomial { p }, -1.0, 1.0))
    }

    /// `e^{x^p}`, with `ν = p - 1`.
    pub fn exponential(p: f64) -> Result<Self> {
        let p = Self::check_exponent(p)?;
        Ok(Self::closed(Family::Exponential { p }, p - 1.0, 1.0))
    }

    /// `ln x`, with `ν = -1`; `x_min = 2` keeps `ln x` away from zero.
    pub fn logarithmic() -> Self {
        Self::closed(Family::Logarithmic, -1.0, 2.0)
    }

    pub fn zero() -> Self {
        Self::closed(Family::Zero, -1.0, 1.0)
    }

    pub fn custom(form: Arc<dyn ClosedForm>) -> Self {
        Profile {
            nu: form.nu(),
            x_min: form.x_min(),
            max_order: form.max_order(),
            family: Family::Custom(form),
            scale: 1.0,
            jets: Vec::new(),
        }
    }

    /// Multiplies the profile by a positive constant.
    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!("scale = {scale} must be positive")));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn with_max_order(mut self, max_order: usize) -> Self {
        if let Family::Custom(form) = &self.family {
            self.max_order = max_order.min(form.max_order());
        } else {
            self.max_order = max_order;
        }
        self.rebuild_jets();
        self
    }

    pub fn with_x_min(mut self, x_min: f64) -> Self {
        self.x_min = x_min;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, Family::Zero)
    }

    /// Whether the `m`-th derivative is defined at `x`.
    pub fn in_domain(&self, m: usize, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match &self.family {
            Family::Monomial { p } => is_integer(*p) || x > 0.0 || (x == 0.0 && *p >= m as f64),
            Family::Exponential { p } => is_integer(*p) || x > 0.0 || (x == 0.0 && m == 0),
            Family::Logarithmic => x > 0.0,
            Family::Zero => true,
            Family::Custom(form) => form.in_domain(x),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.eval_deriv(0, x)
    }

    /// The exact `m`-th derivative at `x`.
    pub fn eval_deriv(&self, m: usize, x: f64) -> Result<f64> {
        if m > self.max_order {
            return Err(Error::OrderTooHigh { order: m, max: self.max_order });
        }
        if !self.in_domain(m, x) {
            return Err(Error::OutsideDomain { x, family: self.family.name() });
        }
        let value = match &self.family {
            Family::Monomial { p } => {
                let ff = falling_factorial(*p, m);
                if ff == 0.0 {
                    0.0
                } else {
                    ff * power(x, p - m as f64)
                }
            }
            Family::Exponential { p } => {
                let poly: f64 = self.jets[m]
                    .iter()
                    .map(|t| t.coef * power(x, f64::from(t.pow_p) * p - f64::from(t.pow_x)))
                    .sum();
                poly * power(x, *p).exp()
            }
            Family::Logarithmic => {
                if m == 0 {
                    x.ln()
                } else {
                    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
                    sign * factorial(m - 1) * x.powi(-(m as i32))
                }
            }
            Family::Zero => 0.0,
            Family::Custom(form) => form.derivative(m, x),
        };
        let value = self.scale * value;
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFinite(format!(
                "{} derivative of order {m} at x = {x}",
                self.family.name()
            )))
        }
    }

    /// Solves `f(x) = value` in closed form when the family allows it.
    pub fn inverse(&self, value: f64) -> Option<f64> {
        let v = value / self.scale;
        let x = match &self.family {
            Family::Monomial { p } if v > 0.0 => v.powf(1.0 / p),
            Family::Exponential { p } if v > 1.0 => v.ln().powf(1.0 / p),
            Family::Logarithmic => v.exp(),
            Family::Custom(form) => form.inverse(value)?,
            _ => return None,
        };
        x.is_finite().then_some(x)
    }

    /// Right end of the invariant-check grid; keeps `f(2x)` finite for the
    /// exponential family.
    fn check_x_max(&self) -> f64 {
        let x_max = match self.family {
            Family::Exponential { p } => 700.0.powf(1.0 / p) / 2.0,
            _ => CHECK_X_MAX,
        };
        x_max.max(1.5 * self.x_min)
    }

    /// Measured constant `C` in `|f^{(m)}(x)| ≤ C x^{mν} f(x)` on a
    /// log-spaced grid over `[x_min, x_max]`.
    pub fn derivative_control(&self, m: usize, x_max: f64) -> Result<f64> {
        let x_max = x_max.min(self.check_x_max());
        let mut worst = 0.0f64;
        for x in log_samples(self.x_min, x_max, CHECK_SAMPLES) {
            let base = self.eval(x)?;
            if base <= 0.0 {
                return Err(Error::InvalidProfile(format!("f({x}) = {base} is not positive")));
            }
            let ratio = self.eval_deriv(m, x)?.abs() / (x.powf(m as f64 * self.nu) * base);
            worst = worst.max(ratio);
        }
        Ok(worst)
    }

    /// `sup |f^{(j)}|` over `(b - δ, b + δ)`: dense sampling, then bisection
    /// on sign changes of `f^{(j+1)}` to catch interior extrema.
    pub fn window_sup(&self, j: usize, b: f64, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("window half-width δ = {delta}")));
        }
        if self.is_zero() {
            return Ok(0.0);
        }
        const SAMPLES: usize = 1024;
        let (lo, hi) = (b - delta, b + delta);
        let at = |i: usize| lo + (hi - lo) * i as f64 / SAMPLES as f64;
        let mut best = 0.0f64;
        let mut prev_slope: Option<f64> = None;
        let refine = j < self.max_order;
        for i in 0..=SAMPLES {
            let x = at(i);
            best = best.max(self.eval_deriv(j, x)?.abs());
            if !refine {
                continue;
            }
            let slope = self.eval_deriv(j + 1, x)?;
            if let Some(prev) = prev_slope {
                if prev * slope < 0.0 {
                    let root = self.bisect(j + 1, at(i - 1), x, prev)?;
                    best = best.max(self.eval_deriv(j, root)?.abs());
                }
            }
            prev_slope = Some(slope);
        }
        Ok(best)
    }

    fn bisect(&self, order: usize, mut lo: f64, mut hi: f64, f_lo: f64) -> Result<f64> {
        let sign_lo = f_lo.signum();
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval_deriv(order, mid)?.signum() == sign_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// A damping profile that passed the sampled invariant checks:
/// `a ≥ 0`, `a' > 0` and `a(2x) > a(x)` for `x ≥ x_min`.
#[derive(Clone, Debug)]
pub struct Damping(Profile);

impl Damping {
    pub fn new(profile: Profile) -> Result<Self> {
        if profile.is_zero() {
            return Err(Error::InvalidProfile("the damping must be unbounded".into()));
        }
        if profile.max_order() < 1 {
            return Err(Error::InvalidProfile("the damping needs a first derivative".into()));
        }
        for x in log_samples(profile.x_min(), profile.check_x_max(), CHECK_SAMPLES) {
            let value = profile.eval(x)?;
            if value < 0.0 {
                return Err(Error::InvalidProfile(format!("a({x}) = {value} < 0")));
            }
            if profile.eval_deriv(1, x)? <= 0.0 {
                return Err(Error::NonMonotone { x });
            }
            if profile.eval(2.0 * x)? <= value {
                return Err(Error::InvalidProfile(format!("a(2x) ≤ a(x) at x = {x}")));
            }
        }
        Ok(Damping(profile))
    }

    pub fn profile(&self) -> &Profile {
        &self.0
    }
}

impl Deref for Damping {
    type Target = Profile;

    fn deref(&self) -> &Profile {
        &self.0
    }
}

/// A potential with `q ≥ 0` for `x ≥ x_min` (sampled).
#[derive(Clone, Debug)]
pub struct Potential(Profile);

impl Potential {
    pub fn new(profile: Profile) -> Result<Self> {
        if !profile.is_zero() {
            for x in log_samples(profile.x_min(), profile.check_x_max(), CHECK_SAMPLES) {
                let value = profile.eval(x)?;
                if value < 0.0 {
                    return Err(Error::InvalidProfile(format!("q({x}) = {value} < 0")));
                }
            }
        }
        Ok(Potential(profile))
    }

    pub fn zero() -> Self {
        Potential(Profile::zero())
    }

    pub fn profile(&self) -> &Profile {
        &self.0
    }
}

impl Deref for Potential {
    type Target = Profile;

    fn deref(&self) -> &Profile {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn monomial_derivatives() {
        let a = Profile::monomial(2.0).unwrap();
        assert_eq!(a.eval_deriv(1, 3.0).unwrap(), 6.0);
        assert_eq!(a.eval_deriv(3, 5.0).unwrap(), 0.0);
        assert_eq!(a.eval_deriv(2, -4.0).unwrap(), 2.0);
    }

    #[test]
    fn exponential_first_derivative() {
        // chain rule: 2x e^{x²} at 1.5 (hand-evaluated: 3 e^{2.25})
        let a = Profile::exponential(2.0).unwrap();
        let expected = 3.0 * 2.25f64.exp();
        assert!(rel(a.eval_deriv(1, 1.5).unwrap(), expected) < 1e-14);
        assert!((expected - 28.4632).abs() < 1e-3);
    }

    #[test]
    fn exponential_matches_hand_expanded_third_derivative() {
        // (e^{x²})''' = (8x³ + 12x) e^{x²}
        let a = Profile::exponential(2.0).unwrap();
        let x = 0.7f64;
        let expected = (8.0 * x.powi(3) + 12.0 * x) * (x * x).exp();
        assert!(rel(a.eval_deriv(3, x).unwrap(), expected) < 1e-13);
    }

    #[test]
    fn logarithmic_derivatives_and_domain() {
        let a = Profile::logarithmic();
        assert!(rel(a.eval_deriv(3, 2.0).unwrap(), 2.0 / 8.0) < 1e-15);
        assert!(rel(a.eval_deriv(2, 2.0).unwrap(), -0.25) < 1e-15);
        assert!(matches!(a.eval(-1.0), Err(Error::OutsideDomain { .. })));
        assert!(matches!(a.eval(0.0), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn order_limit() {
        let a = Profile::monomial(3.0).unwrap().with_max_order(4);
        assert_eq!(a.eval_deriv(5, 1.0), Err(Error::OrderTooHigh { order: 5, max: 4 }));
        let e = Profile::exponential(1.5).unwrap().with_max_order(3);
        assert!(e.eval_deriv(3, 2.0).is_ok());
        assert!(e.eval_deriv(4, 2.0).is_err());
    }

    #[test]
    fn fractional_monomial_domain() {
        let a = Profile::monomial(1.5).unwrap();
        assert!(a.eval(-1.0).is_err());
        assert_eq!(a.eval(0.0).unwrap(), 0.0);
        assert!(a.eval_deriv(2, 0.0).is_err());
    }

    #[test]
    fn analytic_inverses() {
        assert!(rel(Profile::monomial(2.0).unwrap().inverse(4.0).unwrap(), 2.0) < 1e-15);
        let e = Profile::exponential(1.0).unwrap();
        assert!(rel(e.inverse(10.0).unwrap(), 10f64.ln()) < 1e-15);
        assert!(e.inverse(0.5).is_none());
        assert!(rel(Profile::logarithmic().inverse(3.0).unwrap(), 3f64.exp()) < 1e-15);
        assert!(Profile::zero().inverse(1.0).is_none());
    }

    #[test]
    fn scale_multiplies_every_derivative() {
        let a = Profile::monomial(3.0).unwrap().with_scale(2.5).unwrap();
        assert_eq!(a.eval_deriv(2, 2.0).unwrap(), 2.5 * 12.0);
        assert!(rel(a.inverse(2.5 * 8.0).unwrap(), 2.0) < 1e-14);
        assert!(Profile::monomial(1.0).unwrap().with_scale(0.0).is_err());
    }

    #[test]
    fn window_sup_examples() {
        assert_eq!(Potential::zero().window_sup(0, 10.0, 2.0).unwrap(), 0.0);
        let q1 = Profile::monomial(1.0).unwrap();
        assert_eq!(q1.window_sup(1, 10.0, 2.0).unwrap(), 1.0);
        let q2 = Profile::monomial(2.0).unwrap();
        assert!(rel(q2.window_sup(0, 10.0, 2.0).unwrap(), 144.0) < 1e-14);
    }

    #[test]
    fn window_sup_finds_interior_extremum() {
        // x³ - 3x has an interior maximum of 2 at x = -1; both endpoint
        // values of the window are smaller.
        #[derive(Debug)]
        struct Cubic;
        impl ClosedForm for Cubic {
            fn derivative(&self, m: usize, x: f64) -> f64 {
                match m {
                    0 => x * x * x - 3.0 * x,
                    1 => 3.0 * x * x - 3.0,
                    2 => 6.0 * x,
                    3 => 6.0,
                    _ => 0.0,
                }
            }
            fn max_order(&self) -> usize {
                8
            }
            fn nu(&self) -> f64 {
                -1.0
            }
        }
        let p = Profile::custom(Arc::new(Cubic));
        let sup = p.window_sup(0, -1.0 + 1e-4, 0.5).unwrap();
        assert!(rel(sup, 2.0) < 1e-12, "{sup}");
    }

    #[test]
    fn window_below_domain_is_rejected() {
        let q = Profile::logarithmic();
        assert!(matches!(q.window_sup(0, 1.0, 2.0), Err(Error::OutsideDomain { .. })));
        assert!(q.window_sup(0, 1.0, 0.0).is_err());
    }

    #[test]
    fn monomial_derivative_control_is_the_falling_factorial() {
        let a = Profile::monomial(3.5).unwrap();
        for m in 1..=4 {
            let c = a.derivative_control(m, 1e3).unwrap();
            assert!(rel(c, falling_factorial(3.5, m).abs()) < 1e-12);
        }
    }

    #[test]
    fn monomial_derivative_control_holds_pointwise() {
        let a = Profile::monomial(4.0).unwrap();
        for m in 1..=4 {
            let c = falling_factorial(4.0, m).abs();
            for x in log_samples(1.0, 1e3, 300) {
                let lhs = a.eval_deriv(m, x).unwrap().abs();
                let rhs = c * x.powf(m as f64 * a.nu()) * a.eval(x).unwrap();
                assert!(lhs <= rhs * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn exponential_growth_exponent() {
        let p = 1.5;
        let a = Profile::exponential(p).unwrap();
        assert_eq!(a.nu(), p - 1.0);
        for x in log_samples(1.0, 20.0, 100) {
            let ratio = a.eval_deriv(1, x).unwrap() / (p * x.powf(p - 1.0) * a.eval(x).unwrap());
            assert!((0.5..=2.0).contains(&ratio));
        }
    }

    #[test]
    fn derivatives_agree_with_central_differences() {
        let families = [
            Profile::monomial(2.5).unwrap(),
            Profile::exponential(1.3).unwrap(),
            Profile::logarithmic(),
        ];
        for f in &families {
            for m in 1..=5 {
                for &x in &[2.2, 3.1, 4.7] {
                    let h = 1e-4 * x;
                    let fd = (f.eval_deriv(m - 1, x - 2.0 * h).unwrap()
                        - 8.0 * f.eval_deriv(m - 1, x - h).unwrap()
                        + 8.0 * f.eval_deriv(m - 1, x + h).unwrap()
                        - f.eval_deriv(m - 1, x + 2.0 * h).unwrap())
                        / (12.0 * h);
                    let exact = f.eval_deriv(m, x).unwrap();
                    assert!(rel(fd, exact) < 1e-6, "{:?} m={m} x={x}: {fd} vs {exact}", f.family());
                }
            }
        }
    }

    #[test]
    fn damping_invariants() {
        assert!(Damping::new(Profile::monomial(2.0).unwrap()).is_ok());
        assert!(Damping::new(Profile::exponential(2.0).unwrap()).is_ok());
        assert!(Damping::new(Profile::logarithmic()).is_ok());
        assert!(Damping::new(Profile::zero()).is_err());

        #[derive(Debug)]
        struct Bump;
        impl ClosedForm for Bump {
            fn derivative(&self, m: usize, x: f64) -> f64 {
                match m {
                    0 => 2.0 + (x / 10.0).sin(),
                    1 => (x / 10.0).cos() / 10.0,
                    _ => 0.0,
                }
            }
            fn max_order(&self) -> usize {
                1
            }
            fn nu(&self) -> f64 {
                -1.0
            }
        }
        // a(2x) ≤ a(x) near x = 12 before a' changes sign near 15.7
        assert!(matches!(
            Damping::new(Profile::custom(Arc::new(Bump))),
            Err(Error::NonMonotone { .. } | Error::InvalidProfile(_))
        ));
    }

    #[test]
    fn potential_invariants() {
        assert!(Potential::new(Profile::monomial(5.0).unwrap()).is_ok());
        assert!(Potential::new(Profile::zero()).is_ok());
        #[derive(Debug)]
        struct Negative;
        impl ClosedForm for Negative {
            fn derivative(&self, _m: usize, _x: f64) -> f64 {
                -1.0
            }
            fn max_order(&self) -> usize {
                4
            }
            fn nu(&self) -> f64 {
                -1.0
            }
        }
        assert!(Potential::new(Profile::custom(Arc::new(Negative))).is_err());
    }
}
