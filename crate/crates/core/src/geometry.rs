//! Closed-form geometry of the warped product `-dt² + dx² + a(x)² dσ²`
//! with `a(x) = (x^{2m} + 1)^{1/2m}`.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::scalar::{japanese_bracket, Real, C};

/// Half the vanishing order of `a'` at the trapped set `x = 0`.
///
/// `m = 1` is hyperbolic trapping, `m >= 2` degenerate trapping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Degeneracy(u32);

impl Degeneracy {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidDegeneracy(m));
        }
        Ok(Self(m))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn is_degenerate(self) -> bool {
        self.0 >= 2
    }

    /// `(m-1)/(m+1)`: the loss exponent on squared quantities.
    pub fn loss_exponent(self) -> f64 {
        let m = self.0 as f64;
        (m - 1.0) / (m + 1.0)
    }

    /// `2m/(m+1)`: the semiclassical energy scale exponent.
    pub fn energy_scale_exponent(self) -> f64 {
        let m = self.0 as f64;
        2.0 * m / (m + 1.0)
    }
}

/// Warp `a` with its first two derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Warp<T> {
    pub a: T,
    pub da: T,
    pub d2a: T,
}

/// Geometry for one degeneracy parameter. Pure and `Copy`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryProfile<T> {
    degeneracy: Degeneracy,
    m: T,
    two_m: i32,
}

impl<T: Real> GeometryProfile<T> {
    pub fn new(degeneracy: Degeneracy) -> Self {
        let m = degeneracy.get();
        Self {
            degeneracy,
            m: T::from_u32(m).expect("small integer"),
            two_m: 2 * m as i32,
        }
    }

    pub fn with_m(m: u32) -> Result<Self> {
        Ok(Self::new(Degeneracy::new(m)?))
    }

    pub fn degeneracy(&self) -> Degeneracy {
        self.degeneracy
    }

    pub fn m(&self) -> T {
        self.m
    }

    /// `(a, a', a'')`. Evaluated in a form that neither overflows nor loses
    /// relative accuracy for large `|x|`.
    pub fn warp(&self, x: T) -> Warp<T> {
        let one = T::one();
        let ax = x.abs();
        let two_m = T::from_i32(self.two_m).unwrap();
        let (a, s, ds) = if ax <= one {
            let y = x.powi(self.two_m);
            let a = (y.ln_1p() / two_m).exp();
            let s = x.powi(self.two_m - 1) / (one + y);
            let ds = x.powi(self.two_m - 2) * ((two_m - one) - y) / ((one + y) * (one + y));
            (a, s, ds)
        } else {
            // z = |x|^{-2m}
            let z = ax.powi(-self.two_m);
            let a = ax * (z.ln_1p() / two_m).exp();
            let s = one / (x * (one + z));
            let ds = ((two_m - one) * z - one) / (x * x * (one + z) * (one + z));
            (a, s, ds)
        };
        // a' = a s, a'' = a (s² + s')
        Warp { a, da: a * s, d2a: a * (s * s + ds) }
    }

    pub fn a(&self, x: T) -> T {
        self.warp(x).a
    }

    /// `a'/a = x^{2m-1}/(1+x^{2m})`.
    pub fn log_derivative(&self, x: T) -> T {
        let w = self.warp(x);
        w.da / w.a
    }

    /// Trapping profile `b = 1 - (x^{2m}+1)^{-1/m} = 1 - a^{-2}`.
    pub fn trap_profile(&self, x: T) -> T {
        let one = T::one();
        if x.abs() <= one {
            let y = x.powi(self.two_m);
            -(-(y.ln_1p()) / self.m).exp_m1()
        } else {
            let a = self.a(x);
            one - one / (a * a)
        }
    }

    /// `(b, b', b'')`.
    pub fn trap_profile_derivatives(&self, x: T) -> (T, T, T) {
        let w = self.warp(x);
        let two = T::lit(2.0);
        let a2 = w.a * w.a;
        let s = w.da / w.a;
        let ds = w.d2a / w.a - s * s;
        (self.trap_profile(x), two * s / a2, two * (ds - two * s * s) / a2)
    }

    /// `V = τ² - λ²/a² = τ² - λ² + λ² b`.
    pub fn potential(&self, x: T, lambda: T, tau: C<T>) -> C<T> {
        let l2 = lambda * lambda;
        tau * tau - l2 + l2 * self.trap_profile(x)
    }

    /// `|x|^m / ⟨x⟩^m`, the coefficient that vanishes on the trapped set.
    pub fn le_weight(&self, x: T) -> T {
        (x.abs() / japanese_bracket(x)).powf(self.m)
    }

    /// `a` as a third-order jet in `x`.
    pub fn warp_jet(&self, x: Jet<T>) -> Jet<T> {
        (x.powi(self.two_m) + T::one()).powf(T::one() / T::from_i32(self.two_m).unwrap())
    }
}

/// Value and first three derivatives of the cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff<T> {
    pub value: T,
    pub d1: T,
    pub d2: T,
    pub d3: T,
}

impl<T: Real> Cutoff<T> {
    pub fn as_array(&self) -> [T; 4] {
        [self.value, self.d1, self.d2, self.d3]
    }
}

/// Monotone C³ cutoff: `1` on `ρ <= 1/2`, `0` on `ρ >= 1`, and a
/// degree-7 Hermite blend `1 - S(2ρ-1)` in between with
/// `S(t) = 35t⁴ - 84t⁵ + 70t⁶ - 20t⁷`.
pub fn smooth_cutoff<T: Real>(rho: T) -> Cutoff<T> {
    let half = T::lit(0.5);
    let one = T::one();
    if rho <= half {
        return Cutoff { value: one, d1: T::zero(), d2: T::zero(), d3: T::zero() };
    }
    if rho >= one {
        return Cutoff { value: T::zero(), d1: T::zero(), d2: T::zero(), d3: T::zero() };
    }
    let t = T::lit(2.0) * rho - one;
    let u = one - t;
    let s = t.powi(4) * (T::lit(35.0) + t * (T::lit(-84.0) + t * (T::lit(70.0) - T::lit(20.0) * t)));
    let s1 = T::lit(140.0) * t.powi(3) * u.powi(3);
    let s2 = T::lit(420.0) * t * t * u * u * (one - T::lit(2.0) * t);
    let s3 = T::lit(840.0) * t * u * ((one - T::lit(2.0) * t).powi(2) - t * u);
    Cutoff {
        value: one - s,
        d1: -T::lit(2.0) * s1,
        d2: -T::lit(4.0) * s2,
        d3: -T::lit(8.0) * s3,
    }
}

/// `β(|x|/r)` as a jet in `x`.
pub fn cutoff_jet<T: Real>(x: Jet<T>, r: T) -> Jet<T> {
    let rho = x.abs().scale(T::one() / r);
    rho.compose(smooth_cutoff(rho.value()).as_array())
}
