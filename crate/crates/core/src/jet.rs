//! Third-order jets: a value together with its first three derivatives
//! with respect to a single variable, propagated exactly through arithmetic.
//!
//! Multiplier coefficients need up to three derivatives of compositions of
//! the warp and cutoff functions. Jets give those derivatives without
//! finite differencing.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Real;

/// `[f, f', f'', f''']` at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<T> {
    pub d: [T; 4],
}

impl<T: Real> Jet<T> {
    pub fn new(v: T, d1: T, d2: T, d3: T) -> Self {
        Self { d: [v, d1, d2, d3] }
    }

    pub fn constant(v: T) -> Self {
        Self::new(v, T::zero(), T::zero(), T::zero())
    }

    /// The independent variable at `x`.
    pub fn variable(x: T) -> Self {
        Self::new(x, T::one(), T::zero(), T::zero())
    }

    #[inline]
    pub fn value(&self) -> T {
        self.d[0]
    }

    /// Derivative jet. The top coefficient is unknown after shifting and is
    /// set to NaN so that any use of it is visible.
    pub fn derivative(&self) -> Self {
        Self::new(self.d[1], self.d[2], self.d[3], T::nan())
    }

    /// Chain rule for `outer ∘ self`, where `outer = [h, h', h'', h''']`
    /// is evaluated at `self.value()`.
    pub fn compose(&self, outer: [T; 4]) -> Self {
        let [_, u1, u2, u3] = self.d;
        let [h0, h1, h2, h3] = outer;
        let three = T::lit(3.0);
        Self::new(
            h0,
            h1 * u1,
            h2 * u1 * u1 + h1 * u2,
            h3 * u1 * u1 * u1 + three * h2 * u1 * u2 + h1 * u3,
        )
    }

    /// `self^p` for real `p`; requires a positive value unless `p` is integral.
    pub fn powf(&self, p: T) -> Self {
        let v = self.value();
        let one = T::one();
        let two = T::lit(2.0);
        let h0 = v.powf(p);
        let h1 = p * v.powf(p - one);
        let h2 = p * (p - one) * v.powf(p - two);
        let h3 = p * (p - one) * (p - two) * v.powf(p - T::lit(3.0));
        self.compose([h0, h1, h2, h3])
    }

    pub fn powi(&self, k: i32) -> Self {
        let v = self.value();
        let kf = T::from_i32(k).expect("small exponent");
        let one = T::one();
        let two = T::lit(2.0);
        let h0 = v.powi(k);
        let h1 = if k == 0 { T::zero() } else { kf * v.powi(k - 1) };
        let h2 = if k == 0 || k == 1 { T::zero() } else { kf * (kf - one) * v.powi(k - 2) };
        let h3 = if (0..=2).contains(&k) {
            T::zero()
        } else {
            kf * (kf - one) * (kf - two) * v.powi(k - 3)
        };
        self.compose([h0, h1, h2, h3])
    }

    pub fn recip(&self) -> Self {
        self.powi(-1)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(T::lit(0.5))
    }

    /// `|x|` away from zero; at zero the positive branch is taken.
    pub fn abs(&self) -> Self {
        if self.value() < T::zero() {
            -*self
        } else {
            *self
        }
    }

    pub fn scale(&self, c: T) -> Self {
        Self::new(self.d[0] * c, self.d[1] * c, self.d[2] * c, self.d[3] * c)
    }
}

impl<T: Real> Add for Jet<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.d[0] + o.d[0], self.d[1] + o.d[1], self.d[2] + o.d[2], self.d[3] + o.d[3])
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.d[0] - o.d[0], self.d[1] - o.d[1], self.d[2] - o.d[2], self.d[3] - o.d[3])
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let [f0, f1, f2, f3] = self.d;
        let [g0, g1, g2, g3] = o.d;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        Self::new(
            f0 * g0,
            f1 * g0 + f0 * g1,
            f2 * g0 + two * f1 * g1 + f0 * g2,
            f3 * g0 + three * (f2 * g1 + f1 * g2) + f0 * g3,
        )
    }
}

impl<T: Real> Div for Jet<T> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<T: Real> Add<T> for Jet<T> {
    type Output = Self;
    fn add(mut self, c: T) -> Self {
        self.d[0] += c;
        self
    }
}

impl<T: Real> Mul<T> for Jet<T> {
    type Output = Self;
    fn mul(self, c: T) -> Self {
        self.scale(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd3(f: impl Fn(f64) -> f64, x: f64) -> [f64; 4] {
        let h = 1e-3;
        let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
        let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        let d3 = (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h);
        [f(x), d1, d2, d3]
    }

    #[test]
    fn rational_composition_matches_differences() {
        let f = |x: f64| (1.0 + x.powi(4)).powf(0.25) * x / (x.abs() + 3.0);
        for &x in &[0.3, 1.1, 2.7] {
            let j = Jet::variable(x);
            let got = (j.powi(4) + 1.0).powf(0.25) * j / (j.abs() + 3.0);
            let want = fd3(f, x);
            for k in 0..4 {
                assert!((got.d[k] - want[k]).abs() < 1e-4 * (1.0 + want[k].abs()), "k={k} x={x}");
            }
        }
    }

    #[test]
    fn derivative_shift_marks_top_order() {
        let j = Jet::variable(2.0_f64).powi(3);
        let d = j.derivative();
        assert_eq!(d.d[0], 12.0);
        assert_eq!(d.d[1], 12.0);
        assert_eq!(d.d[2], 6.0);
        assert!(d.d[3].is_nan());
    }
}
