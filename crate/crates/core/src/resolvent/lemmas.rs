//! `∫_{|x|<=1} (σ + |b(x)+ε|)^{-1/2} |x|^q dx` for the two smoothing scales
//! `σ = λ^{-2m/(m+1)}` (at or above the barrier top) and
//! `σ = λ^{-2/3}|ε|^{(2m-1)/3m}` (below it).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryProfile;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightExponent {
    /// `q = 0`.
    Zero,
    /// `q = m - 1 + delta`.
    Shifted { delta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaQuadrature {
    pub value: f64,
    /// Integral over `[-1, 0]`.
    pub left: f64,
    /// Integral over `[0, 1]`.
    pub right: f64,
    /// `λ^{(m-1)/(m+1)}` for `q = 0`, `1` otherwise.
    pub comparator: f64,
    pub normalized: f64,
    pub smoothing: f64,
    /// `true` when `ε > -Cλ^{-2m/(m+1)}`.
    pub above_top: bool,
    pub error_estimate: f64,
}

const REL_TOL: f64 = 1e-10;
const MAX_DEPTH: u32 = 40;

/// Double-exponential rule, bisected until the error estimate is below
/// `REL_TOL` relative to the running scale of the integral.
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, scale: f64, depth: u32) -> (f64, f64) {
    let out = quadrature::double_exponential::integrate(f, a, b, REL_TOL * scale);
    if out.error_estimate <= REL_TOL * scale.max(out.integral.abs()) || depth >= MAX_DEPTH {
        return (out.integral, out.error_estimate);
    }
    let mid = 0.5 * (a + b);
    let (l, el) = adaptive(f, a, mid, scale, depth + 1);
    let (r, er) = adaptive(f, mid, b, scale, depth + 1);
    (l + r, el + er)
}

/// Root of the increasing function `b(x) = target` on `[0, 1]`.
fn turning_point(profile: &GeometryProfile<f64>, target: f64) -> Option<f64> {
    if target <= 0.0 || target >= profile.trap_profile(1.0) {
        return None;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if profile.trap_profile(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// The integral and its comparator. `c` is the constant in the split
/// `ε > -Cλ^{-2m/(m+1)}`.
pub fn degenerate_quadrature(lambda: f64, eps: f64, m: u32, q: WeightExponent, c: f64) -> Result<LemmaQuadrature> {
    if m <= 1 {
        return Err(Error::RegimeViolation(format!("integral lemmas need m > 1, got {m}")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::RegimeViolation(format!("lambda must be positive, got {lambda}")));
    }
    if !(eps.abs() <= 1.0) {
        return Err(Error::RegimeViolation(format!("|epsilon| must be at most 1, got {eps}")));
    }
    let mf = m as f64;
    let top = lambda.powf(-2.0 * mf / (mf + 1.0));
    let above_top = eps > -c * top;
    let smoothing = if above_top { top } else { lambda.powf(-2.0 / 3.0) * eps.abs().powf((2.0 * mf - 1.0) / (3.0 * mf)) };
    let (qexp, comparator) = match q {
        WeightExponent::Zero => (0.0, lambda.powf((mf - 1.0) / (mf + 1.0))),
        WeightExponent::Shifted { delta } => {
            if !(delta > 0.0) {
                return Err(Error::RegimeViolation(format!("delta must be positive, got {delta}")));
            }
            (mf - 1.0 + delta, 1.0)
        }
    };
    let profile = GeometryProfile::<f64>::with_m(m)?;
    let f = |x: f64| (smoothing + (profile.trap_profile(x) + eps).abs()).powf(-0.5) * x.abs().powf(qexp);

    // breakpoints at the origin, the width of the central peak and the turning point
    let mut cuts = vec![0.0, smoothing.powf(0.5 / mf).min(0.5), 1.0];
    if let Some(t) = turning_point(&profile, -eps) {
        cuts.push(t);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let scale = comparator.max(1.0);
    let mut halves = [0.0; 2];
    let mut err = 0.0;
    for (k, sign) in [-1.0_f64, 1.0].into_iter().enumerate() {
        for w in cuts.windows(2) {
            let g = |x: f64| f(sign * x);
            let (v, e) = adaptive(&g, w[0], w[1], scale, 0);
            halves[k] += v;
            err += e;
        }
    }
    let value = halves[0] + halves[1];
    Ok(LemmaQuadrature {
        value,
        left: halves[0],
        right: halves[1],
        comparator,
        normalized: value / comparator,
        smoothing,
        above_top,
        error_estimate: err,
    })
}
