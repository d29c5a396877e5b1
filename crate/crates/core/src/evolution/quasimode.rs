//! Quasimodes concentrated at the trapped set and the complex frequency
//! that turns them into exponentially growing approximate solutions.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::discretization::{Grid, GridFunction};
use crate::error::{Error, Result};
use crate::geometry::{smooth_cutoff, GeometryProfile};
use crate::linalg::solve_tridiagonal;
use crate::scalar::{re, Real, C};

/// Minimum number of nodes inside the quasimode support.
pub const MIN_SUPPORT_NODES: usize = 64;

/// Shape of the rescaled profile `χ`, supported in `[-2, 2]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuasimodeProfile {
    /// `(1 - y²/4)⁴`.
    #[default]
    Polynomial,
    /// Ground state of `-∂_y² + y^{2m}/m`, tapered by `β(|y|/2)`.
    Oscillator,
}

/// `χ(y) = (1 - y²/4)⁴` on `|y| <= 2`.
pub fn polynomial_profile<T: Real>(y: T) -> T {
    let s = T::one() - y * y / T::lit(4.0);
    if s <= T::zero() {
        T::zero()
    } else {
        s.powi(4)
    }
}

/// `∫ χ² dy = 4 ∫_0^1 (1-t²)^8 dt = 4 · 2^16 (8!)² / 17!`.
fn polynomial_profile_norm_sq() -> f64 {
    let mut v = 1.0;
    // ∫_0^1 (1-t²)^n dt = Π_{k=1}^n 2k/(2k+1)
    for k in 1..=8 {
        v *= (2 * k) as f64 / (2 * k + 1) as f64;
    }
    4.0 * v
}

#[derive(Clone, Debug)]
pub struct Quasimode<T> {
    pub u: GridFunction<T>,
    /// `E = (α + iβ) λ^{-2m/(m+1)}`.
    pub energy: C<T>,
    pub alpha: T,
    pub beta: T,
    pub lambda: T,
    pub kind: QuasimodeProfile,
    /// `2 λ^{-1/(m+1)}`.
    pub support_radius: T,
    /// `(E + x^{2m}/m) ũ + λ^{-2} ∂_x² ũ`.
    pub residual: GridFunction<T>,
    pub u_norm: T,
    pub residual_norm: T,
    /// `‖R‖ / (λ^{-2m/(m+1)} ‖ũ‖)`.
    pub c_measured: T,
    /// `‖χ‖²` of the rescaled profile.
    pub profile_norm_sq: T,
}

impl<T: Real> Quasimode<T> {
    /// `‖R‖ / ‖ũ‖`.
    pub fn residual_ratio(&self) -> T {
        self.residual_norm / self.u_norm
    }

    /// `‖ũ‖² / λ^{(m-1)/(m+1)}`, which the normalization pins to `‖χ‖²`.
    pub fn normalized_mass(&self, m: T) -> T {
        let one = T::one();
        self.u_norm * self.u_norm / self.lambda.powf((m - one) / (m + one))
    }
}

/// `ũ(x) = λ^{m/(2(m+1))} χ(λ^{1/(m+1)} x)` with its discrete residual.
pub fn build_quasimode<T: Real>(
    lambda: T,
    profile: &GeometryProfile<T>,
    alpha: T,
    beta: T,
    grid: &Grid<T>,
    kind: QuasimodeProfile,
) -> Result<Quasimode<T>> {
    if !(lambda >= T::lit(16.0)) {
        return Err(Error::RegimeViolation(format!("quasimode needs lambda >= 16, got {lambda}")));
    }
    let one = T::one();
    let two = T::lit(2.0);
    let m = profile.m();
    let stretch = lambda.powf(one / (m + one));
    let support_radius = two / stretch;
    if grid.half_width() < support_radius {
        return Err(Error::InvalidGrid(format!(
            "half-width {} does not contain the quasimode support {support_radius}",
            grid.half_width()
        )));
    }
    let inside = (0..grid.len()).filter(|&i| grid.node(i).abs() <= support_radius).count();
    if inside < MIN_SUPPORT_NODES {
        return Err(Error::UnderResolved { nodes: inside, required: MIN_SUPPORT_NODES });
    }

    let (chi, profile_norm_sq) = match kind {
        QuasimodeProfile::Polynomial => {
            let chi: Vec<T> = (0..grid.len()).map(|i| polynomial_profile(stretch * grid.node(i))).collect();
            (chi, T::lit(polynomial_profile_norm_sq()))
        }
        QuasimodeProfile::Oscillator => oscillator_profile(grid, stretch, profile),
    };
    let amplitude = lambda.powf(m / (two * (m + one)));
    let u = GridFunction::new(chi.iter().map(|&c| re(amplitude * c)).collect());

    let scale = lambda.powf(-two * m / (m + one));
    let energy = C::new(alpha, beta) * scale;
    let h = grid.spacing();
    let inv_l2h2 = one / (lambda * lambda * h * h);
    let two_m = profile.degeneracy().get() as i32 * 2;
    let n = grid.len();
    let uv = u.values();
    let residual = GridFunction::new(
        (0..n)
            .map(|i| {
                let x = grid.node(i);
                let left = if i > 0 { uv[i - 1] } else { C::zero() };
                let right = if i + 1 < n { uv[i + 1] } else { C::zero() };
                (energy + re(x.powi(two_m) / m)) * uv[i] + (left + right - uv[i] * two) * inv_l2h2
            })
            .collect(),
    );
    let u_norm = u.l2_norm(grid);
    let residual_norm = residual.l2_norm(grid);
    Ok(Quasimode {
        u,
        energy,
        alpha,
        beta,
        lambda,
        kind,
        support_radius,
        residual,
        u_norm,
        residual_norm,
        c_measured: residual_norm / (scale * u_norm),
        profile_norm_sq,
    })
}

/// Discrete ground state of `-∂_y² + y^{2m}/m` on the grid nodes with
/// `|y| <= 6` (`y = stretch · x`), times `β(|y|/2)`, normalized to `χ(0) = 1`.
fn oscillator_profile<T: Real>(grid: &Grid<T>, stretch: T, profile: &GeometryProfile<T>) -> (Vec<T>, T) {
    let hy = grid.spacing() * stretch;
    let ymax = T::lit(6.0);
    let idx: Vec<usize> = (0..grid.len()).filter(|&i| (stretch * grid.node(i)).abs() <= ymax).collect();
    let k = idx.len();
    let m = profile.m();
    let two_m = profile.degeneracy().get() as i32 * 2;
    let inv = T::one() / (hy * hy);
    let diag: Vec<C<T>> = idx
        .iter()
        .map(|&i| {
            let y = stretch * grid.node(i);
            re(T::lit(2.0) * inv + y.powi(two_m) / m)
        })
        .collect();
    let off = vec![re(-inv); k - 1];
    // inverse iteration; the operator is positive so no shift is needed
    let mut v: Vec<C<T>> = vec![re(T::one()); k];
    for _ in 0..200 {
        let next = solve_tridiagonal(&off, &diag, &off, &v).expect("positive definite").solution;
        let norm = next.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        let next: Vec<C<T>> = next.into_iter().map(|z| z / norm).collect();
        let change = next.iter().zip(&v).map(|(a, b)| (*a - *b).norm()).fold(T::zero(), T::max);
        v = next;
        if change < T::lit(1e-13) {
            break;
        }
    }
    let center = idx.iter().position(|&i| i == grid.center()).expect("origin node");
    let peak = v[center].re;
    let mut chi = vec![T::zero(); grid.len()];
    for (j, &i) in idx.iter().enumerate() {
        let y = stretch * grid.node(i);
        chi[i] = v[j].re / peak * smooth_cutoff(y.abs() / T::lit(2.0)).value;
    }
    let norm_sq = chi.iter().map(|c| *c * *c).sum::<T>() * hy;
    (chi, norm_sq)
}

/// Root of `τ² = λ²(1+E)` with `Im τ <= 0`; real and nonnegative when
/// `Im E = 0` and `1 + Re E >= 0`.
pub fn tau_root<T: Real>(lambda: T, energy: C<T>) -> C<T> {
    let root = (C::new(T::one(), T::zero()) + energy).sqrt() * lambda;
    if root.im > T::zero() {
        -root
    } else {
        root
    }
}

/// `B = (e^{s} - 1)/s` with `s = T |Im τ|`, continuous at `s = 0`.
pub fn growth_factor<T: Real>(final_time: T, im_tau_abs: T) -> T {
    let s = final_time * im_tau_abs;
    if s.is_zero() {
        T::one()
    } else {
        s.exp_m1() / s
    }
}
