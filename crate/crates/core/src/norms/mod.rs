//! Mode energy, local energy norms and the Hardy quotient on a grid.
//!
//! All integrals are per unit angular measure: the factor `4π` (or `2π` for
//! equatorial reductions) is left out, see
//! [`ANGULAR_MEASURE_SPHERE`](crate::discretization::ANGULAR_MEASURE_SPHERE).

mod multiplier;

pub use multiplier::{
    bulk_coefficients, coercivity_violations, ibp_balance, ibp_residual, multiplier_preset, BulkCoefficients,
    IbpBalance, MultiplierPair, MultiplierPreset,
};

use serde::{Deserialize, Serialize};

use crate::discretization::{dyadic_partition, gradient_values, FluxLaplacian, Grid, GridFunction};
use crate::error::{Error, Result};
use crate::evolution::{ModeState, Trajectory};
use crate::geometry::GeometryProfile;
use crate::scalar::{japanese_bracket, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport<T> {
    pub kinetic: T,
    pub radial: T,
    pub angular: T,
    pub total: T,
}

/// `∫ |φ_t|² + |φ_x|² + (λ²/a²)|φ|² dV` split by term. The radial part uses
/// midpoint differences, matching the flux-form operator.
pub fn mode_energy<T: Real>(
    state: &ModeState<T>,
    lambda: T,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
) -> Result<EnergyReport<T>> {
    grid.check(&state.phi)?;
    grid.check(&state.phi_t)?;
    let a2 = grid.warp_squared(profile);
    let mut kinetic = T::zero();
    let mut angular = T::zero();
    for i in 0..grid.len() {
        let w = grid.trapezoid_weight(i);
        kinetic += state.phi_t[i].norm_sqr() * a2[i] * w;
        angular += state.phi[i].norm_sqr() * w;
    }
    angular *= lambda * lambda;
    let radial = FluxLaplacian::new(grid, profile).dirichlet_form(state.phi.values(), grid.spacing());
    Ok(EnergyReport { kinetic, radial, angular, total: kinetic + radial + angular })
}

/// `∫_0^T ∫_{A_j} (density) a² dx dt` for every annulus `A_j`, with the time
/// integral by the trapezoid rule over uniformly spaced frames.
fn annulus_integrals<T: Real>(
    frames: usize,
    dt: T,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
    density: impl Fn(usize, usize) -> T,
) -> Result<Vec<T>> {
    if frames == 0 {
        return Err(Error::EmptySeries);
    }
    let a2 = grid.warp_squared(profile);
    let parts = dyadic_partition(grid);
    let mut out = vec![T::zero(); parts.len()];
    for k in 0..frames {
        let wt = if frames == 1 {
            T::zero()
        } else if k == 0 || k + 1 == frames {
            dt * T::lit(0.5)
        } else {
            dt
        };
        for (j, part) in parts.iter().enumerate() {
            let s: T = part.iter().map(|&i| density(k, i) * a2[i] * grid.trapezoid_weight(i)).sum();
            out[j] += wt * s;
        }
    }
    Ok(out)
}

fn sup_norm<T: Real>(parts: &[T]) -> T {
    parts
        .iter()
        .enumerate()
        .map(|(j, v)| T::lit(2.0).powf(-T::from_usize_lossy(j) / T::lit(2.0)) * v.sqrt())
        .fold(T::zero(), T::max)
}

fn check_frames<T: Real>(series: &[GridFunction<T>], grid: &Grid<T>) -> Result<()> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    series.iter().try_for_each(|u| grid.check(u))
}

/// `sup_j 2^{-j/2} ‖u‖_{L²([0,T] × A_j)}` for frames spaced `dt` apart.
pub fn le_norm<T: Real>(
    series: &[GridFunction<T>],
    dt: T,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
) -> Result<T> {
    check_frames(series, grid)?;
    let parts = annulus_integrals(series.len(), dt, grid, profile, |k, i| series[k][i].norm_sqr())?;
    Ok(sup_norm(&parts))
}

/// `Σ_j 2^{j/2} ‖u‖_{L²([0,T] × A_j)}`.
pub fn le_dual_norm<T: Real>(
    series: &[GridFunction<T>],
    dt: T,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
) -> Result<T> {
    check_frames(series, grid)?;
    let parts = annulus_integrals(series.len(), dt, grid, profile, |k, i| series[k][i].norm_sqr())?;
    Ok(parts
        .iter()
        .enumerate()
        .map(|(j, v)| T::lit(2.0).powf(T::from_usize_lossy(j) / T::lit(2.0)) * v.sqrt())
        .sum())
}

/// LE norm of `(φ_t, φ_x, (λ/a)φ, ⟨x⟩^{-1}φ)` combined in quadrature.
pub fn le1_norm<T: Real>(
    series: &Trajectory<T>,
    lambda: T,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
) -> Result<T> {
    let states = series.states();
    if states.is_empty() {
        return Err(Error::EmptySeries);
    }
    for s in states {
        grid.check(&s.phi)?;
    }
    let h = grid.spacing();
    let grads: Vec<Vec<_>> = states.iter().map(|s| gradient_values(s.phi.values(), h)).collect();
    let pot: Vec<T> = (0..grid.len())
        .map(|i| {
            let x = grid.node(i);
            let a = profile.a(x);
            let jb = japanese_bracket(x);
            lambda * lambda / (a * a) + T::one() / (jb * jb)
        })
        .collect();
    let parts = annulus_integrals(states.len(), series.sample_interval(), grid, profile, |k, i| {
        states[k].phi_t[i].norm_sqr() + grads[k][i].norm_sqr() + pot[i] * states[k].phi[i].norm_sqr()
    })?;
    Ok(sup_norm(&parts))
}

/// `∫ a^{-2}|u|² dV / ∫ |u_x|² dV` for `u` vanishing at both ends of the grid.
pub fn hardy_ratio<T: Real>(u: &GridFunction<T>, grid: &Grid<T>, profile: &GeometryProfile<T>) -> Result<T> {
    grid.check(u)?;
    let n = u.len();
    if u.max_abs() == T::zero() {
        return Err(Error::UndefinedRatio("u"));
    }
    if u[0].norm() != T::zero() || u[n - 1].norm() != T::zero() {
        return Err(Error::SupportViolation);
    }
    // a^{-2} · a² = 1 in the numerator
    let num: T = (0..n).map(|i| u[i].norm_sqr() * grid.trapezoid_weight(i)).sum();
    let den = FluxLaplacian::new(grid, profile).dirichlet_form(u.values(), grid.spacing());
    Ok(num / den)
}
