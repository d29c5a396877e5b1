//! Radial multipliers `f ∂_x + g` and the integrated identity they satisfy
//! against the mode operator.
//!
//! For `w` compactly supported in `x`,
//!
//! ```text
//! -∫∫ Re(□w · conj(f w_x + g w)) dV dt
//!     = ∫∫ c_x |w_x|² + c_ang (λ²/a²)|w|² + c_t |w_t|² + c_lot |w|² dV dt
//!       + [∫ Re(w_t · conj(f w_x + g w)) dV]_0^T
//! ```
//!
//! with `c_x = f'/2 + g - (a'/a) f`, `c_ang = g - f'/2`,
//! `c_t = -g + f'/2 + (a'/a) f` and `c_lot = -(g'' + 2(a'/a) g')/2`.

use serde::{Deserialize, Serialize};

use crate::discretization::{gradient_values, FluxLaplacian, Grid};
use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::geometry::{cutoff_jet, GeometryProfile};
use crate::jet::Jet;
use crate::scalar::{Real, C};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MultiplierPreset {
    /// `f = (1-β(|x|/r1)) x/(|x|+rho)`, `g = a^{-2} x/(|x|+rho) ∂_x[(1-β(|x|/r1)) a²]/2`.
    /// Requires `r/2 >= r1 >= 2` and `rho >= r`.
    Exterior { rho: f64, r1: f64, r: f64 },
    /// `f = x/(r a(x/r²))`, `g = f'/2 + delta r^{-4m} (a'/a) f`.
    Interior { r: f64, delta: f64 },
    /// `f = 0`, `g = 1/a`.
    Lagrangian,
    /// Sampled by the caller; derivatives are taken discretely.
    Custom,
}

impl MultiplierPreset {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Exterior { .. } => "exterior",
            Self::Interior { .. } => "interior",
            Self::Lagrangian => "lagrangian",
            Self::Custom => "custom",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPreset(msg));
        match *self {
            Self::Exterior { rho, r1, r } => {
                if !(0.5 * r >= r1 && r1 >= 2.0) {
                    return bad(format!("exterior needs r/2 >= r1 >= 2, got r={r}, r1={r1}"));
                }
                if !(rho >= r) {
                    return bad(format!("exterior needs rho >= r, got rho={rho}, r={r}"));
                }
            }
            Self::Interior { r, delta } => {
                if !(r >= 1.0 && r.is_finite()) {
                    return bad(format!("interior radius must be >= 1, got {r}"));
                }
                if !(delta > 0.0 && delta <= 1.0) {
                    return bad(format!("interior delta must lie in (0, 1], got {delta}"));
                }
            }
            Self::Lagrangian | Self::Custom => {}
        }
        Ok(())
    }
}

/// `f`, `g` and the derivative data the identity needs, sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierPair<T> {
    pub f: Vec<T>,
    pub df: Vec<T>,
    pub g: Vec<T>,
    /// `a^{-2} ∂_x(a² ∂_x g) = g'' + 2(a'/a) g'`.
    pub lot: Vec<T>,
    pub preset: MultiplierPreset,
}

impl<T: Real> MultiplierPair<T> {
    /// Build from sampled `f` and `g`. Derivatives use second-order
    /// differences, one-sided at the ends.
    pub fn from_samples(f: Vec<T>, g: Vec<T>, grid: &Grid<T>, profile: &GeometryProfile<T>) -> Result<Self> {
        let n = grid.len();
        for v in [&f, &g] {
            if v.len() != n {
                return Err(Error::GridMismatch { expected: n, found: v.len() });
            }
        }
        if f.iter().chain(&g).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPreset("non-finite multiplier samples".into()));
        }
        let h = grid.spacing();
        let df = real_gradient(&f, h);
        let dg = real_gradient(&g, h);
        let d2g = real_second_difference(&g, h);
        let lot = (0..n)
            .map(|i| d2g[i] + T::lit(2.0) * profile.log_derivative(grid.node(i)) * dg[i])
            .collect();
        Ok(Self { f, df, g, lot, preset: MultiplierPreset::Custom })
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }
}

/// Sample a preset on the grid with exact derivatives.
pub fn multiplier_preset<T: Real>(
    preset: MultiplierPreset,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
) -> Result<MultiplierPair<T>> {
    preset.validate()?;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let jets: Vec<(Jet<T>, Jet<T>)> = match preset {
        MultiplierPreset::Custom => {
            return Err(Error::InvalidPreset("custom multipliers are built with from_samples".into()))
        }
        MultiplierPreset::Lagrangian => grid
            .nodes()
            .into_iter()
            .map(|x| (Jet::constant(T::zero()), profile.warp_jet(Jet::variable(x)).recip()))
            .collect(),
        MultiplierPreset::Exterior { rho, r1, .. } => {
            let rho = T::lit(rho);
            let r1 = T::lit(r1);
            grid.nodes()
                .into_iter()
                .map(|x| {
                    let v = Jet::variable(x);
                    let outer = -cutoff_jet(v, r1) + T::one();
                    let hx = v / (v.abs() + Jet::constant(rho));
                    let a = profile.warp_jet(v);
                    let a2 = a * a;
                    let g = hx * (outer * a2).derivative() / a2 * half;
                    (outer * hx, g)
                })
                .collect()
        }
        MultiplierPreset::Interior { r, delta } => {
            let r = T::lit(r);
            let k = T::lit(delta) / r.powf(T::lit(4.0) * profile.m());
            grid.nodes()
                .into_iter()
                .map(|x| {
                    let v = Jet::variable(x);
                    let f = v / (profile.warp_jet(v.scale(T::one() / (r * r))) * r);
                    let a = profile.warp_jet(v);
                    let g = f.derivative() * half + (a.derivative() / a) * f * k;
                    (f, g)
                })
                .collect()
        }
    };
    let mut pair = MultiplierPair {
        f: Vec::with_capacity(jets.len()),
        df: Vec::with_capacity(jets.len()),
        g: Vec::with_capacity(jets.len()),
        lot: Vec::with_capacity(jets.len()),
        preset,
    };
    for (i, (f, g)) in jets.into_iter().enumerate() {
        let s = profile.log_derivative(grid.node(i));
        pair.f.push(f.d[0]);
        pair.df.push(f.d[1]);
        pair.g.push(g.d[0]);
        pair.lot.push(g.d[2] + two * s * g.d[1]);
    }
    if pair.f.iter().chain(&pair.g).chain(&pair.lot).any(|v| !v.is_finite()) {
        return Err(Error::InvalidPreset(format!("{} produced non-finite samples", preset.name())));
    }
    Ok(pair)
}

/// The four bulk coefficients of the identity at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct BulkCoefficients<T> {
    pub dx: Vec<T>,
    pub angular: Vec<T>,
    pub dt: Vec<T>,
    pub lower: Vec<T>,
}

impl<T: Real> BulkCoefficients<T> {
    fn columns(&self) -> [(&'static str, &[T]); 4] {
        [("dx", &self.dx), ("angular", &self.angular), ("dt", &self.dt), ("lower", &self.lower)]
    }
}

pub fn bulk_coefficients<T: Real>(
    pair: &MultiplierPair<T>,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
) -> Result<BulkCoefficients<T>> {
    let n = grid.len();
    if pair.len() != n {
        return Err(Error::GridMismatch { expected: n, found: pair.len() });
    }
    let half = T::lit(0.5);
    let mut c = BulkCoefficients {
        dx: Vec::with_capacity(n),
        angular: Vec::with_capacity(n),
        dt: Vec::with_capacity(n),
        lower: Vec::with_capacity(n),
    };
    for i in 0..n {
        let s = profile.log_derivative(grid.node(i));
        let (f, df, g) = (pair.f[i], pair.df[i], pair.g[i]);
        c.dx.push(half * df + g - s * f);
        c.angular.push(g - half * df);
        c.dt.push(-g + half * df + s * f);
        c.lower.push(-half * pair.lot[i]);
    }
    Ok(c)
}

/// Nodes with `|x| < radius` where a coefficient is below
/// `-rel_tol · max|coefficient|` (maximum over all four on that range).
pub fn coercivity_violations<T: Real>(
    coeffs: &BulkCoefficients<T>,
    grid: &Grid<T>,
    radius: T,
    rel_tol: T,
) -> Vec<(usize, &'static str)> {
    let inside: Vec<usize> = (0..grid.len()).filter(|&i| grid.node(i).abs() < radius).collect();
    let scale = coeffs
        .columns()
        .iter()
        .flat_map(|(_, col)| inside.iter().map(move |&i| col[i].abs()))
        .fold(T::zero(), T::max);
    let mut out = Vec::new();
    for &i in &inside {
        for (name, col) in coeffs.columns() {
            if col[i] < -rel_tol * scale {
                out.push((i, name));
            }
        }
    }
    out
}

/// The two sides of the identity, integrated over the trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbpBalance<T> {
    pub lhs: T,
    pub bulk: T,
    pub boundary: T,
}

impl<T: Real> IbpBalance<T> {
    pub fn residual(&self) -> T {
        (self.lhs - self.bulk - self.boundary).abs()
    }
}

pub fn ibp_balance<T: Real>(
    w: &Trajectory<T>,
    pair: &MultiplierPair<T>,
    lambda: T,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
) -> Result<IbpBalance<T>> {
    let states = w.states();
    let n = grid.len();
    for s in states {
        grid.check(&s.phi)?;
        grid.check(&s.phi_t)?;
    }
    if pair.len() != n {
        return Err(Error::GridMismatch { expected: n, found: pair.len() });
    }
    let scale = states.iter().map(|s| s.phi.max_abs().max(s.phi_t.max_abs())).fold(T::zero(), T::max);
    if scale == T::zero() {
        return Ok(IbpBalance { lhs: T::zero(), bulk: T::zero(), boundary: T::zero() });
    }
    if states.len() < 3 {
        return Err(Error::Config("identity check needs at least three time samples".into()));
    }
    let tol = T::lit(1e-12) * scale;
    for s in states {
        for v in [&s.phi, &s.phi_t] {
            if v[0].norm() > tol || v[n - 1].norm() > tol {
                return Err(Error::SupportViolation);
            }
        }
    }

    let coeffs = bulk_coefficients(pair, grid, profile)?;
    let op = FluxLaplacian::new(grid, profile);
    let a2 = op.node_a2().to_vec();
    let h = grid.spacing();
    let dt = w.sample_interval();
    let l2 = lambda * lambda;
    let half = T::lit(0.5);
    let weights: Vec<T> = (0..n).map(|i| a2[i] * grid.trapezoid_weight(i)).collect();
    let inv_a2: Vec<T> = a2.iter().map(|&v| T::one() / v).collect();

    let kcount = states.len();
    let accel = time_derivative(states.iter().map(|s| s.phi_t.values()).collect(), dt);
    let mut lap = vec![C::new(T::zero(), T::zero()); n];
    let mut lhs_t = Vec::with_capacity(kcount);
    let mut bulk_t = Vec::with_capacity(kcount);
    let mut flux = Vec::with_capacity(kcount);
    for (k, s) in states.iter().enumerate() {
        let phi = s.phi.values();
        let vel = s.phi_t.values();
        let dx = gradient_values(phi, h);
        op.apply_into(phi, &mut lap);
        let (mut lhs, mut bulk, mut bnd) = (T::zero(), T::zero(), T::zero());
        for i in 0..n {
            let mult = dx[i] * pair.f[i] + phi[i] * pair.g[i];
            let wave = -accel[k][i] + lap[i] - phi[i] * (l2 * inv_a2[i]);
            lhs -= (wave * mult.conj()).re * weights[i];
            bnd += (vel[i] * mult.conj()).re * weights[i];
            bulk += (coeffs.dx[i] * dx[i].norm_sqr()
                + coeffs.angular[i] * l2 * inv_a2[i] * phi[i].norm_sqr()
                + coeffs.dt[i] * vel[i].norm_sqr()
                + coeffs.lower[i] * phi[i].norm_sqr())
                * weights[i];
        }
        lhs_t.push(lhs);
        bulk_t.push(bulk);
        flux.push(bnd);
    }
    let trap = |v: &[T]| -> T {
        let inner: T = v[1..v.len() - 1].iter().copied().sum();
        dt * (inner + half * (v[0] + v[v.len() - 1]))
    };
    Ok(IbpBalance { lhs: trap(&lhs_t), bulk: trap(&bulk_t), boundary: flux[kcount - 1] - flux[0] })
}

/// `|LHS - RHS|` of the identity for the sampled trajectory.
pub fn ibp_residual<T: Real>(
    w: &Trajectory<T>,
    pair: &MultiplierPair<T>,
    lambda: T,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
) -> Result<T> {
    ibp_balance(w, pair, lambda, grid, profile).map(|b| b.residual())
}

/// Second-order time derivative of sampled fields, one-sided at both ends.
fn time_derivative<T: Real>(frames: Vec<&[C<T>]>, dt: T) -> Vec<Vec<C<T>>> {
    let k = frames.len();
    let n = frames[0].len();
    let inv = T::one() / (T::lit(2.0) * dt);
    let (three, four) = (T::lit(3.0), T::lit(4.0));
    (0..k)
        .map(|j| {
            (0..n)
                .map(|i| {
                    if j == 0 {
                        (frames[0][i] * (-three) + frames[1][i] * four - frames[2][i]) * inv
                    } else if j == k - 1 {
                        (frames[k - 1][i] * three - frames[k - 2][i] * four + frames[k - 3][i]) * inv
                    } else {
                        (frames[j + 1][i] - frames[j - 1][i]) * inv
                    }
                })
                .collect()
        })
        .collect()
}

fn real_gradient<T: Real>(u: &[T], h: T) -> Vec<T> {
    let c: Vec<C<T>> = u.iter().map(|&v| C::new(v, T::zero())).collect();
    gradient_values(&c, h).into_iter().map(|z| z.re).collect()
}

fn real_second_difference<T: Real>(u: &[T], h: T) -> Vec<T> {
    let n = u.len();
    let inv = T::one() / (h * h);
    let (two, four, five) = (T::lit(2.0), T::lit(4.0), T::lit(5.0));
    (0..n)
        .map(|i| {
            if i == 0 {
                (two * u[0] - five * u[1] + four * u[2] - u[3]) * inv
            } else if i == n - 1 {
                (two * u[n - 1] - five * u[n - 2] + four * u[n - 3] - u[n - 4]) * inv
            } else {
                (u[i + 1] - two * u[i] + u[i - 1]) * inv
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{evolve, EvolveOptions, ModeState};
    use proptest::prelude::*;

    fn prof(m: u32) -> GeometryProfile<f64> {
        GeometryProfile::with_m(m).unwrap()
    }

    fn bump(x: f64, r: f64) -> f64 {
        let y = x / r;
        if y.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - y * y).powi(4)
        }
    }

    const EXTERIOR: MultiplierPreset = MultiplierPreset::Exterior { rho: 8.0, r1: 2.0, r: 4.0 };
    const INTERIOR: MultiplierPreset = MultiplierPreset::Interior { r: 16.0, delta: 0.01 };

    fn separable(g: &Grid<f64>, dt: f64, count: usize) -> Trajectory<f64> {
        Trajectory::from_fn(g, dt, count, |x, t| {
            (C::new(bump(x, 6.0) * t.cos(), 0.5 * bump(x, 6.0) * t.sin()), C::new(
                -bump(x, 6.0) * t.sin(),
                0.5 * bump(x, 6.0) * t.cos(),
            ))
        })
        .unwrap()
    }

    fn residuals(pair_for: impl Fn(&Grid<f64>) -> MultiplierPair<f64>) -> Vec<f64> {
        let p = prof(2);
        (0..3)
            .map(|level| {
                let n = 80 * (1 << level) + 1;
                let g = Grid::new(8.0, n).unwrap();
                // time and space errors have opposite signs, so keep the time error smaller
                let dt = 0.25 * g.spacing();
                let w = separable(&g, dt, (1.0 / dt).round() as usize + 1);
                ibp_residual(&w, &pair_for(&g), 3.0, &g, &p).unwrap()
            })
            .collect()
    }

    fn orders(r: &[f64]) -> Vec<f64> {
        r.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
    }

    #[test]
    fn preset_values() {
        let p = prof(2);
        let g = Grid::new(8.0, 161).unwrap();
        let c = g.center();
        let ext = multiplier_preset(EXTERIOR, &g, &p).unwrap();
        assert_eq!(ext.f[c], 0.0);
        let lag = multiplier_preset(MultiplierPreset::Lagrangian, &g, &p).unwrap();
        assert!(lag.f.iter().all(|&v| v == 0.0));
        assert_eq!(lag.g[c], 1.0);
        // far from the cutoff the exterior f is x/(|x|+rho)
        let i = g.len() - 1;
        assert!((ext.f[i] - 8.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn preset_constraints() {
        let p = prof(2);
        let g = Grid::new(8.0, 33).unwrap();
        for bad in [
            MultiplierPreset::Exterior { rho: 8.0, r1: 1.0, r: 4.0 },
            MultiplierPreset::Exterior { rho: 8.0, r1: 3.0, r: 4.0 },
            MultiplierPreset::Exterior { rho: 3.0, r1: 2.0, r: 4.0 },
            MultiplierPreset::Interior { r: 16.0, delta: 0.0 },
            MultiplierPreset::Custom,
        ] {
            assert!(matches!(multiplier_preset(bad, &g, &p), Err(Error::InvalidPreset(_))), "{bad:?}");
        }
    }

    #[test]
    fn preset_derivatives_match_differences() {
        let p = prof(3);
        let g = Grid::new(8.0, 16001).unwrap();
        for preset in [EXTERIOR, INTERIOR, MultiplierPreset::Lagrangian] {
            let exact = multiplier_preset(preset, &g, &p).unwrap();
            let fd = MultiplierPair::from_samples(exact.f.clone(), exact.g.clone(), &g, &p).unwrap();
            let scale = exact.lot.iter().fold(1e-300_f64, |m, v| m.max(v.abs()));
            for i in 2..g.len() - 2 {
                // the cutoff has a jump in its fourth derivative at |x| = r1/2 and r1
                let x = g.node(i).abs();
                if (x - 1.0).abs() < 0.01 || (x - 2.0).abs() < 0.01 {
                    continue;
                }
                assert!((exact.df[i] - fd.df[i]).abs() < 1e-5, "{preset:?} df at {i}");
                assert!((exact.lot[i] - fd.lot[i]).abs() < 1e-4 * scale.max(1.0), "{preset:?} lot at {i}");
            }
        }
    }

    #[test]
    fn interior_dx_coefficient_closed_form() {
        for m in [2u32, 3] {
            let p = prof(m);
            let g = Grid::new(20.0, 801).unwrap();
            let r = 16.0;
            let delta = 0.01;
            let pair = multiplier_preset(MultiplierPreset::Interior { r, delta }, &g, &p).unwrap();
            let c = bulk_coefficients(&pair, &g, &p).unwrap();
            let mf = m as f64;
            for i in 0..g.len() {
                let x = g.node(i);
                let x2m = x.powi(2 * m as i32);
                let want = (1.0 - (x / r).powf(4.0 * mf))
                    / (r * (1.0 + x2m) * (1.0 + x2m / r.powf(4.0 * mf)).powf(1.0 + 0.5 / mf));
                let sf = p.log_derivative(x) * pair.f[i];
                let k = delta / r.powf(4.0 * mf);
                assert!((c.dx[i] - k * sf - want).abs() < 1e-14, "m={m} x={x}");
                assert!((c.angular[i] - k * sf).abs() < 1e-16);
                assert!((c.dt[i] - (1.0 - k) * sf).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn interior_coefficients_nonnegative() {
        for m in [2u32, 3] {
            for r in [8.0, 16.0, 32.0] {
                let p = prof(m);
                let g = Grid::with_max_spacing(r + 1.0, 1.0 / 64.0).unwrap();
                let pair = multiplier_preset(MultiplierPreset::Interior { r, delta: 0.01 }, &g, &p).unwrap();
                let c = bulk_coefficients(&pair, &g, &p).unwrap();
                let bad = coercivity_violations(&c, &g, r, 1e-12);
                assert!(bad.is_empty(), "m={m} r={r}: {:?}", &bad[..bad.len().min(5)]);
            }
        }
    }

    #[test]
    fn zero_trajectory_has_zero_residual() {
        let p = prof(2);
        let g = Grid::new(8.0, 81).unwrap();
        let w = Trajectory::from_fn(&g, 0.1, 4, |_, _| (C::new(0.0, 0.0), C::new(0.0, 0.0))).unwrap();
        let pair = multiplier_preset(INTERIOR, &g, &p).unwrap();
        assert_eq!(ibp_residual(&w, &pair, 2.0, &g, &p).unwrap(), 0.0);
    }

    #[test]
    fn support_violation_detected() {
        let p = prof(2);
        let g = Grid::new(4.0, 81).unwrap();
        let w = Trajectory::from_fn(&g, 0.1, 4, |_, t: f64| (C::new(t.cos(), 0.0), C::new(-t.sin(), 0.0))).unwrap();
        let pair = multiplier_preset(MultiplierPreset::Lagrangian, &g, &p).unwrap();
        assert!(matches!(ibp_residual(&w, &pair, 2.0, &g, &p), Err(Error::SupportViolation)));
    }

    #[test]
    fn custom_pair_converges_at_second_order() {
        let r = residuals(|g| {
            let f = g.nodes().iter().map(|&x| x * bump(x, 7.0)).collect();
            let gg = g.nodes().iter().map(|&x| bump(x, 7.0)).collect();
            MultiplierPair::from_samples(f, gg, g, &prof(2)).unwrap()
        });
        for o in orders(&r) {
            assert!((o - 2.0).abs() < 0.2, "{r:?}");
        }
    }

    #[test]
    fn presets_converge_at_second_order() {
        for preset in [EXTERIOR, INTERIOR, MultiplierPreset::Lagrangian] {
            let r = residuals(|g| multiplier_preset(preset, g, &prof(2)).unwrap());
            for o in orders(&r) {
                assert!((o - 2.0).abs() < 0.2, "{preset:?}: {r:?}");
            }
        }
    }

    #[test]
    fn identity_balances_nontrivially() {
        // both sides are O(1) while the residual is small
        let p = prof(2);
        let g = Grid::new(8.0, 641).unwrap();
        let w = separable(&g, g.spacing(), 41);
        let pair = multiplier_preset(INTERIOR, &g, &p).unwrap();
        let b = ibp_balance(&w, &pair, 3.0, &g, &p).unwrap();
        assert!(b.lhs.abs() > 1e-3);
        assert!(b.residual() < 1e-3 * b.lhs.abs());
    }

    #[test]
    fn evolved_solution_balances_at_second_order() {
        // □w = 0 up to discretization, so the bulk balances the boundary flux
        let p = prof(2);
        let rel = |n: usize| {
            let g = Grid::new(10.0, n).unwrap();
            let phi = g.sample_real(|x| bump(x, 2.0));
            let s0 = ModeState::new(phi, crate::discretization::GridFunction::zeros(g.len()), 0.0).unwrap();
            let opts = EvolveOptions { final_time: 1.0, cfl: 0.5, stride: Some(1) };
            let tr = evolve(&s0, 1.0, None, &opts, &g, &p).unwrap();
            let pair = multiplier_preset(MultiplierPreset::Lagrangian, &g, &p).unwrap();
            let b = ibp_balance(&tr, &pair, 1.0, &g, &p).unwrap();
            b.lhs.abs() / b.bulk.abs()
        };
        let (coarse, fine) = (rel(1001), rel(2001));
        assert!(coarse < 1e-2);
        assert!(coarse / fine > 3.5, "{coarse} {fine}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn interior_coefficients_nonnegative_random_radius(r in 8.0f64..40.0, m in 2u32..4) {
            let p = prof(m);
            let g = Grid::with_max_spacing(r + 1.0, 1.0 / 16.0).unwrap();
            let pair = multiplier_preset(MultiplierPreset::Interior { r, delta: 0.01 }, &g, &p).unwrap();
            let c = bulk_coefficients(&pair, &g, &p).unwrap();
            prop_assert!(coercivity_violations(&c, &g, r, 1e-12).is_empty());
        }
    }
}
