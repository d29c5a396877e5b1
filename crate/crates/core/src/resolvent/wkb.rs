//! Pointwise quadratic forms in `(φ, φ')` adapted to `b + ε`, one per
//! region of the barrier-top analysis.

use serde::{Deserialize, Serialize};

use super::ModeParams;
use crate::discretization::{gradient_values, Grid, GridFunction};
use crate::error::{Error, Result};
use crate::geometry::GeometryProfile;
use crate::scalar::Real;

/// Region constant used when the caller has no preference.
pub const DEFAULT_WKB_CONSTANT: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WkbVariant {
    /// `b + ε >= 2C λ^{-2m/(m+1)}`:
    /// `λ² w|φ|² + w^{-1}|φ'|² + b' w^{-3} Re(φ̄φ')/2` with `w = (b+ε)^{1/2}`.
    Oscillatory,
    /// `b <= 2C λ^{-2m/(m+1)}`: `λ^{(m+2)/(m+1)}|φ|² + λ^{m/(m+1)}|φ'|²`.
    BarrierTop,
    /// `ε < 0` and `b + ε >= 2Cα` with `α = λ^{-2/3}|ε|^{(2m-1)/3m}`; same form as `Oscillatory`.
    OscillatoryBelowTop,
    /// `ε < 0` and `|b + ε| <= Cα`:
    /// `λ^{5/3}|ε|^{(2m-1)/6m}|φ|² + λ^{1/3}|ε|^{-(2m-1)/6m}|φ'|²`.
    TurningLayer,
}

impl WkbVariant {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Oscillatory => "oscillatory",
            Self::BarrierTop => "barrier_top",
            Self::OscillatoryBelowTop => "oscillatory_below_top",
            Self::TurningLayer => "turning_layer",
        }
    }

    fn below_top(&self) -> bool {
        matches!(self, Self::OscillatoryBelowTop | Self::TurningLayer)
    }
}

struct Scales<T> {
    lambda: T,
    eps: T,
    m: T,
    /// `λ^{-2m/(m+1)}`
    top: T,
    /// `λ^{-2/3}|ε|^{(2m-1)/3m}`
    turning: T,
}

fn scales<T: Real>(params: &ModeParams<T>, profile: &GeometryProfile<T>, variant: WkbVariant) -> Result<Scales<T>> {
    let eps = params
        .epsilon()
        .ok_or_else(|| Error::RegimeViolation("lambda must be positive".into()))?;
    let lambda = params.lambda;
    if eps.im.abs() > T::lit(1e-12) * (T::one() + eps.re.abs()) {
        return Err(Error::RegimeViolation("energy functionals need real tau".into()));
    }
    let eps = eps.re;
    if variant.below_top() && !(eps < T::zero()) {
        return Err(Error::RegimeViolation(format!("{} needs epsilon < 0", variant.name())));
    }
    let m = profile.m();
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    Ok(Scales {
        lambda,
        eps,
        m,
        top: lambda.powf(-two * m / (m + one)),
        turning: lambda.powf(-two / three) * eps.abs().powf((two * m - one) / (three * m)),
    })
}

fn in_region<T: Real>(variant: WkbVariant, b: T, s: &Scales<T>, c: T) -> bool {
    let two = T::lit(2.0);
    match variant {
        WkbVariant::Oscillatory => b + s.eps >= two * c * s.top,
        WkbVariant::BarrierTop => b <= two * c * s.top,
        WkbVariant::OscillatoryBelowTop => b + s.eps >= two * c * s.turning,
        WkbVariant::TurningLayer => (b + s.eps).abs() <= c * s.turning,
    }
}

/// Nodes of `grid` inside the variant's region for region constant `c`.
pub fn wkb_region<T: Real>(
    grid: &Grid<T>,
    params: &ModeParams<T>,
    profile: &GeometryProfile<T>,
    variant: WkbVariant,
    c: T,
) -> Result<Vec<usize>> {
    let s = scales(params, profile, variant)?;
    Ok((0..grid.len()).filter(|&i| in_region(variant, profile.trap_profile(grid.node(i)), &s, c)).collect())
}

/// Functional values at `nodes`, in the given order. `φ'` is the central
/// difference. Every node must lie in the variant's region.
pub fn wkb_energy<T: Real>(
    phi: &GridFunction<T>,
    grid: &Grid<T>,
    params: &ModeParams<T>,
    profile: &GeometryProfile<T>,
    variant: WkbVariant,
    nodes: &[usize],
    c: T,
) -> Result<Vec<T>> {
    grid.check(phi)?;
    let s = scales(params, profile, variant)?;
    let outside: Vec<usize> = nodes
        .iter()
        .copied()
        .filter(|&i| i >= grid.len() || !in_region(variant, profile.trap_profile(grid.node(i)), &s, c))
        .collect();
    if !outside.is_empty() {
        return Err(Error::OutsideRegion { variant: variant.name(), nodes: outside });
    }
    let dphi = gradient_values(phi.values(), grid.spacing());
    let one = T::one();
    let two = T::lit(2.0);
    let l2 = s.lambda * s.lambda;
    Ok(nodes
        .iter()
        .map(|&i| {
            let x = grid.node(i);
            let u2 = phi[i].norm_sqr();
            let du2 = dphi[i].norm_sqr();
            match variant {
                WkbVariant::Oscillatory | WkbVariant::OscillatoryBelowTop => {
                    let (b, db, _) = profile.trap_profile_derivatives(x);
                    let w = (b + s.eps).sqrt();
                    let cross = (phi[i].conj() * dphi[i]).re;
                    l2 * w * u2 + du2 / w + db / (two * w * w * w) * cross
                }
                WkbVariant::BarrierTop => {
                    s.lambda.powf((s.m + two) / (s.m + one)) * u2 + s.lambda.powf(s.m / (s.m + one)) * du2
                }
                WkbVariant::TurningLayer => {
                    let p = (two * s.m - one) / (T::lit(6.0) * s.m);
                    let e = s.eps.abs();
                    s.lambda.powf(T::lit(5.0) / T::lit(3.0)) * e.powf(p) * u2
                        + s.lambda.powf(one / T::lit(3.0)) * e.powf(-p) * du2
                }
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolvent::solve_resolvent;
    use crate::scalar::C;

    fn prof(m: u32) -> GeometryProfile<f64> {
        GeometryProfile::with_m(m).unwrap()
    }

    #[test]
    fn zero_field_zero_energy() {
        let p = prof(2);
        let g = Grid::new(1.0, 201).unwrap();
        let params = ModeParams::from_epsilon(50.0, 0.0).unwrap();
        let nodes = wkb_region(&g, &params, &p, WkbVariant::Oscillatory, 4.0).unwrap();
        let e = wkb_energy(&GridFunction::zeros(g.len()), &g, &params, &p, WkbVariant::Oscillatory, &nodes, 4.0).unwrap();
        assert!(e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn barrier_top_constant_field() {
        let p = prof(2);
        let g = Grid::new(1.0, 2001).unwrap();
        let params = ModeParams::from_epsilon(16.0, 0.0).unwrap();
        let nodes = wkb_region(&g, &params, &p, WkbVariant::BarrierTop, 4.0).unwrap();
        assert!(nodes.contains(&g.center()));
        let one = g.sample_real(|_| 1.0);
        let e = wkb_energy(&one, &g, &params, &p, WkbVariant::BarrierTop, &[g.center()], 4.0).unwrap();
        assert!((e[0] - 16f64.powf(4.0 / 3.0)).abs() < 1e-12 * e[0]);
    }

    #[test]
    fn outside_region_lists_nodes() {
        let p = prof(2);
        let g = Grid::new(1.0, 101).unwrap();
        let params = ModeParams::from_epsilon(64.0, 0.0).unwrap();
        let c = g.center();
        let r = wkb_energy(&g.sample_real(|_| 1.0), &g, &params, &p, WkbVariant::Oscillatory, &[0, c], 4.0);
        match r {
            Err(Error::OutsideRegion { nodes, .. }) => assert_eq!(nodes, vec![c]),
            other => panic!("{other:?}"),
        }
        let r = wkb_region(&g, &params, &p, WkbVariant::TurningLayer, 4.0);
        assert!(matches!(r, Err(Error::RegimeViolation(_))));
    }

    #[test]
    fn turning_layer_formula() {
        let p = prof(3);
        let g = Grid::new(1.0, 4001).unwrap();
        let lam = 100.0;
        let eps = -0.01;
        let params = ModeParams::from_epsilon(lam, eps).unwrap();
        let nodes = wkb_region(&g, &params, &p, WkbVariant::TurningLayer, 1.0).unwrap();
        assert!(!nodes.is_empty());
        let u = g.sample_real(|x| 2.0 * x + 1.0);
        let e = wkb_energy(&u, &g, &params, &p, WkbVariant::TurningLayer, &nodes, 1.0).unwrap();
        let pw = 5.0 / 18.0;
        for (k, &i) in nodes.iter().enumerate() {
            let x = g.node(i);
            let want = lam.powf(5.0 / 3.0) * 0.01f64.powf(pw) * (2.0 * x + 1.0).powi(2)
                + lam.powf(1.0 / 3.0) * 0.01f64.powf(-pw) * 4.0;
            assert!((e[k] - want).abs() < 1e-9 * want);
        }
    }

    fn homogeneous_positivity(m: u32, lam: f64, eps: f64, variant: WkbVariant, c: f64) -> f64 {
        // solve with a source near x = -0.4 and look only where φ is homogeneous
        let p = prof(m);
        let g = Grid::for_wavenumber(1.0, lam * 1.2, 16.0).unwrap();
        let src = g.sample_real(|x| {
            let y = (x + 0.4) / 0.05;
            if y.abs() < 1.0 {
                (1.0 - y * y).powi(4)
            } else {
                0.0
            }
        });
        let params = ModeParams::from_epsilon(lam, eps).unwrap();
        let s = solve_resolvent(&src, &params, &g, &p).unwrap();
        let nodes: Vec<usize> = wkb_region(&g, &params, &p, variant, c)
            .unwrap()
            .into_iter()
            .filter(|&i| {
                let x = g.node(i);
                (x + 0.4).abs() > 0.06 && x.abs() < 1.0 - 2.0 * g.spacing()
            })
            .collect();
        assert!(nodes.len() > 100);
        let e = wkb_energy(&s.phi, &g, &params, &p, variant, &nodes, c).unwrap();
        let scale = e.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        e.iter().fold(f64::INFINITY, |a, &v| a.min(v)) / scale
    }

    #[test]
    fn oscillatory_functional_positive_on_homogeneous_solution() {
        assert!(homogeneous_positivity(2, 512.0, 0.0, WkbVariant::Oscillatory, DEFAULT_WKB_CONSTANT) > 0.0);
        assert!(homogeneous_positivity(3, 256.0, 0.002, WkbVariant::Oscillatory, DEFAULT_WKB_CONSTANT) > 0.0);
    }

    #[test]
    fn complex_tau_rejected() {
        let p = prof(2);
        let g = Grid::new(1.0, 11).unwrap();
        let params = ModeParams::new(10.0, C::new(10.0, 1.0)).unwrap();
        assert!(matches!(wkb_region(&g, &params, &p, WkbVariant::Oscillatory, 4.0), Err(Error::RegimeViolation(_))));
    }
}
