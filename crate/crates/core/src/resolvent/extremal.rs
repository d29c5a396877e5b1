//! Largest ratios over all sources: `sup_φ N(φ) / ‖φ'' + Vφ‖` for `φ`
//! vanishing together with its first difference at both ends of the grid.
//!
//! With the two end nodes on each side clamped to zero the operator maps
//! the `n-4` free values onto all `n-2` interior equations, so it is a tall
//! banded matrix `P` with full column rank and there is no resonance. The
//! supremum is the top eigenvalue of `R^{-ᴴ} M R^{-1}` for `P = QR` and the
//! Hermitian form `M` of the numerator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{potential_samples, ModeParams};
use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::geometry::GeometryProfile;
use crate::linalg::{maximize_quotient, HermitianTridiagonal, TallBandQr};
use crate::scalar::{Real, C};

/// Numerator of the ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremalNorm {
    /// `(|τ|+λ) ‖φ‖`.
    Plain,
    /// `(‖φ'‖² + (|τ|+λ)² ‖φ‖²)^{1/2}`, within `√2` of `‖φ'‖ + (|τ|+λ)‖φ‖`.
    Strong,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for ExtremalOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_iter: 20_000, seed: 0 }
    }
}

/// Tall operator `φ ↦ φ'' + Vφ` on the clamped unknowns (nodes `2..n-2`).
#[derive(Clone, Debug)]
pub struct ClampedOperator<T> {
    pub top: Vec<C<T>>,
    pub mid: Vec<C<T>>,
    pub bot: Vec<C<T>>,
    h: T,
}

impl<T: Real> ClampedOperator<T> {
    pub fn new(params: &ModeParams<T>, grid: &Grid<T>, profile: &GeometryProfile<T>) -> Result<Self> {
        let n = grid.len();
        if n < 7 {
            return Err(Error::InvalidGrid("clamped operator needs at least seven nodes".into()));
        }
        let h = grid.spacing();
        let inv_h2 = T::one() / (h * h);
        let v = potential_samples(params, grid, profile);
        let off = C::new(inv_h2, T::zero());
        let nc = n - 4;
        Ok(Self {
            top: vec![off; nc],
            mid: (2..n - 2).map(|j| v[j] - inv_h2 * T::lit(2.0)).collect(),
            bot: vec![off; nc],
            h,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.mid.len()
    }

    /// `Pφ` on the `n-2` interior rows.
    pub fn apply(&self, phi: &[C<T>]) -> Vec<C<T>> {
        let nc = self.unknowns();
        let mut out = vec![C::new(T::zero(), T::zero()); nc + 2];
        for k in 0..nc {
            out[k] += self.top[k] * phi[k];
            out[k + 1] += self.mid[k] * phi[k];
            out[k + 2] += self.bot[k] * phi[k];
        }
        out
    }

    fn numerator(&self, norm: ExtremalNorm, scale: T) -> HermitianTridiagonal<T> {
        let nc = self.unknowns();
        let s2 = scale * scale;
        match norm {
            ExtremalNorm::Plain => HermitianTridiagonal {
                diag: vec![s2; nc],
                sup: vec![C::new(T::zero(), T::zero()); nc - 1],
            },
            ExtremalNorm::Strong => {
                let inv_h2 = T::one() / (self.h * self.h);
                HermitianTridiagonal {
                    diag: vec![s2 + T::lit(2.0) * inv_h2; nc],
                    sup: vec![C::new(-inv_h2, T::zero()); nc - 1],
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Extremal<T> {
    pub ratio: T,
    /// Maximizing `φ` on nodes `2..n-2`, unit Euclidean norm.
    pub vector: Vec<C<T>>,
    /// Maximizers within the even and the odd functions, for warm starts.
    pub by_parity: [Vec<C<T>>; 2],
    pub iterations: usize,
    pub converged: bool,
}

fn parity_projection<T: Real>(odd: bool) -> impl Fn(&mut [C<T>]) {
    let half = T::lit(0.5);
    move |v: &mut [C<T>]| {
        let n = v.len();
        for k in 0..n.div_ceil(2) {
            let j = n - 1 - k;
            let (a, b) = (v[k], v[j]);
            if odd {
                v[k] = (a - b) * half;
                v[j] = -v[k];
            } else {
                v[k] = (a + b) * half;
                v[j] = v[k];
            }
        }
    }
}

/// `sup_φ N(φ)/‖Pφ‖` over clamped `φ` on the grid.
///
/// The potential is even and the grid symmetric, so the even and odd
/// functions are searched separately; this removes the near-degenerate
/// pairs that single wells on both sides of the barrier produce.
pub fn extremal_ratio<T: Real>(
    params: &ModeParams<T>,
    grid: &Grid<T>,
    profile: &GeometryProfile<T>,
    norm: ExtremalNorm,
    opts: &ExtremalOptions,
    warm: Option<&Extremal<T>>,
) -> Result<Extremal<T>> {
    let op = ClampedOperator::new(params, grid, profile)?;
    let nc = op.unknowns();
    let qr = TallBandQr::factor(&op.top, &op.mid, &op.bot);
    let m = op.numerator(norm, params.frequency_scale());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random: Vec<C<T>> =
        (0..nc).map(|_| C::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0)))).collect();
    let mut best: Option<(T, usize)> = None;
    let mut by_parity: [Vec<C<T>>; 2] = [Vec::new(), Vec::new()];
    let mut iterations = 0;
    let mut converged = true;
    for (k, odd) in [false, true].into_iter().enumerate() {
        let project = parity_projection::<T>(odd);
        let start = match warm {
            Some(w) if w.by_parity[k].len() == nc => &w.by_parity[k],
            _ => &random,
        };
        let pair = maximize_quotient(&qr, &m, start, T::lit(opts.rel_tol), opts.max_iter, Some(&project));
        iterations += pair.iterations;
        converged &= pair.converged;
        if best.is_none_or(|(q, _)| pair.quotient > q) {
            best = Some((pair.quotient, k));
        }
        by_parity[k] = pair.vector;
    }
    let (quotient, k) = best.expect("two parities");
    Ok(Extremal {
        ratio: quotient.max(T::zero()).sqrt(),
        vector: by_parity[k].clone(),
        by_parity,
        iterations,
        converged,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseIvOptions {
    pub points_per_wavelength: f64,
    pub half_width: f64,
    /// Points of the uniform grid on `[-1/2, 1/2]`.
    pub coarse_points: usize,
    /// Points of the grid of total width `fine_width · λ^{-2m/(m+1)}` about 0.
    pub fine_points: usize,
    pub fine_width: f64,
    /// Golden-section steps around the best grid point.
    pub refine_steps: usize,
    pub extremal: ExtremalOptions,
}

impl Default for CaseIvOptions {
    fn default() -> Self {
        Self {
            points_per_wavelength: 8.0,
            half_width: 1.0,
            coarse_points: 21,
            fine_points: 41,
            fine_width: 10.0,
            refine_steps: 16,
            extremal: ExtremalOptions::default(),
        }
    }
}

/// Sorted union of the coarse and fine `ε` grids.
pub fn epsilon_grid(lambda: f64, m: u32, opts: &CaseIvOptions) -> Vec<f64> {
    let mf = m as f64;
    let scale = lambda.powf(-2.0 * mf / (mf + 1.0));
    let lin = |lo: f64, hi: f64, k: usize| -> Vec<f64> {
        if k <= 1 {
            return vec![0.5 * (lo + hi)];
        }
        (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
    };
    let half = 0.5 * opts.fine_width * scale;
    let mut eps: Vec<f64> = lin(-0.5, 0.5, opts.coarse_points);
    eps.extend(lin(-half, half, opts.fine_points));
    eps.sort_by(f64::total_cmp);
    eps.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * scale);
    eps
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseIvSup<T> {
    pub lambda: T,
    /// `sup_ε sup_φ (|τ|+λ)‖φ‖/‖Pφ‖`.
    pub ratio: T,
    pub eps_at_max: T,
    /// `(ε, ratio)` for every grid point, then the refinement points.
    pub samples: Vec<(T, T)>,
    pub converged: bool,
    pub nodes: usize,
}

/// Supremum of the plain ratio over the `ε` grid, refined by golden-section
/// search between the neighbours of the best grid point.
pub fn case_iv_sup<T: Real>(lambda: T, profile: &GeometryProfile<T>, opts: &CaseIvOptions) -> Result<CaseIvSup<T>> {
    let m = profile.degeneracy().get();
    if !(lambda > T::zero()) {
        return Err(Error::RegimeViolation(format!("lambda must be positive, got {lambda}")));
    }
    let eps = epsilon_grid(lambda.to_f64_lossy(), m, opts);
    let kmax = eps.iter().fold(0.0_f64, |a, e| a.max(*e));
    let grid = Grid::for_wavenumber(
        T::lit(opts.half_width),
        lambda * T::lit(1.0 + kmax).sqrt(),
        T::lit(opts.points_per_wavelength),
    )?;
    let mut converged = true;
    let mut warm: Option<Extremal<T>> = None;
    let eval = |e: T, warm: &mut Option<Extremal<T>>, converged: &mut bool| -> Result<T> {
        let params = ModeParams::from_epsilon(lambda, e)?;
        let ex = extremal_ratio(&params, &grid, profile, ExtremalNorm::Plain, &opts.extremal, warm.as_ref())?;
        *converged &= ex.converged;
        let r = ex.ratio;
        *warm = Some(ex);
        Ok(r)
    };
    let mut samples = Vec::with_capacity(eps.len() + opts.refine_steps);
    for &e in &eps {
        let r = eval(T::lit(e), &mut warm, &mut converged)?;
        samples.push((T::lit(e), r));
    }
    let best = (0..samples.len()).fold(0, |b, i| if samples[i].1 > samples[b].1 { i } else { b });
    let (mut lo, mut hi) = (samples[best.saturating_sub(1)].0, samples[(best + 1).min(samples.len() - 1)].0);
    let mut top = samples[best];
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1, &mut warm, &mut converged)?;
    let mut f2 = eval(x2, &mut warm, &mut converged)?;
    samples.push((x1, f1));
    samples.push((x2, f2));
    for _ in 2..opts.refine_steps {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1, &mut warm, &mut converged)?;
            samples.push((x1, f1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2, &mut warm, &mut converged)?;
            samples.push((x2, f2));
        }
    }
    for &(e, r) in &samples {
        if r > top.1 {
            top = (e, r);
        }
    }
    Ok(CaseIvSup { lambda, ratio: top.1, eps_at_max: top.0, samples, converged, nodes: grid.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    type Cx = C<f64>;

    fn prof(m: u32) -> GeometryProfile<f64> {
        GeometryProfile::with_m(m).unwrap()
    }

    fn dense(op: &ClampedOperator<f64>) -> DMatrix<Cx> {
        let nc = op.unknowns();
        let mut a = DMatrix::<Cx>::zeros(nc + 2, nc);
        for k in 0..nc {
            a[(k, k)] = op.top[k];
            a[(k + 1, k)] = op.mid[k];
            a[(k + 2, k)] = op.bot[k];
        }
        a
    }

    #[test]
    fn plain_ratio_matches_smallest_singular_value() {
        let p = prof(2);
        let g = Grid::new(1.0, 129).unwrap();
        for (l, t) in [(10.0, 10.0), (20.0, 19.5), (3.0, 40.0), (0.5, 0.2)] {
            let params = ModeParams::real(l, t).unwrap();
            let op = ClampedOperator::new(&params, &g, &p).unwrap();
            let sv = dense(&op).singular_values();
            let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
            let ex = extremal_ratio(&params, &g, &p, ExtremalNorm::Plain, &ExtremalOptions::default(), None).unwrap();
            assert!(ex.converged);
            let want = (l + t) / smin;
            assert!((ex.ratio - want).abs() < 1e-7 * want, "{l},{t}: {} vs {want}", ex.ratio);
        }
    }

    #[test]
    fn extremal_vector_attains_ratio() {
        let p = prof(3);
        let g = Grid::new(1.0, 201).unwrap();
        let params = ModeParams::real(12.0, 11.0).unwrap();
        let ex = extremal_ratio(&params, &g, &p, ExtremalNorm::Strong, &ExtremalOptions::default(), None).unwrap();
        let op = ClampedOperator::new(&params, &g, &p).unwrap();
        let pv = op.apply(&ex.vector);
        let h = g.spacing();
        let mut full = vec![Cx::new(0.0, 0.0); 2];
        full.extend(ex.vector.iter().copied());
        full.extend([Cx::new(0.0, 0.0); 2]);
        let d2: f64 = full.windows(2).map(|w| (w[1] - w[0]).norm_sqr()).sum::<f64>() / (h * h);
        let s = params.frequency_scale();
        let num = (d2 + s * s).sqrt();
        let den = pv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((num / den - ex.ratio).abs() < 1e-8 * ex.ratio);
    }

    #[test]
    fn epsilon_grid_contains_both_scales() {
        let e = epsilon_grid(1000.0, 2, &CaseIvOptions::default());
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(e[0], -0.5);
        assert_eq!(*e.last().unwrap(), 0.5);
        let s = 1000f64.powf(-4.0 / 3.0);
        assert!(e.iter().filter(|x| x.abs() <= 5.0 * s * (1.0 + 1e-12)).count() >= 41);
    }

    #[test]
    fn sup_is_deterministic() {
        let p = prof(2);
        let opts = CaseIvOptions { coarse_points: 5, fine_points: 9, refine_steps: 6, ..Default::default() };
        let a = case_iv_sup(24.0, &p, &opts).unwrap();
        let b = case_iv_sup(24.0, &p, &opts).unwrap();
        assert_eq!(a.ratio, b.ratio);
        assert_eq!(a.samples, b.samples);
        assert!(a.samples.iter().all(|&(_, r)| r <= a.ratio));
    }
}
