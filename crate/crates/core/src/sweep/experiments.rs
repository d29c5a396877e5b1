//! Row producers, one per experiment kind. Each point is independent and
//! single-threaded; points are spread over the rayon pool and collected in
//! input order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::SweepConfig;
use super::report::{Row, FLAG_UNCONVERGED};
use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::evolution::{build_quasimode, growth_factor, saturation_experiment, QuasimodeProfile, SaturationOptions, Trajectory};
use crate::geometry::GeometryProfile;
use crate::norms::{bulk_coefficients, coercivity_violations, hardy_ratio, ibp_residual, multiplier_preset, MultiplierPreset};
use crate::resolvent::{
    case_iv_sup, classify_regime, degenerate_quadrature, epsilon_grid, estimate_ratios, extremal_ratio, solve_resolvent,
    Extremal, ExtremalNorm, ModeParams, WeightExponent,
};
use crate::scalar::C;

fn profile(m: u32) -> Result<GeometryProfile<f64>> {
    GeometryProfile::with_m(m)
}

fn regime_label(cfg: &SweepConfig, m: u32, lambda: f64, tau: f64) -> String {
    match ModeParams::real(lambda, tau) {
        Ok(p) => classify_regime(&p, m, &cfg.regime).as_str().to_string(),
        Err(_) => String::new(),
    }
}

fn grid_points(cfg: &SweepConfig) -> Result<Vec<(u32, f64)>> {
    let lambdas = cfg.lambda.values()?;
    Ok(cfg.m.iter().flat_map(|&m| lambdas.iter().map(move |&l| (m, l))).collect())
}

/// `(1 - y²)^k` on `|y| < 1`.
fn bump(y: f64, k: i32) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - y * y).powi(k)
    }
}

// ---------------------------------------------------------------- resolvent

/// A one-parameter sweep inside one of the regimes I-III.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformityLayout {
    pub label: &'static str,
    /// `Some` when `λ` is held fixed and `τ` swept.
    pub fixed_lambda: Option<f64>,
    pub fixed_tau: Option<f64>,
    /// Start of the swept parameter; the sweep covers whole decades upward.
    pub from: f64,
}

impl UniformityLayout {
    pub fn swept(&self) -> &'static str {
        if self.fixed_lambda.is_some() {
            "tau"
        } else {
            "lambda"
        }
    }

    /// `(λ, τ)` points of the sweep.
    pub fn points(&self, points_per_decade: usize, decades: usize) -> Vec<(f64, f64)> {
        (0..=points_per_decade * decades)
            .map(|k| {
                let v = self.from * 10f64.powf(k as f64 / points_per_decade as f64);
                match (self.fixed_lambda, self.fixed_tau) {
                    (Some(l), _) => (l, v),
                    (None, Some(t)) => (v, t),
                    (None, None) => (v, v),
                }
            })
            .collect()
    }
}

/// Small `λ` and `τ`: `λ` swept with `τ` in the middle of the range.
/// Large `τ`: `τ` swept at `λ = 1`. Large `λ`: `τ` swept at `λ = 2000`.
pub const UNIFORMITY_LAYOUTS: [UniformityLayout; 3] = [
    UniformityLayout { label: "I", fixed_lambda: None, fixed_tau: Some(0.1), from: 0.01 },
    UniformityLayout { label: "II", fixed_lambda: Some(1.0), fixed_tau: None, from: 10.0 },
    UniformityLayout { label: "III", fixed_lambda: Some(2000.0), fixed_tau: None, from: 1.0 },
];

fn uniformity_rows(cfg: &SweepConfig, m: u32, layout: &UniformityLayout) -> Vec<Row> {
    let kind = format!("r_strong_uniform;layout={};vs={}", layout.label, layout.swept());
    let prof = match profile(m) {
        Ok(p) => p,
        Err(e) => return vec![Row::failed(m, kind, &e)],
    };
    let opts = cfg.extremal_options();
    let mut warm: Option<Extremal<f64>> = None;
    layout
        .points(cfg.uniformity.points_per_decade, cfg.uniformity.decades)
        .into_iter()
        .map(|(l, t)| {
            let run = || -> Result<Extremal<f64>> {
                let grid = Grid::for_wavenumber(1.0, l.max(t), cfg.grid.points_per_wavelength)?;
                let params = ModeParams::real(l, t)?;
                extremal_ratio(&params, &grid, &prof, ExtremalNorm::Strong, &opts, warm.as_ref())
            };
            let row = match run() {
                Ok(ex) => {
                    let r = Row::new(m, kind.clone(), ex.ratio);
                    let r = if ex.converged { r } else { r.flagged(FLAG_UNCONVERGED) };
                    warm = Some(ex);
                    r
                }
                Err(e) => Row::failed(m, kind.clone(), &e),
            };
            row.at(l, t, 0.0).regime(&regime_label(cfg, m, l, t))
        })
        .collect()
}

/// Source concentrated at the scale of the trapped region.
fn trapped_source(grid: &Grid<f64>, lambda: f64, m: u32) -> crate::discretization::GridFunction<f64> {
    let w = (2.0 * lambda.powf(-1.0 / (m as f64 + 1.0))).min(0.5 * grid.half_width());
    grid.sample_real(|x| bump(x / w, 4))
}

fn source_rows(cfg: &SweepConfig, m: u32, lambda: f64, prof: &GeometryProfile<f64>) -> Result<Vec<Row>> {
    let opts = cfg.case_iv_options();
    let eps = epsilon_grid(lambda, m, &opts);
    let kmax = eps.iter().fold(0.0_f64, |a, e| a.max(*e));
    let grid = Grid::for_wavenumber(opts.half_width, lambda * (1.0 + kmax).sqrt(), opts.points_per_wavelength)?;
    let g = trapped_source(&grid, lambda, m);
    let mut rows = Vec::new();
    let solve = |e: f64, rows: &mut Vec<Row>| -> bool {
        let tau = lambda * (1.0 + e).sqrt();
        let label = regime_label(cfg, m, lambda, tau);
        let out = ModeParams::from_epsilon(lambda, e)
            .and_then(|p| solve_resolvent(&g, &p, &grid, prof))
            .and_then(|s| estimate_ratios(&s, m, cfg.delta));
        match out {
            Ok(r) => {
                for (k, v) in [("r_strong", r.strong), ("r_main", r.main), ("r_weighted", r.weighted)] {
                    rows.push(Row::new(m, k, v).at(lambda, tau, 0.0).regime(&label));
                }
                true
            }
            Err(err) => {
                let resonant = matches!(err, Error::NearResonance { .. });
                for k in ["r_strong", "r_main", "r_weighted"] {
                    rows.push(Row::failed(m, k, &err).at(lambda, tau, 0.0).regime(&label));
                }
                !resonant
            }
        }
    };
    for (k, &e) in eps.iter().enumerate() {
        if !solve(e, &mut rows) && eps.len() > 1 {
            // densify around a near-resonance instead of shifting τ off the real axis
            let lo = if k > 0 { eps[k - 1] } else { e - (eps[1] - e) };
            let hi = if k + 1 < eps.len() { eps[k + 1] } else { e + (e - eps[k - 1]) };
            for f in [lo + 0.75 * (e - lo), e + 0.25 * (hi - e)] {
                solve(f, &mut rows);
            }
        }
    }
    Ok(rows)
}

fn case_iv_rows(cfg: &SweepConfig, m: u32, lambda: f64) -> Vec<Row> {
    let prof = match profile(m) {
        Ok(p) => p,
        Err(e) => return vec![Row::failed(m, "case_iv_sup", &e)],
    };
    let mut rows = Vec::new();
    match case_iv_sup(lambda, &prof, &cfg.case_iv_options()) {
        Ok(s) => {
            let tau = lambda * (1.0 + s.eps_at_max).sqrt();
            let row = Row::new(m, "case_iv_sup", s.ratio).at(lambda, tau, 0.0).regime(&regime_label(cfg, m, lambda, tau));
            rows.push(if s.converged { row } else { row.flagged(FLAG_UNCONVERGED) });
            if cfg.record_eps_samples {
                for &(e, r) in &s.samples {
                    let t = lambda * (1.0 + e).sqrt();
                    rows.push(Row::new(m, "extremal_ratio", r).at(lambda, t, 0.0).regime(&regime_label(cfg, m, lambda, t)));
                }
            }
        }
        Err(e) => {
            let mut r = Row::failed(m, "case_iv_sup", &e);
            r.lambda = Some(lambda);
            rows.push(r);
        }
    }
    if cfg.record_eps_samples {
        match source_rows(cfg, m, lambda, &prof) {
            Ok(r) => rows.extend(r),
            Err(e) => rows.push(Row::failed(m, "r_strong", &e)),
        }
    }
    rows
}

pub(crate) fn resolvent(cfg: &SweepConfig) -> Result<Vec<Row>> {
    let mut rows: Vec<Row> = grid_points(cfg)?.par_iter().flat_map_iter(|&(m, l)| case_iv_rows(cfg, m, l)).collect();
    if cfg.uniformity.enabled {
        let jobs: Vec<(u32, &UniformityLayout)> =
            cfg.uniformity.m.iter().flat_map(|&m| UNIFORMITY_LAYOUTS.iter().map(move |l| (m, l))).collect();
        rows.extend(jobs.par_iter().flat_map_iter(|&(m, l)| uniformity_rows(cfg, m, l)).collect::<Vec<_>>());
    }
    Ok(rows)
}

// ---------------------------------------------------------------- evolution

pub(crate) fn quasimode(cfg: &SweepConfig) -> Result<Vec<Row>> {
    let run = |m: u32, lambda: f64| -> Result<Vec<Row>> {
        let prof = profile(m)?;
        let grid = Grid::for_wavenumber(1.0, lambda, cfg.grid.points_per_wavelength)?;
        let q = build_quasimode(lambda, &prof, 0.0, -1.0, &grid, QuasimodeProfile::Polynomial)?;
        let leak = (0..grid.len())
            .filter(|&i| grid.node(i).abs() >= q.support_radius)
            .fold(0.0_f64, |a, i| a.max(q.u[i].norm()));
        let mass = q.normalized_mass(m as f64);
        let tau = crate::evolution::tau_root(lambda, q.energy);
        Ok([
            ("residual_ratio", q.residual_ratio()),
            ("c_measured", q.c_measured),
            ("mass_defect", (mass - q.profile_norm_sq).abs() / q.profile_norm_sq),
            ("support_leak", leak),
            ("support_radius", q.support_radius),
        ]
        .into_iter()
        .map(|(k, v)| Row::new(m, k, v).at(lambda, tau.re, tau.im))
        .collect())
    };
    Ok(grid_points(cfg)?
        .par_iter()
        .flat_map_iter(|&(m, l)| {
            run(m, l).unwrap_or_else(|e| {
                let mut r = Row::failed(m, "residual_ratio", &e);
                r.lambda = Some(l);
                vec![r]
            })
        })
        .collect())
}

/// `½B(2s) - C²ε²B(s)²` at `ε = 1/(2C)`, where `s = T|Im τ|`.
pub fn growth_inequality(s: f64) -> f64 {
    0.5 * growth_factor(2.0 * s, 1.0) - 0.25 * growth_factor(s, 1.0).powi(2)
}

/// Sample points of `T|Im τ|` for the growth inequality.
pub const GROWTH_SAMPLES: usize = 101;
pub const GROWTH_MAX: f64 = 5.0;

pub(crate) fn saturation(cfg: &SweepConfig) -> Result<Vec<Row>> {
    let opts = SaturationOptions {
        eps_t: cfg.eps_t,
        points_per_wavelength: cfg.grid.points_per_wavelength,
        cfl: cfg.grid.cfl,
        ..SaturationOptions::default()
    };
    let run = |m: u32, lambda: f64| -> Result<Vec<Row>> {
        let r = saturation_experiment(lambda, &profile(m)?, &opts)?;
        let s = r.final_time * r.tau.im.abs();
        let mut rows: Vec<Row> = [
            ("ratio", r.ratio),
            ("lhs", r.lhs),
            ("rhs", r.rhs),
            ("b2t_prediction", r.b2t_prediction),
            ("c_measured", r.c_measured),
            ("energy_drift", r.energy_drift),
            ("final_time", r.final_time),
        ]
        .into_iter()
        .map(|(k, v)| Row::new(m, k, v))
        .collect();
        rows.push(Row::new(m, format!("growth_inequality;s={s}"), growth_inequality(s)));
        Ok(rows.into_iter().map(|row| row.at(lambda, r.tau.re, r.tau.im)).collect())
    };
    let mut rows: Vec<Row> = grid_points(cfg)?
        .par_iter()
        .flat_map_iter(|&(m, l)| {
            run(m, l).unwrap_or_else(|e| {
                let mut r = Row::failed(m, "ratio", &e);
                r.lambda = Some(l);
                vec![r]
            })
        })
        .collect();
    for &m in &cfg.m {
        for k in 0..GROWTH_SAMPLES {
            let s = GROWTH_MAX * k as f64 / (GROWTH_SAMPLES - 1) as f64;
            rows.push(Row::new(m, format!("growth_inequality;s={s}"), growth_inequality(s)));
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------- norms

/// Refinement levels of the identity check: `n = 80·2^k + 1` on `[-8, 8]`.
pub const IDENTITY_LEVELS: usize = 3;

/// Smooth separable complex trajectory `χ(x)(cos t, ½ sin t)`, `χ` of
/// radius 6, sampled at `dt = h/4` on `[0, 1]`.
pub fn separable_trajectory(grid: &Grid<f64>) -> Result<Trajectory<f64>> {
    let dt = 0.25 * grid.spacing();
    let count = (1.0 / dt).round() as usize + 1;
    Trajectory::from_fn(grid, dt, count, |x, t| {
        let b = bump(x / 6.0, 4);
        (C::new(b * t.cos(), 0.5 * b * t.sin()), C::new(-b * t.sin(), 0.5 * b * t.cos()))
    })
}

pub(crate) fn ibp_check(cfg: &SweepConfig) -> Result<Vec<Row>> {
    let lambdas = cfg.lambda.values()?;
    let mut jobs = Vec::new();
    for &m in &cfg.m {
        for &l in &lambdas {
            for p in &cfg.presets {
                for level in 0..IDENTITY_LEVELS {
                    jobs.push((m, l, *p, level));
                }
            }
        }
    }
    let run = |m: u32, lambda: f64, preset: MultiplierPreset, level: usize| -> Result<f64> {
        let prof = profile(m)?;
        let grid = Grid::new(8.0, 80 * (1 << level) + 1)?;
        let w = separable_trajectory(&grid)?;
        let pair = multiplier_preset(preset, &grid, &prof)?;
        ibp_residual(&w, &pair, lambda, &grid, &prof)
    };
    let mut rows: Vec<Row> = jobs
        .par_iter()
        .map(|&(m, l, p, level)| {
            let h = 16.0 / (80 * (1 << level)) as f64;
            let kind = format!("ibp_residual;preset={};h={h}", p.name());
            let row = match run(m, l, p, level) {
                Ok(v) => Row::new(m, kind, v),
                Err(e) => Row::failed(m, kind, &e),
            };
            row.at(l, 0.0, 0.0)
        })
        .collect();
    for &m in &cfg.m {
        for &r in &cfg.coercivity_radii {
            let kind = format!("coercivity_violations;r={r}");
            let count = || -> Result<usize> {
                let prof = profile(m)?;
                let grid = Grid::with_max_spacing(r + 1.0, 1.0 / 64.0)?;
                let pair = multiplier_preset(MultiplierPreset::Interior { r, delta: 0.01 }, &grid, &prof)?;
                let c = bulk_coefficients(&pair, &grid, &prof)?;
                Ok(coercivity_violations(&c, &grid, r, cfg.tolerances.coercivity_rel).len())
            };
            rows.push(match count() {
                Ok(n) => Row::new(m, kind, n as f64),
                Err(e) => Row::failed(m, kind, &e),
            });
        }
    }
    Ok(rows)
}

/// Half-width and node count of the Hardy grid.
pub const HARDY_GRID: (f64, usize) = (8.0, 3201);

/// `(center, radius)` of the seeded random bumps, `samples` per `m` in order.
pub fn hardy_bumps(seed: u64, count: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (rng.gen_range(-3.0..3.0), rng.gen_range(0.2..3.0))).collect()
}

pub(crate) fn hardy_check(cfg: &SweepConfig) -> Result<Vec<Row>> {
    let grid = Grid::new(HARDY_GRID.0, HARDY_GRID.1)?;
    let bumps = hardy_bumps(cfg.seed, cfg.samples);
    let jobs: Vec<(u32, (f64, f64))> = cfg.m.iter().flat_map(|&m| bumps.iter().map(move |&b| (m, b))).collect();
    Ok(jobs
        .par_iter()
        .map(|&(m, (c, r))| {
            // C² bump (1 - y²)³
            let u = grid.sample_real(|x| bump((x - c) / r, 3));
            match profile(m).and_then(|p| hardy_ratio(&u, &grid, &p)) {
                Ok(v) => Row::new(m, "hardy_ratio", v),
                Err(e) => Row::failed(m, "hardy_ratio", &e),
            }
        })
        .collect())
}

pub(crate) fn quadrature_lemmas(cfg: &SweepConfig) -> Result<Vec<Row>> {
    let run = |m: u32, lambda: f64| -> Vec<Row> {
        [("quad_zero_normalized", WeightExponent::Zero), ("quad_shifted", WeightExponent::Shifted { delta: cfg.delta })]
            .into_iter()
            .map(|(k, q)| {
                let row = match degenerate_quadrature(lambda, 0.0, m, q, 1.0) {
                    Ok(r) => Row::new(m, k, r.normalized),
                    Err(e) => Row::failed(m, k, &e),
                };
                row.at(lambda, lambda, 0.0)
            })
            .collect()
    };
    Ok(grid_points(cfg)?.par_iter().flat_map_iter(|&(m, l)| run(m, l)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_inequality_values() {
        // s -> 0: ½ - ¼
        assert!((growth_inequality(0.0) - 0.25).abs() < 1e-15);
        let s = std::f64::consts::LN_2;
        let b = 1.0 / s;
        let b2 = 3.0 / (2.0 * s);
        assert!((growth_inequality(s) - (0.5 * b2 - 0.25 * b * b)).abs() < 1e-14);
    }

    #[test]
    fn layouts_stay_in_their_regimes() {
        let cfg = SweepConfig::preset(super::super::ExperimentKind::Resolvent);
        for layout in UNIFORMITY_LAYOUTS {
            let pts = layout.points(20, 2);
            assert_eq!(pts.len(), 41);
            for (l, t) in pts {
                assert_eq!(regime_label(&cfg, 2, l, t), layout.label, "{l} {t}");
            }
        }
    }

    #[test]
    fn hardy_bumps_fit_inside_grid() {
        for (c, r) in hardy_bumps(3, 200) {
            assert!(c.abs() + r < HARDY_GRID.0);
        }
        assert_eq!(hardy_bumps(5, 4), hardy_bumps(5, 4));
    }
}
