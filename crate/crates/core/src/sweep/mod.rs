//! Configured parameter sweeps, exponent fits and reports.

mod config;
mod experiments;
mod fit;
mod report;

pub use config::{
    EpsGridSpec, ExperimentKind, GridPolicy, LambdaGrid, OutputSpec, SweepConfig, Tolerances, UniformitySpec,
};
pub use experiments::{
    growth_inequality, hardy_bumps, separable_trajectory, UniformityLayout, GROWTH_MAX, GROWTH_SAMPLES, HARDY_GRID,
    IDENTITY_LEVELS, UNIFORMITY_LAYOUTS,
};
pub use fit::{fit_exponent, FitResult};
pub use report::{
    emit_report, rows_from_csv, rows_to_csv, AngularMeasure, Flag, NamedFit, ReportFormat, ReportSummary, Row,
    SweepReport, CSV_HEADER, FLAG_NEAR_RESONANCE, FLAG_OK, FLAG_UNCONVERGED,
};

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::Result;

/// Run the configured experiment, then fit and flag its rows.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let mut rows = match config.experiment {
        ExperimentKind::Resolvent => experiments::resolvent(config)?,
        ExperimentKind::Quasimode => experiments::quasimode(config)?,
        ExperimentKind::Saturation => experiments::saturation(config)?,
        ExperimentKind::IbpCheck => experiments::ibp_check(config)?,
        ExperimentKind::HardyCheck => experiments::hardy_check(config)?,
        ExperimentKind::QuadratureLemmas => experiments::quadrature_lemmas(config)?,
    };
    sort_rows(&mut rows);
    let (fits, flags) = evaluate(config, &rows);
    Ok(SweepReport { angular_measure: AngularMeasure::default(), config: config.clone(), rows, fits, flags })
}

fn cmp_opt(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x.total_cmp(&y),
    }
}

/// Stable sort by `(m, λ, ε)`.
pub fn sort_rows(rows: &mut [Row]) {
    rows.sort_by(|a, b| a.m.cmp(&b.m).then(cmp_opt(a.lambda, b.lambda)).then(cmp_opt(a.eps, b.eps)));
}

fn good(r: &Row) -> Option<f64> {
    r.value.filter(|_| r.flag == FLAG_OK)
}

/// Keep `λ >= sqrt(λ_min λ_max)` when that leaves at least three points.
fn upper_half(points: Vec<(f64, f64)>, on: bool) -> Vec<(f64, f64)> {
    if !on || points.is_empty() {
        return points;
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    let mid = (lo * hi).sqrt() * (1.0 - 1e-12);
    let upper: Vec<_> = points.iter().copied().filter(|p| p.0 >= mid).collect();
    if upper.len() >= 3 {
        upper
    } else {
        points
    }
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi / lo
}

struct Collector {
    fits: Vec<NamedFit>,
    flags: Vec<Flag>,
}

impl Collector {
    fn flag(&mut self, name: String, pass: bool, detail: String) {
        self.flags.push(Flag { name, pass, detail });
    }

    /// Fit and record; `None` (and no fit) when fewer than three points.
    fn fit(&mut self, name: &str, m: u32, points: &[(f64, f64)]) -> Option<FitResult> {
        let fit = fit_exponent(points).ok()?;
        self.fits.push(NamedFit { name: name.into(), m, fit });
        Some(fit)
    }

    /// Flag `|slope - target| <= tol`; a failed row among `failed` fails it.
    fn slope_flag(&mut self, name: String, fit: FitResult, target: f64, tol: f64, failed: usize) {
        let pass = (fit.slope - target).abs() <= tol && failed == 0;
        let detail = format!(
            "slope {:.4} ± {:.4} over {} points, target {target:.4} ± {tol}, {failed} failed rows",
            fit.slope, fit.stderr_slope, fit.points_used
        );
        self.flag(name, pass, detail);
    }
}

/// Fits and pass/fail flags computed from `rows` alone.
pub fn evaluate(config: &SweepConfig, rows: &[Row]) -> (Vec<NamedFit>, Vec<Flag>) {
    let mut c = Collector { fits: Vec::new(), flags: Vec::new() };
    let tol = &config.tolerances;
    let mut by_m: BTreeMap<u32, Vec<&Row>> = BTreeMap::new();
    for r in rows {
        by_m.entry(r.m).or_default().push(r);
    }
    for (&m, rows) in &by_m {
        let mf = m as f64;
        let of = |kind: &'static str| rows.iter().copied().filter(move |r| r.kind() == kind);
        let lambda_points = |kind: &'static str| -> (Vec<(f64, f64)>, usize) {
            let pts = of(kind).filter_map(|r| Some((r.lambda?, good(r)?))).collect();
            (pts, of(kind).filter(|r| good(r).is_none()).count())
        };
        match config.experiment {
            ExperimentKind::Resolvent => {
                let (pts, failed) = lambda_points("case_iv_sup");
                if let Some(f) = c.fit("case_iv_sup", m, &upper_half(pts, config.fit_upper_half)) {
                    c.slope_flag(format!("loss_exponent_m{m}"), f, (mf - 1.0) / (mf + 1.0), tol.loss_slope, failed);
                }
                for layout in &UNIFORMITY_LAYOUTS {
                    let sel: Vec<&Row> = of("r_strong_uniform").filter(|r| r.param("layout") == Some(layout.label)).collect();
                    if sel.is_empty() {
                        continue;
                    }
                    let failed = sel.iter().filter(|r| good(r).is_none()).count();
                    let pts: Vec<(f64, f64)> = sel
                        .iter()
                        .filter_map(|r| {
                            let x = if r.param("vs") == Some("tau") { r.tau_re? } else { r.lambda? };
                            Some((x, good(r)?))
                        })
                        .collect();
                    let name = format!("r_strong_case_{}", layout.label);
                    if let Some(f) = c.fit(&name, m, &pts) {
                        c.slope_flag(format!("uniform_case_{}_m{m}", layout.label), f, 0.0, tol.uniform_slope, failed);
                    }
                }
            }
            ExperimentKind::Quasimode => {
                let (pts, failed) = lambda_points("residual_ratio");
                if let Some(f) = c.fit("residual_ratio", m, &upper_half(pts, config.fit_upper_half)) {
                    c.slope_flag(format!("quasimode_residual_m{m}"), f, -2.0 * mf / (mf + 1.0), tol.quasimode_slope, failed);
                }
                let leak: Vec<f64> = of("support_leak").map(|r| r.value.unwrap_or(f64::NAN)).collect();
                if !leak.is_empty() {
                    let pass = leak.iter().all(|&v| v == 0.0);
                    c.flag(format!("quasimode_support_m{m}"), pass, format!("largest value outside the support {:e}", leak.iter().fold(0.0_f64, |a, &v| a.max(v))));
                }
                let mass: Vec<f64> = of("mass_defect").map(|r| r.value.unwrap_or(f64::NAN)).collect();
                if !mass.is_empty() {
                    let worst = if mass.iter().any(|v| v.is_nan()) { f64::NAN } else { mass.iter().fold(0.0_f64, |a, &v| a.max(v)) };
                    c.flag(format!("quasimode_mass_m{m}"), worst <= tol.quasimode_mass, format!("largest relative mass defect {worst:e}"));
                }
                let cm: Vec<f64> = of("c_measured").filter_map(good).collect();
                if cm.len() > 1 {
                    let s = spread(&cm);
                    c.flag(format!("quasimode_constant_m{m}"), s <= 2.0, format!("max/min of the residual constant {s:.4}"));
                }
            }
            ExperimentKind::Saturation => {
                let (pts, failed) = lambda_points("ratio");
                if let Some(f) = c.fit("saturation_ratio", m, &upper_half(pts.clone(), config.fit_upper_half)) {
                    let pass = f.slope >= tol.saturation_slope_floor && failed == 0;
                    let detail = format!("slope {:.4} ± {:.4}, floor {}", f.slope, f.stderr_slope, tol.saturation_slope_floor);
                    c.flag(format!("saturation_slope_m{m}"), pass, detail);
                }
                if let Some(first) = pts.iter().min_by(|a, b| a.0.total_cmp(&b.0)) {
                    let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                    let frac = lo / first.1;
                    let detail = format!("min ratio {lo:.5} is {frac:.4} of the value {:.5} at lambda={}", first.1, first.0);
                    c.flag(format!("saturation_floor_m{m}"), frac >= tol.saturation_floor_fraction && failed == 0, detail);
                }
                let drift: Vec<f64> = of("energy_drift").filter_map(good).collect();
                if !drift.is_empty() {
                    let worst = drift.iter().fold(0.0_f64, |a, &v| a.max(v));
                    c.flag(format!("energy_drift_m{m}"), worst <= tol.energy_drift, format!("largest relative drift {worst:e}"));
                }
                let lhs: BTreeMap<u64, f64> =
                    of("lhs").filter_map(|r| Some((r.lambda?.to_bits(), good(r)?))).collect();
                let dev: Vec<f64> = of("b2t_prediction")
                    .filter_map(|r| {
                        let l = r.lambda?;
                        let p = good(r)?;
                        (l >= tol.prediction_min_lambda).then(|| (lhs.get(&l.to_bits()).copied().unwrap_or(f64::NAN) - p).abs() / p)
                    })
                    .collect();
                if !dev.is_empty() {
                    let worst = if dev.iter().any(|v| v.is_nan()) { f64::NAN } else { dev.iter().fold(0.0_f64, |a, &v| a.max(v)) };
                    let detail = format!("largest |lhs - prediction|/prediction {worst:.4} for lambda >= {}", tol.prediction_min_lambda);
                    c.flag(format!("envelope_prediction_m{m}"), worst <= tol.prediction_rel, detail);
                }
                let growth: Vec<(f64, f64)> = of("growth_inequality")
                    .filter_map(|r| Some((r.param("s")?.parse().ok()?, r.value?)))
                    .collect();
                if let Some(&(s, v)) = growth.iter().min_by(|a, b| a.1.total_cmp(&b.1)) {
                    let detail = format!("minimum {v:.5} at T|Im tau| = {s} over {} samples, target {}", growth.len(), tol.growth_target);
                    c.flag(format!("growth_inequality_m{m}"), v >= tol.growth_target, detail);
                }
            }
            ExperimentKind::IbpCheck => {
                let mut groups: BTreeMap<(String, u64), Vec<(f64, f64)>> = BTreeMap::new();
                let mut failed: BTreeMap<(String, u64), usize> = BTreeMap::new();
                for r in of("ibp_residual") {
                    let key = (r.param("preset").unwrap_or("").to_string(), r.lambda.unwrap_or(0.0).to_bits());
                    match (r.param("h").and_then(|h| h.parse::<f64>().ok()), good(r)) {
                        (Some(h), Some(v)) => groups.entry(key).or_default().push((h, v)),
                        _ => *failed.entry(key).or_default() += 1,
                    }
                }
                for ((preset, lbits), pts) in &groups {
                    let lambda = f64::from_bits(*lbits);
                    let name = format!("identity_order_{preset}_lambda{lambda}_m{m}");
                    if let Some(f) = c.fit(&format!("identity_order_{preset}_lambda{lambda}"), m, pts) {
                        let nfail = failed.get(&(preset.clone(), *lbits)).copied().unwrap_or(0);
                        c.slope_flag(name, f, tol.identity_order, tol.identity_order_tolerance, nfail);
                    }
                }
                for ((preset, _), n) in &failed {
                    if !groups.keys().any(|k| &k.0 == preset) {
                        c.flag(format!("identity_order_{preset}_m{m}"), false, format!("{n} failed rows"));
                    }
                }
                let coerc: Vec<&Row> = of("coercivity_violations").collect();
                if !coerc.is_empty() {
                    let total: f64 = coerc.iter().map(|r| r.value.unwrap_or(f64::NAN)).sum();
                    c.flag(format!("coercivity_m{m}"), total == 0.0, format!("{total} violations over {} radii", coerc.len()));
                }
            }
            ExperimentKind::HardyCheck => {
                let rs: Vec<&Row> = of("hardy_ratio").collect();
                let vals: Vec<f64> = rs.iter().filter_map(|r| good(r)).filter(|v| v.is_finite()).collect();
                let max = vals.iter().fold(0.0_f64, |a, &v| a.max(v));
                let pass = vals.len() == rs.len() && max <= tol.hardy_max;
                let detail = format!("{} of {} ratios finite, max {max:.5}, bound {}", vals.len(), rs.len(), tol.hardy_max);
                c.flag(format!("hardy_m{m}"), pass, detail);
            }
            ExperimentKind::QuadratureLemmas => {
                for kind in ["quad_zero_normalized", "quad_shifted"] as [&'static str; 2] {
                    let rs: Vec<&Row> = of(kind).collect();
                    let vals: Vec<f64> = rs.iter().filter_map(|r| good(r)).collect();
                    if vals.len() < 2 {
                        continue;
                    }
                    let s = spread(&vals);
                    let pass = vals.len() == rs.len() && s <= tol.quadrature_spread;
                    c.flag(format!("{kind}_m{m}"), pass, format!("max/min {s:.4} over {} values", vals.len()));
                }
            }
        }
    }
    (c.fits, c.flags)
}
