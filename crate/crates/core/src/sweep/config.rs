//! Sweep configuration as read from JSON.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::MultiplierPreset;
use crate::resolvent::{CaseIvOptions, ExtremalOptions, RegimeThresholds};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Resolvent,
    Quasimode,
    Saturation,
    IbpCheck,
    HardyCheck,
    QuadratureLemmas,
}

impl ExperimentKind {
    /// High-frequency experiments require `λ >= 1`.
    fn high_frequency(self) -> bool {
        matches!(self, Self::Resolvent | Self::Quasimode | Self::Saturation | Self::QuadratureLemmas)
    }
}

/// `λ` values: log-spaced between `min` and `max`, or listed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaGrid {
    LogSpaced { min: f64, max: f64, points_per_decade: f64 },
    List(Vec<f64>),
}

impl LambdaGrid {
    /// Increasing values; includes both ends of a log-spaced range.
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match *self {
            Self::LogSpaced { min, max, points_per_decade } => {
                if !(min > 0.0 && max >= min && points_per_decade > 0.0 && max.is_finite()) {
                    return Err(Error::Config(format!(
                        "empty lambda grid (min={min}, max={max}, points_per_decade={points_per_decade})"
                    )));
                }
                let intervals = ((max / min).log10() * points_per_decade).round() as usize;
                if intervals == 0 {
                    vec![min]
                } else {
                    (0..=intervals).map(|k| min * (max / min).powf(k as f64 / intervals as f64)).collect()
                }
            }
            Self::List(ref v) => {
                let mut v = v.clone();
                if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(Error::Config(format!("lambda values must be positive, got {v:?}")));
                }
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
        };
        if v.is_empty() {
            return Err(Error::Config("empty lambda grid".into()));
        }
        Ok(v)
    }
}

/// The `ε` grid of the Case IV supremum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpsGridSpec {
    /// Points of the uniform grid on `[-1/2, 1/2]`.
    pub coarse_points: usize,
    /// Points of the grid of total width `fine_width · λ^{-2m/(m+1)}` about 0.
    pub fine_points: usize,
    pub fine_width: f64,
    /// Golden-section steps around the best grid point.
    pub refine_steps: usize,
}

impl Default for EpsGridSpec {
    fn default() -> Self {
        let d = CaseIvOptions::default();
        Self { coarse_points: d.coarse_points, fine_points: d.fine_points, fine_width: d.fine_width, refine_steps: d.refine_steps }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridPolicy {
    pub points_per_wavelength: f64,
    pub cfl: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self { points_per_wavelength: 8.0, cfl: 0.8 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub stem: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), stem: "report".into() }
    }
}

/// Pass/fail tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Case IV supremum slope against `(m-1)/(m+1)`.
    pub loss_slope: f64,
    /// Largest `|slope|` of the Cases I-III sweeps.
    pub uniform_slope: f64,
    /// Quasimode residual slope against `-2m/(m+1)`.
    pub quasimode_slope: f64,
    /// Relative defect of `‖ũ‖²/λ^{(m-1)/(m+1)}` from `‖χ‖²`.
    pub quasimode_mass: f64,
    /// Smallest admissible saturation slope.
    pub saturation_slope_floor: f64,
    /// Smallest admissible `min ratio / ratio(λ_min)`.
    pub saturation_floor_fraction: f64,
    pub energy_drift: f64,
    /// Largest `|lhs - prediction| / prediction` for `λ >= prediction_min_lambda`.
    pub prediction_rel: f64,
    pub prediction_min_lambda: f64,
    /// Required value of the growth-factor inequality.
    pub growth_target: f64,
    pub identity_order: f64,
    pub identity_order_tolerance: f64,
    /// Coercivity violations are counted below `-coercivity_rel · scale`.
    pub coercivity_rel: f64,
    pub hardy_max: f64,
    /// Largest `max/min` of the normalized lemma quadratures.
    pub quadrature_spread: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            loss_slope: 0.07,
            uniform_slope: 0.05,
            quasimode_slope: 0.1,
            quasimode_mass: 1e-6,
            saturation_slope_floor: -0.05,
            saturation_floor_fraction: 0.5,
            energy_drift: 1e-8,
            prediction_rel: 0.5,
            prediction_min_lambda: 256.0,
            growth_target: 0.5,
            identity_order: 2.0,
            identity_order_tolerance: 0.2,
            coercivity_rel: 1e-12,
            hardy_max: 4.0,
            quadrature_spread: 4.0,
        }
    }
}

/// Sweeps of the extremal strong ratio inside Cases I-III.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UniformitySpec {
    pub enabled: bool,
    pub m: Vec<u32>,
    pub points_per_decade: usize,
    pub decades: usize,
}

impl Default for UniformitySpec {
    fn default() -> Self {
        Self { enabled: true, m: vec![2], points_per_decade: 20, decades: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub experiment: ExperimentKind,
    pub m: Vec<u32>,
    pub lambda: LambdaGrid,
    #[serde(default)]
    pub eps: EpsGridSpec,
    #[serde(default = "default_eps_t")]
    pub eps_t: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub grid: GridPolicy,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub regime: RegimeThresholds,
    /// Fit `λ` sweeps only on `λ >= sqrt(λ_min λ_max)`.
    #[serde(default = "default_true")]
    pub fit_upper_half: bool,
    /// Resolvent: also solve with a fixed source at every `ε` sample.
    #[serde(default)]
    pub record_eps_samples: bool,
    #[serde(default)]
    pub uniformity: UniformitySpec,
    /// Identity check: multipliers to test.
    #[serde(default = "default_presets")]
    pub presets: Vec<MultiplierPreset>,
    /// Identity check: radii of the coercivity scan.
    #[serde(default = "default_radii")]
    pub coercivity_radii: Vec<f64>,
    /// Hardy check: random bumps per `m`.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_eps_t() -> f64 {
    0.25
}
fn default_delta() -> f64 {
    0.1
}
fn default_true() -> bool {
    true
}
fn default_presets() -> Vec<MultiplierPreset> {
    vec![
        MultiplierPreset::Exterior { rho: 8.0, r1: 2.0, r: 4.0 },
        MultiplierPreset::Interior { r: 16.0, delta: 0.01 },
        MultiplierPreset::Lagrangian,
    ]
}
fn default_radii() -> Vec<f64> {
    vec![8.0, 16.0, 32.0]
}
fn default_samples() -> usize {
    50
}

impl SweepConfig {
    /// Defaults for each experiment.
    pub fn preset(experiment: ExperimentKind) -> Self {
        let log = |min: f64, max: f64, points_per_decade: f64| LambdaGrid::LogSpaced { min, max, points_per_decade };
        let (m, lambda) = match experiment {
            ExperimentKind::Resolvent => (vec![2, 3], log(32.0, 2048.0, 4.0)),
            ExperimentKind::Quasimode => (vec![2, 3], log(64.0, 4096.0, 4.0)),
            ExperimentKind::Saturation => (vec![2], LambdaGrid::List(vec![64.0, 128.0, 256.0, 512.0, 1024.0])),
            ExperimentKind::IbpCheck => (vec![2, 3], LambdaGrid::List(vec![3.0])),
            ExperimentKind::HardyCheck => (vec![1, 2, 3], LambdaGrid::List(vec![1.0])),
            ExperimentKind::QuadratureLemmas => (vec![2, 3], log(1e3, 1e4, 4.0)),
        };
        Self {
            experiment,
            m,
            lambda,
            eps: EpsGridSpec::default(),
            eps_t: default_eps_t(),
            delta: default_delta(),
            grid: GridPolicy::default(),
            output: OutputSpec::default(),
            seed: 0,
            tolerances: Tolerances::default(),
            regime: RegimeThresholds::default(),
            fit_upper_half: true,
            record_eps_samples: false,
            uniformity: UniformitySpec::default(),
            presets: default_presets(),
            coercivity_radii: default_radii(),
            samples: default_samples(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m.is_empty() {
            return Err(Error::Config("empty m list".into()));
        }
        if let Some(&m) = self.m.iter().find(|&&m| m == 0) {
            return Err(Error::InvalidDegeneracy(m));
        }
        let lambdas = self.lambda.values()?;
        if self.experiment.high_frequency() && lambdas[0] < 1.0 {
            return Err(Error::Config(format!("lambda_min must be at least 1, got {}", lambdas[0])));
        }
        if !(self.grid.points_per_wavelength >= 2.0) {
            return Err(Error::Config(format!("points_per_wavelength must be at least 2, got {}", self.grid.points_per_wavelength)));
        }
        if !(self.grid.cfl > 0.0 && self.grid.cfl <= crate::evolution::MAX_CFL) {
            return Err(Error::Cfl(self.grid.cfl));
        }
        if !(self.eps_t > 0.0) || !(self.delta > 0.0) {
            return Err(Error::Config("eps_t and delta must be positive".into()));
        }
        if self.eps.coarse_points + self.eps.fine_points == 0 {
            return Err(Error::Config("empty epsilon grid".into()));
        }
        if self.experiment == ExperimentKind::IbpCheck {
            if self.presets.is_empty() {
                return Err(Error::Config("no multiplier presets".into()));
            }
            for p in &self.presets {
                if *p == MultiplierPreset::Custom {
                    return Err(Error::Config("custom multipliers cannot be configured from JSON".into()));
                }
                p.validate()?;
            }
        }
        if self.experiment == ExperimentKind::HardyCheck && self.samples == 0 {
            return Err(Error::Config("hardy check needs at least one sample".into()));
        }
        if self.uniformity.enabled && self.uniformity.points_per_decade * self.uniformity.decades < 2 {
            return Err(Error::Config("uniformity sweep needs at least three points".into()));
        }
        Ok(())
    }

    pub(crate) fn case_iv_options(&self) -> CaseIvOptions {
        CaseIvOptions {
            points_per_wavelength: self.grid.points_per_wavelength,
            coarse_points: self.eps.coarse_points,
            fine_points: self.eps.fine_points,
            fine_width: self.eps.fine_width,
            refine_steps: self.eps.refine_steps,
            extremal: self.extremal_options(),
            ..CaseIvOptions::default()
        }
    }

    pub(crate) fn extremal_options(&self) -> ExtremalOptions {
        ExtremalOptions { seed: self.seed, ..ExtremalOptions::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_has_both_ends() {
        let v = LambdaGrid::LogSpaced { min: 32.0, max: 2048.0, points_per_decade: 4.0 }.values().unwrap();
        assert_eq!(v.len(), 8);
        assert_eq!(v[0], 32.0);
        assert!((v[7] - 2048.0).abs() < 1e-9);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn empty_lambda_grid_is_config_error() {
        for g in [
            LambdaGrid::List(vec![]),
            LambdaGrid::LogSpaced { min: 10.0, max: 1.0, points_per_decade: 4.0 },
            LambdaGrid::LogSpaced { min: 1.0, max: 10.0, points_per_decade: 0.0 },
        ] {
            assert!(matches!(g.values(), Err(Error::Config(_))), "{g:?}");
        }
    }

    #[test]
    fn json_field_names() {
        let c = SweepConfig::from_json(
            r#"{"experiment": "quadrature-lemmas", "m": [2], "lambda": {"min": 100, "max": 1000, "points_per_decade": 2},
                "eps_t": 0.5, "delta": 0.2, "grid": {"points_per_wavelength": 10}, "seed": 9,
                "output": {"dir": "x", "stem": "y"}}"#,
        )
        .unwrap();
        assert_eq!(c.experiment, ExperimentKind::QuadratureLemmas);
        assert_eq!(c.grid.cfl, 0.8);
        assert_eq!(c.seed, 9);
        assert!(c.validate().is_ok());
        assert!(SweepConfig::from_json(r#"{"experiment": "resolvent", "m": [2], "lambda": [4], "bogus": 1}"#).is_err());
        let list = SweepConfig::from_json(r#"{"experiment": "saturation", "m": [2], "lambda": [128, 64]}"#).unwrap();
        assert_eq!(list.lambda.values().unwrap(), vec![64.0, 128.0]);
    }

    #[test]
    fn presets_validate_and_round_trip() {
        for k in [
            ExperimentKind::Resolvent,
            ExperimentKind::Quasimode,
            ExperimentKind::Saturation,
            ExperimentKind::IbpCheck,
            ExperimentKind::HardyCheck,
            ExperimentKind::QuadratureLemmas,
        ] {
            let c = SweepConfig::preset(k);
            c.validate().unwrap();
            assert_eq!(SweepConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap(), c);
        }
    }

    #[test]
    fn low_frequency_rejected_for_resolvent() {
        let mut c = SweepConfig::preset(ExperimentKind::Resolvent);
        c.lambda = LambdaGrid::List(vec![0.5, 4.0]);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
