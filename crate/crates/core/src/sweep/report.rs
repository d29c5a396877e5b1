//! Report rows, fits, pass/fail flags and their CSV/JSON encodings.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SweepConfig;
use super::fit::FitResult;
use crate::discretization::{ANGULAR_MEASURE_EQUATORIAL, ANGULAR_MEASURE_SPHERE};
use crate::error::{Error, Result};

/// Column names of the CSV encoding, in order.
pub const CSV_HEADER: &str = "m,lambda,eps,tau_re,tau_im,regime,value_kind,value,flag";

/// One measurement. `value_kind` is a name optionally followed by
/// `;key=value` parameters, e.g. `ibp_residual;preset=interior;h=0.05`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub m: u32,
    pub lambda: Option<f64>,
    pub eps: Option<f64>,
    pub tau_re: Option<f64>,
    pub tau_im: Option<f64>,
    pub regime: String,
    pub value_kind: String,
    pub value: Option<f64>,
    pub flag: String,
}

pub const FLAG_OK: &str = "ok";
pub const FLAG_NEAR_RESONANCE: &str = "near_resonance";
pub const FLAG_UNCONVERGED: &str = "unconverged";

impl Row {
    pub fn new(m: u32, value_kind: impl Into<String>, value: f64) -> Self {
        Self {
            m,
            lambda: None,
            eps: None,
            tau_re: None,
            tau_im: None,
            regime: String::new(),
            value_kind: value_kind.into(),
            value: Some(value),
            flag: FLAG_OK.into(),
        }
    }

    pub fn failed(m: u32, value_kind: impl Into<String>, err: &Error) -> Self {
        let flag = match err {
            Error::NearResonance { .. } => FLAG_NEAR_RESONANCE.to_string(),
            e => format!("error: {e}"),
        };
        Self { value: None, flag, ..Self::new(m, value_kind, 0.0) }
    }

    pub fn at(mut self, lambda: f64, tau_re: f64, tau_im: f64) -> Self {
        self.lambda = Some(lambda);
        self.tau_re = Some(tau_re);
        self.tau_im = Some(tau_im);
        if lambda > 0.0 && tau_im == 0.0 {
            self.eps = Some(tau_re * tau_re / (lambda * lambda) - 1.0);
        }
        self
    }

    pub fn regime(mut self, label: &str) -> Self {
        self.regime = label.into();
        self
    }

    pub fn flagged(mut self, flag: &str) -> Self {
        self.flag = flag.into();
        self
    }

    /// Name part of `value_kind`.
    pub fn kind(&self) -> &str {
        self.value_kind.split(';').next().unwrap_or("")
    }

    /// Parameter `key` of `value_kind`.
    pub fn param(&self, key: &str) -> Option<&str> {
        self.value_kind.split(';').skip(1).find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub name: String,
    pub m: u32,
    #[serde(flatten)]
    pub fit: FitResult,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Angular volume constants. Every quadrature in the rows is per unit
/// angular measure; multiply by these to get sphere or equatorial integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularMeasure {
    pub sphere: f64,
    pub equatorial: f64,
    pub applied: bool,
}

impl Default for AngularMeasure {
    fn default() -> Self {
        Self { sphere: ANGULAR_MEASURE_SPHERE, equatorial: ANGULAR_MEASURE_EQUATORIAL, applied: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub angular_measure: AngularMeasure,
    pub config: SweepConfig,
    pub rows: Vec<Row>,
    pub fits: Vec<NamedFit>,
    pub flags: Vec<Flag>,
}

/// Header plus metadata written next to a CSV file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub angular_measure: AngularMeasure,
    pub config: SweepConfig,
    pub fits: Vec<NamedFit>,
    pub flags: Vec<Flag>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl SweepReport {
    pub fn all_pass(&self) -> bool {
        self.flags.iter().all(|f| f.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            angular_measure: self.angular_measure,
            config: self.config.clone(),
            fits: self.fits.clone(),
            flags: self.flags.clone(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        rows_to_csv(&self.rows)
    }
}

pub fn rows_to_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn rows_from_csv(s: &str) -> Result<Vec<Row>> {
    let mut r = csv::ReaderBuilder::new().from_reader(s.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header {:?}", header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Write `report` into `dir` as `<stem>.json`, or as `<stem>.csv` plus
/// `<stem>.summary.json`. Returns the written paths.
pub fn emit_report(report: &SweepReport, format: ReportFormat, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    match format {
        ReportFormat::Json => {
            let p = dir.join(format!("{stem}.json"));
            fs::write(&p, report.to_json()?)?;
            Ok(vec![p])
        }
        ReportFormat::Csv => {
            let p = dir.join(format!("{stem}.csv"));
            fs::write(&p, report.to_csv()?)?;
            let s = dir.join(format!("{stem}.summary.json"));
            let mut body = serde_json::to_string_pretty(&report.summary())?;
            body.push('\n');
            fs::write(&s, body)?;
            Ok(vec![p, s])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::config::ExperimentKind;

    fn sample_rows() -> Vec<Row> {
        vec![
            Row::new(2, "case_iv_sup", 5.212_345_678_901_234).at(32.0, 32.5, 0.0).regime("IV-A"),
            Row::new(2, "ibp_residual;preset=interior;h=0.1", 1e-300),
            Row::failed(3, "r_strong", &Error::UndefinedRatio("g")),
            Row::new(3, "hardy_ratio", 0.1 + 0.2).at(7.0, 1.0 / 3.0, -0.25),
        ]
    }

    fn report(rows: Vec<Row>) -> SweepReport {
        SweepReport {
            angular_measure: AngularMeasure::default(),
            config: SweepConfig::preset(ExperimentKind::HardyCheck),
            rows,
            fits: vec![],
            flags: vec![],
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(report(vec![]).to_csv().unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = sample_rows();
        let s = rows_to_csv(&rows).unwrap();
        assert!(!s.contains('\r'));
        assert_eq!(rows_from_csv(&s).unwrap(), rows);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = report(sample_rows());
        let back = SweepReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json().unwrap(), r.to_json().unwrap());
    }

    #[test]
    fn kind_parameters() {
        let r = &sample_rows()[1];
        assert_eq!(r.kind(), "ibp_residual");
        assert_eq!(r.param("preset"), Some("interior"));
        assert_eq!(r.param("h"), Some("0.1"));
        assert_eq!(r.param("x"), None);
    }

    #[test]
    fn rows_record_epsilon_for_real_tau() {
        let r = Row::new(2, "k", 1.0).at(10.0, 20.0, 0.0);
        assert_eq!(r.eps, Some(3.0));
        assert_eq!(Row::new(2, "k", 1.0).at(10.0, 20.0, -1.0).eps, None);
    }
}
