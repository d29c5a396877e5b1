use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use trapping_lab::sweep::{
    emit_report, evaluate, rows_from_csv, run_sweep, sort_rows, ExperimentKind, ReportFormat, ReportSummary,
    SweepConfig, SweepReport,
};

#[derive(Parser)]
#[command(name = "trapping-lab", version, about = "Resolvent, quasimode and local energy experiments for a degenerately trapping warped product")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Case IV supremum of the resolvent ratio over λ, plus the Cases I-III sweeps.
    ResolventSweep(Common),
    /// Quasimode residual scaling and support/mass invariants.
    QuasimodeScan(Common),
    /// Evolve quasimode data and compare trapped energy with the data norm.
    Saturation(Common),
    /// Multiplier identity convergence and interior coercivity.
    IbpCheck(Common),
    /// Hardy ratio over seeded random bumps.
    HardyCheck(Common),
    /// Normalized degenerate-well quadratures.
    QuadLemmas(Common),
    /// Re-evaluate fits and flags of an existing report.
    Report {
        /// A JSON report, or a CSV file with its `.summary.json` beside it.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON file with the sweep configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; the configured one when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed for randomized inputs (overrides the configuration).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

fn load_config(path: &Path) -> Result<SweepConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SweepConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn configure(kind: ExperimentKind, common: &Common) -> Result<SweepConfig> {
    let mut cfg = match &common.config {
        Some(p) => load_config(p)?,
        None => SweepConfig::preset(kind),
    };
    if cfg.experiment != kind {
        bail!("configuration is for {:?}, but the subcommand runs {kind:?}", cfg.experiment);
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            bail!("--jobs must be positive");
        }
        b = b.num_threads(j);
    }
    Ok(b.build()?)
}

fn read_report(input: &Path, common: &Common) -> Result<SweepReport> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let is_csv = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let mut report = if is_csv {
        let rows = rows_from_csv(&text)?;
        let summary_path = input.with_extension("summary.json");
        let (config, angular_measure) = match (&common.config, summary_path.exists()) {
            (Some(p), _) => (load_config(p)?, Default::default()),
            (None, true) => {
                let s: ReportSummary = serde_json::from_str(&fs::read_to_string(&summary_path)?)
                    .with_context(|| format!("parsing {}", summary_path.display()))?;
                (s.config, s.angular_measure)
            }
            (None, false) => bail!("no configuration for {}: pass --config or keep the .summary.json", input.display()),
        };
        SweepReport { angular_measure, config, rows, fits: vec![], flags: vec![] }
    } else {
        let mut r = SweepReport::from_json(&text).with_context(|| format!("parsing {}", input.display()))?;
        if let Some(p) = &common.config {
            r.config = load_config(p)?;
        }
        r
    };
    sort_rows(&mut report.rows);
    let (fits, flags) = evaluate(&report.config, &report.rows);
    report.fits = fits;
    report.flags = flags;
    Ok(report)
}

/// Writes the report into `--out`, or the configured directory, and prints the flags.
fn finish(report: &SweepReport, common: &Common) -> Result<bool> {
    let dir = common.out.as_ref().unwrap_or(&report.config.output.dir);
    let paths = emit_report(report, common.format.into(), dir, &report.config.output.stem)?;
    for f in &report.flags {
        println!("{} {}: {}", if f.pass { "PASS" } else { "FAIL" }, f.name, f.detail);
    }
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
    Ok(report.all_pass())
}

fn run(cli: Cli) -> Result<bool> {
    let (kind, common) = match &cli.command {
        Command::ResolventSweep(c) => (ExperimentKind::Resolvent, c),
        Command::QuasimodeScan(c) => (ExperimentKind::Quasimode, c),
        Command::Saturation(c) => (ExperimentKind::Saturation, c),
        Command::IbpCheck(c) => (ExperimentKind::IbpCheck, c),
        Command::HardyCheck(c) => (ExperimentKind::HardyCheck, c),
        Command::QuadLemmas(c) => (ExperimentKind::QuadratureLemmas, c),
        Command::Report { input, common } => {
            let report = read_report(input, common)?;
            return finish(&report, common);
        }
    };
    let cfg = configure(kind, common)?;
    let report = thread_pool(common.jobs)?.install(|| run_sweep(&cfg))?;
    finish(&report, common)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
