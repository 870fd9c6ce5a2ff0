//! `tdpa` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use tdpa_core::config::SimConfig;
use tdpa_core::metrics::{CompareReport, MetricsReport, ReportParams};
use tdpa_core::record::{read_csv, write_csv, CsvRecord};
use tdpa_core::sim::{run, SampleLog};
use tdpa_core::validation::{oracle_suite, projector_suite, InjectedBug};
use tdpa_core::{Error, StrategyKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Tolerance of the `recompute` check.
pub const RECOMPUTE_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "tdpa", version, about = "Passivity-controlled haptic wall simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario; writes <name>.csv and <name>.report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run two scenarios over the same horizon and report the differences.
    Compare {
        /// Give twice: first A, then B.
        #[arg(long, num_args = 1, required = true)]
        config: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Projector and oracle-agreement self checks.
    Validate {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true, default_value = "none")]
        inject: InjectedBug,
    },
    /// Recompute a report from its CSV and check it matches.
    Recompute {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub ts: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub strategy: Option<StrategyKind>,
}

impl Common {
    fn apply(&self, config: &mut SimConfig) -> tdpa_core::Result<()> {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(ts) = self.ts {
            config.ts = ts;
        }
        if let Some(duration) = self.duration {
            config.duration = duration;
        }
        if let Some(strategy) = self.strategy {
            config.strategy = strategy;
        }
        config.validate()
    }
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self { code: EXIT_RUNTIME, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidInput(_) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        };
        Self { code, message: e.to_string() }
    }
}

fn load(path: &Path, common: &Common) -> Result<SimConfig, Failure> {
    let mut config = SimConfig::load(path)?;
    common.apply(&mut config)?;
    Ok(config)
}

fn simulate(config: &SimConfig) -> Result<Vec<SampleLog>, Failure> {
    run(config).map_err(|e| Failure::runtime(format!("simulation {} aborted: {e}", config.name)))
}

/// Summary of a finished run, computed from the rows as written.
pub fn report_for(config: &SimConfig, logs: &[SampleLog]) -> tdpa_core::Result<MetricsReport> {
    let rows: Vec<CsvRecord> = logs.iter().map(CsvRecord::from_log).collect();
    MetricsReport::compute(ReportParams::from_config(config), &rows)
}

fn write_outputs(dir: &Path, stem: &str, logs: &[SampleLog], report: &impl serde::Serialize) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", dir.display())))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let file = fs::File::create(&csv_path)
        .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", csv_path.display())))?;
    write_csv(std::io::BufWriter::new(file), logs)?;
    write_json(&dir.join(format!("{stem}.report.json")), report)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    fs::write(path, text + "\n").map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))
}

fn summary_line(r: &MetricsReport) -> String {
    format!(
        "{} [{}]: contact force {:.3} N (var {:.3}), mean α {:.3}, dissipated {:.4e} J, joint violations {}, \
         sign inversions {}, max τ/τ_max {:.3?}, trailing f_z std {:.3} N ({})",
        r.params.name,
        r.params.strategy,
        r.mean_contact_force,
        r.contact_force_variance,
        r.mean_alpha,
        r.total_dissipated,
        r.joint_violations,
        r.sign_inversions,
        r.joint_torque_ratio,
        r.trailing_fz_std,
        if r.settled { "settled" } else { "not settled" }
    )
}

fn cmd_run(path: &Path, common: &Common) -> Result<i32, Failure> {
    let config = load(path, common)?;
    let logs = simulate(&config)?;
    let report = report_for(&config, &logs)?;
    write_outputs(&common.out, &config.name, &logs, &report)?;
    println!("{}", summary_line(&report));
    Ok(EXIT_OK)
}

fn cmd_compare(paths: &[PathBuf], common: &Common) -> Result<i32, Failure> {
    let [a_path, b_path] = paths else {
        return Err(Failure::usage(format!("compare needs exactly two --config values, got {}", paths.len())));
    };
    let a = load(a_path, common)?;
    let b = load(b_path, common)?;
    if a.ts != b.ts || a.steps() != b.steps() {
        return Err(Failure::usage(format!(
            "horizons differ: {} s at ts={} vs {} s at ts={}",
            a.duration, a.ts, b.duration, b.ts
        )));
    }
    let (logs_a, logs_b) = std::thread::scope(|s| {
        let first = s.spawn(|| simulate(&a));
        let second = simulate(&b);
        (first.join().expect("simulation thread panicked"), second)
    });
    let (logs_a, logs_b) = (logs_a?, logs_b?);
    let report = CompareReport::new(report_for(&a, &logs_a)?, report_for(&b, &logs_b)?);

    let (stem_a, stem_b) =
        if a.name == b.name { (format!("{}_a", a.name), format!("{}_b", b.name)) } else { (a.name.clone(), b.name.clone()) };
    write_outputs(&common.out, &stem_a, &logs_a, &report.a)?;
    write_outputs(&common.out, &stem_b, &logs_b, &report.b)?;
    write_json(&common.out.join("compare.report.json"), &report)?;

    println!("A {}", summary_line(&report.a));
    println!("B {}", summary_line(&report.b));
    println!(
        "B − A: contact force {:+.3} N, mean α {:+.3}, dissipated {:+.4e} J",
        report.delta_mean_contact_force, report.delta_mean_alpha, report.delta_total_dissipated
    );
    Ok(EXIT_OK)
}

fn cmd_validate(cases: usize, seed: u64, bug: InjectedBug) -> Result<i32, Failure> {
    let outcomes = [projector_suite(cases, seed, bug), oracle_suite(cases, seed, bug)];
    for o in &outcomes {
        println!("{o}");
    }
    Ok(if outcomes.iter().all(|o| o.passed()) { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_recompute(csv: &Path, report_path: &Path) -> Result<i32, Failure> {
    let text = fs::read_to_string(report_path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", report_path.display())))?;
    let stored: MetricsReport = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{} is not a run report: {e}", report_path.display())))?;
    let file = fs::File::open(csv).map_err(|e| Failure::usage(format!("cannot open {}: {e}", csv.display())))?;
    let rows = read_csv(std::io::BufReader::new(file))?;
    let fresh = MetricsReport::compute(stored.params.clone(), &rows)?;
    match stored.max_relative_difference(&fresh) {
        Ok(diff) if diff <= RECOMPUTE_TOL => {
            println!("PASS report matches CSV (max relative difference {diff:.3e})");
            Ok(EXIT_OK)
        }
        Ok(diff) => {
            println!("FAIL report differs from CSV (max relative difference {diff:.3e})");
            Ok(EXIT_FAILED)
        }
        Err(e) => {
            println!("FAIL report differs from CSV: {e}");
            Ok(EXIT_FAILED)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32, Failure> {
    match &cli.command {
        Command::Run { config, common } => cmd_run(config, common),
        Command::Compare { config, common } => cmd_compare(config, common),
        Command::Validate { cases, seed, inject } => cmd_validate(*cases, *seed, *inject),
        Command::Recompute { csv, report } => cmd_recompute(csv, report),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
