//! `isochron` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 I/O error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isochron_core::harness::filter_trace::{run_filter_trace, write_filter_trace};
use isochron_core::harness::sweep::summarize;
use isochron_core::harness::trace::write_trace;
use isochron_core::{
    run_experiment, run_sweep, ConfigError, Execution, ExperimentConfig, SweepReport,
};

#[derive(Parser)]
#[command(name = "isochron", version, about = "Pendulum interception simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and print its result.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Per-tick CSV trace.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// CSV of the executed joint and Cartesian plan.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Run every (seed, distance) pair and summarize.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Half-open seed range `A..B`, or inclusive `A..=B`.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Range<u64>,
        /// Comma-separated movement distances, m.
        #[arg(long, value_delimiter = ',', required = true)]
        distances: Vec<f64>,
        /// Machine-readable summary.
        #[arg(long, default_value = "sweep_summary.json")]
        summary: PathBuf,
        /// Optional per-run CSV.
        #[arg(long)]
        rows: Option<PathBuf>,
        /// Run cells one after another instead of in parallel.
        #[arg(long)]
        sequential: bool,
    },
    /// Run the filter alone, then forecast from its last estimate.
    EkfTrace {
        #[arg(long)]
        config: PathBuf,
        /// Forecast length, ticks.
        #[arg(long)]
        forecast: u64,
        /// Filter length, ticks.
        #[arg(long, default_value_t = 1000)]
        ticks: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default configuration.
    DefaultConfig {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_seeds(s: &str) -> Result<Range<u64>, String> {
    let bad = || format!("expected A..B or A..=B, got `{s}`");
    let (a, b, inclusive) = if let Some((a, b)) = s.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b, false)
    } else {
        return Err(bad());
    };
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    let end = if inclusive {
        b.checked_add(1).ok_or_else(bad)?
    } else {
        b
    };
    if end <= a {
        return Err(format!("seed range `{s}` is empty"));
    }
    Ok(a..end)
}

enum Failure {
    Config(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Io(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<isochron_core::harness::experiment::HarnessError> for Failure {
    fn from(e: isochron_core::harness::experiment::HarnessError) -> Self {
        use isochron_core::harness::experiment::HarnessError;
        match e {
            HarnessError::Config(c) => c.into(),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_failure(path, e))
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.prec$}"))
}

fn simulate(
    config: &Path,
    seed: Option<u64>,
    trace: Option<&Path>,
    plan: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = load(config, seed)?;
    let out = run_experiment(&cfg)?;
    if let Some(path) = trace {
        write_trace(&out.trace, create(path)?).map_err(|e| io_failure(path, e))?;
    }
    if let (Some(path), Some(p)) = (plan, &out.plan) {
        p.write_csv(create(path)?)
            .map_err(|e| io_failure(path, e))?;
    }
    let r = &out.result;
    let rows = [
        ("seed", cfg.seed.to_string()),
        ("outcome", format!("{:?}", r.outcome)),
        (
            "trigger_tick",
            r.trigger_tick.map_or("-".into(), |t| t.to_string()),
        ),
        ("movement_time_s", fmt_opt(r.movement_time, 3)),
        ("movement_distance_m", fmt_opt(r.movement_distance, 4)),
        ("final_distance_m", fmt_opt(r.final_distance, 4)),
        ("rms_est_error_rad", format!("{:.6}", r.rms_est_error)),
        ("ticks", r.ticks.to_string()),
    ];
    let mut stdout = io::stdout().lock();
    for (k, v) in rows {
        writeln!(stdout, "{k:<20} {v}").map_err(|e| Failure::Io(e.to_string()))?;
    }
    Ok(())
}

fn print_table(report: &SweepReport, distances: &[f64], out: &mut impl Write) -> io::Result<()> {
    writeln!(
        out,
        "{:>10} {:>6} {:>9} {:>8} {:>10} {:>10} {:>12}",
        "distance_m", "runs", "successes", "rate", "mt_mean_s", "mt_std_s", "rms_err_rad"
    )?;
    let line = |out: &mut dyn Write, label: String, s: &isochron_core::SweepSummary| {
        writeln!(
            out,
            "{:>10} {:>6} {:>9} {:>8.3} {:>10.4} {:>10.2e} {:>12.3e}",
            label,
            s.runs,
            s.successes,
            s.success_rate,
            s.movement_time_mean,
            s.movement_time_std,
            s.rms_est_error_mean
        )
    };
    for &d in distances {
        let rows: Vec<_> = report
            .rows
            .iter()
            .filter(|r| r.distance == d)
            .cloned()
            .collect();
        line(out, format!("{d:.3}"), &summarize(&rows))?;
    }
    line(out, "all".into(), &report.summary)
}

fn sweep(
    config: &Path,
    seeds: Range<u64>,
    distances: &[f64],
    summary: &Path,
    rows: Option<&Path>,
    sequential: bool,
) -> Result<(), Failure> {
    let cfg = load(config, None)?;
    if let Some(d) = distances.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(Failure::Config(format!("invalid distance {d}")));
    }
    let seeds: Vec<u64> = seeds.collect();
    let execution = if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let report = run_sweep(&cfg, &seeds, distances, execution)?;

    let mut unique: Vec<f64> = Vec::new();
    for d in distances {
        if !unique.contains(d) {
            unique.push(*d);
        }
    }
    print_table(&report, &unique, &mut io::stdout().lock())
        .map_err(|e| Failure::Io(e.to_string()))?;

    let text = serde_json::to_string_pretty(&report.summary).expect("summary serializes");
    let mut f = create(summary)?;
    writeln!(f, "{text}")
        .and_then(|_| f.flush())
        .map_err(|e| io_failure(summary, e))?;
    if let Some(path) = rows {
        report
            .write_rows_csv(create(path)?)
            .map_err(|e| io_failure(path, e))?;
    }
    Ok(())
}

fn ekf_trace(
    config: &Path,
    forecast: u64,
    ticks: u64,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = load(config, seed)?;
    let rows = run_filter_trace(&cfg, ticks, forecast)?;
    match out {
        Some(path) => write_filter_trace(&rows, create(path)?).map_err(|e| io_failure(path, e)),
        None => {
            write_filter_trace(&rows, io::stdout().lock()).map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

fn default_config(out: Option<&Path>) -> Result<(), Failure> {
    let text = ExperimentConfig::default().to_json_pretty();
    match out {
        Some(path) => {
            let mut f = create(path)?;
            writeln!(f, "{text}")
                .and_then(|_| f.flush())
                .map_err(|e| io_failure(path, e))
        }
        None => writeln!(io::stdout(), "{text}").map_err(|e| Failure::Io(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Simulate {
            config,
            seed,
            trace,
            plan,
        } => simulate(config, *seed, trace.as_deref(), plan.as_deref()),
        Command::Sweep {
            config,
            seeds,
            distances,
            summary,
            rows,
            sequential,
        } => sweep(
            config,
            seeds.clone(),
            distances,
            summary,
            rows.as_deref(),
            *sequential,
        ),
        Command::EkfTrace {
            config,
            forecast,
            ticks,
            seed,
            out,
        } => ekf_trace(config, *forecast, *ticks, *seed, out.as_deref()),
        Command::DefaultConfig { out } => default_config(out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("isochron: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
