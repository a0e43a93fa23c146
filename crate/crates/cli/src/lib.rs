//! Command-line front end: argument model, dispatch onto `biphoton-core`, and
//! CSV/JSON emission.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::path::PathBuf;

use biphoton_core as core;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

pub mod format;

use format::{Cell, Table};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const SEED_ENV: &str = "BIPHOTON_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] core::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Validation(_) | CliError::Core(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn csv(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "biphoton",
    version,
    about = "Two-photon interferometry sweeps, sampling and Bell scans"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv, global = true)]
    pub format: OutputFormat,

    /// Write to this file instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Sampling seed; falls back to $BIPHOTON_SEED, then 42.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Read phase arguments in degrees instead of radians.
    #[arg(long, global = true)]
    pub degrees: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Degree of correlation versus the phase difference, analytic and sampled.
    RtoSweep(RtoSweepArgs),
    /// Single-photon Mach-Zehnder detector probabilities versus phase.
    MzSweep(MzSweepArgs),
    /// Sample coincidences at one pair of phase settings.
    Sample(SampleArgs),
    /// CHSH statistic: single settings, the canonical θ family, or a maximization.
    Chsh(ChshArgs),
    /// Single-photon versus entangled-pair statistics at five phases.
    Table1,
    /// No-signaling audit of local marginals over a phase grid.
    Marginals(MarginalsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RtoSweepArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub delta_min: Option<f64>,
    /// Defaults to 2π.
    #[arg(long, allow_negative_numbers = true)]
    pub delta_max: Option<f64>,
    #[arg(long, default_value_t = 25)]
    pub steps: usize,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
}

#[derive(Debug, Clone, Args)]
pub struct MzSweepArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub phi_min: Option<f64>,
    /// Defaults to 2π.
    #[arg(long, allow_negative_numbers = true)]
    pub phi_max: Option<f64>,
    #[arg(long, default_value_t = 25)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub phi_s: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub phi_a: f64,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ChshArgs {
    /// Scan the family a = 0, a' = 2θ, b = θ, b' = −θ.
    #[arg(long, conflicts_with = "maximize")]
    pub canonical: bool,
    #[arg(long, default_value_t = 181)]
    pub theta_steps: usize,
    /// Defaults to −π/2.
    #[arg(long, allow_negative_numbers = true)]
    pub theta_min: Option<f64>,
    /// Defaults to π/2.
    #[arg(long, allow_negative_numbers = true)]
    pub theta_max: Option<f64>,

    /// Search settings maximizing |S|.
    #[arg(long)]
    pub maximize: bool,
    /// Coarse grid spacing for --maximize; defaults to π/64.
    #[arg(long)]
    pub grid_step: Option<f64>,

    /// Settings for a single evaluation; default to a = 0, a' = π/2, b = π/4, b' = −π/4.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a_prime: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b_prime: Option<f64>,

    /// Estimate the four correlations from sampled coincidences.
    #[arg(long, conflicts_with_all = ["canonical", "maximize"])]
    pub sampled: bool,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
}

#[derive(Debug, Clone, Args)]
pub struct MarginalsArgs {
    /// Grid points per axis over [0, 2π).
    #[arg(long, default_value_t = 21)]
    pub steps: usize,
}

/// Validated run configuration; phases in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: RunCommand,
    pub seed: u64,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunCommand {
    RtoSweep {
        delta_min: f64,
        delta_max: f64,
        steps: usize,
        trials: u64,
    },
    MzSweep {
        phi_min: f64,
        phi_max: f64,
        steps: usize,
    },
    Sample {
        phi_s: f64,
        phi_a: f64,
        trials: u64,
    },
    ChshScan {
        theta_min: f64,
        theta_max: f64,
        theta_steps: usize,
    },
    ChshMaximize {
        grid_step: f64,
    },
    ChshSingle {
        settings: core::ChshSettings,
        sampled: Option<u64>,
    },
    Table1,
    Marginals {
        steps: usize,
    },
}

impl RunCommand {
    pub fn name(&self) -> &'static str {
        match self {
            RunCommand::RtoSweep { .. } => "rto-sweep",
            RunCommand::MzSweep { .. } => "mz-sweep",
            RunCommand::Sample { .. } => "sample",
            RunCommand::ChshScan { .. }
            | RunCommand::ChshMaximize { .. }
            | RunCommand::ChshSingle { .. } => "chsh",
            RunCommand::Table1 => "table1",
            RunCommand::Marginals { .. } => "marginals",
        }
    }
}

fn check_trials(trials: u64) -> Result<u64, CliError> {
    if trials == 0 {
        return Err(CliError::Validation("--trials must be at least 1".into()));
    }
    Ok(trials)
}

fn check_steps(flag: &str, steps: usize, min: usize) -> Result<usize, CliError> {
    if steps < min {
        return Err(CliError::Validation(format!(
            "{flag} must be at least {min}"
        )));
    }
    Ok(steps)
}

/// Resolves the seed from the flag, then `$BIPHOTON_SEED`, then the default.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>) -> Result<u64, CliError> {
    match (flag, env) {
        (Some(seed), _) => Ok(seed),
        (None, Some(raw)) => raw.trim().parse().map_err(|_| {
            CliError::Validation(format!(
                "{SEED_ENV}={raw:?} is not a 64-bit unsigned integer"
            ))
        }),
        (None, None) => Ok(DEFAULT_SEED),
    }
}

impl Cli {
    /// Converts parsed flags into a validated configuration.
    pub fn into_config(self, env_seed: Option<&str>) -> Result<RunConfig, CliError> {
        let scale = if self.degrees { PI / 180.0 } else { 1.0 };
        let phase = |x: f64| -> Result<f64, CliError> {
            if x.is_finite() {
                Ok(x * scale)
            } else {
                Err(CliError::Validation(format!("phase {x} is not finite")))
            }
        };
        let phase_or = |x: Option<f64>, default_rad: f64| x.map_or(Ok(default_rad), phase);

        let command = match self.command {
            Command::RtoSweep(a) => RunCommand::RtoSweep {
                delta_min: phase_or(a.delta_min, 0.0)?,
                delta_max: phase_or(a.delta_max, 2.0 * PI)?,
                steps: check_steps("--steps", a.steps, 2)?,
                trials: check_trials(a.trials)?,
            },
            Command::MzSweep(a) => RunCommand::MzSweep {
                phi_min: phase_or(a.phi_min, 0.0)?,
                phi_max: phase_or(a.phi_max, 2.0 * PI)?,
                steps: check_steps("--steps", a.steps, 2)?,
            },
            Command::Sample(a) => RunCommand::Sample {
                phi_s: phase(a.phi_s)?,
                phi_a: phase(a.phi_a)?,
                trials: check_trials(a.trials)?,
            },
            Command::Chsh(a) => {
                if a.canonical {
                    RunCommand::ChshScan {
                        theta_min: phase_or(a.theta_min, -FRAC_PI_2)?,
                        theta_max: phase_or(a.theta_max, FRAC_PI_2)?,
                        theta_steps: check_steps("--theta-steps", a.theta_steps, 2)?,
                    }
                } else if a.maximize {
                    RunCommand::ChshMaximize {
                        grid_step: phase_or(a.grid_step, PI / 64.0)?,
                    }
                } else {
                    let c = core::ChshSettings::canonical();
                    let settings = core::ChshSettings::new(
                        phase_or(a.a, c.a)?,
                        phase_or(a.a_prime, c.a_prime)?,
                        phase_or(a.b, c.b)?,
                        phase_or(a.b_prime, c.b_prime)?,
                    )?;
                    let sampled = if a.sampled {
                        Some(check_trials(a.trials)?)
                    } else {
                        None
                    };
                    RunCommand::ChshSingle { settings, sampled }
                }
            }
            Command::Table1 => RunCommand::Table1,
            Command::Marginals(a) => RunCommand::Marginals {
                steps: check_steps("--steps", a.steps, 1)?,
            },
        };
        Ok(RunConfig {
            command,
            seed: resolve_seed(self.seed, env_seed)?,
            format: self.format,
            output: self.output,
        })
    }
}

impl RunConfig {
    fn echo(&self) -> Value {
        let mut cfg = match &self.command {
            RunCommand::RtoSweep {
                delta_min,
                delta_max,
                steps,
                trials,
            } => json!({
                "delta_min": delta_min, "delta_max": delta_max, "steps": steps, "trials": trials,
            }),
            RunCommand::MzSweep {
                phi_min,
                phi_max,
                steps,
            } => json!({
                "phi_min": phi_min, "phi_max": phi_max, "steps": steps,
            }),
            RunCommand::Sample {
                phi_s,
                phi_a,
                trials,
            } => json!({
                "phi_s": phi_s, "phi_a": phi_a, "trials": trials,
            }),
            RunCommand::ChshScan {
                theta_min,
                theta_max,
                theta_steps,
            } => json!({
                "mode": "canonical", "theta_min": theta_min, "theta_max": theta_max, "theta_steps": theta_steps,
            }),
            RunCommand::ChshMaximize { grid_step } => {
                json!({ "mode": "maximize", "grid_step": grid_step })
            }
            RunCommand::ChshSingle { settings, sampled } => json!({
                "mode": if sampled.is_some() { "sampled" } else { "analytic" },
                "a": settings.a, "a_prime": settings.a_prime, "b": settings.b, "b_prime": settings.b_prime,
                "trials": sampled,
            }),
            RunCommand::Table1 => json!({}),
            RunCommand::Marginals { steps } => json!({ "steps": steps }),
        };
        let obj = cfg.as_object_mut().expect("object");
        obj.insert("seed".into(), json!(self.seed));
        obj.insert("format".into(), json!(self.format));
        obj.insert("phase_unit".into(), json!("rad"));
        cfg
    }
}

/// Computes the output table for a command from library calls only.
pub fn build_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let table = match &cfg.command {
        &RunCommand::RtoSweep {
            delta_min,
            delta_max,
            steps,
            trials,
        } => {
            let rows = core::correlation_sweep(&core::SweepConfig {
                delta_min,
                delta_max,
                steps,
                trials,
                base_seed: cfg.seed,
            })?;
            let mut t = Table::new(vec![
                "delta_phase",
                "c_analytic",
                "c_sampled",
                "std_err",
                "p11",
                "p12",
                "p21",
                "p22",
            ]);
            for r in rows {
                let mut row: Vec<Cell> = vec![
                    r.delta.into(),
                    r.c_analytic.into(),
                    r.c_sampled.into(),
                    r.std_err.into(),
                ];
                row.extend(r.joint.as_array().map(Cell::from));
                t.push(row);
            }
            t
        }
        &RunCommand::MzSweep {
            phi_min,
            phi_max,
            steps,
        } => {
            let mut t = Table::new(vec!["phase", "p_d1", "p_d2"]);
            for r in core::mz_sweep(phi_min, phi_max, steps)? {
                t.push(vec![r.phase.into(), r.p_d1.into(), r.p_d2.into()]);
            }
            t
        }
        &RunCommand::Sample {
            phi_s,
            phi_a,
            trials,
        } => {
            let joint = core::joint_probabilities(&core::build_rto(phi_s, phi_a)?);
            let counts = core::sample_trials(&joint, trials, cfg.seed)?;
            let est = core::estimate_correlation(&counts)?;
            let mut t = Table::new(vec![
                "phi_s",
                "phi_a",
                "trials",
                "seed",
                "n11",
                "n12",
                "n21",
                "n22",
                "c_hat",
                "std_err",
                "c_analytic",
            ]);
            t.push(vec![
                phi_s.into(),
                phi_a.into(),
                counts.total.into(),
                counts.seed.into(),
                counts.n11.into(),
                counts.n12.into(),
                counts.n21.into(),
                counts.n22.into(),
                est.c_hat.into(),
                est.std_err.into(),
                joint.correlation().into(),
            ]);
            t
        }
        &RunCommand::ChshScan {
            theta_min,
            theta_max,
            theta_steps,
        } => {
            let thetas = core::stats::linspace(theta_min, theta_max, theta_steps)?;
            let scan = core::violation_scan(&thetas)?;
            let mut t = Table::new(vec!["theta", "s_value", "violated"]);
            for r in &scan.rows {
                t.push(vec![r.theta.into(), r.s_value.into(), r.violated.into()]);
            }
            let intervals: Vec<Value> = scan
                .intervals
                .iter()
                .map(|&(lo, hi)| json!([format::round_sig(lo), format::round_sig(hi)]))
                .collect();
            t.extra
                .insert("violating_intervals".into(), Value::Array(intervals));
            t.extra.insert(
                "max_abs_s".into(),
                json!(format::round_sig(scan.max_abs_s())),
            );
            t
        }
        &RunCommand::ChshMaximize { grid_step } => {
            let best = core::maximize_chsh(grid_step)?;
            let result = core::chsh_statistic(&best.settings)?;
            chsh_table(&best.settings, &result)
        }
        RunCommand::ChshSingle { settings, sampled } => match *sampled {
            None => chsh_table(settings, &core::chsh_statistic(settings)?),
            Some(trials) => {
                let (result, estimates) = core::chsh_statistic_sampled(settings, trials, cfg.seed)?;
                let mut t = chsh_table(settings, &result);
                let errs: Vec<f64> = estimates
                    .iter()
                    .map(|e| format::round_sig(e.std_err))
                    .collect();
                t.extra.insert("std_errs".into(), json!(errs));
                t
            }
        },
        RunCommand::Table1 => {
            let mut t = Table::new(vec![
                "phase",
                "phase_label",
                "p_d1",
                "p_d2",
                "p_same",
                "p_diff",
                "discrepancy_note",
            ]);
            for r in core::table1()? {
                t.push(vec![
                    r.phase.into(),
                    r.phase_label.into(),
                    r.p_d1.into(),
                    r.p_d2.into(),
                    r.p_same.into(),
                    r.p_diff.into(),
                    r.discrepancy_note.into(),
                ]);
            }
            t
        }
        &RunCommand::Marginals { steps } => {
            let report = core::no_signaling_audit(&core::stats::phase_grid(steps))?;
            let mut t = Table::new(vec!["phi_s", "phi_a", "p_s1", "p_a1", "max_deviation"]);
            for p in &report.points {
                t.push(vec![
                    p.phi_s.into(),
                    p.phi_a.into(),
                    p.marginals.p_s1.into(),
                    p.marginals.p_a1.into(),
                    p.deviation.into(),
                ]);
            }
            t.extra.insert(
                "max_deviation".into(),
                json!(format::round_sig(report.max_deviation)),
            );
            t.extra.insert("passed".into(), json!(report.passed()));
            t.extra.insert(
                "offending".into(),
                report.offending.map_or(Value::Null, |(s, a)| json!([s, a])),
            );
            t
        }
    };
    Ok(table)
}

fn chsh_table(s: &core::ChshSettings, r: &core::ChshResult) -> Table {
    let mut t = Table::new(vec![
        "a",
        "a_prime",
        "b",
        "b_prime",
        "e_ab",
        "e_ab_prime",
        "e_a_prime_b",
        "e_a_prime_b_prime",
        "s_value",
        "violated",
    ]);
    t.push(vec![
        s.a.into(),
        s.a_prime.into(),
        s.b.into(),
        s.b_prime.into(),
        r.e_ab.into(),
        r.e_ab_prime.into(),
        r.e_a_prime_b.into(),
        r.e_a_prime_b_prime.into(),
        r.s_value.into(),
        r.violated.into(),
    ]);
    t
}

/// Renders the command's output as text.
pub fn render(cfg: &RunConfig) -> Result<String, CliError> {
    let table = build_table(cfg)?;
    match cfg.format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Json => Ok(table.to_json(cfg.command.name(), cfg.echo())),
    }
}

/// Renders and writes the single output artifact.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let text = render(cfg)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Parses `args`, runs, and returns the process exit code. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I, env_seed: Option<&str>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = cli.into_config(env_seed).and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("biphoton: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> Result<RunConfig, CliError> {
        let argv = std::iter::once("biphoton").chain(args.iter().copied());
        Cli::try_parse_from(argv)
            .map_err(|e| CliError::Usage(e.to_string()))?
            .into_config(None)
    }

    #[test]
    fn defaults() {
        let cfg = config(&["rto-sweep"]).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.format, OutputFormat::Csv);
        assert_eq!(
            cfg.command,
            RunCommand::RtoSweep {
                delta_min: 0.0,
                delta_max: 2.0 * PI,
                steps: 25,
                trials: DEFAULT_TRIALS
            }
        );
    }

    #[test]
    fn degrees_are_converted() {
        let cfg = config(&["sample", "--phi-s", "180", "--phi-a", "-90", "--degrees"]).unwrap();
        assert_eq!(
            cfg.command,
            RunCommand::Sample {
                phi_s: PI,
                phi_a: -FRAC_PI_2,
                trials: DEFAULT_TRIALS
            }
        );
    }

    #[test]
    fn validation_errors() {
        let e = config(&["rto-sweep", "--trials", "0"]).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_VALIDATION);
        let e = config(&["mz-sweep", "--steps", "1"]).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_VALIDATION);
        let e = config(&["chsh", "--a", "NaN"]).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_VALIDATION);
        let e = config(&["chsh", "--canonical", "--maximize"]).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn seed_resolution() {
        assert_eq!(resolve_seed(Some(1), Some("9")).unwrap(), 1);
        assert_eq!(resolve_seed(None, Some(" 9 ")).unwrap(), 9);
        assert_eq!(resolve_seed(None, None).unwrap(), DEFAULT_SEED);
        assert_eq!(
            resolve_seed(None, Some("x")).unwrap_err().exit_code(),
            EXIT_VALIDATION
        );
    }

    #[test]
    fn chsh_modes() {
        assert!(matches!(
            config(&["chsh", "--canonical"]).unwrap().command,
            RunCommand::ChshScan {
                theta_steps: 181,
                ..
            }
        ));
        assert!(matches!(
            config(&["chsh", "--maximize"]).unwrap().command,
            RunCommand::ChshMaximize { .. }
        ));
        let cfg = config(&["chsh", "--sampled", "--trials", "10"]).unwrap();
        assert_eq!(
            cfg.command,
            RunCommand::ChshSingle {
                settings: core::ChshSettings::canonical(),
                sampled: Some(10)
            }
        );
    }
}
