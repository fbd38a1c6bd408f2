//! Command-line front end.
//!
//! Subcommands: `expect`, `density`, `age-density`, `simulate`, `verify`,
//! `plot`. Option precedence is flags > config file > defaults; the config
//! file is a flat `key = value` text format whose keys match the long flag
//! names. Exit codes: 0 success, 2 usage error, 3 numeric/quadrature
//! failure, 4 Monte-Carlo budget exhaustion.

pub mod output;
pub mod svg;
pub mod verify;

use crate::analytic::{self, Condition};
use crate::bdmath::BirthDeathParams;
use crate::error::{Error, Result};
use crate::quad::QuadratureSpec;
use crate::sim;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

/// Seed used when neither `--seed` nor `LTT_SEED` is given.
pub const DEFAULT_SEED: u64 = 42;
/// Default number of sigma-grid points (uniform, endpoints included).
pub const DEFAULT_GRID: usize = 101;

#[derive(Parser, Debug)]
#[command(
    name = "ltt",
    about = "Lineage-through-time distributions for birth-death trees",
    version
)]
pub struct CliArgs {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Expected lineage count over a sigma grid (analytic)
    Expect(CommonOpts),
    /// Probability vector over the lineage count m at one sigma
    Density(CommonOpts),
    /// Posterior origin-age density q_or(t | n) under the uniform prior
    AgeDensity(CommonOpts),
    /// Monte-Carlo LTT curve from the simulation oracle (with stderr)
    Simulate(CommonOpts),
    /// Run the analytic cross-check suite and print pass/fail per property
    Verify(CommonOpts),
    /// Render a preset figure as SVG
    Plot(CommonOpts),
}

#[derive(Args, Debug, Default, Clone)]
pub struct CommonOpts {
    /// Per-lineage birth rate (> 0)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Per-lineage death rate (>= 0)
    #[arg(long)]
    pub mu: Option<f64>,
    /// Number of extant species conditioned on
    #[arg(long)]
    pub n: Option<u32>,
    /// Conditioning regime
    #[arg(long, value_enum)]
    pub condition: Option<ConditionKind>,
    /// Tree age (origin or MRCA) or survival horizon
    #[arg(long)]
    pub age: Option<f64>,
    /// Single relative time fraction in [0, 1] (density command)
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Number of uniform sigma-grid points including endpoints
    #[arg(long)]
    pub grid: Option<usize>,
    /// Accepted Monte-Carlo replicates (simulate only)
    #[arg(long)]
    pub reps: Option<u64>,
    /// RNG seed; falls back to the LTT_SEED environment variable
    #[arg(long)]
    pub seed: Option<u64>,
    /// Absolute quadrature tolerance
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Relative quadrature tolerance
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Output format
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Output path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Figure preset (plot only)
    #[arg(long)]
    pub fig: Option<u8>,
    /// Newline-delimited per-tree count dump (simulate only)
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Flat key = value config file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    Origin,
    Mrca,
    Survival,
    UniformPrior,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Expect,
    Density,
    AgeDensity,
    Simulate,
    Verify,
    Plot,
}

/// Fully resolved run configuration (flags > config file > defaults).
/// Echoed verbatim into JSON output for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub lambda: f64,
    pub mu: f64,
    pub n: u32,
    pub condition: ConditionKind,
    pub age: Option<f64>,
    pub sigma: Option<f64>,
    pub grid: usize,
    pub reps: u64,
    pub seed: u64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub fig: Option<u8>,
    pub dump: Option<PathBuf>,
}

fn parse_config_file(path: &PathBuf) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Usage(format!(
                "config {}:{}: expected `key = value`, got `{raw}`",
                path.display(),
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn from_config<T: std::str::FromStr>(
    map: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<T>()
            .map(Some)
            .map_err(|_| Error::Usage(format!("config key `{key}`: cannot parse `{v}`"))),
    }
}

fn parse_condition_kind(s: &str) -> Result<ConditionKind> {
    match s {
        "origin" => Ok(ConditionKind::Origin),
        "mrca" => Ok(ConditionKind::Mrca),
        "survival" => Ok(ConditionKind::Survival),
        "uniform-prior" => Ok(ConditionKind::UniformPrior),
        other => Err(Error::Usage(format!(
            "--condition must be origin|mrca|survival|uniform-prior, got `{other}`"
        ))),
    }
}

impl RunConfig {
    /// Merges flags, the optional config file, the `LTT_SEED` fallback and
    /// the built-in defaults, then checks mutual consistency.
    pub fn resolve(command: CommandKind, opts: &CommonOpts) -> Result<RunConfig> {
        let file = match &opts.config {
            Some(path) => parse_config_file(path)?,
            None => HashMap::new(),
        };

        let condition = match (&opts.condition, file.get("condition")) {
            (Some(c), _) => *c,
            (None, Some(s)) => parse_condition_kind(s)?,
            (None, None) => ConditionKind::Origin,
        };
        let format = match (&opts.format, file.get("format")) {
            (Some(f), _) => *f,
            (None, Some(s)) => match s.as_str() {
                "csv" => OutputFormat::Csv,
                "json" => OutputFormat::Json,
                other => {
                    return Err(Error::Usage(format!(
                        "--format must be csv|json, got `{other}`"
                    )))
                }
            },
            (None, None) => OutputFormat::Csv,
        };
        let env_seed = std::env::var("LTT_SEED")
            .ok()
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|_| Error::Usage(format!("LTT_SEED: cannot parse `{s}`")))
            })
            .transpose()?;

        let config = RunConfig {
            command,
            lambda: opts.lambda.or(from_config(&file, "lambda")?).unwrap_or(1.0),
            mu: opts.mu.or(from_config(&file, "mu")?).unwrap_or(0.0),
            n: opts.n.or(from_config(&file, "n")?).unwrap_or(10),
            condition,
            age: opts.age.or(from_config(&file, "age")?),
            sigma: opts.sigma.or(from_config(&file, "sigma")?),
            grid: opts
                .grid
                .or(from_config(&file, "grid")?)
                .unwrap_or(DEFAULT_GRID),
            reps: opts.reps.or(from_config(&file, "reps")?).unwrap_or(1000),
            seed: opts
                .seed
                .or(from_config(&file, "seed")?)
                .or(env_seed)
                .unwrap_or(DEFAULT_SEED),
            abs_tol: opts
                .abs_tol
                .or(from_config(&file, "abs-tol")?)
                .unwrap_or(1e-10),
            rel_tol: opts
                .rel_tol
                .or(from_config(&file, "rel-tol")?)
                .unwrap_or(1e-10),
            format,
            out: opts
                .out
                .clone()
                .or_else(|| file.get("out").map(PathBuf::from)),
            fig: opts.fig.or(from_config(&file, "fig")?),
            dump: opts.dump.clone(),
        };
        config.validate(opts)?;
        Ok(config)
    }

    fn validate(&self, opts: &CommonOpts) -> Result<()> {
        if self.command != CommandKind::Simulate {
            if opts.reps.is_some() {
                return Err(Error::Usage("--reps is only valid with `simulate`".into()));
            }
            if opts.dump.is_some() {
                return Err(Error::Usage("--dump is only valid with `simulate`".into()));
            }
        }
        if self.command != CommandKind::Plot && opts.fig.is_some() {
            return Err(Error::Usage("--fig is only valid with `plot`".into()));
        }
        if self.command == CommandKind::Plot && !matches!(self.fig, Some(1) | Some(2)) {
            return Err(Error::Usage("`plot` requires --fig 1 or --fig 2".into()));
        }
        let timed = !matches!(self.condition, ConditionKind::UniformPrior);
        let needs_age = matches!(
            self.command,
            CommandKind::Expect | CommandKind::Density | CommandKind::Simulate
        );
        if needs_age && timed && self.age.is_none() {
            return Err(Error::Usage(format!(
                "--age is required for --condition {:?}",
                self.condition
            )));
        }
        if self.command == CommandKind::Density {
            if self.sigma.is_none() {
                return Err(Error::Usage("`density` requires --sigma".into()));
            }
            if self.condition == ConditionKind::Survival {
                return Err(Error::Usage(
                    "--condition survival has no finite lineage-count pmf; use `expect`".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<BirthDeathParams> {
        BirthDeathParams::new(self.lambda, self.mu)
            .map_err(|e| Error::Usage(format!("invalid rates: {e}")))
    }

    pub fn quad_spec(&self) -> Result<QuadratureSpec> {
        QuadratureSpec::new(self.abs_tol, self.rel_tol, 2000)
            .map_err(|e| Error::Usage(format!("invalid tolerances: {e}")))
    }

    pub fn condition(&self) -> Result<Condition> {
        Ok(match self.condition {
            ConditionKind::Origin => Condition::OriginAge(self.require_age()?),
            ConditionKind::Mrca => Condition::MrcaAge(self.require_age()?),
            ConditionKind::Survival => Condition::Survival(self.require_age()?),
            ConditionKind::UniformPrior => Condition::UniformAgePrior,
        })
    }

    fn require_age(&self) -> Result<f64> {
        self.age
            .ok_or_else(|| Error::Usage("--age is required for this condition".into()))
    }
}

/// Maps an error to the documented process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_) | Error::Domain(_) | Error::Unsupported(_) => 2,
        Error::QuadratureAccuracy { .. } => 3,
        Error::McBudget { .. } => 4,
        Error::AtSigma { source, .. } => exit_code(source),
        Error::Io(_) | Error::Json(_) => 1,
    }
}

fn write_artifact(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
        Some(path) => output::write_atomic(path, content.as_bytes()),
    }
}

/// Executes a resolved run configuration. Writes the requested artifact to
/// `--out` or stdout.
pub fn run(config: &RunConfig) -> Result<()> {
    let params = config.params()?;
    let quad = config.quad_spec()?;
    match config.command {
        CommandKind::Expect => {
            let grid = analytic::uniform_grid(config.grid);
            let curve = analytic::ltt_curve(config.condition()?, config.n, &params, &grid, &quad)?;
            let text = match config.format {
                OutputFormat::Csv => output::curve_to_csv(&curve),
                OutputFormat::Json => output::curve_to_json(&curve, config)?,
            };
            write_artifact(&config.out, &text)
        }
        CommandKind::Density => {
            let sigma = config.sigma.expect("validated");
            let pmf = analytic::lineage_pmf(config.condition()?, config.n, sigma, &params, &quad)?;
            let text = match config.format {
                OutputFormat::Csv => output::pmf_to_csv(&pmf),
                OutputFormat::Json => output::pmf_to_json(&pmf, config)?,
            };
            write_artifact(&config.out, &text)
        }
        CommandKind::AgeDensity => {
            let rows = age_density_rows(config, &params)?;
            let text = match config.format {
                OutputFormat::Csv => output::age_density_to_csv(&rows),
                OutputFormat::Json => output::age_density_to_json(&rows, config)?,
            };
            write_artifact(&config.out, &text)
        }
        CommandKind::Simulate => {
            let grid = analytic::uniform_grid(config.grid);
            let curve = match &config.dump {
                None => sim::mc_ltt(
                    &config.condition()?,
                    config.n,
                    &params,
                    &grid,
                    config.reps,
                    config.seed,
                )?,
                Some(path) => {
                    let file = File::create(path)?;
                    let mut w = BufWriter::new(file);
                    let curve = sim::mc_ltt_with_dump(
                        &config.condition()?,
                        config.n,
                        &params,
                        &grid,
                        config.reps,
                        config.seed,
                        Some(&mut w),
                    )?;
                    w.flush()?;
                    curve
                }
            };
            let text = match config.format {
                OutputFormat::Csv => output::curve_to_csv(&curve),
                OutputFormat::Json => output::curve_to_json(&curve, config)?,
            };
            write_artifact(&config.out, &text)
        }
        CommandKind::Verify => {
            let report = verify::run_suite(&quad);
            print!("{}", report.render());
            if report.all_passed() {
                Ok(())
            } else {
                Err(Error::Domain(format!(
                    "{} verification propert{} failed",
                    report.failures(),
                    if report.failures() == 1 { "y" } else { "ies" }
                )))
            }
        }
        CommandKind::Plot => {
            let fig = config.fig.expect("validated");
            let svg = match fig {
                1 => svg::figure1(&quad)?,
                2 => svg::figure2(&quad)?,
                _ => unreachable!("validated"),
            };
            let out = config
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("fig{fig}.svg")));
            output::write_atomic(&out, svg.as_bytes())
        }
    }
}

fn age_density_rows(config: &RunConfig, params: &BirthDeathParams) -> Result<Vec<(f64, f64)>> {
    let t_max = match config.age {
        Some(t) => t,
        None => {
            // 99.9% posterior quantile from the tabulated CDF
            let sampler = sim::AgeSampler::new(config.n, params)?;
            sampler.quantile(0.999)
        }
    };
    let points = config.grid.max(2);
    (1..=points)
        .map(|i| {
            let t = t_max * i as f64 / points as f64;
            analytic::age_density(t, config.n, params).map(|d| (t, d))
        })
        .collect()
}

/// Parses argv and runs; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match CliArgs::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            // clap prints help/version on stdout with success status
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (kind, opts) = match &args.command {
        CliCommand::Expect(o) => (CommandKind::Expect, o),
        CliCommand::Density(o) => (CommandKind::Density, o),
        CliCommand::AgeDensity(o) => (CommandKind::AgeDensity, o),
        CliCommand::Simulate(o) => (CommandKind::Simulate, o),
        CliCommand::Verify(o) => (CommandKind::Verify, o),
        CliCommand::Plot(o) => (CommandKind::Plot, o),
    };
    let config = match RunConfig::resolve(kind, opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match run(&config) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match (&config.command, &e) {
                // verify reports its own summary; any failure is exit 1
                (CommandKind::Verify, _) => 1,
                _ => exit_code(&e),
            }
        }
    }
}
