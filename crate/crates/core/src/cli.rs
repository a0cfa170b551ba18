//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, OutputFormat, RunConfig};
use crate::empirical::{evaluate_all, ModelRow};
use crate::error::Error;
use crate::gg1::{self, Gg1Inputs, MeanDelayReport};
use crate::sim::{self, dominance_report, empirical_ccdf, DominanceReport, EmpiricalCcdf, SimResult, TrafficPattern};
use crate::snc::{optimize_delay_ccdf, DelayCcdf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_OVERLOAD: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "linkdelay", version, about = "Delay analysis of a lossy retransmitting wireless link")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; defaults apply to every missing key.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<OutputFormat>,
    /// Per-packet trace CSV (simulate only).
    #[arg(long, global = true)]
    pub trace: Option<PathBuf>,
    /// Writes the effective configuration to this path before running.
    #[arg(long, global = true)]
    pub dump_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Evaluate the fitted empirical models.
    Models,
    /// Mean delay through the equivalent G/G/1 queue.
    MeanDelay,
    /// Optimised delay CCDF bound.
    DelayBound,
    /// Simulate the link and tabulate the empirical delay CCDF.
    Simulate,
    /// Compare analysis against simulation.
    Validate,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Model(Error),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("validation failed")]
    ValidationFailed,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } => CliError::Config(ConfigError::Invalid(e)),
            other => CliError::Model(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Model(Error::Overloaded { .. } | Error::Overload | Error::StabilityViolation { .. }) => {
                EXIT_OVERLOAD
            }
            CliError::Model(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::ValidationFailed => EXIT_VALIDATION,
        }
    }
}

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    if let Some(o) = &cli.out {
        cfg.output.path = Some(o.display().to_string());
    }
    cfg.validate().map_err(ConfigError::Invalid)?;
    Ok(cfg)
}

/// Runs one invocation; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            if !matches!(e, CliError::ValidationFailed) {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    if let Some(p) = &cli.dump_config {
        std::fs::write(p, cfg.to_json() + "\n")?;
    }
    let mut out: Box<dyn Write> = match &cfg.output.path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let res = match cli.command {
        Command::Models => cmd_models(&cfg, &mut out),
        Command::MeanDelay => cmd_mean_delay(&cfg, &mut out),
        Command::DelayBound => cmd_delay_bound(&cfg, &mut out),
        Command::Simulate => cmd_simulate(&cfg, cli.trace.as_ref(), &mut out),
        Command::Validate => cmd_validate(&cfg, &mut out),
    };
    out.flush()?;
    res
}

fn write_json<T: Serialize>(out: &mut dyn Write, v: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn cmd_models(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let row: ModelRow = evaluate_all(&cfg.link, &cfg.per_coeffs, &cfg.moment_coeffs)?;
    match cfg.output.format {
        OutputFormat::Json => write_json(out, &row),
        OutputFormat::Csv => {
            writeln!(out, "per,mean_t_ms,var_t_ms2,plr_mean,plr_var,lambda_per_ms,var_a")?;
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.per, row.mean_t_ms, row.var_t_ms2, row.plr_mean, row.plr_var, row.lambda_per_ms, row.var_a
            )?;
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanDelayRoutes {
    /// Fitted moment models.
    pub empirical: MeanDelayReport,
    /// Exact retransmission distribution at the modelled PER.
    pub distribution: MeanDelayReport,
}

pub fn mean_delay_routes(cfg: &RunConfig) -> Result<MeanDelayRoutes, Error> {
    let emp = gg1::report(&Gg1Inputs::from_empirical(&cfg.link, &cfg.moment_coeffs)?)?;
    let dist = cfg.distribution()?;
    let exact = gg1::report(&Gg1Inputs::from_distribution(&dist, cfg.link.t_pit_ms)?)?;
    Ok(MeanDelayRoutes {
        empirical: emp,
        distribution: exact,
    })
}

pub fn cmd_mean_delay(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let routes = mean_delay_routes(cfg)?;
    match cfg.output.format {
        OutputFormat::Json => write_json(out, &routes),
        OutputFormat::Csv => {
            writeln!(out, "route,lambda_per_ms,var_a,mean_t_ms,var_t_ms2,rho,waiting_ms,mean_delay_ms")?;
            for (name, r) in [("empirical", &routes.empirical), ("distribution", &routes.distribution)] {
                let i = &r.inputs;
                writeln!(
                    out,
                    "{name},{},{},{},{},{},{},{}",
                    i.lambda, i.var_a, i.mean_t, i.var_t, r.rho, r.waiting_ms, r.mean_delay_ms
                )?;
            }
            Ok(())
        }
    }
}

pub fn delay_bound(cfg: &RunConfig) -> Result<DelayCcdf, Error> {
    let dist = cfg.distribution()?;
    optimize_delay_ccdf(
        &cfg.traffic_model(),
        &dist,
        cfg.packet_bits(),
        &cfg.delay_grid,
        &cfg.theta_grid,
    )
}

fn write_bound_csv(out: &mut dyn Write, b: &DelayCcdf) -> io::Result<()> {
    writeln!(out, "delay_ms,bound_prob,theta_opt")?;
    for p in &b.points {
        writeln!(out, "{},{},{}", p.delay_ms, p.prob, opt(p.theta))?;
    }
    Ok(())
}

pub fn cmd_delay_bound(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let b = delay_bound(cfg)?;
    match cfg.output.format {
        OutputFormat::Json => write_json(out, &b),
        OutputFormat::Csv => Ok(write_bound_csv(out, &b)?),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimSummary {
    pub seed: u64,
    pub p_e: f64,
    pub n_arrivals: u64,
    pub n_delivered: u64,
    pub n_queue_drops: u64,
    pub n_retry_drops: u64,
    pub queue_drop_fraction: f64,
    pub retry_drop_fraction: f64,
    pub loss_fraction: f64,
    pub mean_delay_ms: Option<f64>,
}

impl SimSummary {
    pub fn new(r: &SimResult, p_e: f64) -> Self {
        let n = r.n_arrivals.max(1) as f64;
        Self {
            seed: r.seed.unwrap_or_default(),
            p_e,
            n_arrivals: r.n_arrivals,
            n_delivered: r.n_delivered,
            n_queue_drops: r.n_queue_drops,
            n_retry_drops: r.n_retry_drops,
            queue_drop_fraction: r.n_queue_drops as f64 / n,
            retry_drop_fraction: r.n_retry_drops as f64 / n,
            loss_fraction: r.loss_fraction(),
            mean_delay_ms: r.mean_delay(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct SimulateOutput {
    summary: SimSummary,
    ccdf: EmpiricalCcdf,
}

pub fn simulate(cfg: &RunConfig, seed: u64, trace: Option<&mut dyn Write>) -> Result<SimResult, CliError> {
    let dist = cfg.distribution()?;
    match trace {
        None => Ok(sim::run(&cfg.traffic, &cfg.link, &dist, seed, |_| {})?),
        Some(w) => {
            writeln!(w, "{}", sim::TRACE_HEADER)?;
            let mut err = None;
            let r = sim::run(&cfg.traffic, &cfg.link, &dist, seed, |rec| {
                if err.is_none() {
                    if let Err(e) = sim::write_trace_row(w, rec) {
                        err = Some(e);
                    }
                }
            })?;
            match err {
                Some(e) => Err(e.into()),
                None => Ok(r),
            }
        }
    }
}

pub fn cmd_simulate(cfg: &RunConfig, trace: Option<&PathBuf>, out: &mut dyn Write) -> Result<(), CliError> {
    let res = match trace {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            let r = simulate(cfg, cfg.seed, Some(&mut w))?;
            w.flush()?;
            r
        }
        None => simulate(cfg, cfg.seed, None)?,
    };
    let summary = SimSummary::new(&res, cfg.p_e());
    let ccdf = empirical_ccdf(&res.delivered_delays, &cfg.delay_grid);
    match cfg.output.format {
        OutputFormat::Json => write_json(out, &SimulateOutput { summary, ccdf }),
        OutputFormat::Csv => {
            eprintln!(
                "seed={} arrivals={} delivered={} queue_drops={} retry_drops={} loss_fraction={} mean_delay_ms={}",
                summary.seed,
                summary.n_arrivals,
                summary.n_delivered,
                summary.n_queue_drops,
                summary.n_retry_drops,
                summary.loss_fraction,
                opt(summary.mean_delay_ms)
            );
            writeln!(out, "delay_ms,fraction,upper99")?;
            for p in &ccdf.points {
                writeln!(out, "{},{},{}", p.delay_ms, p.fraction, p.upper)?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanDelayCheck {
    pub simulated_ms: f64,
    pub analytic_ms: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicationReport {
    pub seed: u64,
    pub summary: SimSummary,
    /// `None` when the traffic is not periodic: the equivalent queue is
    /// parameterised by a nominal inter-arrival time.
    pub mean_delay: Option<MeanDelayCheck>,
    pub dominance: DominanceReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub replications: Vec<ReplicationReport>,
}

pub fn validate(cfg: &RunConfig) -> Result<ValidationReport, CliError> {
    let bound = delay_bound(cfg)?;
    let analytic = match cfg.traffic.pattern {
        TrafficPattern::Periodic { t_pit_ms } => {
            let dist = cfg.distribution()?;
            Some(gg1::mean_delay(&Gg1Inputs::from_distribution(&dist, t_pit_ms)?)?)
        }
        _ => None,
    };
    let seeds: Vec<u64> = (0..u64::from(cfg.validation.replications))
        .map(|i| cfg.seed.wrapping_add(i))
        .collect();
    let reps = seeds
        .par_iter()
        .map(|&seed| -> Result<ReplicationReport, CliError> {
            let res = simulate(cfg, seed, None)?;
            let emp = empirical_ccdf(&res.delivered_delays, &cfg.delay_grid);
            let dominance = dominance_report(&emp, &bound, cfg.validation.min_bound_prob)?;
            let mean_delay = analytic.map(|a| {
                let s = res.mean_delay().unwrap_or(f64::NAN);
                let rel = ((s - a) / a).abs();
                MeanDelayCheck {
                    simulated_ms: s,
                    analytic_ms: a,
                    relative_error: rel,
                    tolerance: cfg.validation.mean_delay_tolerance,
                    passed: rel <= cfg.validation.mean_delay_tolerance,
                }
            });
            Ok(ReplicationReport {
                seed,
                summary: SimSummary::new(&res, cfg.p_e()),
                mean_delay,
                dominance,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let passed = reps
        .iter()
        .all(|r| r.dominance.passed() && r.mean_delay.as_ref().is_none_or(|m| m.passed));
    Ok(ValidationReport {
        passed,
        replications: reps,
    })
}

pub fn cmd_validate(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let report = validate(cfg)?;
    match cfg.output.format {
        OutputFormat::Json => write_json(out, &report)?,
        OutputFormat::Csv => {
            writeln!(out, "seed,check,value,reference,passed")?;
            for r in &report.replications {
                if let Some(m) = &r.mean_delay {
                    writeln!(
                        out,
                        "{},mean_delay_rel_error,{},{},{}",
                        r.seed, m.relative_error, m.tolerance, m.passed
                    )?;
                }
                writeln!(
                    out,
                    "{},dominance_violations,{},{},{}",
                    r.seed,
                    r.dominance.violations.len(),
                    r.dominance.checked,
                    r.dominance.passed()
                )?;
            }
        }
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::ValidationFailed)
    }
}
