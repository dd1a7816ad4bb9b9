//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{certify, monotonicity_check};
use crate::error::{Error, Result};
use crate::family::{Grid, MapFamily};
use crate::io::{read_transfer, to_canonical_json};
use crate::linalg::rank;
use crate::models::{parse_model, presets, ModelSpec};
use crate::propagator::{propagate_family, propagator_family, tp_inverse_family, InverseRule};
use crate::reproduce::{reproduce, BatteryReport, Settings};
use crate::search::{cptp_search, SearchConfig};
use crate::tol::Tolerances;

#[derive(Debug, Parser)]
#[command(name = "divprop", version, about = "Propagators of divisible quantum dynamical maps")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunConfig {
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol_rank: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol_psd: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_mono: f64,
    #[arg(long, global = true, env = "DIVPROP_SEED", default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 500)]
    pub samples: usize,
    /// Time grid `start:stop:steps`.
    #[arg(long, global = true)]
    pub grid: Option<Grid>,
    /// Search the trace-preserving propagator family for CPTP members.
    #[arg(long, global = true)]
    pub search: bool,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tol_rank: 1e-10,
            tol_psd: 1e-9,
            tol_mono: 1e-8,
            seed: 42,
            samples: 500,
            grid: None,
            search: false,
            out: None,
            format: None,
        }
    }
}

impl RunConfig {
    pub fn tolerances(&self) -> Result<Tolerances> {
        for (name, v) in [("tol-rank", self.tol_rank), ("tol-psd", self.tol_psd), ("tol-mono", self.tol_mono)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parse(format!("--{name} must be positive, got {v}")));
            }
        }
        Ok(Tolerances { tol_rank: self.tol_rank, tol_psd: self.tol_psd, tol_mono: self.tol_mono, ..Tolerances::default() })
    }

    fn settings(&self) -> Result<Settings> {
        Ok(Settings { seed: self.seed, samples: self.samples, tol: self.tolerances()? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Rule {
    Mp,
    Spectral,
    Kernel,
    DualKernel,
    Tp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Rank,
    MinChoiEig,
    TraceNorms,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify a transfer matrix read from JSON.
    Analyze { path: PathBuf },
    /// Propagator `V_{t,s}` of a model.
    Propagate {
        /// Preset name or path to a model JSON file.
        model: String,
        s: f64,
        t: f64,
        #[arg(long, value_enum, default_value_t = Rule::Mp)]
        rule: Rule,
        /// Parameters of the trace-preserving rule, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        params: Vec<f64>,
    },
    /// Run the check battery of a worked example.
    Reproduce { example: String },
    /// Tabulate a quantity over a time grid.
    Sweep {
        model: String,
        #[arg(value_enum)]
        quantity: Quantity,
    },
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub body: String,
    pub summary: String,
    pub exit_code: i32,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_BATTERY: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Io(_) | Error::Json(_) => EXIT_PARSE,
        _ => EXIT_DOMAIN,
    }
}

pub fn load_model(spec: &str) -> Result<ModelSpec> {
    if let Some(m) = presets::by_name(spec) {
        return Ok(m);
    }
    let path = Path::new(spec);
    if !path.exists() {
        let names: Vec<&str> = presets::all().iter().map(|(n, _)| *n).collect();
        return Err(Error::Parse(format!("'{spec}' is neither a preset ({}) nor a file", names.join(", "))));
    }
    parse_model(&std::fs::read_to_string(path)?)
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = to_canonical_json(v)?;
    s.push('\n');
    Ok(s)
}

pub fn cmd_analyze(path: &Path, cfg: &RunConfig) -> Result<Output> {
    let t = read_transfer(path)?;
    let c = certify(&t, &cfg.tolerances()?);
    let summary = format!(
        "{} -> {}: rank {}, TP {}, CP {} (min Choi eigenvalue {:.3e})\n",
        c.dim_in,
        c.dim_out,
        c.rank,
        yes(c.trace_preserving),
        yes(c.completely_positive),
        c.min_choi_eigenvalue
    );
    Ok(Output { body: json(&c)?, summary, exit_code: EXIT_OK })
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn cmd_propagate(model: &ModelSpec, s: f64, t: f64, rule: Rule, params: &[f64], cfg: &RunConfig) -> Result<Output> {
    let tol = cfg.tolerances()?;
    let rule = match rule {
        Rule::Mp => InverseRule::MoorePenrose,
        Rule::Spectral => InverseRule::Spectral,
        Rule::Kernel => InverseRule::KernelComplement,
        Rule::DualKernel => InverseRule::DualKernelComplement,
        Rule::Tp => {
            let n = tp_inverse_family(&model.transfer_at(s)?, &tol)?.len();
            if params.is_empty() {
                InverseRule::TracePreserving(vec![0.0; n])
            } else {
                InverseRule::TracePreserving(params.to_vec())
            }
        }
    };
    let mut report = propagate_family(model, &rule, s, t, &tol)?;
    if cfg.search {
        let (ts, tt) = (model.transfer_at(s)?, model.transfer_at(t)?);
        let fam = propagator_family(&tt, &ts, &tp_inverse_family(&ts, &tol)?, &tol)?;
        let search = SearchConfig { seed: cfg.seed, tol_psd: tol.tol_psd, ..SearchConfig::default() };
        report.uniqueness = cptp_search(&fam, &search)?.uniqueness;
    }
    let c = &report.certificate;
    let summary = format!(
        "V_{{t,s}} at s = {s}, t = {t} ({}): rank {}, TP {}, CP {}, residual {:.3e}, uniqueness {}\n",
        rule.label(),
        c.rank,
        yes(c.trace_preserving),
        yes(c.completely_positive),
        report.propagation_residual,
        report.uniqueness.label()
    );
    Ok(Output { body: json(&report)?, summary, exit_code: EXIT_OK })
}

pub fn cmd_reproduce(example: &str, cfg: &RunConfig) -> Result<Output> {
    let report: BatteryReport = reproduce(example, &cfg.settings()?)?;
    Ok(Output {
        body: json(&report)?,
        summary: report.summary(),
        exit_code: if report.passed { EXIT_OK } else { EXIT_BATTERY },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SweepRow {
    s: Option<f64>,
    t: f64,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SweepTable {
    quantity: &'static str,
    columns: Vec<String>,
    rows: Vec<SweepRow>,
}

impl SweepTable {
    fn csv(&self) -> String {
        let mut out = String::from("s,t");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.s.map_or(String::new(), |s| format!("{s:.16e}")));
            out.push_str(&format!(",{:.16e}", r.t));
            for v in &r.values {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn cmd_sweep(model: &ModelSpec, quantity: Quantity, cfg: &RunConfig) -> Result<Output> {
    use rayon::prelude::*;
    let tol = cfg.tolerances()?;
    let grid = cfg.grid.ok_or_else(|| Error::Parse("sweep needs --grid start:stop:steps".into()))?;
    let times = grid.points();
    let table = match quantity {
        Quantity::Rank => SweepTable {
            quantity: "rank",
            columns: vec!["rank".into()],
            rows: times
                .par_iter()
                .map(|&t| {
                    let r = rank(model.transfer_at(t)?.matrix(), tol.tol_rank);
                    Ok(SweepRow { s: None, t, values: vec![r as f64] })
                })
                .collect::<Result<_>>()?,
        },
        Quantity::MinChoiEig => {
            let pairs: Vec<(f64, f64)> = times
                .iter()
                .enumerate()
                .flat_map(|(i, &s)| times[i + 1..].iter().map(move |&t| (s, t)))
                .collect();
            SweepTable {
                quantity: "min-choi-eig",
                columns: vec!["min_choi_eigenvalue".into()],
                rows: pairs
                    .par_iter()
                    .map(|&(s, t)| {
                        let v = propagate_family(model, &InverseRule::MoorePenrose, s, t, &tol)?;
                        Ok(SweepRow { s: Some(s), t, values: vec![v.certificate.min_choi_eigenvalue] })
                    })
                    .collect::<Result<_>>()?,
            }
        }
        Quantity::TraceNorms => {
            let report = monotonicity_check(model, model.dim(), cfg.samples, &times, cfg.seed, &tol)?;
            SweepTable {
                quantity: "trace-norms",
                columns: (0..cfg.samples).map(|i| format!("x{i}")).collect(),
                rows: times
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| SweepRow { s: None, t, values: report.norms.iter().map(|n| n[k]).collect() })
                    .collect(),
            }
        }
    };
    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => table.csv(),
        Format::Json => json(&table)?,
    };
    let summary = format!("{} rows of {}\n", table.rows.len(), table.quantity);
    Ok(Output { body, summary, exit_code: EXIT_OK })
}

pub fn run(cli: &Cli) -> Result<Output> {
    let cfg = &cli.config;
    if cfg.format == Some(Format::Csv) && !matches!(cli.command, Command::Sweep { .. }) {
        return Err(Error::Parse("csv output is only available for sweep".into()));
    }
    let out = match &cli.command {
        Command::Analyze { path } => cmd_analyze(path, cfg)?,
        Command::Propagate { model, s, t, rule, params } => cmd_propagate(&load_model(model)?, *s, *t, *rule, params, cfg)?,
        Command::Reproduce { example } => cmd_reproduce(example, cfg)?,
        Command::Sweep { model, quantity } => cmd_sweep(&load_model(model)?, *quantity, cfg)?,
    };
    if let Some(path) = &cfg.out {
        std::fs::write(path, &out.body)?;
    }
    Ok(out)
}
