//! Command-line front end: spec ingestion, subcommand dispatch, structured
//! output.
//!
//! Every run emits exactly one artifact (JSON by default, CSV on request) to
//! stdout or `--out`. Failures produce a machine-readable error object on
//! stderr and a classified exit status: 2 for configuration problems, 3 when
//! the numerics refuse to certify a result.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use capfin::capacity::{solve_capacity, SolverConfig};
use capfin::channel::DiscreteInput;
use capfin::conditions::{check_conditions, DiagnosticsConfig};
use capfin::convergence::{check_theorem1, ConvergenceConfig, DensitySequence};
use capfin::entropy::differential_entropy;
use capfin::moments::make_moment_fn;
use capfin::paperlab::{example1_density, example1_entropy_closed_form, example2_entropy_partial};
use capfin::quadrature::QuadratureConfig;
use capfin::schema::{
    parse_channel_spec, to_json, CapacityDoc, ChannelSpecDoc, ConditionReportDoc, ConvergenceDoc,
    SCHEMA_VERSION,
};
use capfin::Error;

#[derive(Parser)]
#[command(
    name = "capfin",
    version,
    about = "Analyze additive-noise channels: entropies, moment functionals, convergence checks, and constrained capacity"
)]
struct Cli {
    /// Output format for the emitted artifact.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the artifact to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Absolute quadrature tolerance override.
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Relative quadrature tolerance override.
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Differential entropy of the spec's noise density.
    Entropy {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Noise moment E[l_N(|N|)] for the spec's noise-moment function.
    Moment {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Convergence check for the built-in Gaussian sequence N(0, 1 + 1/m).
    Converge {
        /// Largest sequence index; the check samples decade indices up to it.
        #[arg(long, default_value_t = 1000)]
        m: u64,
    },
    /// Mutual information of a uniform input law on an equispaced grid.
    Mi {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 33)]
        grid_points: usize,
        #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
        grid_min: f64,
        #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
        grid_max: f64,
    },
    /// Constrained capacity of the channel in the spec.
    Capacity {
        #[arg(long)]
        spec: PathBuf,
        /// Override the spec's cost budget.
        #[arg(long, allow_negative_numbers = true)]
        budget: Option<f64>,
        #[arg(long)]
        grid_points: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        grid_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        grid_max: Option<f64>,
    },
    /// Audit the finiteness conditions for the channel in the spec.
    Check {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Staircase-density entropy at index m: closed form against quadrature.
    Example1 {
        #[arg(long, default_value_t = 100)]
        m: u64,
    },
    /// Partial entropy sums of the two heavy-tailed discrete laws up to K.
    Example2 {
        #[arg(long = "K", default_value_t = 1000)]
        k: u64,
    },
}

struct CliError {
    code: u8,
    kind: String,
    message: String,
}

impl CliError {
    fn usage(message: String) -> CliError {
        CliError {
            code: 2,
            kind: "usage".into(),
            message,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        let (code, kind) = match e {
            Error::UnknownFamily(_) => (2, "unknown-family"),
            Error::InvalidParameter { .. } => (2, "invalid-parameter"),
            Error::InvalidInput(_) => (2, "invalid-input"),
            Error::SpecValidation(_) => (2, "spec-validation"),
            Error::NonFiniteEvaluation { .. } => (3, "non-finite-evaluation"),
            Error::QuadratureNonConvergence { .. } => (3, "quadrature-non-convergence"),
            Error::SupremumNotCertified(_) => (3, "supremum-not-certified"),
            Error::CostTargetUnreachable { .. } => (3, "cost-target-unreachable"),
            Error::BracketFailure(_) => (3, "bracket-failure"),
            Error::MomentNotFinite { .. } => (3, "moment-not-finite"),
        };
        CliError {
            code,
            kind: kind.into(),
            message: e.to_string(),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody {
    code: u64,
    kind: String,
    message: String,
}

#[derive(Serialize)]
struct ErrorDoc {
    error: ErrorBody,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(
                e.kind(),
                ClapErrorKind::DisplayHelp
                    | ClapErrorKind::DisplayVersion
                    | ClapErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                e.exit();
            }
            return fail(CliError::usage(e.to_string()));
        }
    };
    if let Err(e) = init_threads() {
        return fail(e);
    }
    let out = cli.out.clone();
    match run(cli) {
        Ok(artifact) => {
            if let Some(path) = out {
                if let Err(e) = fs::write(&path, &artifact) {
                    return fail(CliError {
                        code: 2,
                        kind: "io".into(),
                        message: format!("cannot write {}: {e}", path.display()),
                    });
                }
            } else {
                print!("{artifact}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    let doc = ErrorDoc {
        error: ErrorBody {
            code: e.code as u64,
            kind: e.kind,
            message: e.message,
        },
    };
    eprint!("{}", to_json(&doc));
    ExitCode::from(e.code)
}

/// CAPFIN_THREADS caps rayon's worker count for the whole process.
fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("CAPFIN_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        CliError::usage(format!(
            "CAPFIN_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    // A second initialization can only happen in-process (tests); ignore it.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn run(cli: Cli) -> Result<String, CliError> {
    let mut quad = QuadratureConfig::default();
    if let Some(a) = cli.abs_tol {
        quad.abs_tol = a;
    }
    if let Some(r) = cli.rel_tol {
        quad.rel_tol = r;
    }

    match cli.cmd {
        Cmd::Entropy { spec } => {
            let doc = load_spec(&spec)?;
            let ch = doc.build(&quad)?;
            let value = differential_entropy(ch.noise(), &quad)?;
            emit_scalar(cli.format, doc, "noise_entropy", value)
        }
        Cmd::Moment { spec } => {
            let doc = load_spec(&spec)?;
            let ch = doc.build(&quad)?;
            emit_scalar(
                cli.format,
                doc,
                "noise_moment_value",
                ch.noise_moment_value(),
            )
        }
        Cmd::Converge { m } => {
            if m < 1 {
                return Err(CliError::usage("--m must be at least 1".into()));
            }
            let mut m_list: Vec<u64> = Vec::new();
            let mut decade = 1u64;
            while decade <= m {
                m_list.push(decade);
                decade = decade.saturating_mul(10);
            }
            if *m_list.last().unwrap() != m {
                m_list.push(m);
            }
            let l = make_moment_fn("log_power", &[2.0])?;
            let cfg = ConvergenceConfig {
                quadrature: quad,
                ..ConvergenceConfig::default()
            };
            let report = check_theorem1(&DensitySequence::gaussian_scale(), &l, &m_list, &cfg)?;
            let doc = ConvergenceDoc::new(&report);
            Ok(match cli.format {
                Format::Json => to_json(&doc),
                Format::Csv => {
                    let mut s = String::from("m,pointwise_max_gap,entropy\n");
                    for (gap, ent) in doc.pointwise_max_gap.iter().zip(&doc.entropy_sequence) {
                        let _ = writeln!(s, "{},{},{}", gap.m, gap.value, ent.value);
                    }
                    s
                }
            })
        }
        Cmd::Mi {
            spec,
            grid_points,
            grid_min,
            grid_max,
        } => {
            let doc = load_spec(&spec)?;
            let ch = doc.build(&quad)?;
            let input = DiscreteInput::uniform_on(equispaced(grid_min, grid_max, grid_points)?)?;
            let mutual_information = ch.mutual_information(&input, &quad)?;
            let input_cost = ch.input_cost(&input);
            #[derive(Serialize)]
            struct MiDoc {
                schema: u64,
                channel: ChannelSpecDoc,
                grid_min: f64,
                grid_max: f64,
                grid_points: usize,
                mutual_information: f64,
                input_cost: f64,
                feasible: bool,
            }
            let out = MiDoc {
                schema: SCHEMA_VERSION,
                channel: doc.normalized(),
                grid_min,
                grid_max,
                grid_points,
                mutual_information,
                input_cost,
                feasible: ch.is_feasible(&input),
            };
            Ok(match cli.format {
                Format::Json => to_json(&out),
                Format::Csv => format!(
                    "mutual_information,input_cost,feasible\n{},{},{}\n",
                    out.mutual_information, out.input_cost, out.feasible
                ),
            })
        }
        Cmd::Capacity {
            spec,
            budget,
            grid_points,
            grid_min,
            grid_max,
        } => {
            let mut doc = load_spec(&spec)?;
            if let Some(a) = budget {
                doc = doc.with_budget(a);
            }
            let mut cfg = SolverConfig::default();
            if let Some(a) = cli.abs_tol {
                cfg.quadrature.abs_tol = a;
            }
            if let Some(r) = cli.rel_tol {
                cfg.quadrature.rel_tol = r;
            }
            if let Some(n) = grid_points {
                cfg.grid_points = n;
            }
            if let Some(x) = grid_min {
                cfg.grid_min = x;
            }
            if let Some(x) = grid_max {
                cfg.grid_max = x;
            }
            let ch = doc.build(&cfg.quadrature)?;
            let result = solve_capacity(&ch, &cfg)?;
            let out = CapacityDoc::new(doc, &result);
            Ok(match cli.format {
                Format::Json => to_json(&out),
                Format::Csv => format!(
                    "capacity_estimate,discretized_estimate,multiplier,achieved_cost,iterations,saturated\n{},{},{},{},{},{}\n",
                    out.capacity_estimate,
                    out.discretized_estimate,
                    out.multiplier,
                    out.achieved_cost,
                    out.iterations,
                    out.saturated
                ),
            })
        }
        Cmd::Check { spec } => {
            let doc = load_spec(&spec)?;
            let ch = doc.build(&quad)?;
            let diag = DiagnosticsConfig {
                quadrature: quad,
                ..DiagnosticsConfig::default()
            };
            let report = check_conditions(&ch, &diag);
            let out = ConditionReportDoc::new(doc, &report);
            Ok(match cli.format {
                Format::Json => to_json(&out),
                Format::Csv => {
                    let mut s = String::from("condition,status\n");
                    for c in &out.conditions {
                        let _ = writeln!(s, "{},{}", c.name, c.status);
                    }
                    let _ = writeln!(
                        s,
                        "overall,{}",
                        if out.overall {
                            "acceptable"
                        } else {
                            "rejected"
                        }
                    );
                    s
                }
            })
        }
        Cmd::Example1 { m } => {
            let closed_form = example1_entropy_closed_form(m);
            let quadrature = differential_entropy(&example1_density(m)?, &quad)?;
            #[derive(Serialize)]
            struct Example1Doc {
                schema: u64,
                m: u64,
                closed_form: f64,
                quadrature: f64,
                gap: f64,
            }
            let out = Example1Doc {
                schema: SCHEMA_VERSION,
                m,
                closed_form,
                quadrature,
                gap: (closed_form - quadrature).abs(),
            };
            Ok(match cli.format {
                Format::Json => to_json(&out),
                Format::Csv => format!(
                    "m,closed_form,quadrature,gap\n{},{},{},{}\n",
                    out.m, out.closed_form, out.quadrature, out.gap
                ),
            })
        }
        Cmd::Example2 { k } => {
            #[derive(Serialize)]
            struct Row {
                i: u32,
                k_max: u64,
                partial_entropy: f64,
            }
            #[derive(Serialize)]
            struct Example2Doc {
                schema: u64,
                rows: Vec<Row>,
            }
            let mut rows = Vec::new();
            for i in [1u32, 2] {
                rows.push(Row {
                    i,
                    k_max: k,
                    partial_entropy: example2_entropy_partial(i, k)?,
                });
            }
            let out = Example2Doc {
                schema: SCHEMA_VERSION,
                rows,
            };
            Ok(match cli.format {
                Format::Json => to_json(&out),
                Format::Csv => {
                    let mut s = String::from("i,k_max,partial_entropy\n");
                    for r in &out.rows {
                        let _ = writeln!(s, "{},{},{}", r.i, r.k_max, r.partial_entropy);
                    }
                    s
                }
            })
        }
    }
}

fn load_spec(path: &PathBuf) -> Result<ChannelSpecDoc, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError {
        code: 2,
        kind: "io".into(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    Ok(parse_channel_spec(&text)?)
}

fn equispaced(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(CliError::usage(format!(
            "grid bounds must be finite with grid_min < grid_max, got [{lo}, {hi}]"
        )));
    }
    if n < 2 {
        return Err(CliError::usage("grid needs at least 2 points".into()));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|i| lo + step * i as f64).collect())
}

/// JSON + CSV emission for subcommands whose artifact is one named number.
fn emit_scalar(
    format: Format,
    doc: ChannelSpecDoc,
    name: &str,
    value: f64,
) -> Result<String, CliError> {
    #[derive(Serialize)]
    struct ScalarDoc {
        schema: u64,
        channel: ChannelSpecDoc,
        quantity: String,
        value: f64,
    }
    let out = ScalarDoc {
        schema: SCHEMA_VERSION,
        channel: doc.normalized(),
        quantity: name.into(),
        value,
    };
    Ok(match format {
        Format::Json => to_json(&out),
        Format::Csv => format!("quantity,value\n{},{}\n", out.quantity, out.value),
    })
}
