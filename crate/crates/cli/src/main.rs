//! `cglmp`: command-line front end for the CGLMP toolkit.
//!
//! Reports go to stdout as JSON, tables as CSV; `--out` writes atomically to
//! a file instead. Exit status is 0 on success, 2 for invalid input and 1
//! for anything else.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cglmp::analysis::DEFAULT_REPLICATES;
use cglmp::io::{round_sig, write_atomic};
use cglmp::photon::{multiphoton_lambda, multiphoton_visibility};
use cglmp::scan::{scan_fringe, uniform_grid, write_scan_csv};
use cglmp::{
    analyze_counts, critical_lambda, critical_visibility, dataset, lm_fit, optimize_state,
    quantum_table, s_value, BipartiteState, CountTable, FitOptions, FringeKind, FringeModel,
    FringePoint, SimulationConfig, Weighting,
};

#[derive(Parser)]
#[command(
    name = "cglmp",
    version,
    about = "CGLMP Bell tests with time-bin entangled qudits"
)]
struct Cli {
    /// Significant digits for numeric output.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..=17))]
    precision: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ideal-state predictions.
    #[command(subcommand)]
    Theory(Theory),
    /// Analyze measured coincidence counts.
    #[command(subcommand)]
    Analyze(Analyze),
    /// Monte Carlo photon-counting run from a JSON config; writes a count CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit measured fringes.
    #[command(subcommand)]
    Fit(Fit),
    /// Tabulate model fringes.
    #[command(subcommand)]
    Scan(Scan),
    /// Embedded measured datasets.
    #[command(subcommand)]
    Datasets(Datasets),
}

#[derive(Clone, Copy, ValueEnum)]
enum StateChoice {
    /// Maximally entangled state.
    Mes,
    /// State maximizing S_d.
    Oes,
}

#[derive(Subcommand)]
enum Theory {
    /// S_d of an ideal state.
    Smax {
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum)]
        state: StateChoice,
    },
    /// Bell-operator eigenvector maximizing S_d.
    Optimize {
        #[arg(long)]
        d: usize,
    },
    /// White-noise and visibility thresholds for a ququart fringe model.
    Threshold(ModelArgs),
    /// Multi-pair visibility and noise weight at mean pair number mu.
    Multiphoton {
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
}

#[derive(Args, Clone, Copy)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: ModelChoice,
    /// Modulation factor of the (1, γ, γ, 1) state; oes only.
    #[arg(long, default_value_t = 0.739)]
    gamma: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelChoice {
    Mes,
    Oes,
}

impl ModelArgs {
    fn build(&self) -> cglmp::Result<FringeModel> {
        let kind = match self.model {
            ModelChoice::Mes => FringeKind::Mes,
            ModelChoice::Oes => FringeKind::Oes,
        };
        FringeModel::new(kind, self.gamma)
    }
}

#[derive(Subcommand)]
enum Analyze {
    /// S_d with Poisson bootstrap error from a count table.
    S4 {
        #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
        counts: Option<PathBuf>,
        /// Embedded dataset instead of a file.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, default_value_t = DEFAULT_REPLICATES)]
        bootstrap: usize,
        #[arg(long, env = "CGLMP_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Fit {
    /// Levenberg-Marquardt fit of m1, m2 to a `theta_a,theta_b,counts` CSV.
    Fringe {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Poisson weights (variance = model) instead of uniform.
        #[arg(long)]
        weighted: bool,
        /// Fit γ as a third parameter (oes only).
        #[arg(long)]
        fit_gamma: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Scan {
    /// Model fringe on a θ_A × θ_B grid.
    Fringe {
        #[command(flatten)]
        model: ModelArgs,
        /// θ_A points spanning [0, 2π].
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// θ_B values k·2π/N for k < N.
        #[arg(long, default_value_t = 1, conflicts_with = "theta_b")]
        theta_b_points: usize,
        /// Explicit θ_B values in radians.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta_b: Option<Vec<f64>>,
        /// Fringe amplitude; adds a counts column together with --m2.
        #[arg(long, requires = "m2")]
        m1: Option<f64>,
        #[arg(long, requires = "m1")]
        m2: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Datasets {
    /// Write an embedded count table as CSV.
    Export {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Rounds every float in `value` to `digits` significant digits.
fn round_json(value: Value, digits: u32) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"), digits);
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => {
            Value::Array(items.into_iter().map(|v| round_json(v, digits)).collect())
        }
        Value::Object(map) => Value::Object(
            map.into_iter()
                .map(|(k, v)| (k, round_json(v, digits)))
                .collect(),
        ),
        other => other,
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes())
            .with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(value: Value, precision: u32, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&round_json(value, precision))?;
    text.push('\n');
    emit(&text, out)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn theory(cmd: Theory, precision: u32) -> Result<()> {
    let report = match cmd {
        Theory::Smax { d, state } => {
            let (name, s, gamma) = match state {
                StateChoice::Mes => {
                    let psi = BipartiteState::maximally_entangled(d)?;
                    ("mes", s_value(&quantum_table(&psi)?).value, None)
                }
                StateChoice::Oes => {
                    let opt = optimize_state(d)?;
                    ("oes", opt.max_s, (d == 4).then(|| opt.gamma()))
                }
            };
            json!({ "d": d, "state": name, "s": s, "gamma": gamma, "local_bound": 2.0 })
        }
        Theory::Optimize { d } => {
            let opt = optimize_state(d)?;
            json!({
                "d": d,
                "max_s": opt.max_s,
                "schmidt_coefficients": opt.schmidt_coefficients(),
                "gamma": opt.gamma(),
                "max_off_diagonal": opt.state.max_off_diagonal(),
                "degeneracy": opt.degeneracy,
                "iterations": opt.iterations,
            })
        }
        Theory::Threshold(args) => {
            let model = args.build()?;
            let state = model.state()?;
            json!({
                "model": model.kind().to_string(),
                "gamma": model.gamma(),
                "s": s_value(&quantum_table(&state)?).value,
                "critical_lambda": critical_lambda(&state)?,
                "delta_p": model.delta_p(),
                "critical_visibility": critical_visibility(&model)?,
            })
        }
        Theory::Multiphoton { mu, gamma } => {
            let lambda = multiphoton_lambda(mu)?;
            let state = BipartiteState::gamma_state(gamma)?;
            let s = s_value(&quantum_table(&state)?).value;
            json!({
                "mu": mu,
                "gamma": gamma,
                "visibility": multiphoton_visibility(mu, gamma)?,
                "lambda": lambda,
                "predicted_s": lambda * s,
            })
        }
    };
    emit_json(report, precision, None)
}

fn analyze(cmd: Analyze, precision: u32) -> Result<()> {
    let Analyze::S4 {
        counts,
        dataset: name,
        bootstrap,
        seed,
        out,
    } = cmd;
    let (source, table) = match (counts, name) {
        (Some(path), _) => (
            path.display().to_string(),
            CountTable::parse_csv(&read(&path)?)?,
        ),
        (None, Some(name)) => (format!("dataset:{name}"), dataset(&name)?),
        (None, None) => unreachable!("clap requires one source"),
    };
    let report = analyze_counts(&table, bootstrap, seed)?;
    let mut value = serde_json::to_value(&report)?;
    value["source"] = json!(source);
    value["dim"] = json!(table.dim());
    value["block_totals"] = json!((0..4)
        .map(|i| table.block_total(i / 2, i % 2))
        .collect::<Vec<_>>());
    emit_json(value, precision, out.as_deref())
}

fn simulate(config: &Path, out: &Path, precision: u32) -> Result<()> {
    let config = SimulationConfig::from_json(&read(config)?)?;
    let table = config.run()?;
    table.save(out)?;
    let blocks: Vec<u64> = (0..4).map(|i| table.block_total(i / 2, i % 2)).collect();
    emit_json(
        json!({ "out": out.display().to_string(), "dim": table.dim(), "total": table.total(), "block_totals": blocks }),
        precision,
        None,
    )
}

fn fit(cmd: Fit, precision: u32) -> Result<()> {
    let Fit::Fringe {
        data,
        model,
        weighted,
        fit_gamma,
        out,
    } = cmd;
    let points = FringePoint::parse_csv(&read(&data)?)?;
    let options = FitOptions {
        weighting: if weighted {
            Weighting::Poisson
        } else {
            Weighting::Uniform
        },
        fit_gamma,
        ..Default::default()
    };
    let result = lm_fit(&points, &model.build()?, &options)?;
    let mut value = serde_json::to_value(&result)?;
    value["m1_stderr"] = json!(result.m1_stderr());
    value["m2_stderr"] = json!(result.m2_stderr());
    if let Some(s) = result.gamma_stderr() {
        value["gamma_stderr"] = json!(s);
    }
    emit_json(value, precision, out.as_deref())
}

fn scan(cmd: Scan, precision: u32) -> Result<()> {
    let Scan::Fringe {
        model,
        points,
        theta_b_points,
        theta_b,
        m1,
        m2,
        out,
    } = cmd;
    let model = model.build()?;
    let theta_a = uniform_grid(0.0, 2.0 * PI, points)?;
    let theta_b = match theta_b {
        Some(values) => values,
        None if theta_b_points == 0 => Err(cglmp::Error::Config(
            "--theta-b-points must be positive".into(),
        ))?,
        None => (0..theta_b_points)
            .map(|k| 2.0 * PI * k as f64 / theta_b_points as f64)
            .collect(),
    };
    let rows = scan_fringe(&model, &theta_a, &theta_b, m1.zip(m2));
    let mut buf = Vec::new();
    write_scan_csv(&rows, &mut buf, |x| round_sig(x, precision).to_string())?;
    emit(&String::from_utf8(buf)?, out.as_deref())
}

fn run(cli: Cli) -> Result<()> {
    let precision = cli.precision;
    match cli.command {
        Command::Theory(cmd) => theory(cmd, precision),
        Command::Analyze(cmd) => analyze(cmd, precision),
        Command::Simulate { config, out } => simulate(&config, &out, precision),
        Command::Fit(cmd) => fit(cmd, precision),
        Command::Scan(cmd) => scan(cmd, precision),
        Command::Datasets(Datasets::Export { name, out }) => {
            emit(&dataset(&name)?.to_csv_string(), out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let validation = err
                .chain()
                .find_map(|e| e.downcast_ref::<cglmp::Error>())
                .is_some_and(cglmp::Error::is_validation);
            ExitCode::from(if validation { 2 } else { 1 })
        }
    }
}
