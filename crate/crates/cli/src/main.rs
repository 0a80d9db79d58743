//! Command-line front end: evaluate, optimise, triangular, simulate,
//! enumerate and fixed.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use mams::chars::{evaluate_with, label_for, outcome_table, standard_configs, Engine, Quadrature};
use mams::outcomes::{cardinality_xi, cardinality_xi_prime, enumerate_xi, enumerate_xi_prime, TauKind};
use mams::search::{fixed_design, optimise, SearchConfig};
use mams::sim::simulate_report;
use mams::triangular::{calibrate_triangular, InfoScale};
use mams::{Boundaries, DesignParams, EffectConfig};

use output::{real, Run, SCHEMA_VERSION};

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    Parameter(String),
    Infeasible(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parameter(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parameter(m) | CliError::Infeasible(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<mams::Error> for CliError {
    fn from(e: mams::Error) -> Self {
        let text = e.to_string();
        match e {
            mams::Error::Parameter(_) | mams::Error::Consistency(_) => CliError::Parameter(text),
            mams::Error::Infeasible(_) => CliError::Infeasible(text),
            mams::Error::Numeric(_) | mams::Error::Calibration { .. } => CliError::Numeric(text),
        }
    }
}

#[derive(Parser)]
#[command(name = "mams", version, about = "Operating characteristics and boundary search for abcd multi-arm multi-stage designs")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Directory receiving the output files and manifest.json.
    #[arg(long, global = true, default_value = "mams-out")]
    out: PathBuf,
    /// Random seed (quadrature, search or simulation, by command).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Numerical tolerance (quadrature, reported-design or calibration, by command).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Operating characteristics of a design.
    Evaluate {
        #[arg(long)]
        params: PathBuf,
        /// JSON with `n`, `f` and `e`.
        #[arg(long)]
        design: PathBuf,
        /// Also write per-outcome probabilities to outcomes.csv.
        #[arg(long)]
        outcomes: bool,
        #[arg(long, value_enum, default_value_t = EngineArg::Auto)]
        engine: EngineArg,
    },
    /// Search for boundaries and group size minimising the weighted objective.
    Optimise {
        #[arg(long)]
        params: PathBuf,
        /// Search configuration JSON; omitted fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Calibrated triangular boundaries.
    Triangular {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_enum, default_value_t = ScaleArg::Classical)]
        scale: ScaleArg,
    },
    /// Monte Carlo estimates of the operating characteristics.
    Simulate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        design: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
    },
    /// List the outcome space and its cardinalities.
    Enumerate {
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "J")]
        j: usize,
        #[arg(long)]
        d: usize,
        /// Also report the reduced space under c interesting arms.
        #[arg(long)]
        c: Option<usize>,
        /// Boundaries to enumerate against (infinite entries allowed);
        /// generic finite boundaries otherwise.
        #[arg(long)]
        design: Option<PathBuf>,
        /// Write the full space instead of the reduced one under the null.
        #[arg(long)]
        full: bool,
    },
    /// Single-stage design and N_fixed.
    Fixed {
        #[arg(long)]
        params: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Auto,
    Conditional,
    Genz,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Auto => Engine::Auto,
            EngineArg::Conditional => Engine::Conditional,
            EngineArg::Genz => Engine::Genz,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Classical,
    Printed,
    Squared,
}

impl From<ScaleArg> for InfoScale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Classical => InfoScale::Classical,
            ScaleArg::Printed => InfoScale::Printed,
            ScaleArg::Squared => InfoScale::Squared,
        }
    }
}

/// Group size and boundaries, the format read by `--design`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct DesignFile {
    #[serde(default)]
    schema_version: Option<u32>,
    n: f64,
    #[serde(flatten)]
    bounds: Boundaries,
}

fn parse_json<T: for<'de> Deserialize<'de>>(bytes: &[u8], path: &Path) -> Result<T, CliError> {
    let value: Value = serde_json::from_slice(bytes)
        .map_err(|e| CliError::Parameter(format!("{}: {e}", path.display())))?;
    if let Some(v) = value.get("schema_version") {
        if v.as_u64() != Some(u64::from(SCHEMA_VERSION)) {
            return Err(CliError::Parameter(format!(
                "{}: unsupported schema_version {v} (expected {SCHEMA_VERSION})",
                path.display()
            )));
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Parameter(format!("{}: {e}", path.display())))
}

fn load_params(run: &mut Run, path: &Path) -> Result<DesignParams, CliError> {
    let bytes = run.read_input(path)?;
    let params: DesignParams = parse_json(&bytes, path)?;
    params.ensure_valid()?;
    Ok(params)
}

fn load_design(run: &mut Run, path: &Path) -> Result<DesignFile, CliError> {
    let bytes = run.read_input(path)?;
    parse_json(&bytes, path)
}

fn design_file(n: f64, bounds: &Boundaries) -> DesignFile {
    DesignFile {
        schema_version: Some(SCHEMA_VERSION),
        n,
        bounds: bounds.clone(),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn outcome_header(k: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=k).map(|i| format!("psi_{i}")).collect();
    h.extend((1..=k).map(|i| format!("omega_{i}")));
    h
}

fn outcome_cells(o: &mams::outcomes::Outcome) -> Vec<String> {
    let mut row: Vec<String> = o.psi.iter().map(|&p| u8::from(p).to_string()).collect();
    row.extend(o.omega.iter().map(|w| w.to_string()));
    row
}

fn run(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let common = cli.common.clone();
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Parameter(format!("cannot size the worker pool: {e}")))?;
    }
    let (config, seed, run) = match cli.command {
        Command::Evaluate { params, design, outcomes, engine } => {
            let mut run = Run::new("evaluate", &common.out)?;
            let params = load_params(&mut run, &params)?;
            let design = load_design(&mut run, &design)?;
            let seed = common.seed.unwrap_or(1);
            let quad = Quadrature::new(common.tol.unwrap_or(mams::chars::DEFAULT_TOL), seed).with_engine(engine.into());
            let chars = evaluate_with(&params, &design.bounds, design.n, &[], &quad)?;
            run.write_json("chars.json", &chars)?;
            if outcomes {
                let k = params.k;
                let mut header = vec!["config".to_string()];
                header.extend(outcome_header(k));
                header.extend(["degeneracy", "probability", "error_estimate", "sample_size"].map(String::from));
                let mut rows = Vec::new();
                for tau in standard_configs(&params) {
                    let label = label_for(&params, &tau);
                    for r in outcome_table(&params, &design.bounds, design.n, &tau, &quad)? {
                        let mut row = vec![label.clone()];
                        row.extend(outcome_cells(&r.outcome));
                        row.extend([
                            r.degeneracy.to_string(),
                            real(r.probability),
                            real(r.error_estimate),
                            real(r.sample_size),
                        ]);
                        rows.push(row);
                    }
                }
                run.write_csv("outcomes.csv", &header, &rows)?;
            }
            for p in 1..=params.k {
                println!("FWER_I({p}) = {:.6}", chars.fwer(p));
            }
            for (label, ess) in &chars.ess {
                println!("ESS({label}) = {ess:.3}");
            }
            println!("FWP({},{}|delta_{}) = {:.6}", params.b, params.c, params.c, chars.fwp(params.b, params.c, params.c).unwrap_or(f64::NAN));
            let config = json!({ "params": to_value(&params), "design": to_value(&design), "quadrature": to_value(&quad), "outcomes": outcomes });
            (config, Some(seed), run)
        }
        Command::Optimise { params, config } => {
            let mut run = Run::new("optimise", &common.out)?;
            let params = load_params(&mut run, &params)?;
            let mut cfg: SearchConfig = match config {
                Some(path) => {
                    let bytes = run.read_input(&path)?;
                    parse_json(&bytes, &path)?
                }
                None => SearchConfig::default(),
            };
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            if let Some(t) = common.tol {
                cfg.final_tol = t;
            }
            cfg.ensure_valid()?;
            let result = optimise(&params, &cfg)?;
            run.write_json("search.json", &result)?;
            run.write_document("design.json", &design_file(result.n_integer as f64, &result.bounds))?;
            let rows: Vec<Vec<String>> =
                result.trace.iter().enumerate().map(|(i, v)| vec![i.to_string(), real(*v)]).collect();
            run.write_csv("trace.csv", &["iteration".into(), "best_objective".into()], &rows)?;
            println!("n = {} (continuous {:.4}), objective = {:.4}", result.n_integer, result.n_star, result.objective);
            println!("f = {:?}", result.bounds.f);
            println!("e = {:?}", result.bounds.e);
            let seed = cfg.seed;
            let config = json!({ "params": to_value(&params), "search": to_value(&cfg) });
            let feasible = result.feasible;
            run.finish(config, Some(seed), start.elapsed().as_secs_f64())?;
            if !feasible {
                return Err(CliError::Infeasible(format!(
                    "best design misses the constraints: FWER_I({}) = {:.5}, FWP = {:.5}",
                    params.a,
                    result.chars.fwer(params.a),
                    result.chars.fwp(params.b, params.c, params.c).unwrap_or(f64::NAN)
                )));
            }
            return Ok(());
        }
        Command::Triangular { params, scale } => {
            let mut run = Run::new("triangular", &common.out)?;
            let params = load_params(&mut run, &params)?;
            let tol = common.tol.unwrap_or(1e-6);
            let design = calibrate_triangular(&params, tol, scale.into())?;
            run.write_json("triangular.json", &design)?;
            run.write_document("design.json", &design_file(design.n, &design.bounds))?;
            println!(
                "alpha' = {:.6}, beta' = {:.6}, n = {:.4}, FWER_I({}) = {:.6}, FWP = {:.6}, residual = {:.2e}",
                design.alpha_prime, design.beta_prime, design.n, params.a, design.fwer, design.fwp, design.residual
            );
            let config = json!({ "params": to_value(&params), "scale": to_value(&InfoScale::from(scale)), "tol": tol });
            (config, None, run)
        }
        Command::Simulate { params, design, reps } => {
            let mut run = Run::new("simulate", &common.out)?;
            let params = load_params(&mut run, &params)?;
            let design = load_design(&mut run, &design)?;
            if reps == 0 {
                return Err(CliError::Parameter("--reps must be positive".into()));
            }
            let seed = common.seed.unwrap_or(1);
            let report = simulate_report(&params, &design.bounds, design.n, &[], reps, seed)?;
            run.write_json("simulation.json", &report)?;
            for (p, e) in report.fwer_hat.iter().enumerate() {
                println!("FWER_I({}) = {:.6} (se {:.6})", p + 1, e.value, e.se);
            }
            for (label, e) in &report.ess_hat {
                println!("ESS({label}) = {:.3} (se {:.3})", e.value, e.se);
            }
            let config = json!({ "params": to_value(&params), "design": to_value(&design), "reps": reps });
            (config, Some(seed), run)
        }
        Command::Enumerate { k, j, d, c, design, full } => {
            let mut run = Run::new("enumerate", &common.out)?;
            if k == 0 || j == 0 || d == 0 || d > k {
                return Err(CliError::Parameter(format!("need K >= 1, J >= 1 and 1 <= d <= K (got K={k}, J={j}, d={d})")));
            }
            let bounds = match &design {
                Some(path) => load_design(&mut run, path)?.bounds,
                None => generic_bounds(j),
            };
            let xi = enumerate_xi(&bounds, d, j, k)?;
            let reduced = enumerate_xi_prime(&bounds, &EffectConfig::null(k), d, j, k)?;
            let mut summary = json!({
                "K": k, "J": j, "d": d,
                "xi": xi.len(),
                "xi_prime_null": reduced.outcomes.len(),
                "xi_closed_form": cardinality_xi(d, j, k),
                "xi_prime_null_closed_form": cardinality_xi_prime(d, j, k, TauKind::Null, 0),
            });
            println!("|Xi| = {}, |Xi'(0_K)| = {}", xi.len(), reduced.outcomes.len());
            if let Some(c) = c {
                if c == 0 || c > k {
                    return Err(CliError::Parameter(format!("c = {c} not in [1, K = {k}]")));
                }
                let tau = EffectConfig::new((0..k).map(|i| if i < c { 1.0 } else { 0.0 }).collect());
                let alt = enumerate_xi_prime(&bounds, &tau, d, j, k)?;
                summary["c"] = json!(c);
                summary["xi_prime_delta"] = json!(alt.outcomes.len());
                println!("|Xi'(delta_{c})| = {}", alt.outcomes.len());
            }
            let mut header = outcome_header(k);
            header.push("degeneracy".into());
            let rows: Vec<Vec<String>> = if full {
                xi.iter()
                    .map(|o| {
                        let mut row = outcome_cells(o);
                        row.push("1".into());
                        row
                    })
                    .collect()
            } else {
                reduced.outcomes
                    .iter()
                    .map(|w| {
                        let mut row = outcome_cells(&w.outcome);
                        row.push(w.degeneracy.to_string());
                        row
                    })
                    .collect()
            };
            run.write_csv("outcomes.csv", &header, &rows)?;
            run.write_json("cardinality.json", &summary)?;
            let config = json!({ "K": k, "J": j, "d": d, "c": c, "bounds": to_value(&bounds), "full": full });
            (config, None, run)
        }
        Command::Fixed { params } => {
            let mut run = Run::new("fixed", &common.out)?;
            let params = load_params(&mut run, &params)?;
            let fixed = fixed_design(&params)?;
            run.write_json("fixed.json", &fixed)?;
            println!(
                "n = {} per group (continuous {:.4}), N_fixed = {}, critical value = {:.6}",
                fixed.n, fixed.n_continuous, fixed.n_total, fixed.critical_value
            );
            let config = json!({ "params": to_value(&params) });
            (config, None, run)
        }
    };
    run.finish(config, seed, start.elapsed().as_secs_f64())
}

/// Finite boundaries with a common final value; any admissible finite
/// boundaries give the same outcome space.
fn generic_bounds(j: usize) -> Boundaries {
    let mut f: Vec<f64> = (0..j).map(|_| 0.0).collect();
    let mut e: Vec<f64> = (0..j).map(|_| 2.0).collect();
    f[j - 1] = 1.5;
    e[j - 1] = 1.5;
    Boundaries::new(f, e)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
