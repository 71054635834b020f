use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;
use tinygiant::constants::{critical_constants, DerivedExponents, Kernel};
use tinygiant::fixedpoint::{self, DEFAULT_MAX_ITER, DEFAULT_TOL};
use tinygiant::{build_weights, connected_components, sample_graph};

mod config;

use config::{Entries, SimulateInputs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] tinygiant::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use tinygiant::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                E::InvalidParameter(_) | E::Subcritical { .. } | E::Format(_) => 2,
                E::Io(_) | E::Json(_) => 3,
                // numerical failures count as a failed run
                _ => 1,
            },
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn read_config(path: Option<&Path>) -> Result<Entries, CliError> {
    match path {
        None => Ok(Entries::default()),
        Some(p) => Entries::parse(&fs::read_to_string(p).map_err(io_err(p))?),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Percolation on rank-1 scale-free random graphs.
///
/// Exit codes: 0 success, 1 tolerance or numerical failure, 2 usage error,
/// 3 I/O error.
#[derive(Debug, Parser)]
#[command(name = "tinygiant", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print derived exponents, A_α, B_α and λ_c as JSON.
    Constants(ModelFlags),
    /// Sample one percolated graph; write its edge list and component table.
    Simulate(SimulateArgs),
    /// Run one Monte Carlo regime from a config file.
    Experiment(ExperimentArgs),
    /// Solve the survival fixed point on (0, a].
    Fixedpoint(FixedpointArgs),
}

#[derive(Debug, Args)]
struct ModelFlags {
    /// Power-law exponent τ, in (2,3).
    #[arg(long, default_value_t = 2.5)]
    tau: f64,
    /// Tail constant C of 1 - F(x) = C x^{1-τ}.
    #[arg(long = "C", default_value_t = 1.0)]
    tail_const: f64,
    /// Connection kernel: nr, cl or grg.
    #[arg(long, default_value = "nr")]
    kernel: String,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Config file of `key = value` lines (keys: n, tau, C, kernel, lambda,
    /// lambda_factor, pi, seed). Flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of vertices [default: 10000].
    #[arg(long)]
    n: Option<usize>,
    /// Power-law exponent τ [default: 2.5].
    #[arg(long)]
    tau: Option<f64>,
    /// Tail constant C [default: 1].
    #[arg(long = "C")]
    tail_const: Option<f64>,
    /// Connection kernel: nr, cl or grg [default: nr].
    #[arg(long)]
    kernel: Option<String>,
    /// Window intensity λ; retention probability π = λ n^{-(3-τ)/2}.
    #[arg(long)]
    lambda: Option<f64>,
    /// λ as a multiple of λ_c.
    #[arg(long)]
    lambda_factor: Option<f64>,
    /// Retention probability π in [0,1]; overrides λ.
    #[arg(long)]
    pi: Option<f64>,
    /// Random seed [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for edges.txt, components.csv and summary.json.
    #[arg(long, default_value = "tinygiant-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Config file of `key = value` lines; `regime` is required.
    config: PathBuf,
    /// Output directory for summary.json and records.csv.
    #[arg(long, default_value = "tinygiant-out")]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct FixedpointArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Cutoff a of the type space (0, a].
    #[arg(long, default_value_t = 10.0)]
    a: f64,
    /// Window intensity λ.
    #[arg(long, conflicts_with = "lambda_factor")]
    lambda: Option<f64>,
    /// λ as a multiple of λ_c [default: 2].
    #[arg(long)]
    lambda_factor: Option<f64>,
    /// Quadrature nodes on (0, a].
    #[arg(long, default_value_t = 1024)]
    n_grid: usize,
    /// Also run the a-ladder a = 10, 20, 40, … and print ζ_a and the extrapolated ζ^λ.
    #[arg(long)]
    ladder: bool,
    /// Relative tolerance for the ladder extrapolation.
    #[arg(long, default_value_t = 5e-3)]
    ladder_tol: f64,
    /// Print ‖T_κ‖ and ‖T_κ₂‖^{1/2} and their relative difference.
    #[arg(long)]
    two_step_check: bool,
    /// Output directory for summary.json and rho.csv; nothing is written when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_constants(flags: &ModelFlags) -> Result<(), CliError> {
    let kernel: Kernel = flags.kernel.parse()?;
    let exps = DerivedExponents::new(flags.tau, flags.tail_const)?;
    let cc = critical_constants(&exps, kernel)?;
    let doc = json!({
        "tau": flags.tau,
        "C": flags.tail_const,
        "kernel": kernel.name(),
        "exponents": exps,
        "a_alpha": cc.a_alpha,
        "b_alpha": cc.b_alpha,
        "lambda_c": cc.lambda_c,
    });
    println!("{}", serde_json::to_string_pretty(&doc).map_err(tinygiant::Error::from)?);
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let inputs = SimulateInputs {
        tau: args.tau,
        tail_const: args.tail_const,
        n: args.n,
        kernel: args.kernel.clone(),
        lambda: args.lambda,
        lambda_factor: args.lambda_factor,
        pi: args.pi,
        seed: args.seed,
    };
    let cfg = config::simulate_config(inputs, read_config(args.config.as_deref())?)?;
    let pi = cfg.pi.unwrap_or_else(|| cfg.params.pi());
    let ws = build_weights(&cfg.params)?;
    let graph = sample_graph(&ws, cfg.params.kernel, pi, cfg.seed)?;
    let cc = connected_components(&graph, ws.weights())?;

    ensure_dir(&args.out)?;
    let edges = args.out.join("edges.txt");
    let mut w = create(&edges)?;
    graph.write_edge_list(&mut w)?;
    w.flush().map_err(io_err(&edges))?;
    let comps = args.out.join("components.csv");
    let mut w = create(&comps)?;
    cc.write_csv(&mut w)?;
    w.flush().map_err(io_err(&comps))?;

    let c1 = cc.sizes.first().copied().unwrap_or(0);
    let c2 = cc.sizes.get(1).copied().unwrap_or(0);
    let summary = json!({
        "params": cfg.params,
        "pi": pi,
        "seed": cfg.seed,
        "n": graph.n,
        "m": graph.edge_count(),
        "components": cc.component_count(),
        "c1": c1,
        "c2": c2,
    });
    write_json(&args.out.join("summary.json"), &summary)?;
    println!("n={} m={} C1={c1} C2={c2}", graph.n, graph.edge_count());
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(tinygiant::Error::from)?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Returns whether every pass flag held.
fn cmd_experiment(args: &ExperimentArgs) -> Result<bool, CliError> {
    let mut cfg = config::experiment_config(read_config(Some(&args.config))?)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let report = tinygiant::experiments::run(&cfg)?;
    ensure_dir(&args.out)?;
    let path = args.out.join("summary.json");
    let mut w = create(&path)?;
    report.write_json(&mut w)?;
    w.flush().map_err(io_err(&path))?;
    let path = args.out.join("records.csv");
    let mut w = create(&path)?;
    report.write_csv(&mut w)?;
    w.flush().map_err(io_err(&path))?;

    println!("regime={} lambda_c={} pass={}", report.regime, report.lambda_c, report.pass);
    for s in &report.summary {
        let mut line = format!("{} = {}", s.name, s.value);
        if let Some(se) = s.std_error {
            line.push_str(&format!(" (se {se})"));
        }
        if let Some(t) = s.target {
            line.push_str(&format!(" target {t}"));
        }
        if let (Some(rule), Some(pass)) = (&s.rule, s.pass) {
            line.push_str(&format!(" [{rule}: {}]", if pass { "pass" } else { "FAIL" }));
        }
        println!("{line}");
    }
    Ok(report.pass)
}

fn cmd_fixedpoint(args: &FixedpointArgs) -> Result<(), CliError> {
    let kernel: Kernel = args.model.kernel.parse()?;
    let exps = DerivedExponents::new(args.model.tau, args.model.tail_const)?;
    let factor = if args.lambda.is_none() && args.lambda_factor.is_none() {
        Some(2.0)
    } else {
        args.lambda_factor
    };
    let lambda = config::resolve_lambda(args.lambda, factor, args.model.tau, args.model.tail_const, kernel)?
        .expect("lambda resolved");
    let kg = fixedpoint::build_kernel_grid(args.a, args.n_grid, &exps, kernel)?;
    let sol = fixedpoint::solve_rho(&kg, lambda, DEFAULT_TOL, DEFAULT_MAX_ITER * 10)?;
    let summary = sol.summary_json()?;
    println!("{summary}");

    if args.two_step_check {
        let one = fixedpoint::operator_norm(&kg)?;
        let two = fixedpoint::operator_norm_two_step(&kg)?;
        println!("norm={one} two_step_norm_sqrt={two} relative_difference={:e}", (one / two - 1.0).abs());
    }
    let ladder = if args.ladder {
        let ladder = fixedpoint::zeta_infinity(lambda, &exps, kernel, args.ladder_tol, args.n_grid)?;
        println!("a,zeta_a,extrapolated");
        for (k, (a, z)) in ladder.a_values.iter().zip(&ladder.zeta_a).enumerate() {
            let ext = if k == 0 { String::new() } else { ladder.extrapolated[k - 1].to_string() };
            println!("{a},{z},{ext}");
        }
        println!(
            "zeta_infinity={}{}",
            ladder.zeta_infinity,
            if ladder.conjectural { " (conjectural for this kernel)" } else { "" }
        );
        Some(ladder)
    } else {
        None
    };

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        let mut doc: serde_json::Value = serde_json::from_str(&summary).map_err(tinygiant::Error::from)?;
        doc["kernel"] = json!(kernel.name());
        doc["sup_rho"] = json!(sol.sup_rho());
        if let Some(l) = &ladder {
            doc["ladder"] = serde_json::to_value(l).map_err(tinygiant::Error::from)?;
        }
        write_json(&out.join("summary.json"), &doc)?;
        let path = out.join("rho.csv");
        let mut w = create(&path)?;
        sol.write_csv(&mut w)?;
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Constants(f) => cmd_constants(f).map(|_| true),
        Command::Simulate(a) => cmd_simulate(a).map(|_| true),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Fixedpoint(a) => cmd_fixedpoint(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
