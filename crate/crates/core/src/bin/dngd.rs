//! Command-line harness: run experiments from a config file, certify the
//! spectral/momentum bounds, list step-size presets, and compute the
//! averaging constant of a topology.
//!
//! Exit codes: 0 success, 1 certification violation or algorithm
//! divergence, 2 usage or I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dngd::analysis::{certify_momentum_decay, certify_nsc_gain, certify_sc_gain, CertReport};
use dngd::harness::{
    build_graph, emit_csv, parse_config, parse_graph_spec_str, run, PRESETS,
};
use dngd::schedule::StepSchedule;
use dngd::weights::{laplacian_weights, metropolis_weights};

#[derive(Parser)]
#[command(name = "dngd", version, about = "distributed Nesterov gradient benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write CSV traces.
    Run(RunArgs),
    /// Numerically certify a family of spectral/decay bounds.
    Certify(CertifyArgs),
    /// Preset utilities.
    Presets(PresetsArgs),
    /// Print the averaging constant sigma of a topology.
    Sigma(SigmaArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to a TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `run.output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Bound family: `5` (strongly convex gain radius), `8-10`
    /// (general-convex gain eigenstructure), `12` (momentum decay).
    #[arg(long)]
    lemma: String,
    #[arg(long, default_value_t = 0.6)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    l: f64,
    #[arg(long, default_value_t = 0.01)]
    mu: f64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Vanishing-step parameters (family 12).
    #[arg(long, default_value_t = 0.125)]
    eta: f64,
    #[arg(long, default_value_t = 1)]
    t0: u64,
    #[arg(long, default_value_t = 0.61)]
    beta: f64,
    #[arg(long, default_value_t = 10_000)]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the violation table as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PresetsArgs {
    #[command(subcommand)]
    action: PresetsAction,
}

#[derive(Subcommand)]
enum PresetsAction {
    /// Print every named preset with its schedule.
    List,
}

#[derive(Args)]
struct SigmaArgs {
    /// Graph spec, e.g. `grid2d:5x5`, `k_cycle:100,20`, `erdos_renyi:100,0.3,1`.
    #[arg(long)]
    graph: String,
    /// `laplacian` (default) or `metropolis`.
    #[arg(long, default_value = "laplacian")]
    weights: String,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    // die quietly when downstream pipes close (e.g. `dngd presets list | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Presets(args) => match args.action {
            PresetsAction::List => cmd_presets_list(),
        },
        Command::Sigma(args) => cmd_sigma(args),
    }
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return fail(format!("{}: {e}", args.config.display())),
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    let out_dir = args
        .out
        .or_else(|| cfg.run.output.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let result = match run(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    if let Err(e) = emit_csv(&result, &out_dir) {
        return fail(e);
    }
    let mut any_diverged = false;
    for s in &result.summaries {
        let status = if s.diverged {
            any_diverged = true;
            format!("DIVERGED at t = {}", s.diverged_at.unwrap_or(0))
        } else {
            format!("final avg err {:.3e}", s.final_avg_err)
        };
        println!("{:<28} {}", s.label, status);
    }
    println!(
        "sigma = {:.6}, L = {:.6e}, mu = {:.6e}, fstar = {:.6e} -> {}",
        result.sigma,
        result.l,
        result.mu,
        result.fstar,
        out_dir.display()
    );
    if any_diverged {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn report_outcome(rep: CertReport, out: Option<PathBuf>) -> ExitCode {
    println!(
        "{}: {} samples, {} checks, {} violation(s), max eigen residual {:.2e}",
        rep.name,
        rep.samples,
        rep.checks,
        rep.violations.len(),
        rep.max_eig_residual
    );
    for (k, v) in &rep.notes {
        println!("  {k} = {v:.4}");
    }
    for v in rep.violations.iter().take(10) {
        println!("  VIOLATION {}: lhs {:e} > rhs {:e}", v.check, v.lhs, v.rhs);
    }
    if let Some(path) = out {
        if let Err(e) = std::fs::write(&path, rep.to_csv()) {
            return fail(e);
        }
    }
    if rep.ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_certify(args: CertifyArgs) -> ExitCode {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let rep = match args.lemma.as_str() {
        "5" => certify_sc_gain(args.sigma, args.l, args.mu, args.samples, &mut rng),
        "8-10" | "8" | "9" | "10" => certify_nsc_gain(args.sigma, args.l, args.samples, &mut rng),
        "12" => certify_momentum_decay(args.eta, args.t0, args.beta, args.l, args.horizon),
        other => return fail(format!("unknown bound family `{other}` (use 5, 8-10 or 12)")),
    };
    match rep {
        Ok(rep) => report_outcome(rep, args.out),
        Err(e) => fail(e),
    }
}

fn cmd_presets_list() -> ExitCode {
    for p in PRESETS {
        let sched = match p.schedule {
            StepSchedule::Fixed { eta } => format!("eta = {eta}"),
            StepSchedule::Vanishing { eta, t0, beta } => {
                format!("eta_t = {eta} / (t + {t0})^{beta}")
            }
            StepSchedule::Harmonic { c } => format!("eta_t = {c} / (t + 1)"),
            StepSchedule::InvSqrt { c } => format!("eta_t = {c} / sqrt(t)"),
        };
        let alpha = p
            .alpha0
            .map(|a| format!(", alpha = {a}"))
            .unwrap_or_default();
        println!("{:<36} {:<12} {}{}", p.name, p.algo.as_str(), sched, alpha);
    }
    ExitCode::SUCCESS
}

fn cmd_sigma(args: SigmaArgs) -> ExitCode {
    let spec = match parse_graph_spec_str(&args.graph) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let g = match build_graph(&spec, 0) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    let wm = match args.weights.as_str() {
        "laplacian" => match laplacian_weights(&g) {
            Ok(w) => w,
            Err(e) => return fail(e),
        },
        "metropolis" => metropolis_weights(&g),
        other => return fail(format!("unknown weights method `{other}`")),
    };
    println!("{:.5}", wm.sigma());
    ExitCode::SUCCESS
}
