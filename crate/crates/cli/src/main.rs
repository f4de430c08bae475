use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use grunbaum::extremal::{
    standard_corollary_function, standard_sections_body, theorem_equality_function, ApproximantConfig, BALLS_COARSE,
    POLYTOPAL,
};
use grunbaum::geom::{unit, Subspace};
use grunbaum::gammafn::FunctionJson;
use grunbaum::polytope::BodyJson;
use grunbaum::verify::{
    emit_report, mc_oracle, run_check, CheckKind, OracleTarget, Quantity, ReportFormat, TrialConfig, VerificationReport,
};
use grunbaum::{Error, GammaFunction, VPolytope};
use serde_json::json;

/// Numerical checks of sharp Grünbaum-type inequalities.
#[derive(Parser)]
#[command(name = "grunbaum", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a randomized verification sweep.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Emit an equality-case body or function as JSON.
    Extremal {
        #[command(subcommand)]
        what: ExtremalCommand,
    },
    /// Monte Carlo estimate for a body or function read from JSON.
    Oracle(OracleArgs),
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Halfspaces through the centroid.
    Grunbaum(TrialArgs),
    /// Support or radial ratio.
    Minkrad {
        #[arg(long, value_enum, default_value_t = Mode::Support)]
        mode: Mode,
        #[command(flatten)]
        trial: TrialArgs,
    },
    Projections(TrialArgs),
    Sections(TrialArgs),
    /// Halfspace mass of γ-concave functions on random subspaces.
    Functional(TrialArgs),
    /// Ratio along rays from the centroid of γ-concave functions.
    Theorem(TrialArgs),
    /// Monotonicity of the affinization and cone transforms.
    Chain(TrialArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Support,
    Radial,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct TrialArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 200)]
    bodies: usize,
    /// Points per random body (default 2n + 4).
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long, default_value_t = 3)]
    frames: usize,
    #[arg(long, default_value_t = 40)]
    refine: usize,
    /// Monte Carlo samples per trial for the volume/integral cross-check.
    #[arg(long, default_value_t = 0)]
    mc_samples: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; inferred from the --out extension if omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl TrialArgs {
    fn config(&self) -> TrialConfig {
        TrialConfig {
            n: self.n,
            k: self.k,
            gamma: self.gamma,
            num_bodies: self.bodies,
            num_points: self.points,
            seed: self.seed,
            theta_grid_size: self.grid,
            frames: self.frames,
            refine_iters: self.refine,
            mc_samples: self.mc_samples,
            tolerance: self.tol,
        }
    }
}

#[derive(Subcommand)]
enum ExtremalCommand {
    /// Sections equality body; cube factors unless --vertices is given.
    Body {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Vertices of the ball approximants.
        #[arg(long)]
        vertices: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Equality function of the ray bound, or of the subspace bound with --k.
    Function {
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Omit for the ray theorem.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 64)]
        vertices: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantityArg {
    Volume,
    Centroid,
    Integral,
}

#[derive(Args)]
struct OracleArgs {
    /// Body or function JSON as written by `extremal`.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = QuantityArg::Volume)]
    quantity: QuantityArg,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Verify { check } => verify(check),
        Command::Extremal { what } => {
            extremal(what)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle(args) => {
            oracle(&args)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn verify(cmd: VerifyCommand) -> anyhow::Result<ExitCode> {
    let (kind, args) = match cmd {
        VerifyCommand::Grunbaum(a) => (CheckKind::Grunbaum, a),
        VerifyCommand::Minkrad { mode: Mode::Support, trial } => (CheckKind::MinkradSupport, trial),
        VerifyCommand::Minkrad { mode: Mode::Radial, trial } => (CheckKind::MinkradRadial, trial),
        VerifyCommand::Projections(a) => (CheckKind::Projection, a),
        VerifyCommand::Sections(a) => (CheckKind::Section, a),
        VerifyCommand::Functional(a) => (CheckKind::Functional, a),
        VerifyCommand::Theorem(a) => (CheckKind::Theorem, a),
        VerifyCommand::Chain(a) => (CheckKind::Chain, a),
    };
    let mut cfg = args.config();
    if !uses_k(kind) {
        cfg.k = cfg.n;
    }
    let report = run_check(kind, &cfg)?;
    if let Some(path) = &args.out {
        let format = match args.format {
            Some(Format::Json) => ReportFormat::Json,
            Some(Format::Csv) => ReportFormat::Csv,
            None if has_extension(path, "csv") => ReportFormat::Csv,
            None => ReportFormat::Json,
        };
        emit_report(&report, path, format)?;
    }
    print_summary(&report);
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn uses_k(kind: CheckKind) -> bool {
    matches!(kind, CheckKind::Projection | CheckKind::Section | CheckKind::Functional)
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn print_summary(r: &VerificationReport) {
    let s = &r.summary;
    let check = serde_json::to_value(r.check).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let margin = s.min_margin.map_or("n/a".to_string(), |m| format!("{m:.3e}"));
    let argmin = s.argmin.map_or("n/a".to_string(), |i| i.to_string());
    let dims = if uses_k(r.check) { format!("n={} k={}", r.config.n, r.config.k) } else { format!("n={}", r.config.n) };
    let gamma = r.config.gamma.filter(|_| r.check.needs_gamma()).map_or(String::new(), |g| format!(" γ={g}"));
    println!(
        "{check} {dims}{gamma}: trials={} skipped={} min_margin={margin} (trial {argmin}) violations={} runtime={:.2}s -> {}",
        s.trials,
        s.skipped,
        s.violations,
        s.runtime_secs,
        if r.passed() { "PASS" } else { "FAIL" }
    );
}

fn write_json(value: &impl serde::Serialize, out: Option<&Path>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn extremal(cmd: ExtremalCommand) -> anyhow::Result<()> {
    match cmd {
        ExtremalCommand::Body { n, k, vertices, out } => {
            let config = match vertices {
                Some(m) => ApproximantConfig { vertices: m, ..BALLS_COARSE },
                None => POLYTOPAL,
            };
            let (body, _, _) = standard_sections_body(n, k, &config)?;
            write_json(&body.to_json(), out.as_deref())
        }
        ExtremalCommand::Function { n, k, gamma, vertices, out } => {
            let f = match k {
                Some(k) => standard_corollary_function(n, k, gamma, vertices)?.0,
                None => {
                    let theta = unit(n, 0);
                    let d = grunbaum::extremal::ball_in(&Subspace::line(&theta)?.complement(), vertices)?;
                    theorem_equality_function(n, gamma, &theta, &theta, 1.0, 1.0, &d)?.into_function()
                }
            };
            write_json(&f.to_json(), out.as_deref())
        }
    }
}

enum Loaded {
    Body(VPolytope),
    Function(GammaFunction),
}

fn load(path: &Path) -> anyhow::Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(f) = serde_json::from_str::<FunctionJson>(&text) {
        return Ok(Loaded::Function(GammaFunction::from_json(&f)?));
    }
    match serde_json::from_str::<BodyJson>(&text) {
        Ok(b) => Ok(Loaded::Body(VPolytope::from_json(&b)?)),
        Err(e) => bail!("{} is neither a body nor a function: {e}", path.display()),
    }
}

fn oracle(args: &OracleArgs) -> anyhow::Result<()> {
    let loaded = load(&args.input)?;
    let (target, exact) = match &loaded {
        Loaded::Body(b) => {
            let exact = match args.quantity {
                QuantityArg::Centroid => b.centroid()?.iter().copied().collect(),
                _ => vec![b.volume()],
            };
            (OracleTarget::Body(b), exact)
        }
        Loaded::Function(f) => {
            let exact = match args.quantity {
                QuantityArg::Centroid => f.centroid()?.iter().copied().collect(),
                QuantityArg::Volume => vec![f.support().volume()],
                QuantityArg::Integral => vec![f.integrate()],
            };
            (OracleTarget::Function(f), exact)
        }
    };
    let quantity = match args.quantity {
        QuantityArg::Volume => Quantity::Volume,
        QuantityArg::Centroid => Quantity::Centroid,
        QuantityArg::Integral => Quantity::Integral,
    };
    let est = mc_oracle(&target, &quantity, args.samples, args.seed).map_err(|e: Error| anyhow::anyhow!(e))?;
    let z: Vec<f64> = est.estimate.iter().zip(&est.sigma).zip(&exact).map(|((m, s), x)| (m - x) / s.max(f64::MIN_POSITIVE)).collect();
    write_json(&json!({ "estimate": est.estimate, "sigma": est.sigma, "samples": est.samples, "exact": exact, "z": z }), None)
}
