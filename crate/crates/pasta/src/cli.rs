//! The `pasta` command line.
//!
//! Exit codes: `0` on success, `1` when arguments or input files are invalid,
//! `2` when a computation or a write fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pasta_core::datagen::{generate_dataset, generate_instance, InstanceConfig, SamplingDesign, ThetaMode};
use pasta_core::diagnostics::suite::{distance_properties, ipw_unbiasedness};
use pasta_core::likelihood::{fit_mle, AlphaMode, FitOptions};
use pasta_core::lp::ConstraintSet;
use pasta_core::metrics::{assortment_accuracy, regret};
use pasta_core::rng::StreamSeed;
use pasta_core::solver::{baseline_solve, pasta_solve, GdlsOptions, PastaOptions};
use pasta_core::{Assortment, Catalog, ParamSpace};

use crate::harness::{emit_csv, parse_csv, run_sweep, Metric, SweepConfig, SweepVar, DEFAULT_REPLICATIONS};
use crate::io::{self, format_assortment, FormatError};
use crate::plot::emit_plot;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or malformed input files.
    Invalid(String),
    /// The computation or an output write failed.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        if e.is_invalid_input() {
            CliError::Invalid(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "pasta", version, about = "Pessimistic offline assortment optimization under the MNL model")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic instance and an offline dataset.
    Generate(GenerateArgs),
    /// Fit the maximum-likelihood preference vector.
    Fit(FitArgs),
    /// Choose an assortment from a catalog and a dataset.
    Solve(SolveArgs),
    /// Run a replicated experiment sweep and write the result CSV.
    Sweep(SweepArgs),
    /// Render a result CSV as an SVG chart.
    Plot(PlotArgs),
    /// Run the numerical property checks.
    Diag(DiagArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ThetaModeArg {
    UnitSphere,
    IidUniform,
}

impl From<ThetaModeArg> for ThetaMode {
    fn from(m: ThetaModeArg) -> Self {
        match m {
            ThetaModeArg::UnitSphere => ThetaMode::UnitSphere,
            ThetaModeArg::IidUniform => ThetaMode::UniformCube,
        }
    }
}

/// `empirical`, `fixed:<alpha>` or `theoretical:<constant>,<c_a>,<delta>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaArg(pub AlphaMode);

impl FromStr for AlphaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let number = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}"));
        if s == "empirical" {
            return Ok(AlphaArg(AlphaMode::Empirical));
        }
        if let Some(a) = s.strip_prefix("fixed:") {
            let a = number(a)?;
            if !(a.is_finite() && a >= 0.0) {
                return Err("fixed alpha must be finite and nonnegative".into());
            }
            return Ok(AlphaArg(AlphaMode::Fixed(a)));
        }
        if let Some(rest) = s.strip_prefix("theoretical:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if let [c, ca, delta] = parts[..] {
                return Ok(AlphaArg(AlphaMode::Theoretical {
                    constant: number(c)?,
                    c_a: number(ca)?,
                    delta: number(delta)?,
                }));
            }
        }
        Err(format!(
            "unknown alpha mode {s:?} (expected empirical, fixed:<a> or theoretical:<c>,<c_a>,<delta>)"
        ))
    }
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Confidence radius: empirical, fixed:<a> or theoretical:<c>,<c_a>,<delta>.
    #[arg(long = "alpha-mode", default_value = "empirical")]
    alpha_mode: AlphaArg,
    /// Outer iterations of the pessimistic solver.
    #[arg(long = "T", default_value_t = 30)]
    outer_iters: usize,
    /// Radius of the parameter ball.
    #[arg(long = "theta-max", default_value_t = ParamSpace::DEFAULT_THETA_MAX)]
    theta_max: f64,
    /// Descent steps per worst-case update.
    #[arg(long = "gdls-steps", default_value_t = GdlsOptions::default().n_steps)]
    gdls_steps: usize,
    /// First trial step of each line search.
    #[arg(long = "gdls-step", default_value_t = GdlsOptions::default().init_step)]
    gdls_step: f64,
    /// Line-search shrink factor.
    #[arg(long = "gdls-shrink", default_value_t = GdlsOptions::default().shrink)]
    gdls_shrink: f64,
}

impl SolverArgs {
    fn options(&self) -> Result<PastaOptions, CliError> {
        if self.outer_iters == 0 {
            return Err(invalid("--T must be at least 1"));
        }
        if !(self.gdls_step > 0.0 && self.gdls_step.is_finite()) {
            return Err(invalid("--gdls-step must be positive"));
        }
        if !(self.gdls_shrink > 0.0 && self.gdls_shrink < 1.0) {
            return Err(invalid("--gdls-shrink must lie in (0, 1)"));
        }
        Ok(PastaOptions {
            max_outer_iters: self.outer_iters,
            alpha: self.alpha_mode.0,
            gdls: GdlsOptions {
                n_steps: self.gdls_steps,
                init_step: self.gdls_step,
                shrink: self.gdls_shrink,
                ..GdlsOptions::default()
            },
            ..PastaOptions::default()
        })
    }

    fn space(&self, dim: usize) -> Result<ParamSpace, CliError> {
        ParamSpace::new(dim, self.theta_max).map_err(invalid)
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long = "n-items")]
    n_items: usize,
    #[arg(long)]
    card: usize,
    #[arg(long)]
    dim: usize,
    /// Number of logged records.
    #[arg(long)]
    n: usize,
    /// Probability that a record shows the optimal assortment.
    #[arg(long)]
    p: f64,
    #[arg(long)]
    seed: u64,
    /// Replication index mixed into the seed.
    #[arg(long, default_value_t = 0)]
    rep: u64,
    #[arg(long = "theta-mode", value_enum, default_value = "unit-sphere")]
    theta_mode: ThetaModeArg,
    /// Output directory; receives `instance.json` and `dataset.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Catalog or instance JSON.
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "theta-max", default_value_t = ParamSpace::DEFAULT_THETA_MAX)]
    theta_max: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Pasta,
    Baseline,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Catalog or instance JSON.
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "pasta")]
    method: MethodArg,
    /// Cardinality limit; defaults to the one stored in an instance file.
    #[arg(long)]
    card: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Where to write the iteration trace of the pessimistic solver.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Swept variable: n, p or d.
    #[arg(long)]
    var: SweepVar,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long = "n-items", default_value_t = 40)]
    n_items: usize,
    #[arg(long, default_value_t = 8)]
    card: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 150)]
    n: usize,
    #[arg(long, default_value_t = 0.9)]
    p: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    reps: usize,
    #[arg(long = "theta-mode", value_enum, default_value = "unit-sphere")]
    theta_mode: ThetaModeArg,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write zero wall times so the CSV depends only on the arguments.
    #[arg(long = "no-timing")]
    no_timing: bool,
    /// Also render a regret chart here.
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Regret,
    Accuracy,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Result CSV written by `sweep`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "regret")]
    metric: MetricArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DiagArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Random trials of the distance inequalities.
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// Simulated datasets for the IPW check.
    #[arg(long, default_value_t = 200)]
    datasets: usize,
    /// Records per IPW dataset.
    #[arg(long, default_value_t = 2000)]
    n: usize,
}

fn load_problem(catalog: &Path, data: &Path) -> Result<(Catalog, Option<pasta_core::datagen::Instance>, pasta_core::likelihood::OfflineDataset), CliError> {
    let (catalog, instance) = io::read_instance_or_catalog(catalog)?;
    let dataset = io::read_dataset(data)?;
    if dataset.is_empty() {
        return Err(invalid("dataset has no records"));
    }
    dataset.validate_for(&catalog).map_err(invalid)?;
    Ok((catalog, instance, dataset))
}

fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let seed = StreamSeed::new(args.seed, args.rep);
    let cfg = InstanceConfig {
        theta_mode: args.theta_mode.into(),
        ..InstanceConfig::new(args.n_items, args.card, args.dim, seed)
    };
    cfg.validate().map_err(invalid)?;
    let design = SamplingDesign::new(args.p, args.n_items, args.card).map_err(invalid)?;
    if args.n == 0 {
        return Err(invalid("--n must be at least 1"));
    }
    let instance = generate_instance(&cfg).map_err(runtime)?;
    let dataset = generate_dataset(&instance, &design, args.n, seed).map_err(runtime)?;
    std::fs::create_dir_all(&args.out).map_err(runtime)?;
    io::write_instance(&args.out.join("instance.json"), &instance)?;
    io::write_dataset(&args.out.join("dataset.csv"), &dataset)?;
    println!(
        "wrote {} records; optimal assortment {} with value {}",
        dataset.len(),
        instance.s_star,
        instance.v_star
    );
    Ok(())
}

fn fit(args: &FitArgs) -> Result<(), CliError> {
    let (catalog, _, dataset) = load_problem(&args.catalog, &args.data)?;
    let space = ParamSpace::new(catalog.dim(), args.theta_max).map_err(invalid)?;
    let fit = fit_mle(&dataset, &catalog, &space, &FitOptions::default()).map_err(runtime)?;
    io::write_theta(&args.out, &fit)?;
    println!(
        "loss {} after {} iterations (gradient norm {:e}, converged: {})",
        fit.loss, fit.iterations, fit.grad_norm, fit.converged
    );
    Ok(())
}

fn solve(args: &SolveArgs) -> Result<(), CliError> {
    let (catalog, instance, dataset) = load_problem(&args.catalog, &args.data)?;
    let card = match (args.card, &instance) {
        (Some(k), _) => k,
        (None, Some(inst)) => inst.config.cardinality,
        (None, None) => return Err(invalid("--card is required for a bare catalog")),
    };
    let cons = ConstraintSet::cardinality(catalog.n_items(), card).map_err(invalid)?;
    let space = args.solver.space(catalog.dim())?;
    let opts = args.solver.options()?;
    let chosen: Assortment = match args.method {
        MethodArg::Pasta => {
            let out = pasta_solve(&dataset, &catalog, &cons, &space, &opts).map_err(runtime)?;
            if let Some(path) = &args.out {
                io::write_trace(path, &out.trace)?;
            }
            out.assortment
        }
        MethodArg::Baseline => {
            if args.out.is_some() {
                return Err(invalid("--out writes a solver trace and needs --method pasta"));
            }
            baseline_solve(&dataset, &catalog, &cons, &space, &opts.fit).map_err(runtime)?
        }
    };
    println!("assortment {}", format_assortment(&chosen));
    if let Some(inst) = &instance {
        let r = regret(inst, &chosen).map_err(runtime)?;
        let a = assortment_accuracy(&chosen, &inst.s_star).map_err(runtime)?;
        println!("regret {r}");
        println!("accuracy {a}");
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut cfg = SweepConfig::new(args.var, args.values.clone(), args.seed);
    cfg.instance = InstanceConfig {
        theta_mode: args.theta_mode.into(),
        ..InstanceConfig::new(args.n_items, args.card, args.dim, StreamSeed::new(args.seed, 0))
    };
    cfg.n = args.n;
    cfg.p = args.p;
    cfg.theta_max = args.solver.theta_max;
    cfg.pasta = args.solver.options()?;
    cfg.replications = args.reps;
    cfg.record_wall_time = !args.no_timing;
    cfg.validate().map_err(invalid)?;
    let rows = run_sweep(&cfg).map_err(runtime)?;
    emit_csv(&rows, &args.out).map_err(runtime)?;
    if let Some(path) = &args.plot {
        emit_plot(&rows, Metric::Regret, path).map_err(runtime)?;
    }
    let failed = rows.iter().filter(|r| r.failed()).count();
    println!("wrote {} rows ({failed} failed)", rows.len());
    Ok(())
}

fn plot(args: &PlotArgs) -> Result<(), CliError> {
    let rows = parse_csv(&args.input).map_err(|e| {
        if e.kind() == std::io::ErrorKind::InvalidData {
            invalid(format!("{}: {e}", args.input.display()))
        } else {
            runtime(format!("{}: {e}", args.input.display()))
        }
    })?;
    if rows.is_empty() {
        return Err(invalid("result file has no rows"));
    }
    let metric = match args.metric {
        MetricArg::Regret => Metric::Regret,
        MetricArg::Accuracy => Metric::Accuracy,
    };
    emit_plot(&rows, metric, &args.out).map_err(runtime)
}

fn diag(args: &DiagArgs) -> Result<(), CliError> {
    if args.trials == 0 || args.datasets < 2 || args.n == 0 {
        return Err(invalid("need --trials >= 1, --datasets >= 2 and --n >= 1"));
    }
    let mut ok = true;
    for check in distance_properties(args.seed, args.trials).map_err(runtime)? {
        ok &= check.passed();
        println!(
            "{} {} ({} trials, worst margin {:e})",
            if check.passed() { "PASS" } else { "FAIL" },
            check.name,
            check.trials,
            check.worst_margin
        );
    }
    for check in ipw_unbiasedness(args.seed, args.datasets, args.n).map_err(runtime)? {
        let passed = check.passed(3.0);
        ok &= passed;
        println!(
            "{} IPW on the {}: mean {:.5} vs value {:.5} ({:.2} standard errors)",
            if passed { "PASS" } else { "FAIL" },
            check.label,
            check.mean,
            check.target,
            check.z_score()
        );
    }
    if ok {
        Ok(())
    } else {
        Err(runtime("at least one diagnostic check failed"))
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => fit(a),
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Plot(a) => plot(a),
        Command::Diag(a) => diag(a),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Invalid(msg) | CliError::Runtime(msg)) = &e;
            eprintln!("error: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}
