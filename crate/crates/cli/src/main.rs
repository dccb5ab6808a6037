use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use slowkill::bench::rip::{rip_ratio_curve, CurveSpec};
use slowkill::bench::{run_experiment, CovKind, ExperimentSpec, Method, Model};
use slowkill::schedules::ScheduleSpec;
use slowkill::selection::{select_q, Criterion, SelectionResult};
use slowkill::solver::{fit, FitResult, Problem, SolverConfig};
use slowkill::{Error, LossKind, Scalar};

mod io;

use io::{matrix_json, JsonScalar};

#[derive(Parser)]
#[command(name = "slowkill", version, about = "Slow-kill sparse estimation")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "SLOWKILL_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model and write the result as JSON.
    Fit(FitArgs),
    /// Run a synthetic benchmark and write a CSV summary.
    Bench(BenchArgs),
    /// Choose q by a predictive information criterion.
    SelectQ(SelectArgs),
    /// Mean isometry ratio per theta on synthetic designs.
    RipCurve(RipArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Quadratic,
    Logistic,
    ComplexMmv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Inverse,
    Sigmoidal,
    Constant,
}

#[derive(Clone, Copy, ValueEnum)]
enum CovArg {
    Toeplitz,
    Equal,
    Identity,
}

impl From<CovArg> for CovKind {
    fn from(c: CovArg) -> Self {
        match c {
            CovArg::Toeplitz => CovKind::Toeplitz,
            CovArg::Equal => CovKind::EqualCorrelation,
            CovArg::Identity => CovKind::Identity,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// Design matrix, headerless CSV with one row per observation.
    #[arg(long)]
    x: PathBuf,
    /// Response, headerless CSV (one column, or m columns for complex-mmv).
    #[arg(long)]
    y: PathBuf,
    #[arg(long, value_enum, default_value = "quadratic")]
    loss: LossArg,
    /// Read matrices as alternating real and imaginary columns.
    #[arg(long)]
    complex: bool,
    /// Add an unpenalized intercept column.
    #[arg(long)]
    intercept: bool,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 50.0)]
    eta0: f64,
    /// Number of cooling steps.
    #[arg(long = "T", default_value_t = 100)]
    steps: usize,
    #[arg(long, value_enum, default_value = "inverse")]
    schedule: ScheduleArg,
    #[arg(long, default_value_t = 1.0)]
    sigmoid_a: f64,
    #[arg(long, default_value_t = 5.0)]
    sigmoid_b: f64,
    #[arg(long, default_value_t = 1.0)]
    sigmoid_c: f64,
    #[arg(long)]
    no_squeeze: bool,
    #[arg(long, default_value_t = 1e-8)]
    polish_tol: f64,
    /// Cap on constant-q iterations.
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Accepted for reproducible command lines; fitting is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn config(&self, q: usize) -> SolverConfig {
        let mut c = SolverConfig::slow_kill(q);
        c.eta0 = self.eta0;
        c.schedule = match self.schedule {
            ScheduleArg::Inverse => ScheduleSpec::inverse(self.steps, q),
            ScheduleArg::Sigmoidal => {
                ScheduleSpec::sigmoidal(self.steps, q, self.sigmoid_a, self.sigmoid_b, self.sigmoid_c)
            }
            ScheduleArg::Constant => ScheduleSpec::constant(self.steps, q),
        };
        c.squeeze = !self.no_squeeze;
        c.polish_tol = self.polish_tol;
        c.max_iter = self.max_iter;
        c
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    q: usize,
    #[command(flatten)]
    solver: SolverArgs,
    /// Refit the selected support without shrinkage.
    #[arg(long)]
    refit: bool,
    /// Record wall-clock time (otherwise output is byte-reproducible).
    #[arg(long)]
    timing: bool,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// table41-toeplitz, table41-equal, table42-toeplitz, table42-equal or custom.
    #[arg(long)]
    preset: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum)]
    cov: Option<CovArg>,
    /// Noise level; implies a regression model.
    #[arg(long)]
    sigma: Option<f64>,
    /// Thresholded-linear labels instead of regression.
    #[arg(long)]
    classification: bool,
    /// Defaults to floor(1.5 s).
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    eta0: Option<f64>,
    #[arg(long = "T")]
    steps: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the hard-thresholding baseline.
    #[arg(long)]
    no_iht: bool,
    #[arg(long)]
    timing: bool,
    /// Summary CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-replicate JSON lines.
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    /// lo:hi:step
    #[arg(long, value_parser = parse_grid)]
    q_grid: Grid,
    #[arg(long, value_enum, default_value = "scale-free")]
    pic: PicArg,
    #[arg(long = "A", default_value_t = 2.0)]
    a: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PicArg {
    KnownScale,
    ScaleFree,
}

#[derive(Args)]
struct RipArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 4000)]
    p: usize,
    #[arg(long, default_value_t = 4)]
    s: usize,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, value_enum, default_value = "toeplitz")]
    cov: CovArg,
    /// lo:hi:step
    #[arg(long, value_parser = parse_grid, default_value = "2:12:2")]
    theta_grid: Grid,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    /// Enumerate all subsets (small p only).
    #[arg(long)]
    exhaustive: bool,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Integer grid given as `lo:hi:step`, `lo:hi` or a single value.
#[derive(Clone, Debug)]
struct Grid(Vec<usize>);

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let (lo, hi, step) = match nums[..] {
        [v] => (v, v, 1),
        [lo, hi] => (lo, hi, 1),
        [lo, hi, step] => (lo, hi, step),
        _ => return Err("expected lo:hi:step".into()),
    };
    if step == 0 || lo > hi {
        return Err("need lo <= hi and step >= 1".into());
    }
    Ok(Grid((lo..=hi).step_by(step).collect()))
}

/// Malformed input: exit 2; dimension mismatch: 3; nothing admissible: 4.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::DimensionMismatch(_)) => 3,
        Some(Error::AllInadmissible) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    let outcome = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Bench(a) => cmd_bench(a),
        Command::SelectQ(a) => cmd_select_q(a),
        Command::RipCurve(a) => cmd_rip_curve(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

enum Loaded {
    Real(Problem<f64>),
    Complex(Problem<Complex64>),
}

fn load_problem(d: &DataArgs) -> Result<Loaded> {
    let kind = match d.loss {
        LossArg::Quadratic => LossKind::Quadratic,
        LossArg::Logistic => LossKind::Logistic,
        LossArg::ComplexMmv => LossKind::ComplexQuadraticMmv,
    };
    if kind == LossKind::ComplexQuadraticMmv || d.complex {
        if kind != LossKind::ComplexQuadraticMmv {
            bail!("--complex needs --loss complex-mmv");
        }
        let x = io::read_complex(&d.x)?;
        let y = io::read_complex(&d.y)?;
        Ok(Loaded::Complex(Problem::new(x.view(), y, kind, d.intercept)?))
    } else {
        let x = io::read_real(&d.x)?;
        let y = io::read_real(&d.y)?;
        Ok(Loaded::Real(Problem::new(x.view(), y, kind, d.intercept)?))
    }
}

fn loss_name(kind: LossKind) -> &'static str {
    match kind {
        LossKind::Quadratic => "quadratic",
        LossKind::Logistic => "logistic",
        LossKind::ComplexQuadraticMmv => "complex-mmv",
    }
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|j| j + 1).collect()
}

fn fit_json<T: Scalar + JsonScalar>(
    problem: &Problem<T>,
    config: &SolverConfig,
    r: &FitResult<T>,
    timing: bool,
) -> Value {
    let intercept = |b: &Option<ndarray::Array1<T>>| -> Value {
        b.as_ref().map_or(Value::Null, |b| Value::Array(b.iter().map(|v| v.to_json()).collect()))
    };
    // active design columns as 1-based predictor indices; the intercept is
    // always active when present
    let active: Vec<usize> =
        r.active.iter().filter(|&&j| !problem.is_protected(j)).map(|&j| j + 1 - problem.offset()).collect();
    json!({
        "loss": loss_name(problem.loss().kind),
        "n": problem.n(),
        "p": problem.p(),
        "m": problem.m(),
        "q": config.q,
        "eta0": config.eta0,
        "intercept_column": problem.has_intercept(),
        "support": one_based(&r.support),
        "coefficients": matrix_json(r.coefficients.view()),
        "intercept": intercept(&r.intercept),
        "refit": config.refit,
        "fixed_point": matrix_json(r.fixed_point.view()),
        "fixed_point_intercept": intercept(&r.fixed_point_intercept),
        "active": active,
        "rho": r.rho,
        "eta_bar": r.eta_bar,
        "fixed_point_residual": r.fixed_point_residual,
        "polish_tol": config.polish_tol,
        "converged": r.converged(config.polish_tol),
        "iterations": r.iterations,
        "line_search_warnings": r.line_search_warnings,
        "polish_rounds": r.polish_rounds,
        "polish_singular": r.polish_singular,
        "refit_singular": r.refit_singular,
        "objective_trace": r.objective_trace,
        "rho_trace": r.rho_trace,
        "q_trace": r.q_trace,
        "eta_bar_trace": r.eta_bar_trace,
        "wall_time": if timing { json!(r.wall_time) } else { Value::Null },
    })
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let problem = load_problem(&a.data)?;
    let mut config = a.solver.config(a.q);
    config.refit = a.refit;
    let value = match &problem {
        Loaded::Real(p) => fit_json(p, &config, &fit(p, &config)?, a.timing),
        Loaded::Complex(p) => fit_json(p, &config, &fit(p, &config)?, a.timing),
    };
    io::write_json(a.out.as_deref(), &value)
}

fn selection_json<T: Scalar + JsonScalar>(
    problem: &Problem<T>,
    sel: &SelectionResult<T>,
    criterion: &str,
    a_const: f64,
) -> Value {
    let chosen = sel.chosen_fit();
    let entries: Vec<Value> = sel
        .entries
        .iter()
        .map(|e| {
            json!({
                "q": e.q,
                "score": e.score,
                "skipped": e.skipped,
                "support_size": e.support_size,
                "support": one_based(&e.fit.support),
                "loss_value": e.loss_value,
                "rss": e.rss,
            })
        })
        .collect();
    json!({
        "criterion": criterion,
        "A": a_const,
        "n": problem.n(),
        "p": problem.p(),
        "m": problem.m(),
        "chosen_q": sel.chosen_q,
        "chosen_support": one_based(&chosen.support),
        "coefficients": matrix_json(chosen.coefficients.view()),
        "entries": entries,
    })
}

fn cmd_select_q(a: &SelectArgs) -> Result<()> {
    let (criterion, name) = match a.pic {
        PicArg::KnownScale => (Criterion::KnownScale(a.a), "known-scale"),
        PicArg::ScaleFree => (Criterion::ScaleFree(a.a), "scale-free"),
    };
    let first = *a.q_grid.0.first().ok_or_else(|| anyhow!("empty q grid"))?;
    let template = a.solver.config(first);
    let value = match &load_problem(&a.data)? {
        Loaded::Real(p) => selection_json(p, &select_q(p, &a.q_grid.0, &template, criterion)?, name, a.a),
        Loaded::Complex(p) => selection_json(p, &select_q(p, &a.q_grid.0, &template, criterion)?, name, a.a),
    };
    io::write_json(a.out.as_deref(), &value)
}

fn bench_spec(a: &BenchArgs) -> Result<ExperimentSpec> {
    let mut spec = if a.preset == "custom" {
        let mut s = ExperimentSpec::preset("table41-toeplitz").expect("known preset");
        s.name = "custom".into();
        s
    } else {
        ExperimentSpec::preset(&a.preset).ok_or_else(|| {
            anyhow!(
                "unknown preset {:?}; expected table41-toeplitz, table41-equal, table42-toeplitz, table42-equal or custom",
                a.preset
            )
        })?
    };
    let d = &mut spec.data;
    d.n = a.n.unwrap_or(d.n);
    d.p = a.p.unwrap_or(d.p);
    d.s = a.s.unwrap_or(d.s);
    d.tau = a.tau.unwrap_or(d.tau);
    if let Some(c) = a.cov {
        d.cov = c.into();
    }
    if a.classification {
        d.model = Model::Classification;
    } else if let Some(sigma) = a.sigma {
        d.model = Model::Regression { sigma };
    }
    spec.q = a.q.unwrap_or(spec.data.s * 3 / 2);
    spec.eta0 = a.eta0.unwrap_or(spec.eta0);
    spec.steps = a.steps.unwrap_or(spec.steps);
    spec.reps = a.reps.unwrap_or(spec.reps);
    spec.seed = a.seed;
    if a.no_iht {
        spec.methods = vec![Method::SlowKill];
    }
    Ok(spec)
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let spec = bench_spec(a)?;
    log::info!("running {} replicates of {}", spec.reps, spec.name);
    let out = run_experiment(&spec)?;
    let mut w = csv::Writer::from_writer(io::open_output(a.out.as_deref())?);
    w.write_record(["scenario", "method", "reps", "miss_mean", "miss_se", "error_mean", "error_se", "time_total"])?;
    for s in &out.summaries {
        let time = if a.timing { s.time_total.to_string() } else { "NA".into() };
        w.write_record([
            s.scenario.clone(),
            s.method.name().to_string(),
            s.reps.to_string(),
            s.miss_mean.to_string(),
            s.miss_se.to_string(),
            s.error_mean.to_string(),
            s.error_se.to_string(),
            time,
        ])?;
    }
    w.flush()?;
    if let Some(path) = &a.records {
        let mut f = io::open_output(Some(path))?;
        for r in &out.records {
            let mut v = serde_json::to_value(r)?;
            v["support"] = json!(one_based(&r.support));
            v["method"] = json!(r.method.name());
            if !a.timing {
                v["wall_time"] = Value::Null;
            }
            writeln!(f, "{}", serde_json::to_string(&v)?)?;
        }
        f.flush()?;
    }
    Ok(())
}

fn cmd_rip_curve(a: &RipArgs) -> Result<()> {
    let spec = CurveSpec {
        n: a.n,
        p: a.p,
        s: a.s,
        tau: a.tau,
        cov: a.cov.into(),
        theta_grid: a.theta_grid.0.clone(),
        samples: a.samples,
        exhaustive: a.exhaustive,
        reps: a.reps,
        seed: a.seed,
    };
    let curve = rip_ratio_curve(&spec)?;
    let mut w = csv::Writer::from_writer(io::open_output(a.out.as_deref())?);
    w.write_record(["theta", "q", "mean_ratio", "stderr"])?;
    for c in &curve {
        w.write_record([c.theta.to_string(), c.q.to_string(), c.mean_ratio.to_string(), c.stderr.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
