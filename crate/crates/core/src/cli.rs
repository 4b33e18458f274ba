//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 on input errors.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{load_dataset, order_k_reflections, Dataset};
use crate::dict::{
    build_3layer_absval, build_deep_sublibrary, build_dictionary, count_bound, evaluate, BuildOptions, BuilderKind,
    Dictionary, Subsample,
};
use crate::error::{Error, Result};
use crate::lasso::{self, LassoProblem, SolverOptions, SparseSolution, DEFAULT_BETA_FLOOR};
use crate::network::{forward, reconstruct, train_baseline, training_objective, NetworkParams, TrainConfig};
use crate::scalar::{dot, norm_l2};
use crate::verify::{
    check_distance_formula, check_equivalence, check_orthogonality, check_reflection_order_dictionary,
    detect_breakpoints_1d, reflection_order_bound, Check, VerificationReport, BREAKPOINT_GRID, BREAKPOINT_TOL,
    RANGE_PADDING,
};

pub const THREADS_ENV: &str = "REFLECTO_THREADS";

#[derive(Debug, Parser)]
#[command(name = "reflecto", version, about = "Lasso dictionaries for deep narrow absolute-value networks")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a dictionary from a dataset and write it as JSON.
    BuildDict(BuildDictArgs),
    /// Solve the Lasso over a dictionary and write the sparse solution.
    Solve(SolveArgs),
    /// Turn a Lasso solution into network parameters.
    Reconstruct(ReconstructArgs),
    /// Run verification checks; exits 1 if any fails.
    Verify(VerifyArgs),
    /// Write a 1-D cross-section of a network or feature as CSV.
    ExportPlot(ExportPlotArgs),
    /// Train a network with Adam and compare its objective with the Lasso.
    TrainBaseline(TrainArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with d feature columns followed by the label.
    #[arg(long)]
    pub data: PathBuf,
    /// Skip the first row of the CSV.
    #[arg(long)]
    pub header: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset<f64>> {
        load_dataset(&self.data, self.header)
    }
}

#[derive(Debug, Args)]
pub struct BuildDictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    /// 1d, relu-nobias, absval3 or sublib; chosen from --layers when absent.
    #[arg(long)]
    pub builder: Option<BuilderKind>,
    /// Shorthand for --builder relu-nobias.
    #[arg(long)]
    pub relu_nobias: bool,
    /// Keep this fraction of the enumerated multi-indices.
    #[arg(long)]
    pub subsample: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = DEFAULT_BETA_FLOOR)]
    pub beta: f64,
    #[arg(long, default_value_t = lasso::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = lasso::DEFAULT_MAX_SWEEPS)]
    pub sweeps: usize,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_sweeps: self.sweeps,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub dict: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Minimum-norm interpolation, decreasing beta down to --beta.
    #[arg(long)]
    pub min_norm: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long, default_value_t = crate::network::DEFAULT_PRUNE_TOL)]
    pub prune_tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Comma-separated subset of equivalence, orthogonality, distance,
    /// reflection-order; all applicable checks when absent.
    #[arg(long)]
    pub checks: Option<String>,
    /// Dictionary to check instead of building one.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Random points per feature for the distance check.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportPlotArgs {
    /// Network parameters to plot.
    #[arg(long, conflicts_with = "dict")]
    pub params: Option<PathBuf>,
    /// Dictionary whose --column is plotted.
    #[arg(long, requires = "column")]
    pub dict: Option<PathBuf>,
    #[arg(long)]
    pub column: Option<usize>,
    /// Dataset supplying the base point, the range and the sample rows.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
    /// Plot along coordinate axis `l` (0-based) instead of the first-layer weight.
    #[arg(long)]
    pub along: Option<usize>,
    #[arg(long, default_value_t = 512)]
    pub points: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    /// Number of units; defaults to the pre-initialisation's count, else 4.
    #[arg(long)]
    pub units: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BETA_FLOOR)]
    pub beta: f64,
    #[arg(long, default_value_t = crate::network::DEFAULT_LR)]
    pub lr: f64,
    #[arg(long, default_value_t = crate::network::DEFAULT_WEIGHT_DECAY)]
    pub decay: f64,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Start the first units from these parameters.
    #[arg(long, conflicts_with = "init_solution")]
    pub init_params: Option<PathBuf>,
    /// Start from the reconstruction of this solution over --dict.
    #[arg(long, requires = "dict")]
    pub init_solution: Option<PathBuf>,
    #[arg(long)]
    pub dict: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_dict(path: &Path) -> Result<Dictionary<f64>> {
    Dictionary::from_json(&read(path)?)
}

fn load_solution(path: &Path) -> Result<SparseSolution> {
    SparseSolution::from_json(&read(path)?)
}

fn load_params(path: &Path) -> Result<NetworkParams<f64>> {
    NetworkParams::from_json(&read(path)?)
}

/// Parses arguments, configures the thread pool and runs the command,
/// returning the process exit code.
pub fn main_entry() -> i32 {
    let cfg = RunConfig::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 2;
    }
    match run(cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

pub fn run(cfg: RunConfig) -> Result<i32> {
    match cfg.command {
        Command::BuildDict(a) => cmd_build_dict(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Reconstruct(a) => cmd_reconstruct(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::ExportPlot(a) => cmd_export_plot(&a),
        Command::TrainBaseline(a) => cmd_train_baseline(&a),
    }
}

fn select_builder(a: &BuildDictArgs, d: usize) -> Result<BuilderKind> {
    if a.relu_nobias {
        if a.builder.is_some_and(|b| b != BuilderKind::ReluNoBias) {
            return Err(Error::InvalidInput("--relu-nobias conflicts with --builder".into()));
        }
        return Ok(BuilderKind::ReluNoBias);
    }
    if let Some(b) = a.builder {
        return Ok(b);
    }
    match a.layers {
        2 if d == 1 => Ok(BuilderKind::OneDim),
        2 => Err(Error::InvalidInput(format!(
            "the 1d builder needs d = 1 but the data has d = {d}; pass --relu-nobias or --builder sublib"
        ))),
        3 => Ok(BuilderKind::AbsVal3),
        _ => Ok(BuilderKind::SubLibrary),
    }
}

pub fn cmd_build_dict(a: &BuildDictArgs) -> Result<i32> {
    let ds = a.data.load()?;
    let kind = select_builder(a, ds.dim())?;
    let opts = BuildOptions {
        subsample: a.subsample.map(|fraction| Subsample { fraction, seed: a.seed }),
    };
    let dict = build_dictionary(&ds, kind, a.layers, &opts)?;
    write(&a.out, &dict.to_json()?)?;
    let bound = match kind {
        BuilderKind::AbsVal3 => format!(", bound {}", count_bound(ds.n(), ds.dim())?),
        _ => String::new(),
    };
    println!(
        "{} columns from {} candidates ({} builder, depth {}{bound})",
        dict.len(),
        dict.raw_candidates,
        kind.name(),
        dict.depth
    );
    Ok(0)
}

pub fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let ds = a.data.load()?;
    let dict = load_dict(&a.dict)?;
    if dict.n != ds.n() {
        return Err(Error::DimensionMismatch {
            expected: dict.n,
            found: ds.n(),
        });
    }
    let opts = a.solver.options();
    let sol = if a.min_norm {
        lasso::solve_min_norm(&dict.matrix(), ds.y(), a.solver.beta, &opts)?
    } else {
        lasso::solve(&LassoProblem::from_dictionary(&dict, ds.y(), a.solver.beta)?, &opts)?
    };
    let sparse = SparseSolution::from_solution(&sol, a.solver.beta);
    write(&a.out, &sparse.to_json()?)?;
    println!(
        "objective {:e}, {} active of {}, xi {}, {} {:e}, converged {}",
        sol.objective,
        sparse.active_set.len(),
        dict.len(),
        sol.xi,
        if a.min_norm { "interpolation gap" } else { "kkt residual" },
        sol.kkt_residual,
        sol.converged
    );
    Ok(0)
}

pub fn cmd_reconstruct(a: &ReconstructArgs) -> Result<i32> {
    let dict = load_dict(&a.dict)?;
    let sol = load_solution(&a.solution)?.to_solution()?;
    let net = reconstruct(&sol, &dict, a.prune_tol)?;
    write(&a.out, &net.to_json()?)?;
    println!("{} units, depth {}", net.m(), net.depth);
    Ok(0)
}

const CHECK_NAMES: [&str; 4] = ["equivalence", "orthogonality", "distance", "reflection-order"];

pub fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let ds = a.data.load()?;
    let requested: Vec<String> = match &a.checks {
        None => CHECK_NAMES
            .iter()
            .filter(|&&c| c != "equivalence" || a.layers <= 3)
            .map(|c| c.to_string())
            .collect(),
        Some(list) => list
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
    };
    if let Some(bad) = requested.iter().find(|c| !CHECK_NAMES.contains(&c.as_str())) {
        return Err(Error::InvalidInput(format!(
            "unknown check {bad:?}; expected one of {}",
            CHECK_NAMES.join(", ")
        )));
    }
    let supplied = a.dict.as_deref().map(load_dict).transpose()?;
    if let Some(d) = &supplied {
        if d.n != ds.n() || d.d != ds.dim() {
            return Err(Error::InvalidInput(format!(
                "dictionary is for N = {}, d = {} but the data has N = {}, d = {}",
                d.n,
                d.d,
                ds.n(),
                ds.dim()
            )));
        }
    }
    let mut three_layer: Option<Dictionary<f64>> = None;
    let mut get_three_layer = |ds: &Dataset<f64>| -> Result<Dictionary<f64>> {
        if let Some(d) = &supplied {
            return Ok(d.clone());
        }
        if three_layer.is_none() {
            three_layer = Some(build_3layer_absval(ds, &BuildOptions::default())?);
        }
        Ok(three_layer.clone().expect("built above"))
    };
    let mut reports = Vec::new();
    for check in &requested {
        let rep = match check.as_str() {
            "equivalence" => check_equivalence(&ds, a.layers, a.solver.beta, &a.solver.options())?,
            "orthogonality" => check_orthogonality(&get_three_layer(&ds)?)?,
            "distance" => {
                let dict = get_three_layer(&ds)?;
                let mut worst: Option<Check> = None;
                for (j, col) in dict.columns.iter().enumerate() {
                    if col.spec.provenance.builder != BuilderKind::AbsVal3 {
                        continue;
                    }
                    let c = check_distance_formula(&col.spec, a.samples, 10.0, a.seed.wrapping_add(j as u64))?
                        .checks
                        .remove(0);
                    if worst.as_ref().is_none_or(|w| c.measured > w.measured) {
                        worst = Some(c);
                    }
                }
                match worst {
                    Some(c) => VerificationReport::single(c),
                    None => VerificationReport::default(),
                }
            }
            "reflection-order" => {
                let dict = match &supplied {
                    Some(d) => d.clone(),
                    None => build_deep_sublibrary(&ds, a.layers, &BuildOptions::default())?,
                };
                check_reflection_order_dictionary(&dict, &ds)?
            }
            _ => unreachable!("names validated above"),
        };
        reports.push(rep);
    }
    let report = VerificationReport::merge(reports);
    print!("{}", report.summary());
    if let Some(out) = &a.out {
        write(out, &report.to_json()?)?;
    }
    Ok(if report.passed() { 0 } else { 1 })
}

enum PlotSource {
    Network(NetworkParams<f64>),
    Feature(Box<crate::dict::FeatureSpec<f64>>),
}

impl PlotSource {
    fn value(&self, x: &[f64]) -> Result<f64> {
        match self {
            PlotSource::Network(p) => forward(p, x),
            PlotSource::Feature(s) => evaluate(s, x),
        }
    }

    fn dim(&self) -> usize {
        match self {
            PlotSource::Network(p) => p.dim,
            PlotSource::Feature(s) => s.dim(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            PlotSource::Network(p) => p.depth,
            PlotSource::Feature(s) => s.depth,
        }
    }

    fn weight(&self) -> Option<Vec<f64>> {
        match self {
            PlotSource::Network(p) => p.units.first().map(|u| u.w1.clone()),
            PlotSource::Feature(s) => Some(s.w.clone()),
        }
    }
}

fn fmt_row(kind: &str, t: f64, value: f64, label: Option<f64>) -> String {
    match label {
        Some(y) => {
            let sign = if y > 0.0 {
                1
            } else if y < 0.0 {
                -1
            } else {
                0
            };
            format!("{kind},{t},{value},{y},{sign}\n")
        }
        None => format!("{kind},{t},{value},,\n"),
    }
}

pub fn cmd_export_plot(a: &ExportPlotArgs) -> Result<i32> {
    let source = match (&a.params, &a.dict, a.column) {
        (Some(p), None, _) => PlotSource::Network(load_params(p)?),
        (None, Some(d), Some(j)) => {
            let dict = load_dict(d)?;
            let col = dict.columns.get(j).ok_or_else(|| {
                Error::InvalidInput(format!("column {j} out of range for {} columns", dict.len()))
            })?;
            PlotSource::Feature(Box::new(col.spec.clone()))
        }
        _ => {
            return Err(Error::InvalidInput(
                "give either --params or --dict with --column".into(),
            ))
        }
    };
    let dim = source.dim();
    let raw_dir = match a.along {
        Some(l) if l < dim => {
            let mut e = vec![0.0; dim];
            e[l] = 1.0;
            e
        }
        Some(l) => {
            return Err(Error::InvalidInput(format!("axis {l} out of range for d = {dim}")));
        }
        None => source
            .weight()
            .ok_or_else(|| Error::InvalidInput("no first-layer weight to project along; pass --along".into()))?,
    };
    let norm = norm_l2(&raw_dir);
    if norm == 0.0 {
        return Err(Error::InvalidInput("projection direction is zero".into()));
    }
    let dir: Vec<f64> = raw_dir.iter().map(|v| v / norm).collect();

    let ds = a.data.as_deref().map(|p| load_dataset::<f64>(p, a.header)).transpose()?;
    if let Some(ds) = &ds {
        crate::error::check_dim(dim, ds.dim())?;
    }
    // base point: the data mean with its component along the direction removed
    let base: Vec<f64> = match &ds {
        Some(ds) => {
            let n = ds.n() as f64;
            let mean: Vec<f64> = (0..dim).map(|k| ds.x().iter().map(|x| x[k]).sum::<f64>() / n).collect();
            let along = dot(&mean, &dir);
            mean.iter().zip(&dir).map(|(m, v)| m - along * v).collect()
        }
        None => vec![0.0; dim],
    };
    let (lo, hi) = match (a.lo, a.hi, &ds) {
        (Some(lo), Some(hi), _) => (lo, hi),
        (lo, hi, Some(ds)) => {
            let projected: Vec<Vec<f64>> = ds.x().iter().map(|x| vec![dot(x, &dir)]).collect();
            let closure = order_k_reflections(&projected, reflection_order_bound(source.depth()))?;
            let pts: Vec<f64> = closure.iter().map(|c| c.point[0]).collect();
            let min = pts.iter().copied().fold(f64::INFINITY, f64::min);
            let max = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let pad = RANGE_PADDING * (max - min).max(1.0);
            (lo.unwrap_or(min - pad), hi.unwrap_or(max + pad))
        }
        (lo, hi, None) => (lo.unwrap_or(-1.0), hi.unwrap_or(1.0)),
    };
    if !(lo < hi) || a.points < 2 {
        return Err(Error::InvalidInput(format!(
            "need lo < hi and at least 2 points, got [{lo}, {hi}] with {}",
            a.points
        )));
    }
    let at = |t: f64| -> Vec<f64> { base.iter().zip(&dir).map(|(b, v)| b + t * v).collect() };
    let g = |t: f64| source.value(&at(t)).unwrap_or(f64::NAN);

    let mut csv = String::from("kind,t,value,label,sign\n");
    for i in 0..a.points {
        let t = lo + (hi - lo) * i as f64 / (a.points - 1) as f64;
        csv.push_str(&fmt_row("curve", t, g(t), None));
    }
    for t in detect_breakpoints_1d(g, lo, hi, BREAKPOINT_GRID, BREAKPOINT_TOL) {
        csv.push_str(&fmt_row("breakpoint", t, g(t), None));
    }
    if let Some(ds) = &ds {
        for (x, &y) in ds.x().iter().zip(ds.y()) {
            csv.push_str(&fmt_row("sample", dot(x, &dir), source.value(x)?, Some(y)));
        }
    }
    write(&a.out, &csv)?;
    println!("plot over [{lo}, {hi}] written to {}", a.out.display());
    Ok(0)
}

pub fn cmd_train_baseline(a: &TrainArgs) -> Result<i32> {
    let ds = a.data.load()?;
    let mut lasso_objective = None;
    let pre = match (&a.init_params, &a.init_solution, &a.dict) {
        (Some(p), _, _) => Some(load_params(p)?),
        (None, Some(s), Some(d)) => {
            let dict = load_dict(d)?;
            let sparse = load_solution(s)?;
            let sol = sparse.to_solution()?;
            let beta = a.beta;
            lasso_objective = Some(lasso::objective(&dict.matrix(), &sol.z, sol.xi, ds.y(), beta)?);
            Some(reconstruct(&sol, &dict, crate::network::DEFAULT_PRUNE_TOL)?)
        }
        _ => None,
    };
    let units = a.units.unwrap_or_else(|| pre.as_ref().map_or(4, |p| p.m().max(1)));
    let cfg = TrainConfig {
        depth: a.layers,
        units,
        beta: a.beta,
        lr: a.lr,
        weight_decay: a.decay,
        epochs: a.epochs,
        seed: a.seed,
    };
    let net = train_baseline(&ds, &cfg, pre.as_ref())?;
    write(&a.out, &net.to_json()?)?;
    let obj = training_objective(&net, &ds, a.beta)?;
    match lasso_objective {
        Some(l) => println!(
            "baseline objective {obj:e}, lasso objective {l:e}, difference {:e}",
            obj - l
        ),
        None => println!("baseline objective {obj:e}"),
    }
    Ok(0)
}
