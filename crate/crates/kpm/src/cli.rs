//! Command-line interface. Every verb writes its primary output plus a
//! `<output>.manifest.json` run record.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kpm_core::graph::{self, GraphKind};
use kpm_core::spectrum::{discretize_greedy, discretize_optimal, MIN_RESOLUTION};

use crate::error::{CliError, CliResult};
use crate::formats;
use crate::manifest::{ConfigRecord, RunManifest};
use crate::pipeline::{self, EstimateParams, Method, Operator, Source};
use crate::table1::{self, Scale, Table1Config};

#[derive(Debug, Parser)]
#[command(name = "kpm", version, about = "Spectral density estimation with the Jackson-damped kernel polynomial method")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a spectral density and write it as JSON.
    Estimate(EstimateArgs),
    /// Estimate Chebyshev moments only.
    Moments(EstimateArgs),
    /// Score a density against a reference spectrum in Wasserstein-1.
    Eval(EvalArgs),
    /// Turn a density into n approximate eigenvalues.
    Discretize(DiscretizeArgs),
    /// Write a generated graph (and optionally its exact spectrum).
    GraphGen(GraphGenArgs),
    /// Reproduce the three-graph experiment table with plot data.
    ExperimentTable1(Table1Args),
}

/// Exactly one operator source.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct InputArgs {
    /// Symmetric matrix: Matrix Market coordinate file or dense text rows.
    #[arg(long, value_name = "PATH")]
    pub matrix: Option<PathBuf>,
    /// Graph edge list ("n m" header, 1-indexed "u v" lines).
    #[arg(long, value_name = "PATH")]
    pub graph: Option<PathBuf>,
    /// Generated graph kind (use with --size).
    #[arg(long, value_parser = graph_kind)]
    pub kind: Option<GraphKind>,
}

fn graph_kind(s: &str) -> Result<GraphKind, String> {
    GraphKind::parse(s).ok_or_else(|| {
        "expected clique-plus-matching, hairy-clique, hypercube, complete, star or path".to_owned()
    })
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Size of a generated graph (vertex count; bit count for hypercube).
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, value_enum, default_value_t = Method::Hutchinson)]
    pub method: Method,
    /// Target Wasserstein accuracy; sets N = 4⌈18/(4ε)⌉.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Chebyshev degree N (instead of --eps).
    #[arg(long)]
    pub degree: Option<usize>,
    /// Hutchinson probe count; defaults to the accuracy-driven formula.
    #[arg(long)]
    pub ell: Option<usize>,
    /// Oracle accuracy for graph-amv; defaults to 1/(4N⁴).
    #[arg(long)]
    pub eps_mv: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sampled-matvec budget t per repetition for graph-amv.
    #[arg(long)]
    pub samples_per_matvec: Option<u64>,
    /// Boosting repetitions r for graph-amv.
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// c in r = ⌈c ln(1/δ)⌉.
    #[arg(long, default_value_t = graph::DEFAULT_BOOST_CONSTANT)]
    pub boost_constant: f64,
    /// C in the probe-count formula.
    #[arg(long, default_value_t = kpm_core::moments::DEFAULT_CONSTANT_C)]
    pub constant_c: f64,
    /// Scale a matrix input by its estimated norm (recorded in the output).
    #[arg(long)]
    pub auto_scale: bool,
    /// Report the normalized-Laplacian density (graphs only).
    #[arg(long)]
    pub laplacian: bool,
    /// Also write (x, q(x)) plot data to this CSV.
    #[arg(long, value_name = "PATH")]
    pub plot: Option<PathBuf>,
    /// Plot points for --plot.
    #[arg(long, default_value_t = 1000)]
    pub grid_points: usize,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Density JSON, or a spectrum to compare discretely against --truth.
    #[arg(long)]
    pub input: PathBuf,
    /// Reference spectrum (text or JSON).
    #[arg(long)]
    pub truth: PathBuf,
    /// Grid spacing of the greedy discretization.
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// Panels for the continuous W1 integral.
    #[arg(long, default_value_t = 2000)]
    pub grid_points: usize,
    /// Report path: `.csv` for CSV, JSON otherwise.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Strategy {
    /// Conditional quantile means (smallest W1).
    Optimal,
    /// Floor-and-carry on a grid of spacing --eps.
    Greedy,
}

#[derive(Debug, Args)]
pub struct DiscretizeArgs {
    /// Density JSON.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of eigenvalues.
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = Strategy::Optimal)]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// Spectrum path: `.json` for JSON, one value per line otherwise.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct GraphGenArgs {
    #[arg(long, value_parser = graph_kind)]
    pub kind: GraphKind,
    #[arg(long)]
    pub size: usize,
    /// Also write the closed-form adjacency spectrum here.
    #[arg(long, value_name = "PATH")]
    pub truth: Option<PathBuf>,
    /// With --truth: write the normalized-Laplacian spectrum shifted into
    /// [-1, 1] (eigenvalue minus 1), matching `estimate --laplacian`.
    #[arg(long)]
    pub laplacian: bool,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Scale::Full)]
    pub scale: Scale,
    /// Seeds per randomized method.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long, default_value_t = 2)]
    pub ell: usize,
    /// Fixed sample budget t for every graph (skips the search).
    #[arg(long)]
    pub samples_per_matvec: Option<u64>,
    /// Output directory.
    #[arg(long, short)]
    pub output: PathBuf,
}

impl EstimateArgs {
    fn source(&self) -> CliResult<Source> {
        let i = &self.input;
        match (&i.matrix, &i.graph, i.kind, self.size) {
            (Some(p), None, None, None) => Ok(Source::Matrix(p.clone())),
            (None, Some(p), None, None) => Ok(Source::Graph(p.clone())),
            (None, None, Some(kind), Some(size)) => Ok(Source::Generated { kind: kind.as_str().into(), size }),
            (None, None, Some(_), None) => Err(CliError::Config("--kind needs --size".into())),
            _ => Err(CliError::Config("--size only applies to --kind".into())),
        }
    }

    fn params(&self) -> EstimateParams {
        EstimateParams {
            method: self.method,
            eps: self.eps,
            degree: self.degree,
            ell: self.ell,
            eps_mv: self.eps_mv,
            delta: self.delta,
            seed: self.seed,
            samples_per_matvec: self.samples_per_matvec,
            repetitions: self.repetitions,
            boost_constant: self.boost_constant,
            constant_c: self.constant_c,
            laplacian: self.laplacian,
        }
    }
}

fn input_paths(source: &Source) -> Vec<PathBuf> {
    match source {
        Source::Matrix(p) | Source::Graph(p) => vec![p.clone()],
        Source::Generated { .. } => Vec::new(),
    }
}

fn run_estimate(args: &EstimateArgs, moments_only: bool) -> CliResult<()> {
    let started = Instant::now();
    let source = args.source()?;
    let op: Operator = pipeline::load_operator(&source, args.auto_scale, args.seed)?;
    let est = pipeline::estimate(&op, &args.params())?;

    let mut manifest = RunManifest::new(if moments_only { "moments" } else { "estimate" });
    manifest.config = Some(ConfigRecord::from(&est.config));
    manifest.seeds = vec![args.seed];
    manifest.inputs = input_paths(&source);
    manifest.accounting = est.accounting.clone();
    manifest.details = serde_json::json!({
        "source": source,
        "method": args.method,
        "n": op.n(),
        "nnz": op.nnz(),
        "ell": est.metadata.ell,
        "scale_factor": op.scale_factor,
        "laplacian": args.laplacian,
    });

    if moments_only {
        formats::write_moments(&args.output, &est.moments)?;
    } else {
        formats::write_density(&args.output, &est.density, &est.metadata)?;
    }
    manifest.outputs.push(args.output.clone());
    if let Some(plot) = &args.plot {
        formats::write_plot_csv(plot, &est.density.plot_points(args.grid_points, 1e-4))?;
        manifest.outputs.push(plot.clone());
    }
    manifest.finish(&args.output, started)?;
    log::info!("wrote {}", args.output.display());
    Ok(())
}

fn run_eval(args: &EvalArgs) -> CliResult<()> {
    let started = Instant::now();
    if args.grid_points < MIN_RESOLUTION {
        return Err(CliError::Config(format!("--grid-points must be at least {MIN_RESOLUTION}")));
    }
    if !(args.eps > 0.0 && args.eps <= 2.0) {
        return Err(CliError::Config(format!("--eps must lie in (0, 2], got {}", args.eps)));
    }
    let truth = formats::read_spectrum(&args.truth)?;
    let report = match formats::read_density(&args.input) {
        Ok((q, _)) => {
            let r = pipeline::evaluate(&q, &truth, args.eps, args.grid_points)?;
            println!(
                "W1(density) = {:.6}  W1(greedy, eps={}) = {:.6}  W1(optimal) = {:.6}",
                r.w1_density, r.greedy_eps, r.w1_greedy, r.w1_optimal
            );
            serde_json::to_value(&r)
        }
        // Not a density: score two spectra directly.
        Err(density_err) => {
            let Ok(spectrum) = formats::read_spectrum(&args.input) else {
                return Err(density_err);
            };
            let w1 = kpm_core::spectrum::w1_discrete(&spectrum, &truth)?;
            println!("W1(spectrum) = {w1:.6}");
            serde_json::to_value(serde_json::json!({ "n": truth.len(), "w1_discrete": w1 }))
        }
    }
    .map_err(|e| CliError::Input(e.to_string()))?;
    let is_csv = args.output.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let fields = report.as_object().expect("reports serialize as objects");
        let header: Vec<&str> = fields.keys().map(String::as_str).collect();
        formats::write_csv(&args.output, &header, [fields.values().map(|v| v.to_string()).collect()])?;
    } else {
        formats::write_json_file(&args.output, &report)?;
    }
    let mut manifest = RunManifest::new("eval");
    manifest.inputs = vec![args.input.clone(), args.truth.clone()];
    manifest.outputs = vec![args.output.clone()];
    manifest.details = report;
    manifest.finish(&args.output, started)?;
    Ok(())
}

fn run_discretize(args: &DiscretizeArgs) -> CliResult<()> {
    let started = Instant::now();
    let (q, _) = formats::read_density(&args.input)?;
    let mut manifest = RunManifest::new("discretize");
    let spectrum = match args.strategy {
        Strategy::Optimal => discretize_optimal(&q, args.n)?,
        Strategy::Greedy => {
            let g = discretize_greedy(&q, args.n, args.eps)?;
            manifest.details = serde_json::json!({ "final_cell_adjustment": g.final_cell_adjustment, "eps": args.eps });
            g.spectrum
        }
    };
    formats::write_spectrum(&args.output, &spectrum)?;
    manifest.inputs = vec![args.input.clone()];
    manifest.outputs = vec![args.output.clone()];
    manifest.finish(&args.output, started)?;
    Ok(())
}

fn run_graph_gen(args: &GraphGenArgs) -> CliResult<()> {
    let started = Instant::now();
    let generated = graph::generate_graph(args.kind, args.size)?;
    formats::write_graph(&args.output, &generated.graph)?;
    let mut manifest = RunManifest::new("graph-gen");
    manifest.outputs.push(args.output.clone());
    if let Some(path) = &args.truth {
        let truth = generated
            .ground_truth
            .ok_or_else(|| CliError::Config(format!("{} has no closed-form spectrum", args.kind.as_str())))?;
        let truth = if args.laplacian {
            graph::laplacian_reflect_spectrum(&truth)
        } else {
            truth
        };
        formats::write_spectrum(path, &truth)?;
        manifest.outputs.push(path.clone());
    }
    manifest.details = serde_json::json!({
        "kind": args.kind.as_str(),
        "size": args.size,
        "n": generated.graph.n(),
        "edges": generated.graph.edge_count(),
        "laplacian_truth": args.laplacian,
    });
    manifest.finish(&args.output, started)?;
    Ok(())
}

fn run_table1(args: &Table1Args) -> CliResult<()> {
    let cfg = Table1Config {
        scale: args.scale,
        seed: args.seed,
        seeds: args.seeds,
        ell: args.ell,
        samples_per_matvec: args.samples_per_matvec,
        ..Default::default()
    };
    std::fs::create_dir_all(&args.output).map_err(|e| CliError::io(&args.output, e))?;
    let report = table1::run_to_dir(&cfg, &args.output, RunManifest::new("experiment-table1"))?;
    print!("{}", table1::markdown(&report));
    println!("total {:.1} s; outputs in {}", report.seconds, args.output.display());
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Estimate(a) => run_estimate(a, false),
        Command::Moments(a) => run_estimate(a, true),
        Command::Eval(a) => run_eval(a),
        Command::Discretize(a) => run_discretize(a),
        Command::GraphGen(a) => run_graph_gen(a),
        Command::ExperimentTable1(a) => run_table1(a),
    }
}

/// Parse `args`, run, and return the process exit code. Usage errors are
/// configuration errors (exit 3); `--help` and `--version` exit 0.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("kpm: {err}");
            err.exit_code()
        }
    }
}
