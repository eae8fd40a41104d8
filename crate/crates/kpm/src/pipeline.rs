//! Estimation pipeline: load an operator, resolve the configuration, estimate
//! moments, build the density, and score it against a reference spectrum.

use std::path::PathBuf;

use kpm_core::cheb::NORM_K;
use kpm_core::graph::{self, default_repetitions, BoostedGraphOracle, GraphKind, OracleStats};
use kpm_core::jackson::cached_jackson_coefficients;
use kpm_core::kpm::{full_kpm, idealized_kpm};
use kpm_core::moments::{
    basis_trace_partial, hutchinson_probe_forms, moments_from_forms, moments_from_spectrum, EstimationConfig,
    DEFAULT_CONSTANT_C,
};
use kpm_core::oracle::{estimate_spectral_norm, scale_to_unit_norm, Counted, DEFAULT_SCALE_MARGIN};
use kpm_core::spectrum::{discretize_greedy, discretize_optimal, w1_density_vs_spectrum, w1_discrete, MIN_RESOLUTION};
use kpm_core::{DensityEstimate, DiscreteSpectrum, GraphAccess, MatVecOracle, MomentVector, Provenance, SymmetricMatrix};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::formats::{self, DensityMetadata};

/// Power-iteration steps for the norm check and auto-scaling.
pub const NORM_ITERATIONS: usize = 200;
/// Inputs whose estimated norm exceeds `1 + NORM_SLACK` need `--auto-scale`.
pub const NORM_SLACK: f64 = 1e-6;
/// Basis vectors per parallel work item in the exact-moment sweep. Fixed so
/// the summation order, and hence the output, is independent of the number
/// of workers.
pub const BASIS_CHUNK: usize = 64;
/// Refuse configurations implying more oracle work than this (scalar
/// operations, roughly), rather than silently running for days.
pub const MAX_WORK: f64 = 1e11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Exact moments, idealized KPM.
    Exact,
    /// Hutchinson moments with exact products, shifted-and-rescaled KPM.
    Hutchinson,
    /// Hutchinson moments through the sampled graph oracle.
    GraphAmv,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Hutchinson => "hutchinson",
            Self::GraphAmv => "graph-amv",
        }
    }
}

/// Where the operator comes from.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Matrix(PathBuf),
    Graph(PathBuf),
    Generated { kind: String, size: usize },
}

#[derive(Debug, Clone)]
pub enum OperatorKind {
    Matrix(SymmetricMatrix),
    /// Normalized adjacency of the graph.
    Graph(GraphAccess),
}

#[derive(Debug, Clone)]
pub struct Operator {
    pub kind: OperatorKind,
    /// Factor applied to a matrix input (1 if unscaled).
    pub scale_factor: f64,
    /// Closed-form spectrum of generated graphs.
    pub truth: Option<DiscreteSpectrum>,
}

impl Operator {
    pub fn n(&self) -> usize {
        match &self.kind {
            OperatorKind::Matrix(m) => m.n(),
            OperatorKind::Graph(g) => g.n(),
        }
    }

    pub fn nnz(&self) -> usize {
        match &self.kind {
            OperatorKind::Matrix(m) => 2 * m.nnz_lower(),
            OperatorKind::Graph(g) => g.nnz(),
        }
    }
}

/// Load an operator. Matrices must satisfy `‖A‖₂ ≤ 1` unless `auto_scale`
/// is set, in which case they are scaled by the power-iteration estimate and
/// the factor is recorded. Graphs never need scaling.
pub fn load_operator(source: &Source, auto_scale: bool, seed: u64) -> CliResult<Operator> {
    match source {
        Source::Matrix(path) => {
            let matrix = formats::read_matrix(path)?;
            if auto_scale {
                let (scaled, factor) = scale_to_unit_norm(&matrix, NORM_ITERATIONS, DEFAULT_SCALE_MARGIN, seed)?;
                log::info!("auto-scaled {} by {factor:e}", path.display());
                return Ok(Operator { kind: OperatorKind::Matrix(scaled), scale_factor: factor, truth: None });
            }
            let norm = estimate_spectral_norm(&matrix, NORM_ITERATIONS, seed)?;
            if norm > 1.0 + NORM_SLACK {
                return Err(CliError::Config(format!(
                    "{}: estimated spectral norm {norm:.6} exceeds 1; rescale the input or pass --auto-scale",
                    path.display()
                )));
            }
            Ok(Operator { kind: OperatorKind::Matrix(matrix), scale_factor: 1.0, truth: None })
        }
        Source::Graph(path) => {
            if auto_scale {
                log::info!("--auto-scale ignored for graphs: the normalized adjacency has norm at most 1");
            }
            Ok(Operator { kind: OperatorKind::Graph(formats::read_graph(path)?), scale_factor: 1.0, truth: None })
        }
        Source::Generated { kind, size } => {
            let kind = GraphKind::parse(kind).ok_or_else(|| CliError::Config(format!("unknown graph kind {kind:?}")))?;
            let generated = graph::generate_graph(kind, *size)?;
            Ok(Operator { kind: OperatorKind::Graph(generated.graph), scale_factor: 1.0, truth: generated.ground_truth })
        }
    }
}

/// User-facing knobs; `None` means "derive from the configuration".
#[derive(Debug, Clone)]
pub struct EstimateParams {
    pub method: Method,
    pub eps: Option<f64>,
    pub degree: Option<usize>,
    pub ell: Option<usize>,
    pub eps_mv: Option<f64>,
    pub delta: f64,
    pub seed: u64,
    pub samples_per_matvec: Option<u64>,
    pub repetitions: Option<usize>,
    pub boost_constant: f64,
    pub constant_c: f64,
    /// Reflect a graph density onto the normalized-Laplacian spectrum.
    pub laplacian: bool,
}

impl Default for EstimateParams {
    fn default() -> Self {
        Self {
            method: Method::Hutchinson,
            eps: None,
            degree: None,
            ell: None,
            eps_mv: None,
            delta: 0.1,
            seed: 0,
            samples_per_matvec: None,
            repetitions: None,
            boost_constant: graph::DEFAULT_BOOST_CONSTANT,
            constant_c: DEFAULT_CONSTANT_C,
            laplacian: false,
        }
    }
}

/// `N` from `--degree`, or `4⌈18/(4ε)⌉` from `--eps`; exactly one is needed.
pub fn resolve_config(params: &EstimateParams) -> CliResult<EstimationConfig> {
    let mut config = match (params.degree, params.eps) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either --eps or --degree, not both".into())),
        (None, None) => return Err(CliError::Config("one of --eps or --degree is required".into())),
        (Some(degree), None) => EstimationConfig::for_degree(degree, params.delta)?,
        (None, Some(eps)) => EstimationConfig::for_accuracy(eps, params.delta)?,
    };
    config.constant_c = params.constant_c;
    // The configuration already defaults to ε_MV = Δ/(4N²) = 1/(4N⁴).
    if let Some(e) = params.eps_mv {
        config.eps_mv = e;
    }
    Ok(config)
}

/// Work and randomness accounting for a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Accounting {
    /// Where the moments came from: `basis-sweep`, `closed-form-spectrum`,
    /// `hutchinson` or `hutchinson-approx`.
    pub moment_source: String,
    pub oracle_calls: u64,
    pub sampled_matvecs: u64,
    pub entries_touched: u64,
    pub samples: u64,
    pub flagged_calls: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_per_matvec: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boost_repetitions: Option<usize>,
}

impl Accounting {
    fn absorb(&mut self, stats: OracleStats) {
        self.sampled_matvecs += stats.sampled_matvecs;
        self.entries_touched += stats.entries_touched;
        self.samples += stats.samples;
        self.flagged_calls += stats.flagged;
    }
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub density: DensityEstimate,
    pub moments: MomentVector,
    pub metadata: DensityMetadata,
    pub config: EstimationConfig,
    pub accounting: Accounting,
}

/// Exact moments by the basis sweep, in fixed-size chunks summed in order.
pub fn parallel_exact_moments<O: MatVecOracle>(oracle: &O, degree: usize) -> CliResult<MomentVector> {
    let n = oracle.dim();
    let partials: Vec<Vec<f64>> = (0..n.div_ceil(BASIS_CHUNK))
        .into_par_iter()
        .map(|c| basis_trace_partial(oracle, degree, c * BASIS_CHUNK..n.min((c + 1) * BASIS_CHUNK)))
        .collect();
    let mut sums = vec![0.0; degree];
    for part in &partials {
        for (s, p) in sums.iter_mut().zip(part) {
            *s += p;
        }
    }
    let scale = NORM_K / n as f64;
    Ok(MomentVector::new(degree, sums.into_iter().map(|s| s * scale).collect(), Provenance::Exact, 0, 0)?)
}

/// Hutchinson moments with repetitions run in parallel; identical output to
/// the sequential estimator.
pub fn parallel_hutchinson<O: MatVecOracle>(
    oracle: &O,
    degree: usize,
    ell: usize,
    seed: u64,
    provenance: Provenance,
) -> CliResult<MomentVector> {
    if ell == 0 {
        return Err(CliError::Config("--ell must be at least 1".into()));
    }
    let per_rep: Vec<Vec<f64>> =
        (0..ell as u64).into_par_iter().map(|rep| hutchinson_probe_forms(oracle, degree, seed, rep)).collect();
    Ok(moments_from_forms(per_rep, oracle.dim(), degree, provenance, seed)?)
}

fn check_work(what: &str, work: f64, hint: &str) -> CliResult<()> {
    if work > MAX_WORK {
        return Err(CliError::Config(format!("{what} implies ~{work:.2e} operations (limit {MAX_WORK:.0e}); {hint}")));
    }
    Ok(())
}

/// Run the full estimation for `op`.
pub fn estimate(op: &Operator, params: &EstimateParams) -> CliResult<Estimate> {
    let config = resolve_config(params)?;
    let degree = config.degree;
    let n = op.n();
    let jackson = cached_jackson_coefficients(degree)?;
    let mut acc = Accounting::default();
    let mut ell = 0;
    let mut samples_per_matvec = None;
    let mut repetitions = None;

    if params.laplacian && matches!(op.kind, OperatorKind::Matrix(_)) {
        return Err(CliError::Config("--laplacian applies to graph inputs only".into()));
    }

    let moments = match (params.method, &op.kind) {
        (Method::Exact, kind) => {
            if params.ell.is_some() {
                log::warn!("--ell is ignored by the exact method");
            }
            if let Some(truth) = &op.truth {
                acc.moment_source = "closed-form-spectrum".into();
                moments_from_spectrum(truth.values(), degree)?
            } else {
                acc.moment_source = "basis-sweep".into();
                check_work("the exact basis sweep", (n * degree) as f64 * op.nnz().max(n) as f64, "use --method hutchinson")?;
                acc.oracle_calls = (n * degree) as u64;
                match kind {
                    OperatorKind::Matrix(m) => parallel_exact_moments(m, degree)?,
                    OperatorKind::Graph(g) => parallel_exact_moments(g, degree)?,
                }
            }
        }
        (Method::Hutchinson, kind) => {
            ell = params.ell.unwrap_or_else(|| config.repetitions(n));
            check_work(
                &format!("ell = {ell}"),
                (ell * degree) as f64 * op.nnz().max(n) as f64,
                "pass a smaller --ell",
            )?;
            acc.moment_source = "hutchinson".into();
            let oracle_calls;
            let m = match kind {
                OperatorKind::Matrix(m) => {
                    let counted = Counted::new(m);
                    let out = parallel_hutchinson(&counted, degree, ell, params.seed, Provenance::Hutchinson)?;
                    oracle_calls = counted.calls();
                    out
                }
                OperatorKind::Graph(g) => {
                    let counted = Counted::new(g);
                    let out = parallel_hutchinson(&counted, degree, ell, params.seed, Provenance::Hutchinson)?;
                    oracle_calls = counted.calls();
                    out
                }
            };
            acc.oracle_calls = oracle_calls;
            m
        }
        (Method::GraphAmv, OperatorKind::Matrix(_)) => {
            return Err(CliError::Config("--method graph-amv needs a graph input (--graph or --kind)".into()))
        }
        (Method::GraphAmv, OperatorKind::Graph(g)) => {
            ell = params.ell.unwrap_or_else(|| config.repetitions(n));
            let mut oracle = BoostedGraphOracle::new(g, config.eps_mv, config.delta, params.seed)?
                .with_repetitions(params.repetitions.unwrap_or_else(|| default_repetitions(config.delta, params.boost_constant)));
            if let Some(t) = params.samples_per_matvec {
                if t == 0 {
                    return Err(CliError::Config("--samples-per-matvec must be positive".into()));
                }
                oracle = oracle.with_samples(t);
            }
            let draws = oracle.samples() as f64 * oracle.repetitions() as f64 * (ell * degree) as f64;
            check_work(
                &format!("eps_mv = {:e}, r = {}, t = {}, ell = {ell}", config.eps_mv, oracle.repetitions(), oracle.samples()),
                draws,
                "pass --samples-per-matvec, a larger --eps-mv or a smaller --ell",
            )?;
            if config.eps_mv > 1.0 / (2.0 * (degree * degree) as f64) {
                log::warn!("eps_mv = {:e} exceeds 1/(2N^2); the recurrence error bound no longer applies", config.eps_mv);
            }
            acc.moment_source = "hutchinson-approx".into();
            samples_per_matvec = Some(oracle.samples());
            repetitions = Some(oracle.repetitions());
            let m = parallel_hutchinson(&oracle, degree, ell, params.seed, Provenance::HutchinsonApprox)?;
            let stats = oracle.stats();
            acc.oracle_calls = stats.calls;
            acc.absorb(stats);
            acc.samples_per_matvec = samples_per_matvec;
            acc.boost_repetitions = repetitions;
            m
        }
    };

    let mut density = match params.method {
        Method::Exact => idealized_kpm(&moments, &jackson)?,
        Method::Hutchinson | Method::GraphAmv => full_kpm(&moments, &jackson)?,
    };
    if params.laplacian {
        density = graph::laplacian_reflect_density(&density);
    }
    let metadata = DensityMetadata {
        kind: density.form().as_str().into(),
        method: params.method.as_str().into(),
        n,
        ell,
        seed: params.seed,
        eps_mv: if params.method == Method::GraphAmv { config.eps_mv } else { 0.0 },
        delta: config.delta,
        samples_per_matvec,
        repetitions,
        scale_factor: op.scale_factor,
        laplacian_reflected: density.is_reflected(),
        affine_shift: if density.is_reflected() { 1.0 } else { 0.0 },
    };
    Ok(Estimate { density, moments, metadata, config, accounting: acc })
}

/// W1 scores of a density against a reference spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n: usize,
    /// `W1(q, Λ)` of the continuous density.
    pub w1_density: f64,
    /// Grid spacing of the greedy discretization.
    pub greedy_eps: f64,
    /// `W1(Λ̃, Λ)` after greedy discretization.
    pub w1_greedy: f64,
    /// Eigenvalues moved by the greedy final-cell correction.
    pub greedy_final_cell_adjustment: i64,
    /// `W1(Λ̃, Λ)` after quantile (optimal) discretization.
    pub w1_optimal: f64,
}

pub fn evaluate(q: &DensityEstimate, truth: &DiscreteSpectrum, greedy_eps: f64, resolution: usize) -> CliResult<EvalReport> {
    if truth.is_empty() {
        return Err(CliError::Config("reference spectrum is empty".into()));
    }
    if resolution < MIN_RESOLUTION {
        return Err(CliError::Config(format!("--grid-points must be at least {MIN_RESOLUTION}")));
    }
    let n = truth.len();
    let greedy = discretize_greedy(q, n, greedy_eps)?;
    let optimal = discretize_optimal(q, n)?;
    Ok(EvalReport {
        n,
        w1_density: w1_density_vs_spectrum(q, truth, resolution)?,
        greedy_eps,
        w1_greedy: w1_discrete(&greedy.spectrum, truth)?,
        greedy_final_cell_adjustment: greedy.final_cell_adjustment,
        w1_optimal: w1_discrete(&optimal, truth)?,
    })
}
