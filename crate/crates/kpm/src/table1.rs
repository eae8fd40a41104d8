//! Graph experiment harness: three graphs × {idealized, Hutchinson,
//! approximate Hutchinson}, scored in Wasserstein-1 against closed-form
//! spectra, with plot data for densities, histograms and moments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kpm_core::graph::{self, BoostedGraphOracle, GraphKind, OracleStats};
use kpm_core::jackson::cached_jackson_coefficients;
use kpm_core::kpm::{full_kpm, idealized_kpm};
use kpm_core::moments::moments_from_spectrum;
use kpm_core::spectrum::{discretize_greedy, discretize_optimal, w1_density_vs_spectrum, w1_discrete};
use kpm_core::{rng, DensityEstimate, DiscreteSpectrum, GraphAccess, MomentVector, Provenance};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::formats;
use crate::manifest::RunManifest;
use crate::pipeline::parallel_hutchinson;

/// Equal-width histogram bins on `[-1, 1]`.
pub const HISTOGRAM_BINS: usize = 11;
/// Reference idealized / Hutchinson / approximate errors and sampled
/// fractions for clique-plus-matching, hairy-clique and hypercube.
pub const REFERENCE_IDEALIZED: [f64; 3] = [0.042, 0.045, 0.029];
pub const REFERENCE_HUTCHINSON: [f64; 3] = [0.068, 0.076, 0.037];
pub const REFERENCE_APPROX: [f64; 3] = [0.055, 0.099, 0.058];
pub const REFERENCE_FRACTION: [f64; 3] = [0.34, 0.59, 0.67];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    /// n = 1000 graphs and the 14-bit hypercube (reference sizes).
    Full,
    /// Small graphs for smoke tests.
    Small,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphCase {
    pub name: &'static str,
    #[serde(skip)]
    pub kind: GraphKind,
    pub size: usize,
    #[serde(rename = "N")]
    pub degree: usize,
}

pub fn cases(scale: Scale) -> [GraphCase; 3] {
    let (n, bits, n_small, n_cube) = match scale {
        Scale::Full => (1000, 14, 40, 80),
        Scale::Small => (200, 8, 16, 24),
    };
    [
        GraphCase { name: "clique-plus-matching", kind: GraphKind::CliquePlusMatching, size: n, degree: n_small },
        GraphCase { name: "hairy-clique", kind: GraphKind::HairyClique, size: n, degree: n_small },
        GraphCase { name: "hypercube", kind: GraphKind::Hypercube, size: bits, degree: n_cube },
    ]
}

/// How the approximate method's sample budget `t` is tuned.
#[derive(Debug, Clone, Serialize)]
pub struct SearchConfig {
    /// First budget tried, as a fraction of `nnz(Ā)`.
    pub start_fraction: f64,
    /// Bisection steps between the last failing and first passing budget.
    pub bisection_steps: usize,
    /// On-par: median approximate W1 ≤ median Hutchinson W1 + margin.
    pub parity_margin: f64,
    /// Give up (and report the last budget) beyond this multiple of nnz.
    pub max_fraction: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { start_fraction: 1.0 / 64.0, bisection_steps: 3, parity_margin: 0.02, max_fraction: 8.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Config {
    pub scale: Scale,
    pub seed: u64,
    pub seeds: usize,
    pub ell: usize,
    /// Fixed `t` for every graph, bypassing the search.
    pub samples_per_matvec: Option<u64>,
    pub search: SearchConfig,
    /// Grid spacing of the greedy discretization reported alongside.
    pub greedy_eps: f64,
    pub resolution: usize,
    pub plot_points: usize,
}

impl Default for Table1Config {
    fn default() -> Self {
        Self {
            scale: Scale::Full,
            seed: 0,
            seeds: 5,
            ell: 2,
            samples_per_matvec: None,
            search: SearchConfig::default(),
            greedy_eps: 0.01,
            resolution: 2000,
            plot_points: 400,
        }
    }
}

impl Table1Config {
    /// Per-run seeds derived from the base seed.
    pub fn run_seeds(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| rng::mix(self.seed, i)).collect()
    }
}

/// Scores of one density against the true spectrum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Scores {
    /// Quantile discretization vs truth: the headline number.
    pub w1_optimal: f64,
    /// Greedy grid discretization vs truth.
    pub w1_greedy: f64,
    /// The continuous density vs truth.
    pub w1_density: f64,
}

fn score(q: &DensityEstimate, truth: &DiscreteSpectrum, cfg: &Table1Config) -> CliResult<Scores> {
    let n = truth.len();
    Ok(Scores {
        w1_optimal: w1_discrete(&discretize_optimal(q, n)?, truth)?,
        w1_greedy: w1_discrete(&discretize_greedy(q, n, cfg.greedy_eps)?.spectrum, truth)?,
        w1_density: w1_density_vs_spectrum(q, truth, cfg.resolution)?,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// One seed of a randomized method.
#[derive(Debug, Clone, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    pub scores: Scores,
    #[serde(skip)]
    pub density: DensityEstimate,
    #[serde(skip)]
    pub moments: MomentVector,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<StatsRecord>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StatsRecord {
    pub calls: u64,
    pub sampled_matvecs: u64,
    pub entries_touched: u64,
    pub samples: u64,
    pub flagged: u64,
}

impl From<OracleStats> for StatsRecord {
    fn from(s: OracleStats) -> Self {
        Self {
            calls: s.calls,
            sampled_matvecs: s.sampled_matvecs,
            entries_touched: s.entries_touched,
            samples: s.samples,
            flagged: s.flagged,
        }
    }
}

/// Median-of-seeds summary of a randomized method.
#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub median: Scores,
    pub runs: Vec<SeedRun>,
}

impl MethodSummary {
    fn new(runs: Vec<SeedRun>) -> Self {
        let pick = |f: fn(&Scores) -> f64| median(&runs.iter().map(|r| f(&r.scores)).collect::<Vec<_>>());
        let median =
            Scores { w1_optimal: pick(|s| s.w1_optimal), w1_greedy: pick(|s| s.w1_greedy), w1_density: pick(|s| s.w1_density) };
        Self { median, runs }
    }
}

/// One step of the sample-budget search.
#[derive(Debug, Clone, Serialize)]
pub struct SearchStep {
    pub samples_per_matvec: u64,
    pub fraction_of_nnz: f64,
    pub median_w1: f64,
    pub on_par: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphReport {
    pub case: GraphCase,
    pub n: usize,
    pub nnz: usize,
    pub idealized: Scores,
    pub hutchinson: MethodSummary,
    pub approx: MethodSummary,
    pub samples_per_matvec: u64,
    /// Mean entries touched per sampled matvec over `nnz(Ā)`.
    pub entries_fraction_nnz: f64,
    /// Same over `n²`.
    pub entries_fraction_dense: f64,
    /// Whether the chosen budget met the on-par rule.
    pub on_par: bool,
    pub search: Vec<SearchStep>,
    #[serde(skip)]
    pub truth: DiscreteSpectrum,
    #[serde(skip)]
    pub exact_moments: MomentVector,
    #[serde(skip)]
    pub idealized_density: DensityEstimate,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Report {
    pub config: Table1Config,
    pub seeds: Vec<u64>,
    pub graphs: Vec<GraphReport>,
    pub seconds: f64,
}

fn hutchinson_run(graph: &GraphAccess, truth: &DiscreteSpectrum, degree: usize, seed: u64, cfg: &Table1Config) -> CliResult<SeedRun> {
    let jackson = cached_jackson_coefficients(degree)?;
    let moments = parallel_hutchinson(graph, degree, cfg.ell, seed, Provenance::Hutchinson)?;
    let density = full_kpm(&moments, &jackson)?;
    Ok(SeedRun { seed, scores: score(&density, truth, cfg)?, density, moments, stats: None })
}

/// Approximate Hutchinson with a single sampled matvec per oracle call
/// (`r = 1`) and budget `t`.
fn approx_run(
    graph: &GraphAccess,
    truth: &DiscreteSpectrum,
    degree: usize,
    samples: u64,
    seed: u64,
    cfg: &Table1Config,
) -> CliResult<SeedRun> {
    let jackson = cached_jackson_coefficients(degree)?;
    // The declared ε_MV only labels the oracle here; `t` is set directly.
    let implied = (48.0 * graph.n() as f64 / samples as f64).sqrt().min(0.999);
    let oracle = BoostedGraphOracle::new(graph, implied, 0.49, seed)?.with_repetitions(1).with_samples(samples);
    let moments = parallel_hutchinson(&oracle, degree, cfg.ell, seed, Provenance::HutchinsonApprox)?;
    let density = full_kpm(&moments, &jackson)?;
    Ok(SeedRun {
        seed,
        scores: score(&density, truth, cfg)?,
        density,
        moments,
        stats: Some(oracle.stats().into()),
    })
}

fn approx_summary(
    graph: &GraphAccess,
    truth: &DiscreteSpectrum,
    degree: usize,
    samples: u64,
    seeds: &[u64],
    cfg: &Table1Config,
) -> CliResult<MethodSummary> {
    let runs = seeds
        .par_iter()
        .map(|&s| approx_run(graph, truth, degree, samples, s, cfg))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(MethodSummary::new(runs))
}

/// Find the smallest tested budget whose median error is on par with
/// exact-product Hutchinson: double from `start_fraction · nnz`, then bisect
/// between the last failure and the first success.
fn search_budget(
    graph: &GraphAccess,
    truth: &DiscreteSpectrum,
    degree: usize,
    seeds: &[u64],
    target: f64,
    cfg: &Table1Config,
) -> CliResult<(u64, MethodSummary, Vec<SearchStep>, bool)> {
    let nnz = graph.nnz() as f64;
    let mut tried: BTreeMap<u64, MethodSummary> = BTreeMap::new();
    let mut steps = Vec::new();
    let mut eval = |t: u64, tried: &mut BTreeMap<u64, MethodSummary>| -> CliResult<bool> {
        let summary = approx_summary(graph, truth, degree, t, seeds, cfg)?;
        let on_par = summary.median.w1_optimal <= target;
        log::info!(
            "  t = {t} ({:.3} nnz): median W1 {:.4} (target {target:.4}) {}",
            t as f64 / nnz,
            summary.median.w1_optimal,
            if on_par { "on par" } else { "" }
        );
        steps.push(SearchStep {
            samples_per_matvec: t,
            fraction_of_nnz: t as f64 / nnz,
            median_w1: summary.median.w1_optimal,
            on_par,
        });
        tried.insert(t, summary);
        Ok(on_par)
    };

    let limit = (cfg.search.max_fraction * nnz).ceil() as u64;
    let mut t = ((cfg.search.start_fraction * nnz).ceil() as u64).max(1);
    let mut last_fail = None;
    let pass = loop {
        if eval(t, &mut tried)? {
            break Some(t);
        }
        last_fail = Some(t);
        if t >= limit {
            break None;
        }
        t = (2 * t).min(limit);
    };
    let Some(mut hi) = pass else {
        let summary = tried.remove(&t).expect("last budget evaluated");
        return Ok((t, summary, steps, false));
    };
    if let Some(mut lo) = last_fail {
        for _ in 0..cfg.search.bisection_steps {
            let mid = lo + (hi - lo) / 2;
            if mid == lo {
                break;
            }
            if eval(mid, &mut tried)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let summary = tried.remove(&hi).expect("passing budget evaluated");
    Ok((hi, summary, steps, true))
}

fn run_graph(case: &GraphCase, seeds: &[u64], cfg: &Table1Config) -> CliResult<GraphReport> {
    let started = Instant::now();
    let generated = graph::generate_graph(case.kind, case.size)?;
    let g = generated.graph;
    let truth = generated.ground_truth.ok_or_else(|| CliError::Config(format!("{} has no closed-form spectrum", case.name)))?;
    let degree = case.degree;
    log::info!("{}: n = {}, nnz = {}, N = {degree}", case.name, g.n(), g.nnz());

    let jackson = cached_jackson_coefficients(degree)?;
    let exact_moments = moments_from_spectrum(truth.values(), degree)?;
    let idealized_density = idealized_kpm(&exact_moments, &jackson)?;
    let idealized = score(&idealized_density, &truth, cfg)?;
    log::info!("  idealized W1 {:.4}", idealized.w1_optimal);

    let hutch_runs =
        seeds.par_iter().map(|&s| hutchinson_run(&g, &truth, degree, s, cfg)).collect::<CliResult<Vec<_>>>()?;
    let hutchinson = MethodSummary::new(hutch_runs);
    log::info!("  hutchinson median W1 {:.4}", hutchinson.median.w1_optimal);

    let (samples, approx, search, on_par) = match cfg.samples_per_matvec {
        Some(t) => {
            let summary = approx_summary(&g, &truth, degree, t, seeds, cfg)?;
            let on_par = summary.median.w1_optimal <= hutchinson.median.w1_optimal + cfg.search.parity_margin;
            (t, summary, Vec::new(), on_par)
        }
        None => {
            let target = hutchinson.median.w1_optimal + cfg.search.parity_margin;
            search_budget(&g, &truth, degree, seeds, target, cfg)?
        }
    };
    let (touched, matvecs) = approx
        .runs
        .iter()
        .filter_map(|r| r.stats)
        .fold((0u64, 0u64), |(t, m), s| (t + s.entries_touched, m + s.sampled_matvecs));
    let per_matvec = touched as f64 / matvecs.max(1) as f64;
    let n = g.n();
    Ok(GraphReport {
        case: case.clone(),
        n,
        nnz: g.nnz(),
        idealized,
        hutchinson,
        approx,
        samples_per_matvec: samples,
        entries_fraction_nnz: per_matvec / g.nnz() as f64,
        entries_fraction_dense: per_matvec / (n as f64 * n as f64),
        on_par,
        search,
        truth,
        exact_moments,
        idealized_density,
        seconds: started.elapsed().as_secs_f64(),
    })
}

pub fn run(cfg: &Table1Config) -> CliResult<Table1Report> {
    if cfg.seeds == 0 || cfg.ell == 0 {
        return Err(CliError::Config("need at least one seed and --ell ≥ 1".into()));
    }
    if cfg.samples_per_matvec == Some(0) {
        return Err(CliError::Config("--samples-per-matvec must be positive".into()));
    }
    let started = Instant::now();
    let seeds = cfg.run_seeds();
    let graphs = cases(cfg.scale).iter().map(|c| run_graph(c, &seeds, cfg)).collect::<CliResult<Vec<_>>>()?;
    Ok(Table1Report { config: cfg.clone(), seeds, graphs, seconds: started.elapsed().as_secs_f64() })
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// Markdown rendering of the table with reference values alongside.
pub fn markdown(report: &Table1Report) -> String {
    let mut out = String::from(
        "| Graph | Idealized | Hutchinson | Approximate Hutchinson | Entries sampled (of nnz) | Entries sampled (of n²) | t |\n\
         |---|---|---|---|---|---|---|\n",
    );
    for (i, g) in report.graphs.iter().enumerate() {
        let reference = |v: [f64; 3]| if report.config.scale == Scale::Full { format!(" (ref {})", pct(v[i])) } else { String::new() };
        out.push_str(&format!(
            "| {} | {}{} | {}{} | {}{} | {}{} | {} | {} |\n",
            g.case.name,
            pct(g.idealized.w1_optimal),
            reference(REFERENCE_IDEALIZED),
            pct(g.hutchinson.median.w1_optimal),
            reference(REFERENCE_HUTCHINSON),
            pct(g.approx.median.w1_optimal),
            reference(REFERENCE_APPROX),
            pct(g.entries_fraction_nnz),
            reference(REFERENCE_FRACTION),
            pct(g.entries_fraction_dense),
            g.samples_per_matvec,
        ));
    }
    out
}

fn e(x: f64) -> String {
    format!("{x:e}")
}

/// Write the table and all plot data under `dir`; returns the files written.
pub fn write_outputs(report: &Table1Report, dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> CliResult<()> {
        let path = dir.join(name);
        formats::write_text_file(&path, &text)?;
        written.push(path);
        Ok(())
    };

    let table_rows = report.graphs.iter().map(|g| {
        vec![
            g.case.name.to_owned(),
            g.n.to_string(),
            g.nnz.to_string(),
            g.case.degree.to_string(),
            e(g.idealized.w1_optimal),
            e(g.hutchinson.median.w1_optimal),
            e(g.approx.median.w1_optimal),
            e(g.idealized.w1_greedy),
            e(g.hutchinson.median.w1_greedy),
            e(g.approx.median.w1_greedy),
            e(g.idealized.w1_density),
            e(g.hutchinson.median.w1_density),
            e(g.approx.median.w1_density),
            g.samples_per_matvec.to_string(),
            e(g.entries_fraction_nnz),
            e(g.entries_fraction_dense),
            g.on_par.to_string(),
        ]
    });
    put(
        "table1.csv",
        formats::csv(
            &[
                "graph",
                "n",
                "nnz",
                "N",
                "idealized_w1",
                "hutchinson_w1_median",
                "approx_w1_median",
                "idealized_w1_greedy",
                "hutchinson_w1_greedy_median",
                "approx_w1_greedy_median",
                "idealized_w1_density",
                "hutchinson_w1_density_median",
                "approx_w1_density_median",
                "samples_per_matvec",
                "entries_fraction_nnz",
                "entries_fraction_n2",
                "on_par",
            ],
            table_rows,
        ),
    )?;
    let mut json = serde_json::to_string_pretty(report).map_err(|err| CliError::Input(err.to_string()))?;
    json.push('\n');
    put("table1.json", json)?;
    put("table1.md", markdown(report))?;

    let mut hist = Vec::new();
    let mut dens = Vec::new();
    let mut moms = Vec::new();
    let mut search = Vec::new();
    for g in &report.graphs {
        let name = g.case.name;
        let hutch = &g.hutchinson.runs[0];
        let approx = &g.approx.runs[0];
        let n = g.n;
        let mut bins = |label: &str, masses: Vec<f64>| {
            for (b, m) in masses.into_iter().enumerate() {
                let lo = -1.0 + 2.0 * b as f64 / HISTOGRAM_BINS as f64;
                let hi = -1.0 + 2.0 * (b + 1) as f64 / HISTOGRAM_BINS as f64;
                hist.push(vec![name.into(), label.into(), b.to_string(), e(lo), e(hi), e(m)]);
            }
        };
        bins("truth", g.truth.histogram(HISTOGRAM_BINS));
        for (label, q) in [("idealized", &g.idealized_density), ("hutchinson", &hutch.density), ("approx", &approx.density)] {
            bins(label, discretize_optimal(q, n)?.histogram(HISTOGRAM_BINS));
            for (x, y) in q.plot_points(report.config.plot_points, 1e-4) {
                dens.push(vec![name.into(), label.into(), e(x), e(y)]);
            }
        }
        let jackson = cached_jackson_coefficients(g.case.degree)?;
        for k in 1..=g.case.degree {
            let r = jackson.ratio(k);
            let (ex, hu, ap) = (g.exact_moments.get(k), hutch.moments.get(k), approx.moments.get(k));
            moms.push(vec![name.into(), k.to_string(), e(r), e(ex), e(hu), e(ap), e(r * ex), e(r * hu), e(r * ap)]);
        }
        for s in &g.search {
            search.push(vec![
                name.into(),
                s.samples_per_matvec.to_string(),
                e(s.fraction_of_nnz),
                e(s.median_w1),
                s.on_par.to_string(),
            ]);
        }
    }
    put("histograms.csv", formats::csv(&["graph", "method", "bin", "lo", "hi", "mass"], hist))?;
    put("densities.csv", formats::csv(&["graph", "method", "x", "q"], dens))?;
    put(
        "moments.csv",
        formats::csv(
            &["graph", "k", "jackson_ratio", "exact", "hutchinson", "approx", "damped_exact", "damped_hutchinson", "damped_approx"],
            moms,
        ),
    )?;
    put("search.csv", formats::csv(&["graph", "samples_per_matvec", "fraction_of_nnz", "median_w1", "on_par"], search))?;
    Ok(written)
}

/// Run, write everything under `dir`, and write the manifest.
pub fn run_to_dir(cfg: &Table1Config, dir: &Path, mut manifest: RunManifest) -> CliResult<Table1Report> {
    let started = Instant::now();
    let report = run(cfg)?;
    manifest.outputs = write_outputs(&report, dir)?;
    manifest.seeds = report.seeds.clone();
    for g in &report.graphs {
        for run in &g.approx.runs {
            if let Some(s) = run.stats {
                manifest.accounting.oracle_calls += s.calls;
                manifest.accounting.sampled_matvecs += s.sampled_matvecs;
                manifest.accounting.entries_touched += s.entries_touched;
                manifest.accounting.samples += s.samples;
                manifest.accounting.flagged_calls += s.flagged;
            }
        }
    }
    manifest.accounting.moment_source = "mixed".into();
    manifest.details = serde_json::json!({ "table": markdown(&report), "config": cfg });
    manifest.finish(dir, started)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn small_scale_runs_with_fixed_budget() {
        let cfg = Table1Config { scale: Scale::Small, seeds: 3, samples_per_matvec: Some(2000), ..Default::default() };
        let report = run(&cfg).unwrap();
        assert_eq!(report.graphs.len(), 3);
        for g in &report.graphs {
            assert!(g.idealized.w1_optimal < 0.2, "{}: {}", g.case.name, g.idealized.w1_optimal);
            assert!(g.entries_fraction_nnz > 0.0);
        }
    }
}
