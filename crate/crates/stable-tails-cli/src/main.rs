//! Command-line front end: univariate distribution values, limit-functional
//! quadrature and bounds, rare-event estimation, decay-slope probes, and a
//! reproducible bank of worked examples.
//!
//! Exit codes: 0 on success, 1 when a reproduce check misses its tolerance,
//! 2 on usage, parse, or capability errors.

mod bank;
mod report;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;
use stable_tails::error::{Error, Result};
use stable_tails::estimate::{
    estimate_conditional, estimate_crude, normalized_limit_probe, slope_fit, EstimateReport,
    Method, ProbeRow,
};
use stable_tails::region::{Region, RegionVariant};
use stable_tails::spectral::{ModelSpec, StableVectorModel};
use stable_tails::tail::{l_montecarlo, l_quadrature, theorem_bounds, MonteCarloOptions, QuadratureOptions};
use stable_tails::univariate::{c_alpha, shared_constants, AlphaParam};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "stable-tails", version, about = "tail asymptotics of symmetric multivariate stable vectors")]
struct Cli {
    /// Size of the worker thread pool (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Univariate symmetric stable distribution values.
    Dist(DistArgs),
    /// Empirical characteristic function against the analytic form.
    CfCheck(CfArgs),
    /// Limit functional of a scenario at a given order.
    L(LArgs),
    /// Interior / dilation-limit sandwich bounds at a given order.
    Bounds(BoundsArgs),
    /// Rare-event probability at a single threshold.
    Estimate(EstimateArgs),
    /// Probability table over a threshold grid (CSV).
    Probe(ProbeArgs),
    /// Fit a decay slope to a probe CSV.
    Slope(SlopeArgs),
    /// Run built-in example checks against their expected values.
    Reproduce(ReproduceArgs),
    /// List the built-in example bank.
    ListBank(ListArgs),
}

/// Scenario file: a model plus an optional region and defaults that the
/// command-line flags override.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Scenario {
    #[serde(default)]
    id: Option<String>,
    model: ModelSpec,
    #[serde(default)]
    region: Option<Region>,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    h_grid: Option<Vec<f64>>,
    #[serde(default)]
    n: Option<u64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    variant: Option<String>,
    #[serde(default)]
    method: Option<Method>,
    #[serde(default)]
    smoothing: Option<usize>,
}

struct Loaded {
    model: StableVectorModel,
    region: Option<Region>,
    scenario: Scenario,
}

fn load_scenario(path: &PathBuf) -> Result<Loaded> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
    let scenario: Scenario = serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    let model = scenario.model.clone().into_model()?;
    let mut region = scenario.region.clone();
    if let Some(r) = region.as_mut() {
        r.validate(model.dim())?;
    }
    Ok(Loaded { model, region, scenario })
}

fn require_region(l: &Loaded) -> Result<&Region> {
    l.region.as_ref().ok_or_else(|| {
        let name = l.scenario.id.as_deref().unwrap_or("scenario");
        Error::Schema(format!("{name} has no region"))
    })
}

fn parse_variant(s: &str) -> Result<RegionVariant> {
    if s == "interior" {
        return Ok(RegionVariant::Interior);
    }
    if s == "closure" {
        return Ok(RegionVariant::Closure);
    }
    if let Some(d) = s.strip_prefix("dilated:") {
        let delta: f64 = d
            .parse()
            .map_err(|_| Error::Schema(format!("bad dilation radius in variant {s:?}")))?;
        return Ok(RegionVariant::Dilated(delta));
    }
    if let Some(d) = s.strip_prefix("eroded:") {
        let delta: f64 = d
            .parse()
            .map_err(|_| Error::Schema(format!("bad erosion radius in variant {s:?}")))?;
        return Ok(RegionVariant::Eroded(delta));
    }
    Err(Error::Schema(format!(
        "unknown variant {s:?} (expected interior, closure, dilated:<r>, eroded:<r>)"
    )))
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Schema(format!("bad grid value {p:?}")))
        })
        .collect()
}

#[derive(Args)]
struct DistArgs {
    /// Stability index in (0, 2).
    #[arg(long)]
    alpha: f64,
    /// Points at which to report density, distribution, and upper tail.
    #[arg(long, value_delimiter = ',')]
    x: Vec<f64>,
    /// Probability levels at which to report quantiles.
    #[arg(long, value_delimiter = ',')]
    quantile: Vec<f64>,
    /// Fractional absolute-moment orders to report.
    #[arg(long, value_delimiter = ',')]
    abs_moment: Vec<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CfArgs {
    /// Scenario JSON (only the model is used).
    #[arg(long)]
    scenario: PathBuf,
    /// Number of grid directions.
    #[arg(long, default_value_t = 10)]
    points: usize,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct LArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Subset order of the limit functional.
    #[arg(long)]
    k: Option<usize>,
    /// interior, closure, dilated:<r>, or eroded:<r>.
    #[arg(long)]
    variant: Option<String>,
    /// Monte Carlo over the sphere representation instead of quadrature.
    #[arg(long)]
    mc: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Threshold at which to estimate P(X in h . region).
    #[arg(long)]
    h: f64,
    #[arg(long)]
    n: Option<u64>,
    /// crude or conditional.
    #[arg(long)]
    method: Option<String>,
    /// Index of the column to smooth on (conditional method).
    #[arg(long)]
    smoothing: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report h^(k alpha) p_hat alongside the raw estimate.
    #[arg(long)]
    normalize_k: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated thresholds.
    #[arg(long)]
    h_grid: Option<String>,
    /// Order used for the normalized column h^(k alpha) p_hat.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print a decay-slope fit after the table.
    #[arg(long)]
    fit: bool,
}

#[derive(Args)]
struct SlopeArgs {
    /// CSV produced by the probe command.
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Entry ids to run (default: the whole bank).
    #[arg(long)]
    entry: Vec<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_grid_arg)]
    h_grid: Option<Vec<f64>>,
    /// Multiplies every tolerance in the bank.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
    #[arg(long)]
    json: bool,
    /// Print per-entry detail lines.
    #[arg(long)]
    verbose: bool,
}

fn parse_grid_arg(s: &str) -> std::result::Result<Vec<f64>, String> {
    parse_grid(s).map_err(|e| e.to_string())
}

#[derive(Args)]
struct ListArgs {
    #[arg(long)]
    json: bool,
}

fn parse_method(s: Option<&str>, fallback: Option<Method>) -> Result<Method> {
    match s {
        None => Ok(fallback.unwrap_or(Method::Conditional)),
        Some("crude") => Ok(Method::Crude),
        Some("conditional") => Ok(Method::Conditional),
        Some(other) => Err(Error::Schema(format!(
            "unknown method {other:?} (expected crude or conditional)"
        ))),
    }
}

fn run_dist(a: DistArgs) -> Result<()> {
    let alpha = AlphaParam::new(a.alpha)?;
    let consts = shared_constants(alpha)?;
    let mut rows = Vec::new();
    for &x in &a.x {
        let pdf = consts.pdf(x)?;
        let cdf = consts.cdf(x);
        let tail = consts.upper_tail(x);
        rows.push(json!({ "x": x, "pdf": pdf, "cdf": cdf, "upper_tail": tail }));
        if !a.json {
            println!("x = {x}: f = {pdf:.12e}, F = {cdf:.12}, P(S > x) = {tail:.12e}");
        }
    }
    let mut quantiles = Vec::new();
    for &v in &a.quantile {
        let q = consts.quantile(v);
        quantiles.push(json!({ "v": v, "quantile": q }));
        if !a.json {
            println!("F^-1({v}) = {q:.12e}");
        }
    }
    let mut moments = Vec::new();
    for &p in &a.abs_moment {
        let m = consts.abs_moment(p)?;
        moments.push(json!({ "p": p, "abs_moment": m }));
        if !a.json {
            println!("E|S|^{p} = {m:.12e}");
        }
    }
    if a.json {
        report::print_json(&json!({
            "alpha": a.alpha,
            "c_alpha": c_alpha(alpha),
            "points": rows,
            "quantiles": quantiles,
            "abs_moments": moments,
        }));
    } else {
        println!("tail constant C = {:.12}", c_alpha(alpha));
    }
    Ok(())
}

fn run_cf_check(a: CfArgs) -> Result<bool> {
    let loaded = load_scenario(&a.scenario)?;
    let n = a.n.or(loaded.scenario.n).unwrap_or(200_000);
    let seed = a.seed.or(loaded.scenario.seed).unwrap_or(8);
    let rows = bank::cf_grid_check(&loaded.model, a.points, n, seed)?;
    let worst = rows.iter().map(|r| r.z.abs()).fold(0.0f64, f64::max);
    if a.json {
        report::print_json(&json!({ "rows": rows, "max_abs_z": worst, "n": n, "seed": seed }));
    } else {
        for r in &rows {
            println!(
                "|theta| = {:.4}: exact {:.6}, empirical {:.6} +- {:.1e}, z = {:+.2}",
                r.radius, r.exact, r.empirical, r.sigma, r.z
            );
        }
        println!("max |z| = {worst:.2} over {} directions, n = {n}", rows.len());
    }
    Ok(worst <= 4.0)
}

fn run_l(a: LArgs) -> Result<()> {
    let loaded = load_scenario(&a.scenario)?;
    let region = require_region(&loaded)?;
    let k = a.k.or(loaded.scenario.k).unwrap_or(1);
    let variant_text = a
        .variant
        .or(loaded.scenario.variant.clone())
        .unwrap_or_else(|| "interior".into());
    let variant = parse_variant(&variant_text)?;
    let value = if a.mc {
        let mut opts = MonteCarloOptions::default();
        if let Some(s) = a.seed.or(loaded.scenario.seed) {
            opts.seed = s;
        }
        l_montecarlo(&loaded.model, region, variant, k, &opts)?
    } else {
        l_quadrature(&loaded.model, region, variant, k, &QuadratureOptions::default())?
    };
    if a.json {
        report::print_json(&report::l_value_json(k, &variant_text, &value));
    } else {
        match value.status {
            stable_tails::tail::LStatus::Finite => println!(
                "L(k = {k}, {variant_text}) = {:.10e} (error estimate {:.1e}, stabilized: {})",
                value.value, value.error_estimate, value.stabilized
            ),
            stable_tails::tail::LStatus::Infinite => {
                println!("L(k = {k}, {variant_text}) diverges");
                if let Some(w) = &value.divergence_witness {
                    println!("witness columns {:?}, signs {:?}", w.columns, w.coefficients);
                }
            }
        }
    }
    Ok(())
}

fn run_bounds(a: BoundsArgs) -> Result<()> {
    let loaded = load_scenario(&a.scenario)?;
    let region = require_region(&loaded)?;
    let k = a.k.or(loaded.scenario.k).unwrap_or(1);
    let b = theorem_bounds(&loaded.model, region, k, &QuadratureOptions::default())?;
    if a.json {
        report::print_json(&report::bounds_json(k, &b));
    } else {
        println!(
            "lower (interior)      : {:.10e} (error {:.1e})",
            b.lower.value, b.lower.error_estimate
        );
        match b.upper.status {
            stable_tails::tail::LStatus::Finite => println!(
                "upper (dilation limit): {:.10e} (stabilized: {})",
                b.upper.value, b.upper.stabilized
            ),
            stable_tails::tail::LStatus::Infinite => {
                println!("upper (dilation limit): infinite");
                if let Some(w) = &b.upper.divergence_witness {
                    println!("witness columns {:?}, signs {:?}", w.columns, w.coefficients);
                }
            }
        }
        for (d, l) in &b.delta_trace {
            println!("  delta {d:.6} -> L = {l:.10}");
        }
    }
    Ok(())
}

fn run_estimate(a: EstimateArgs) -> Result<()> {
    let loaded = load_scenario(&a.scenario)?;
    let region = require_region(&loaded)?;
    let n = a.n.or(loaded.scenario.n).unwrap_or(1_000_000);
    let seed = a.seed.or(loaded.scenario.seed).unwrap_or(1);
    let method = parse_method(a.method.as_deref(), loaded.scenario.method)?;
    let smoothing = a.smoothing.or(loaded.scenario.smoothing);
    let mut rep = match method {
        Method::Crude => estimate_crude(&loaded.model, region, a.h, n, seed)?,
        Method::Conditional => {
            estimate_conditional(&loaded.model, region, a.h, n, smoothing, seed)?
        }
    };
    if let Some(k) = a.normalize_k.or(loaded.scenario.k) {
        rep = rep.with_normalization(k, loaded.model.alpha().get());
    }
    if a.json {
        report::print_json(&rep);
    } else {
        report::estimate_text(&rep);
    }
    Ok(())
}

fn probe_rows(a: &ProbeArgs) -> Result<(Vec<ProbeRow>, Method, u64, Vec<EstimateReport>)> {
    let loaded = load_scenario(&a.scenario)?;
    let region = require_region(&loaded)?;
    let grid = match (&a.h_grid, &loaded.scenario.h_grid) {
        (Some(s), _) => parse_grid(s)?,
        (None, Some(g)) => g.clone(),
        (None, None) => return Err(Error::Schema("no h grid given".into())),
    };
    let k = a.k.or(loaded.scenario.k).unwrap_or(1);
    let n = a.n.or(loaded.scenario.n).unwrap_or(100_000);
    let seed = a.seed.or(loaded.scenario.seed).unwrap_or(1);
    let method = parse_method(a.method.as_deref(), loaded.scenario.method)?;
    let rows = normalized_limit_probe(&loaded.model, region, k, &grid, method, n, seed)?;
    let reports: Vec<EstimateReport> = grid
        .iter()
        .zip(&rows)
        .map(|(&h, r)| EstimateReport {
            h,
            p_hat: r.p_hat,
            ci: r.ci,
            n: r.n,
            method,
            seed,
            normalized: Some(r.normalized),
        })
        .collect();
    Ok((rows, method, seed, reports))
}

fn run_probe(a: ProbeArgs) -> Result<()> {
    let (rows, method, seed, reports) = probe_rows(&a)?;
    report::probe_csv(&rows, &format!("{method}"), seed);
    if a.fit {
        let fit = slope_fit(&reports)?;
        report::slope_text(&fit);
    }
    Ok(())
}

fn run_slope(a: SlopeArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.csv)
        .map_err(|e| Error::Schema(format!("cannot read {}: {e}", a.csv.display())))?;
    let mut reports = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 && line.starts_with("h,") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() < 7 {
            return Err(Error::Schema(format!("short CSV row on line {}", i + 1)));
        }
        let num = |j: usize| -> Result<f64> {
            parts[j]
                .trim()
                .parse()
                .map_err(|_| Error::Schema(format!("bad number {:?} on line {}", parts[j], i + 1)))
        };
        reports.push(EstimateReport {
            h: num(0)?,
            p_hat: num(1)?,
            ci: (num(2)?, num(3)?),
            n: num(4)? as u64,
            method: parse_method(Some(parts[5].trim()), None)?,
            seed: num(6)? as u64,
            normalized: if parts.len() > 7 && !parts[7].trim().is_empty() {
                Some(num(7)?)
            } else {
                None
            },
        });
    }
    let fit = slope_fit(&reports)?;
    if a.json {
        report::print_json(&report::slope_json(&fit));
    } else {
        report::slope_text(&fit);
    }
    Ok(())
}

fn run_reproduce(a: ReproduceArgs) -> Result<bool> {
    let ids: Vec<String> = if a.entry.is_empty() {
        bank::entries().into_iter().map(|r| r.id).collect()
    } else {
        a.entry.clone()
    };
    let opts = bank::RunOpts {
        alpha: a.alpha,
        n: a.n,
        seed: a.seed,
        h_grid: a.h_grid.clone(),
        tolerance_scale: a.tolerance_scale,
    };
    let mut reports = Vec::new();
    let mut all_pass = true;
    for id in &ids {
        let rep = bank::run_entry(id, &opts)?;
        all_pass &= rep.passed;
        if !a.json {
            report::check_text(&rep, a.verbose);
        }
        reports.push(rep);
    }
    if a.json {
        report::print_json(&reports);
    } else {
        let passed = reports.iter().filter(|r| r.passed).count();
        println!("{passed}/{} checks passed", reports.len());
    }
    Ok(all_pass)
}

fn dispatch(cli: Cli) -> Result<bool> {
    if let Some(w) = cli.workers {
        // A pool may already exist (tests); respect the explicit request when
        // possible and fall through silently otherwise.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    match cli.command {
        Command::Dist(a) => run_dist(a).map(|()| true),
        Command::CfCheck(a) => run_cf_check(a),
        Command::L(a) => run_l(a).map(|()| true),
        Command::Bounds(a) => run_bounds(a).map(|()| true),
        Command::Estimate(a) => run_estimate(a).map(|()| true),
        Command::Probe(a) => run_probe(a).map(|()| true),
        Command::Slope(a) => run_slope(a).map(|()| true),
        Command::Reproduce(a) => run_reproduce(a),
        Command::ListBank(a) => {
            let rows = bank::entries();
            if a.json {
                report::print_json(&rows);
            } else {
                for r in &rows {
                    println!(
                        "{:<18} alpha {:<5} {} [{}]{}",
                        r.id,
                        r.default_alpha,
                        r.summary,
                        r.provenance,
                        if r.alpha_locked { " (alpha locked)" } else { "" }
                    );
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
