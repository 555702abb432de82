//! Output formatting: JSON for single results, CSV for probe tables, and a
//! compact text rendering for the terminal.

use serde::Serialize;
use serde_json::json;
use stable_tails::estimate::{EstimateReport, ProbeRow};
use stable_tails::stats::SlopeFit;
use stable_tails::tail::{LStatus, LValue, TheoremBounds};

use crate::bank::CheckReport;

pub fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable report"));
}

fn witness_json(v: &LValue) -> serde_json::Value {
    match &v.divergence_witness {
        Some(w) => json!({ "columns": w.columns, "coefficients": w.coefficients }),
        None => serde_json::Value::Null,
    }
}

pub fn l_value_json(k: usize, variant: &str, v: &LValue) -> serde_json::Value {
    json!({
        "k": k,
        "variant": variant,
        "status": match v.status { LStatus::Finite => "finite", LStatus::Infinite => "infinite" },
        "value": v.value,
        "error": v.error_estimate,
        "witness": witness_json(v),
        "stabilized": v.stabilized,
    })
}

pub fn bounds_json(k: usize, b: &TheoremBounds) -> serde_json::Value {
    json!({
        "k": k,
        "lower": l_value_json(k, "interior", &b.lower),
        "upper": l_value_json(k, "dilation_limit", &b.upper),
        "delta_trace": b.delta_trace,
    })
}

pub fn probe_csv(rows: &[ProbeRow], method: &str, seed: u64) {
    println!("h,p_hat,ci_lo,ci_hi,n,method,seed,normalized");
    for r in rows {
        println!(
            "{},{:.12e},{:.12e},{:.12e},{},{},{},{:.12e}",
            r.h, r.p_hat, r.ci.0, r.ci.1, r.n, method, seed, r.normalized,
        );
    }
}

pub fn estimate_text(rep: &EstimateReport) {
    println!(
        "h = {:.6e}: p_hat = {:.6e}, ci = ({:.6e}, {:.6e}), n = {}, method = {}, seed = {}",
        rep.h, rep.p_hat, rep.ci.0, rep.ci.1, rep.n, rep.method, rep.seed
    );
    if let Some(v) = rep.normalized {
        println!("normalized h^(k alpha) p_hat = {v:.8e}");
    }
}

pub fn slope_json(fit: &SlopeFit) -> serde_json::Value {
    json!({
        "exponent": fit.exponent,
        "exponent_se": fit.exponent_se,
        "intercept": fit.intercept,
        "log_model_exponent": fit.log_model_exponent,
        "log_coeff": fit.log_coeff,
        "log_coeff_se": fit.log_coeff_se,
        "log_correction": fit.log_correction,
        "h_grid": fit.h_grid,
        "points_used": fit.points_used,
    })
}

pub fn slope_text(fit: &SlopeFit) {
    println!(
        "decay exponent: {:.4} +- {:.4} (points used: {})",
        fit.exponent, fit.exponent_se, fit.points_used
    );
    println!(
        "log-corrected model: exponent {:.4}, log coefficient {:.4} +- {:.4} ({})",
        fit.log_model_exponent,
        fit.log_coeff,
        fit.log_coeff_se,
        if fit.log_correction { "correction significant" } else { "no significant correction" }
    );
}

pub fn check_text(rep: &CheckReport, verbose: bool) {
    let tag = if rep.passed { "PASS" } else { "FAIL" };
    println!(
        "[{tag}] {:<18} alpha {:<5} expected {} | observed {} | tol {} ({:.1}s)",
        rep.id, rep.alpha, rep.expected, rep.observed, rep.tolerance, rep.seconds
    );
    if verbose {
        for d in &rep.details {
            println!("       {d}");
        }
    }
}
