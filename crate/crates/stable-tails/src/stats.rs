//! Statistics helpers: Wilson intervals, Kolmogorov-Smirnov distances, batch
//! means, and (weighted) log-log slope fits with an optional log-correction
//! term.

use crate::error::{Error, Result};

/// Wilson 95% score interval for a binomial proportion; behaves sensibly for
/// zero or tiny hit counts, unlike the normal approximation.
pub fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    assert!(n > 0);
    let z = 1.959963984540054_f64;
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // At the boundary counts the analytic endpoint is exact; rounding in the
    // two expressions above must not push it off zero or one.
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// One-sample KS distance between an (unsorted) sample and a CDF evaluator.
pub fn ks_one_sample(sample: &mut [f64], mut cdf: impl FnMut(f64) -> f64) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Two-sample KS distance.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic KS critical distance at the given level for one sample of n.
/// c(0.01) and c(0.05) are the classical Kolmogorov quantiles.
pub fn ks_critical_one(n: usize, level: f64) -> f64 {
    kolmogorov_c(level) / (n as f64).sqrt()
}

/// Critical distance for two samples of sizes n and m.
pub fn ks_critical_two(n: usize, m: usize, level: f64) -> f64 {
    kolmogorov_c(level) * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

fn kolmogorov_c(level: f64) -> f64 {
    // c(level) = sqrt(-ln(level/2)/2)
    (-(level / 2.0).ln() / 2.0).sqrt()
}

/// Mean and 95% half-width from independent batch means (t-interval).
pub fn batch_means_interval(batch_means: &[f64]) -> (f64, f64) {
    let b = batch_means.len();
    assert!(b >= 2);
    let mean = batch_means.iter().sum::<f64>() / b as f64;
    let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b as f64 - 1.0);
    let se = (var / b as f64).sqrt();
    (mean, t_quantile_975(b - 1) * se)
}

/// Two-sided 97.5% Student-t quantile, adequate over the dof range used here.
fn t_quantile_975(dof: usize) -> f64 {
    const TABLE: [(usize, f64); 12] = [
        (1, 12.706),
        (2, 4.303),
        (3, 3.182),
        (4, 2.776),
        (5, 2.571),
        (7, 2.365),
        (10, 2.228),
        (15, 2.131),
        (20, 2.086),
        (31, 2.040),
        (63, 1.998),
        (127, 1.979),
    ];
    for &(d, t) in TABLE.iter() {
        if dof <= d {
            return t;
        }
    }
    1.96
}

/// Result of a weighted log-log decay fit log p = c - a log h, optionally
/// compared against the log-corrected model log p = c - a log h + b log log h.
#[derive(Debug, Clone)]
pub struct SlopeFit {
    /// Decay exponent a (reported positive for decaying p).
    pub exponent: f64,
    pub exponent_se: f64,
    pub intercept: f64,
    /// Exponent of the 3-parameter model with a log-correction term.
    pub log_model_exponent: f64,
    /// Coefficient b of log log h and its standard error.
    pub log_coeff: f64,
    pub log_coeff_se: f64,
    /// True when b is significant at two standard errors.
    pub log_correction: bool,
    pub h_grid: Vec<f64>,
    pub points_used: usize,
}

/// Weighted least squares of log p on log h. `points` are (h, p, sigma_p)
/// rows; rows with p <= 0 are dropped. The log-correction comparison needs at
/// least four usable rows, the plain slope three.
pub fn fit_log_slope(points: &[(f64, f64, f64)]) -> Result<SlopeFit> {
    let rows: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|(h, p, _)| *p > 0.0 && *h > 0.0)
        .map(|&(h, p, sp)| {
            // delta-method: sd of log p is sigma_p / p
            let sl = if sp > 0.0 { sp / p } else { 1e-6 };
            (h.ln(), p.ln(), sl.max(1e-9))
        })
        .collect();
    if rows.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "slope fit needs >= 3 positive points, got {}",
            rows.len()
        )));
    }
    // Two-parameter WLS: y = c + b x with b expected negative.
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, sl) in &rows {
        let w = 1.0 / (sl * sl);
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = sw * sxx - sx * sx;
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let slope_se = (sw / det).sqrt();

    // Three-parameter model: y = c - a x + b ln x (x = ln h > 0 on our grids).
    let (mut lme, mut lc, mut lcse) = (slope, 0.0, f64::INFINITY);
    if rows.len() >= 4 && rows.iter().all(|r| r.0 > 0.0) {
        let mut m = [[0.0f64; 3]; 3];
        let mut v = [0.0f64; 3];
        for &(x, y, sl) in &rows {
            let w = 1.0 / (sl * sl);
            let basis = [1.0, x, x.ln()];
            for i in 0..3 {
                v[i] += w * basis[i] * y;
                for j in 0..3 {
                    m[i][j] += w * basis[i] * basis[j];
                }
            }
        }
        if let Some((coef, cov_bb)) = solve_3x3_with_cov(&m, &v) {
            lme = -coef[1];
            lc = coef[2];
            lcse = cov_bb.sqrt();
        }
    }
    let log_correction = lcse.is_finite() && lc.abs() > 2.0 * lcse;
    Ok(SlopeFit {
        exponent: -slope,
        exponent_se: slope_se,
        intercept,
        log_model_exponent: lme,
        log_coeff: lc,
        log_coeff_se: lcse,
        log_correction,
        h_grid: points.iter().map(|r| r.0).collect(),
        points_used: rows.len(),
    })
}

/// Solves the 3x3 normal equations and returns the coefficient vector plus
/// the (2,2) entry of the inverse (variance of the log-correction term).
fn solve_3x3_with_cov(m: &[[f64; 3]; 3], v: &[f64; 3]) -> Option<([f64; 3], f64)> {
    let det = det3(m);
    if det.abs() < 1e-300 {
        return None;
    }
    let mut coef = [0.0f64; 3];
    for k in 0..3 {
        let mut mk = *m;
        for i in 0..3 {
            mk[i][k] = v[i];
        }
        coef[k] = det3(&mk) / det;
    }
    // inverse[2][2] = cofactor(2,2) / det
    let c22 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    Some((coef, c22 / det))
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson_interval(3, 1000);
        assert!(lo < 0.003 && 0.003 < hi);
        let (lo0, hi0) = wilson_interval(0, 1000);
        assert!(lo0 == 0.0 && hi0 > 0.0);
    }

    #[test]
    fn ks_distance_of_exact_uniform_grid_is_small() {
        let n = 1000;
        let mut sample: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_one_sample(&mut sample, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.5 / n as f64 + 1e-12);
    }

    #[test]
    fn pure_power_law_recovers_exact_slope() {
        let pts: Vec<(f64, f64, f64)> =
            [10.0, 100.0, 1000.0].iter().map(|&h: &f64| (h, h.powf(-2.0), h.powf(-2.0) * 0.01)).collect();
        let fit = fit_log_slope(&pts).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-9);
    }

    #[test]
    fn log_correction_detected_when_present() {
        let pts: Vec<(f64, f64, f64)> = [1e3, 1e4, 1e5, 1e6, 1e7]
            .iter()
            .map(|&h: &f64| {
                let p = h.powf(-2.0) * h.ln();
                (h, p, p * 0.005)
            })
            .collect();
        let fit = fit_log_slope(&pts).unwrap();
        assert!(fit.log_correction);
        assert!((fit.log_model_exponent - 2.0).abs() < 0.02);
        // And absent on a clean power law.
        let clean: Vec<(f64, f64, f64)> = [1e3, 1e4, 1e5, 1e6, 1e7]
            .iter()
            .map(|&h: &f64| (h, h.powf(-1.5), h.powf(-1.5) * 0.005))
            .collect();
        assert!(!fit_log_slope(&clean).unwrap().log_correction);
    }

    #[test]
    fn critical_values_match_the_classical_table() {
        assert!((kolmogorov_c(0.01) - 1.627624).abs() < 1e-5);
        assert!((kolmogorov_c(0.05) - 1.358099).abs() < 1e-5);
    }
}
