//! Small quadrature toolbox: Gauss-Legendre rules, adaptive refinement for
//! smooth integrands, and Euler acceleration for alternating panel series.

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
/// Newton iteration on the Legendre recurrence; converges in a handful of
/// steps for the modest n used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed-rule integral of `f` over [a, b] with precomputed nodes/weights.
pub fn integrate_rule(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in rule.0.iter().zip(rule.1.iter()) {
        sum += w * f(c + h * x);
    }
    sum * h
}

/// Adaptive integral of a smooth function: bisect until the 15- and 31-point
/// Gauss estimates agree within the local tolerance share. Returns the value
/// and an error estimate. The local tolerance never drops below a relative
/// machine floor, and a global panel budget bounds worst-case work, so the
/// recursion terminates cheaply even when asked for impossible accuracy.
pub fn integrate_adaptive(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    rule15: &(Vec<f64>, Vec<f64>),
    rule31: &(Vec<f64>, Vec<f64>),
) -> (f64, f64) {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &mut impl FnMut(f64) -> f64,
        a: f64,
        b: f64,
        tol: f64,
        depth: usize,
        budget: &mut i64,
        rule15: &(Vec<f64>, Vec<f64>),
        rule31: &(Vec<f64>, Vec<f64>),
    ) -> (f64, f64) {
        let coarse = integrate_rule(f, a, b, rule15);
        let fine = integrate_rule(f, a, b, rule31);
        *budget -= 1;
        let err = (fine - coarse).abs();
        if err <= tol.max(1e-15 * fine.abs()) || depth >= 24 || *budget <= 0 {
            return (fine, err);
        }
        let mid = 0.5 * (a + b);
        let child_tol = (tol * 0.5).max(1e-18);
        let (v1, e1) = recurse(f, a, mid, child_tol, depth + 1, budget, rule15, rule31);
        let (v2, e2) = recurse(f, mid, b, child_tol, depth + 1, budget, rule15, rule31);
        (v1 + v2, e1 + e2)
    }
    let mut budget = 4096i64;
    recurse(f, a, b, tol, 0, &mut budget, rule15, rule31)
}

/// Limit of an alternating series from its first terms by repeated averaging
/// of partial sums (van Wijngaarden / Euler transformation). `terms` must
/// alternate in sign with an eventually smooth envelope. Returns the limit
/// estimate and the spread of the last two transform levels.
pub fn euler_limit(terms: &[f64]) -> (f64, f64) {
    assert!(!terms.is_empty());
    let mut row: Vec<f64> = Vec::with_capacity(terms.len());
    let mut s = 0.0;
    for &t in terms {
        s += t;
        row.push(s);
    }
    let mut prev_head = row[row.len() - 1];
    while row.len() > 1 {
        for i in 0..row.len() - 1 {
            row[i] = 0.5 * (row[i] + row[i + 1]);
        }
        row.pop();
        prev_head = if row.len() > 1 { row[row.len() - 1] } else { prev_head };
    }
    let limit = row[0];
    (limit, (limit - prev_head).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(15);
        // Degree-29 monomial is within the exactness degree of GL-15.
        let v = integrate_rule(&mut |x: f64| x.powi(28), -1.0, 1.0, &rule);
        assert!((v - 2.0 / 29.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_mild_cusp() {
        let r15 = gauss_legendre(15);
        let r31 = gauss_legendre(31);
        let (v, e) = integrate_adaptive(&mut |x: f64| x.abs().sqrt(), -1.0, 1.0, 1e-12, &r15, &r31);
        assert!((v - 4.0 / 3.0).abs() < 1e-10, "v={v} e={e}");
    }

    #[test]
    fn euler_limit_accelerates_log2() {
        // 1 - 1/2 + 1/3 - ... = ln 2; raw 24-term truncation is off by ~0.02.
        let terms: Vec<f64> = (1..=24).map(|k| if k % 2 == 1 { 1.0 / k as f64 } else { -1.0 / k as f64 }).collect();
        let (v, _) = euler_limit(&terms);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-9);
    }
}
