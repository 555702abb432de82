//! Dense two-phase simplex for the tiny feasibility/bound problems produced
//! by reachability analysis (a handful of variables and constraints). Bland's
//! rule prevents cycling on the degenerate vertices these geometric LPs hit
//! routinely.

/// One linear constraint `coeffs . x >= rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

const TOL: f64 = 1e-9;

/// Minimizes `c . x` subject to the constraints; `nonneg[i]` restricts x_i to
/// be nonnegative, otherwise x_i is free (internally split into a difference
/// of nonnegative parts).
pub fn solve(c: &[f64], cons: &[Constraint], nonneg: &[bool]) -> LpResult {
    let nvar = c.len();
    assert_eq!(nonneg.len(), nvar);
    for con in cons {
        assert_eq!(con.coeffs.len(), nvar);
    }

    // Column layout: structural columns (one per nonneg var, two per free
    // var), then one surplus per row, then one artificial per row.
    let mut col_var: Vec<(usize, f64)> = Vec::new();
    for (i, &nn) in nonneg.iter().enumerate() {
        col_var.push((i, 1.0));
        if !nn {
            col_var.push((i, -1.0));
        }
    }
    let nstruct = col_var.len();
    let m = cons.len();
    let ncols = nstruct + m + m;

    // Rows in equality form with nonnegative rhs.
    let mut tab = vec![vec![0.0f64; ncols + 1]; m];
    for (r, con) in cons.iter().enumerate() {
        let flip = if con.rhs < 0.0 { -1.0 } else { 1.0 };
        for (j, &(var, sign)) in col_var.iter().enumerate() {
            tab[r][j] = flip * sign * con.coeffs[var];
        }
        tab[r][nstruct + r] = -flip; // surplus of the >= row
        tab[r][nstruct + m + r] = 1.0; // artificial
        tab[r][ncols] = flip * con.rhs;
    }

    let mut basis: Vec<usize> = (0..m).map(|r| nstruct + m + r).collect();

    // Phase 1: minimize the artificial sum.
    let mut z = vec![0.0f64; ncols + 1];
    for r in 0..m {
        for j in 0..=ncols {
            z[j] -= tab[r][j];
        }
    }
    let enterable1: Vec<bool> = (0..ncols).map(|j| j < nstruct + m).collect();
    if !run_simplex(&mut tab, &mut z, &mut basis, &enterable1) {
        // Phase-1 objective is bounded below by zero; unbounded is impossible.
        unreachable!("phase-1 simplex cannot be unbounded");
    }
    if -z[ncols] > 1e-7 {
        return LpResult::Infeasible;
    }

    // Drive any artificial still basic out of the basis where possible.
    for r in 0..m {
        if basis[r] >= nstruct + m {
            if let Some(j) = (0..nstruct + m).find(|&j| tab[r][j].abs() > TOL) {
                pivot(&mut tab, &mut z, &mut basis, r, j);
            }
        }
    }

    // Phase 2 with the real objective; artificial columns are frozen.
    let mut z2 = vec![0.0f64; ncols + 1];
    for (j, &(var, sign)) in col_var.iter().enumerate() {
        z2[j] = sign * c[var];
    }
    for r in 0..m {
        let cb = if basis[r] < nstruct {
            let (var, sign) = col_var[basis[r]];
            sign * c[var]
        } else {
            0.0
        };
        if cb != 0.0 {
            for j in 0..=ncols {
                z2[j] -= cb * tab[r][j];
            }
        }
    }
    let enterable2: Vec<bool> = (0..ncols)
        .map(|j| j < nstruct + m || basis.contains(&j))
        .collect();
    if !run_simplex(&mut tab, &mut z2, &mut basis, &enterable2) {
        return LpResult::Unbounded;
    }

    let mut x = vec![0.0f64; nvar];
    for (r, &b) in basis.iter().enumerate() {
        if b < nstruct {
            let (var, sign) = col_var[b];
            x[var] += sign * tab[r][ncols];
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpResult::Optimal { x, value }
}

/// Convenience: does any x satisfy the constraints?
pub fn feasible(cons: &[Constraint], nvar: usize, nonneg: &[bool]) -> Option<Vec<f64>> {
    match solve(&vec![0.0; nvar], cons, nonneg) {
        LpResult::Optimal { x, .. } => Some(x),
        _ => None,
    }
}

/// Bland's-rule simplex on a tableau in canonical form. Returns false when
/// the objective is unbounded below.
fn run_simplex(
    tab: &mut [Vec<f64>],
    z: &mut [f64],
    basis: &mut [usize],
    enterable: &[bool],
) -> bool {
    let m = tab.len();
    let ncols = z.len() - 1;
    for _ in 0..50_000 {
        // Bland: smallest improving column index.
        let Some(enter) = (0..ncols).find(|&j| enterable[j] && z[j] < -TOL) else {
            return true;
        };
        // Ratio test; ties resolved by the smallest basis index (Bland).
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for r in 0..m {
            if tab[r][enter] > TOL {
                let ratio = tab[r][ncols] / tab[r][enter];
                let better = ratio < best - TOL
                    || (ratio < best + TOL && leave.is_some_and(|l| basis[r] < basis[l]));
                if better {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(leave) = leave else {
            return false;
        };
        pivot(tab, z, basis, leave, enter);
    }
    panic!("simplex iteration cap exceeded");
}

fn pivot(tab: &mut [Vec<f64>], z: &mut [f64], basis: &mut [usize], row: usize, col: usize) {
    let m = tab.len();
    let ncols = z.len() - 1;
    let piv = tab[row][col];
    for j in 0..=ncols {
        tab[row][j] /= piv;
    }
    for r in 0..m {
        if r != row && tab[r][col].abs() > 0.0 {
            let f = tab[r][col];
            for j in 0..=ncols {
                tab[r][j] -= f * tab[row][j];
            }
        }
    }
    let f = z[col];
    if f.abs() > 0.0 {
        for j in 0..=ncols {
            z[j] -= f * tab[row][j];
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn con(coeffs: &[f64], rhs: f64) -> Constraint {
        Constraint { coeffs: coeffs.to_vec(), rhs }
    }

    #[test]
    fn minimizes_over_a_bounded_polytope() {
        // min x1 subject to x1 + x2 >= 2, x1 - x2 >= -1, both free.
        let r = solve(
            &[1.0, 0.0],
            &[con(&[1.0, 1.0], 2.0), con(&[1.0, -1.0], -1.0)],
            &[false, false],
        );
        match r {
            LpResult::Optimal { value, .. } => assert!((value - 0.5).abs() < 1e-8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn detects_infeasible_systems() {
        // x >= 2 and -x >= -1 (x <= 1) cannot both hold.
        let r = solve(&[0.0], &[con(&[1.0], 2.0), con(&[-1.0], -1.0)], &[true]);
        assert_eq!(r, LpResult::Infeasible);
    }

    #[test]
    fn detects_unbounded_objectives() {
        let r = solve(&[-1.0], &[con(&[1.0], 1.0)], &[true]);
        assert_eq!(r, LpResult::Unbounded);
    }

    #[test]
    fn nonnegativity_is_respected() {
        // min x1 + x2 with x1 + x2 >= 1, x >= 0: optimum on the simplex edge.
        let r = solve(&[1.0, 1.0], &[con(&[1.0, 1.0], 1.0)], &[true, true]);
        match r {
            LpResult::Optimal { x, value } => {
                assert!((value - 1.0).abs() < 1e-8);
                assert!(x.iter().all(|&v| v >= -1e-9));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn feasible_point_satisfies_constraints() {
        let cons = [con(&[1.0, 0.0], 1.0), con(&[0.0, -1.0], -1.0), con(&[1.0, 1.0], 1.5)];
        let x = feasible(&cons, 2, &[false, false]).unwrap();
        for c in &cons {
            let lhs: f64 = c.coeffs.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!(lhs >= c.rhs - 1e-7, "violated: {lhs} < {}", c.rhs);
        }
    }
}
