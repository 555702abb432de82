//! Higher-order tail functionals for multivariate stable models. For a
//! target set E scaled by h, the probability P(X in hE) decays like
//! h^{-k alpha} where k is the least number of large jumps that can land the
//! sum in E; the limit of h^{k alpha} P(X in hE) is sandwiched between the
//! k-jump functional of the interior and the limit of the same functional
//! over shrinking outer dilations. This module computes the hit count by
//! linear programming, the functional by stratified low-discrepancy
//! quadrature in jump space, an independent sphere-form Monte Carlo check,
//! and the sandwich bounds, plus closed-form reference values for the
//! worked examples.

use crate::error::{Error, Result};
use crate::lp;
use crate::quad::{gauss_legendre, integrate_adaptive};
use crate::region::{realize_variant, ConvexPiece, Region, RegionVariant, SetMode};
use crate::rng::substream;
use crate::sobol::Sobol;
use crate::spectral::StableVectorModel;
use crate::univariate::{c_alpha, AlphaParam};
use rand::Rng;
use statrs::function::gamma::ln_gamma;

/// A jump configuration proving a hit count: sum_i coefficients[i] *
/// column[columns[i]] lies in the queried set.
#[derive(Debug, Clone)]
pub struct Witness {
    pub columns: Vec<usize>,
    pub coefficients: Vec<f64>,
}

/// Least number of jumps that reach a set, with a proving configuration.
/// `verified` is false when some lower level was ruled out only by random
/// probing rather than an exact clip or LP certificate.
#[derive(Debug, Clone)]
pub struct TailOrder {
    pub k: usize,
    pub witness: Option<Witness>,
    pub verified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LStatus {
    Finite,
    Infinite,
}

/// Value of the k-jump limit functional. `value` is +inf when the status is
/// infinite; `divergence_witness` carries a lower-order configuration when
/// one certifies the blow-up. `stabilized` is false when an estimate ended
/// without meeting its internal convergence rule.
#[derive(Debug, Clone)]
pub struct LValue {
    pub status: LStatus,
    pub value: f64,
    pub error_estimate: f64,
    pub divergence_witness: Option<Witness>,
    pub stabilized: bool,
}

impl LValue {
    fn finite(value: f64, error: f64) -> Self {
        LValue {
            status: LStatus::Finite,
            value,
            error_estimate: error,
            divergence_witness: None,
            stabilized: true,
        }
    }

    fn infinite(witness: Option<Witness>) -> Self {
        LValue {
            status: LStatus::Infinite,
            value: f64::INFINITY,
            error_estimate: f64::INFINITY,
            divergence_witness: witness,
            stabilized: true,
        }
    }
}

/// Per-coordinate lower bounds on the jump magnitudes of a cell, from
/// minimizing each magnitude over a polyhedral enclosure of the set. A zero
/// floor means the magnitude can be arbitrarily small inside the cell.
#[derive(Debug, Clone)]
pub struct CoordinateFloors {
    pub floors: Vec<f64>,
    /// False when the enclosure is infeasible, i.e. the cell is empty.
    pub feasible: bool,
}

/// Sandwich bounds: the interior functional from below and the dilation
/// limit from above, with the sweep trace (delta, value) for diagnostics.
#[derive(Debug, Clone)]
pub struct TheoremBounds {
    pub lower: LValue,
    pub upper: LValue,
    pub delta_trace: Vec<(f64, f64)>,
}

/// Budget knobs for the jump-space quadrature.
#[derive(Debug, Clone)]
pub struct QuadratureOptions {
    pub seed: u64,
    /// log2 points per replicate for bounded cells.
    pub base_points_log2: u32,
    /// log2 points per replicate per stratum of an unbounded cell.
    pub stratum_points_log2: u32,
    pub replicates: u32,
    pub max_levels: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            seed: 0x4c5f51554144,
            base_points_log2: 16,
            stratum_points_log2: 12,
            replicates: 8,
            max_levels: 56,
        }
    }
}

/// Budget knobs for the sphere-form Monte Carlo estimator.
#[derive(Debug, Clone)]
pub struct MonteCarloOptions {
    pub seed: u64,
    pub points_per_level: usize,
    pub levels: u32,
    pub batches: usize,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        MonteCarloOptions {
            seed: 0x4c5f4d43,
            points_per_level: 1 << 16,
            levels: 7,
            batches: 32,
        }
    }
}

fn combinations(m: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, m: usize, left: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if left == 0 {
            f(cur);
            return;
        }
        for i in start..=m - left {
            cur.push(i);
            rec(i + 1, m, left - 1, cur, f);
            cur.pop();
        }
    }
    if k <= m {
        rec(0, m, k, &mut Vec::with_capacity(k), f);
    }
}

/// Constraints of one convex piece in the magnitudes u >= 0 of the signed
/// jump configuration sum_i sign_i u_i y_i. Strict faces get a small slack.
fn piece_constraints(
    piece: &ConvexPiece,
    columns: &[Vec<f64>],
    subset: &[usize],
    signs: &[f64],
    slack: f64,
) -> Vec<lp::Constraint> {
    piece
        .ineqs
        .iter()
        .map(|ineq| {
            let coeffs: Vec<f64> = subset
                .iter()
                .zip(signs)
                .map(|(&j, &sg)| {
                    sg * ineq
                        .normal
                        .iter()
                        .zip(&columns[j])
                        .map(|(n, y)| n * y)
                        .sum::<f64>()
                })
                .collect();
            let rhs = if ineq.strict {
                ineq.offset + slack * ineq.offset.abs().max(1.0)
            } else {
                ineq.offset
            };
            lp::Constraint { coeffs, rhs }
        })
        .collect()
}

/// Least jump count into `(tree, mode)` for a model given by its columns.
fn min_hits_tree(columns: &[Vec<f64>], tree: &Region, mode: SetMode) -> Result<TailOrder> {
    let m = columns.len();
    let pieces = tree.as_poly_union(mode);
    let gap_scale = tree.origin_gap().max(1.0);
    let mut verified = true;
    for j in 1..=m {
        let mut found: Option<Witness> = None;
        let mut subset_idx = 0u64;
        let mut exact_level = true;
        combinations(m, j, &mut |subset| {
            if found.is_some() {
                return;
            }
            subset_idx += 1;
            if j == 1 {
                // One jump spans a signed line: clip it exactly when the
                // region supports line clipping.
                match tree.line_clip(&vec![0.0; columns[subset[0]].len()], &columns[subset[0]], mode)
                {
                    Ok(clips) => {
                        if let Some(&(a, b)) = clips.first() {
                            let s = interval_point(a, b);
                            found = Some(Witness {
                                columns: subset.to_vec(),
                                coefficients: vec![s],
                            });
                            return;
                        }
                        // An empty open clip still rules the line out for
                        // open variants, but a closed set can meet it in a
                        // single boundary point the interval form drops
                        // (the tip of a corner); let the closed-face
                        // routes below have a look.
                        if mode != SetMode::Closure {
                            return;
                        }
                    }
                    Err(_) => {}
                }
            }
            if let Some(pieces) = &pieces {
                for piece in pieces {
                    for eps in [1e-6, 1e-9] {
                        for bits in 0..(1u32 << j) {
                            let signs: Vec<f64> = (0..j)
                                .map(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 })
                                .collect();
                            let cons = piece_constraints(piece, columns, subset, &signs, eps);
                            if let Some(u) = lp::feasible(&cons, j, &vec![true; j]) {
                                found = Some(Witness {
                                    columns: subset.to_vec(),
                                    coefficients: u
                                        .iter()
                                        .zip(&signs)
                                        .map(|(v, sg)| v * sg)
                                        .collect(),
                                });
                                return;
                            }
                        }
                    }
                }
                return;
            }
            // No polyhedral certificate available: random probing. A found
            // point is still a proof; a clean miss is not.
            exact_level = false;
            let mut rng = substream(0x6d696e68697473, j as u64, subset_idx);
            let dim = columns[subset[0]].len();
            for _ in 0..4096 {
                let mut x = vec![0.0; dim];
                let mut coeffs = Vec::with_capacity(j);
                for &col in subset {
                    let mag = gap_scale * (rng.gen::<f64>() * 14.0 - 7.0).exp();
                    let s = if rng.gen::<bool>() { mag } else { -mag };
                    coeffs.push(s);
                    for (xi, yi) in x.iter_mut().zip(&columns[col]) {
                        *xi += s * yi;
                    }
                }
                if tree.contains(&x, mode) {
                    found = Some(Witness { columns: subset.to_vec(), coefficients: coeffs });
                    return;
                }
            }
        });
        if let Some(witness) = found {
            return Ok(TailOrder { k: j, witness: Some(witness), verified });
        }
        if !exact_level {
            verified = false;
        }
    }
    Err(Error::NoReachability)
}

fn interval_point(a: f64, b: f64) -> f64 {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => 0.5 * (a + b),
        (true, false) => a.abs().max(1.0) * a.signum().max(0.0) + a + 1.0,
        (false, true) => b - b.abs().max(1.0) - 1.0,
        (false, false) => 0.0,
    }
}

/// Least number of jumps that can land the sum in the chosen variant of the
/// region. Requires an atomic model.
pub fn min_hits(
    model: &StableVectorModel,
    region: &Region,
    variant: RegionVariant,
) -> Result<TailOrder> {
    let columns = model.to_matrix()?;
    let (tree, mode) = realize_variant(region, variant)?;
    min_hits_tree(&columns, &tree, mode)
}

/// Per-coordinate magnitude floors of one (subset, signs) cell against a
/// polyhedral enclosure of `(tree, mode)`.
pub fn coordinate_floors(
    columns: &[Vec<f64>],
    tree: &Region,
    mode: SetMode,
    subset: &[usize],
    signs: &[f64],
) -> CoordinateFloors {
    let k = subset.len();
    let Some(pieces) = tree.enclosure_poly_union(mode) else {
        // No enclosure: no pruning and no floors.
        return CoordinateFloors { floors: vec![0.0; k], feasible: true };
    };
    let mut floors = vec![f64::INFINITY; k];
    let mut feasible = false;
    for piece in &pieces {
        let cons = piece_constraints(piece, columns, subset, signs, 1e-9);
        // Feasibility is probed with every magnitude pushed slightly off
        // zero: a cell whose only solutions pin some u_i at exactly 0 carries
        // no mass and must not spawn a stratum. The pad must sit well above
        // the simplex tolerance (1e-9) to register as a violation; the floor
        // programs below run on the unpadded system so genuine zero floors
        // survive.
        let mut probe = cons.clone();
        for i in 0..k {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            probe.push(lp::Constraint { coeffs: e, rhs: 1e-6 });
        }
        if lp::feasible(&probe, k, &vec![true; k]).is_none() {
            continue;
        }
        feasible = true;
        for i in 0..k {
            let mut c = vec![0.0; k];
            c[i] = 1.0;
            let lo = match lp::solve(&c, &cons, &vec![true; k]) {
                lp::LpResult::Optimal { value, .. } => value.max(0.0),
                _ => 0.0,
            };
            floors[i] = floors[i].min(lo);
        }
    }
    if !feasible {
        return CoordinateFloors { floors: vec![0.0; k], feasible: false };
    }
    for f in floors.iter_mut() {
        if !f.is_finite() || *f < 1e-12 {
            *f = 0.0;
        }
    }
    CoordinateFloors { floors, feasible }
}

/// Outcome of sampling one cell stratum.
struct StratumEstimate {
    value: f64,
    se: f64,
}

/// Mean of the membership indicator over a t-box, by shifted low-discrepancy
/// replicates. `t_lo`/`t_hi` bound each transformed coordinate; the map back
/// to jump magnitudes is u_i = t_i^{-1/alpha}.
#[allow(clippy::too_many_arguments)]
fn sample_box(
    columns: &[Vec<f64>],
    tree: &Region,
    mode: SetMode,
    subset: &[usize],
    signs: &[f64],
    alpha: f64,
    t_lo: &[f64],
    t_hi: &[f64],
    points: usize,
    replicates: u32,
    seed: u64,
    label: u64,
) -> StratumEstimate {
    let k = subset.len();
    let dim = columns[0].len();
    let vol: f64 = t_lo.iter().zip(t_hi).map(|(a, b)| b - a).product();
    if vol <= 0.0 {
        return StratumEstimate { value: 0.0, se: 0.0 };
    }
    let mut rep_means = Vec::with_capacity(replicates as usize);
    let mut point = vec![0.0f64; k];
    let mut x = vec![0.0f64; dim];
    for rep in 0..replicates {
        let mut rng = substream(seed, label, rep as u64);
        let mut sobol = Sobol::with_shift(k, &mut rng).expect("cell dimension fits the table");
        let mut hits = 0u64;
        for _ in 0..points {
            sobol.next_point(&mut point);
            x.iter_mut().for_each(|v| *v = 0.0);
            let mut dead = false;
            for i in 0..k {
                let t = t_lo[i] + point[i] * (t_hi[i] - t_lo[i]);
                if t <= 1e-300 {
                    dead = true;
                    break;
                }
                let u = t.powf(-1.0 / alpha) * signs[i];
                for (xv, yv) in x.iter_mut().zip(&columns[subset[i]]) {
                    *xv += u * yv;
                }
            }
            if !dead && tree.contains(&x, mode) {
                hits += 1;
            }
        }
        rep_means.push(hits as f64 / points as f64 * vol);
    }
    let mean = rep_means.iter().sum::<f64>() / rep_means.len() as f64;
    let var = rep_means.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (rep_means.len().saturating_sub(1)).max(1) as f64;
    StratumEstimate { value: mean, se: (var / rep_means.len() as f64).sqrt() }
}

/// Prefilter and sharpener: intersect the t-window with the hull of the
/// enclosure-feasible magnitude ranges, one LP pair per coordinate and
/// piece. Slices dropped here lie outside every enclosure piece, hence
/// outside the region, so the shrink is mass-neutral; it matters because the
/// feasible sliver of a deep shell thins like a power of the shell radius
/// and would otherwise fall below the resolution of the point set. Returns
/// false when no piece meets the window; `None` pieces leave it untouched.
fn refine_window(
    pieces: &Option<Vec<ConvexPiece>>,
    columns: &[Vec<f64>],
    subset: &[usize],
    signs: &[f64],
    alpha: f64,
    t_lo: &mut [f64],
    t_hi: &mut [f64],
) -> bool {
    let Some(pieces) = pieces else { return true };
    let k = subset.len();
    let mut lo_hull = vec![f64::INFINITY; k];
    let mut hi_hull = vec![0.0f64; k];
    let mut any = false;
    for piece in pieces {
        let mut cons = piece_constraints(piece, columns, subset, signs, 1e-9);
        for i in 0..k {
            // t <= t_hi  <=>  u >= t_hi^{-1/alpha}
            let mut c = vec![0.0; k];
            c[i] = 1.0;
            cons.push(lp::Constraint { coeffs: c.clone(), rhs: t_hi[i].powf(-1.0 / alpha) });
            // t >= t_lo  <=>  u <= t_lo^{-1/alpha}
            if t_lo[i] > 0.0 {
                c[i] = -1.0;
                cons.push(lp::Constraint {
                    coeffs: c,
                    rhs: -t_lo[i].powf(-1.0 / alpha),
                });
            }
        }
        if lp::feasible(&cons, k, &vec![true; k]).is_none() {
            continue;
        }
        any = true;
        for i in 0..k {
            let mut c = vec![0.0; k];
            c[i] = -1.0;
            // The largest feasible magnitude pins the lower t edge; pad by a
            // relative hair so roundoff cannot clip genuine mass.
            let lo_cand = match lp::solve(&c, &cons, &vec![true; k]) {
                lp::LpResult::Optimal { value, .. } if -value > 1e-12 => {
                    (-value * (1.0 + 1e-9)).powf(-alpha)
                }
                _ => 0.0,
            };
            c[i] = 1.0;
            // The smallest feasible magnitude pins the upper t edge.
            let hi_cand = match lp::solve(&c, &cons, &vec![true; k]) {
                lp::LpResult::Optimal { value, .. } if value > 1e-12 => {
                    (value * (1.0 - 1e-9)).powf(-alpha)
                }
                _ => t_hi[i],
            };
            lo_hull[i] = lo_hull[i].min(lo_cand);
            hi_hull[i] = hi_hull[i].max(hi_cand.min(t_hi[i]));
        }
    }
    if !any {
        return false;
    }
    for i in 0..k {
        t_lo[i] = t_lo[i].max(lo_hull[i]);
        t_hi[i] = t_hi[i].min(hi_hull[i]);
        if !(t_lo[i] < t_hi[i]) {
            return false;
        }
    }
    true
}

/// The k-jump limit functional by quadrature in jump space:
/// L = (C_alpha/2)^k sum over k-column subsets and sign patterns of the
/// integral of the membership indicator under the product jump measure,
/// transformed per coordinate so the measure is uniform. Coordinates with a
/// positive magnitude floor yield a bounded box; the rest are handled by
/// geometric strata with tail extrapolation, declaring divergence when the
/// level sums stop decaying.
pub fn l_quadrature(
    model: &StableVectorModel,
    region: &Region,
    variant: RegionVariant,
    k: usize,
    opts: &QuadratureOptions,
) -> Result<LValue> {
    if k == 0 {
        return Err(Error::InvalidParameter("jump order k must be >= 1".into()));
    }
    let columns = model.to_matrix()?;
    let alpha = model.alpha().get();
    let (tree, mode) = realize_variant(region, variant)?;

    // Hard divergence rule: if the interior of this variant is reachable
    // with fewer than k jumps, h^{k alpha} P(X in hE) blows up.
    match min_hits_tree(&columns, &tree, SetMode::Interior) {
        Ok(order) => {
            if order.k < k {
                return Ok(LValue::infinite(order.witness));
            }
            if order.k > k {
                return Ok(LValue::finite(0.0, 0.0));
            }
        }
        Err(Error::NoReachability) => return Ok(LValue::finite(0.0, 0.0)),
        Err(e) => return Err(e),
    }
    if k > columns.len() {
        return Ok(LValue::finite(0.0, 0.0));
    }

    let pieces = tree.enclosure_poly_union(mode);
    let base_points = 1usize << opts.base_points_log2;
    let stratum_points = 1usize << opts.stratum_points_log2;
    let mut total = 0.0f64;
    let mut err2 = 0.0f64;
    let mut soft_divergent = false;

    let mut subsets: Vec<Vec<usize>> = Vec::new();
    combinations(columns.len(), k, &mut |s| subsets.push(s.to_vec()));
    for (si, subset) in subsets.iter().enumerate() {
        for bits in 0..(1u32 << k) {
            let signs: Vec<f64> =
                (0..k).map(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let fl = coordinate_floors(&columns, &tree, mode, subset, &signs);
            if !fl.feasible {
                continue;
            }
            let label = (si as u64) << 40 | (bits as u64) << 20;
            let caps: Vec<f64> =
                fl.floors.iter().map(|&f| if f > 1e-3 { f.powf(-alpha) } else { 0.0 }).collect();
            let free: Vec<usize> =
                (0..k).filter(|&i| caps[i] == 0.0).collect();
            if free.is_empty() {
                let t_lo = vec![0.0; k];
                let est = sample_box(
                    &columns, &tree, mode, subset, &signs, alpha, &t_lo, &caps, base_points,
                    opts.replicates, opts.seed, label,
                );
                total += est.value;
                err2 += est.se * est.se;
                continue;
            }
            // Stratified levels over the unbounded coordinates: level 0 is
            // the unit box, level L doubles the reach of the largest one.
            let mut level_sums: Vec<f64> = Vec::new();
            let mut level_ses: Vec<f64> = Vec::new();
            let t0 = 1.0f64;
            let mut running = 0.0f64;
            for level in 0..opts.max_levels {
                let (a, b) = if level == 0 {
                    (0.0, t0)
                } else {
                    (t0 * 2f64.powi(level as i32 - 1), t0 * 2f64.powi(level as i32))
                };
                // Shell {max of free coords in (a, b]} as disjoint boxes.
                let mut sum = 0.0f64;
                let mut se2 = 0.0f64;
                let nboxes = if level == 0 { 1 } else { free.len() };
                for bx in 0..nboxes {
                    let mut t_lo = vec![0.0; k];
                    let mut t_hi = caps.clone();
                    for (pos, &i) in free.iter().enumerate() {
                        if level == 0 {
                            t_hi[i] = t0;
                        } else {
                            use std::cmp::Ordering::*;
                            match pos.cmp(&bx) {
                                Less => {
                                    t_hi[i] = a;
                                }
                                Equal => {
                                    t_lo[i] = a;
                                    t_hi[i] = b;
                                }
                                Greater => {
                                    t_hi[i] = b;
                                }
                            }
                        }
                    }
                    if !refine_window(&pieces, &columns, subset, &signs, alpha, &mut t_lo, &mut t_hi)
                    {
                        continue;
                    }
                    let est = sample_box(
                        &columns, &tree, mode, subset, &signs, alpha, &t_lo, &t_hi,
                        stratum_points, opts.replicates, opts.seed,
                        label | (level as u64) << 4 | bx as u64,
                    );
                    sum += est.value;
                    se2 += est.se * est.se;
                }
                level_sums.push(sum);
                level_ses.push(se2.sqrt());
                running += sum;
                // Divergence: level sums no longer decay.
                if level >= 8 && level_sums.len() >= 5 {
                    let tail = &level_sums[level_sums.len() - 5..];
                    if tail.windows(2).all(|w| w[1] >= 0.999 * w[0])
                        && tail[4] > 1e-12 * running.max(1e-300)
                    {
                        soft_divergent = true;
                        break;
                    }
                }
                if sum < 1e-7 * running.max(1e-300) && level >= 2 {
                    break;
                }
            }
            if soft_divergent {
                break;
            }
            total += level_sums.iter().sum::<f64>();
            err2 += level_ses.iter().map(|s| s * s).sum::<f64>();
            // Geometric tail extrapolation from the last decaying levels.
            let n = level_sums.len();
            if n >= 3 && level_sums[n - 1] > 0.0 {
                let r1 = level_sums[n - 1] / level_sums[n - 2].max(1e-300);
                let r2 = level_sums[n - 2] / level_sums[n - 3].max(1e-300);
                let r = 0.5 * (r1 + r2);
                if r > 0.0 && r < 0.97 {
                    let rem = level_sums[n - 1] * r / (1.0 - r);
                    total += rem;
                    err2 += 0.25 * rem * rem;
                } else if r > 0.0 {
                    err2 += level_sums[n - 1] * level_sums[n - 1] * 100.0;
                }
            }
        }
        if soft_divergent {
            break;
        }
    }

    if soft_divergent {
        // A genuine divergence of the jump integral. Attach a lower-order
        // configuration when the closure certifies one.
        let witness = min_hits_tree(&columns, &tree, SetMode::Closure)
            .ok()
            .filter(|o| o.k < k)
            .and_then(|o| o.witness);
        return Ok(LValue::infinite(witness));
    }

    let pref = (c_alpha(model.alpha()) / 2.0).powi(k as i32);
    Ok(LValue::finite(pref * total, pref * err2.sqrt()))
}

/// Sphere-form Monte Carlo check of the same functional: k ordered jumps
/// with Pareto radii above a cutoff and directions from the normalized
/// spectral measure. The cutoff is halved until the estimate stabilizes
/// within its statistical noise; failure to stabilize is flagged rather
/// than fatal.
pub fn l_montecarlo(
    model: &StableVectorModel,
    region: &Region,
    variant: RegionVariant,
    k: usize,
    opts: &MonteCarloOptions,
) -> Result<LValue> {
    if k == 0 {
        return Err(Error::InvalidParameter("jump order k must be >= 1".into()));
    }
    let (tree, mode) = realize_variant(region, variant)?;
    let alpha = model.alpha().get();
    let gap = tree.origin_gap();
    let s0 = if gap.is_finite() && gap > 0.0 { gap / 2.0 } else { 0.5 };
    let lam = model.total_mass();
    let pref = (c_alpha(model.alpha()) * lam).powi(k as i32)
        / (1..=k).map(|i| i as f64).product::<f64>();

    let mut estimates: Vec<(f64, f64)> = Vec::new();
    let mut stable_steps = 0u32;
    for level in 0..opts.levels {
        let s_min = s0 * 0.5f64.powi(level as i32);
        let mut batch_means = Vec::with_capacity(opts.batches);
        let per_batch = (opts.points_per_level / opts.batches).max(1);
        for batch in 0..opts.batches {
            let mut rng = substream(opts.seed, 0x7368656c6c | (level as u64) << 32, batch as u64);
            let mut hits = 0u64;
            let mut x = vec![0.0f64; model.dim()];
            for _ in 0..per_batch {
                x.iter_mut().for_each(|v| *v = 0.0);
                for _ in 0..k {
                    let w = model.sample_direction(&mut rng);
                    let r = s_min * rng.gen::<f64>().max(1e-300).powf(-1.0 / alpha);
                    for (xv, wv) in x.iter_mut().zip(&w) {
                        *xv += r * wv;
                    }
                }
                if tree.contains(&x, mode) {
                    hits += 1;
                }
            }
            batch_means.push(hits as f64 / per_batch as f64);
        }
        let scale = pref * s_min.powf(-(k as f64) * alpha);
        let (mean, half) = crate::stats::batch_means_interval(&batch_means);
        let est = scale * mean;
        let se = scale * half / 2.0;
        if let Some(&(prev, prev_se)) = estimates.last() {
            let diff = (est - prev).abs();
            if diff <= 2.0 * (se * se + prev_se * prev_se).sqrt() {
                stable_steps += 1;
            } else {
                stable_steps = 0;
            }
        }
        estimates.push((est, se));
        if stable_steps >= 2 {
            break;
        }
    }
    let &(value, se) = estimates.last().expect("at least one level");
    let mut out = LValue::finite(value, se * 2.0);
    out.stabilized = stable_steps >= 2;
    Ok(out)
}

/// Sandwich bounds for lim h^{k alpha} P(X in hE): the interior functional
/// below, the shrinking-dilation limit above. The upper limit is infinite
/// as soon as the closure is reachable with fewer than k jumps; otherwise
/// the dilation sweep halves delta from a quarter of the origin gap and
/// extrapolates the last two values.
pub fn theorem_bounds(
    model: &StableVectorModel,
    region: &Region,
    k: usize,
    opts: &QuadratureOptions,
) -> Result<TheoremBounds> {
    let lower = l_quadrature(model, region, RegionVariant::Interior, k, opts)?;
    let closure_order = min_hits(model, region, RegionVariant::Closure)?;
    if closure_order.k < k {
        return Ok(TheoremBounds {
            lower,
            upper: LValue::infinite(closure_order.witness),
            delta_trace: Vec::new(),
        });
    }
    let gap = region.origin_gap();
    if !(gap > 0.0) || !gap.is_finite() {
        return Err(Error::OriginGap(gap));
    }
    let delta0 = gap / 4.0;
    let mut trace: Vec<(f64, f64)> = Vec::new();
    let mut extrap: Vec<f64> = Vec::new();
    let mut upper: Option<LValue> = None;
    for j in 0..=6u32 {
        let delta = delta0 * 0.5f64.powi(j as i32);
        let lj = l_quadrature(model, region, RegionVariant::Dilated(delta), k, opts)?;
        if lj.status == LStatus::Infinite {
            return Ok(TheoremBounds { lower, upper: lj, delta_trace: trace });
        }
        trace.push((delta, lj.value));
        if trace.len() >= 2 {
            // One Richardson step removes the leading O(delta) drift of the
            // dilated value; the sweep stops once the extrapolant itself
            // settles, which also converges when the true limit is zero.
            let r = 2.0 * lj.value - trace[trace.len() - 2].1;
            if let Some(&r_prev) = extrap.last() {
                let diff = (r - r_prev).abs();
                if diff < (1e-3 * r.abs()).max(1e-6) {
                    let mut u = LValue::finite(r.max(0.0), diff + lj.error_estimate);
                    u.stabilized = true;
                    upper = Some(u);
                    break;
                }
            }
            extrap.push(r);
        }
    }
    let upper = upper.unwrap_or_else(|| {
        // Sweep exhausted without settling: report the last extrapolant with
        // the gap to its predecessor as the error bar.
        let (value, err) = match extrap.len() {
            n if n >= 2 => (extrap[n - 1].max(0.0), (extrap[n - 1] - extrap[n - 2]).abs()),
            1 => (extrap[0].max(0.0), f64::INFINITY),
            _ => (trace.last().expect("sweep ran").1, f64::INFINITY),
        };
        let mut u = LValue::finite(value, err);
        u.stabilized = false;
        u
    });
    Ok(TheoremBounds { lower, upper, delta_trace: trace })
}

/// Closed-form reference value for one of the worked examples.
#[derive(Debug, Clone, Copy)]
pub struct Reference {
    pub value: f64,
    /// The limit carries a logarithmic factor (value is then the limit of
    /// h^{k alpha} P / log h, or for `remark4_order` the decay exponent).
    pub log_correction: bool,
}

/// Beta-integral constant int_1^inf a t^{-1-a} (t-1)^{-a} dt for a < 1.
fn beta_corner(a: f64) -> f64 {
    (ln_gamma(2.0 * a) + ln_gamma(1.0 - a) - ln_gamma(1.0 + a)).exp() * a
}

/// Reference values for the example scenarios. `alpha` is the stability
/// index the scenario runs at; extra shape parameters are fixed by the
/// scenario definitions (cone arc [pi/8, 3pi/8], mixing weight 1/2,
/// exponent 1/2 in the power sliver).
pub fn closed_form_reference(id: &str, alpha: f64) -> Result<Reference> {
    let ap = AlphaParam::new(alpha)?;
    let c = c_alpha(ap);
    let v = match id {
        // Both coordinates large: one jump per axis.
        "ex1_i" => Reference { value: c * c / 4.0, log_correction: false },
        // Sector between pi/8 and 3pi/8 beyond radius 1.
        "ex1_ii_cone" => {
            let r15 = gauss_legendre(15);
            let r31 = gauss_legendre(31);
            let (integral, _) = integrate_adaptive(
                &mut |th: f64| alpha * (th.cos() * th.sin()).powf(-(1.0 + alpha)),
                std::f64::consts::PI / 8.0,
                3.0 * std::f64::consts::PI / 8.0,
                1e-12,
                &r15,
                &r31,
            );
            Reference { value: c * c / 8.0 * integral, log_correction: false }
        }
        // Quadrant corner {x1 > 1, x2 < 0}: exact first-order limit, halfway
        // into the sandwich (0, C/2).
        "ex1_iii" => Reference { value: c / 4.0, log_correction: false },
        // Corner set {x1 > 1, x2 < 1} under (S1, S1 - S2): second order.
        "ex2_lowalpha" => {
            if alpha >= 1.0 {
                return Err(Error::InvalidParameter(
                    "corner reference needs alpha < 1".into(),
                ));
            }
            Reference { value: c * c / 4.0 * beta_corner(alpha), log_correction: false }
        }
        "ex2_alpha1" => {
            Reference { value: 1.0 / (std::f64::consts::PI * std::f64::consts::PI), log_correction: true }
        }
        "ex2_highalpha" => {
            if alpha <= 1.0 {
                return Err(Error::InvalidParameter(
                    "first-moment reference needs alpha > 1".into(),
                ));
            }
            let e_abs = 2.0 / std::f64::consts::PI * ln_gamma(1.0 - 1.0 / alpha).exp();
            Reference { value: c * alpha * e_abs / 4.0, log_correction: false }
        }
        // Exchangeable triple with common factor, weight a = 1/2:
        // (C^2/4)[(1-a^al)^2 + a^al (1-a^al) B(al)].
        "ex3_lowalpha" => {
            if alpha >= 1.0 {
                return Err(Error::InvalidParameter(
                    "exchangeable reference needs alpha < 1".into(),
                ));
            }
            let q = 0.5f64.powf(alpha);
            Reference {
                value: c * c / 4.0 * ((1.0 - q) * (1.0 - q) + q * (1.0 - q) * beta_corner(alpha)),
                log_correction: false,
            }
        }
        // Power sliver, sigma = 1/2: decay exponent min(2 alpha, alpha + 1/2),
        // with a logarithmic factor exactly at alpha = 1/2.
        "remark4_order" => {
            let sigma = 0.5;
            Reference {
                value: (2.0 * alpha).min(alpha + sigma),
                log_correction: (alpha - sigma).abs() < 1e-12,
            }
        }
        _ => return Err(Error::UnknownReference(id.to_string())),
    };
    Ok(v)
}
