//! Target-set geometry: regions built from half-spaces, boxes, balls, a 2-D
//! angular sector, and a power-law sliver, composed by union, intersection,
//! and ball subtraction. Operations: membership for interior/closure and the
//! dilation/erosion variants, scaling by h, origin gap, polyhedral views for
//! the LP layer, and line clipping for conditional Monte Carlo.
//!
//! Dilation here expands polyhedral faces outward by delta (a superset of
//! the Euclidean delta-neighborhood, squeezed between the delta and
//! delta*sqrt(n) neighborhoods), which preserves every containment the tail
//! sandwich needs and has the same delta -> 0 limit.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L2,
    Linf,
}

fn default_true() -> bool {
    true
}

fn default_scale() -> f64 {
    1.0
}

fn default_norm() -> Norm {
    Norm::L2
}

/// Region expression tree. The JSON wire shape is the serde form, e.g.
/// `{"and":[{"halfspace":{"normal":[1,0],"offset":1}}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// normal . x > offset (>= when not strict). Normals need not be unit
    /// on the wire; `validate` normalizes them.
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
        #[serde(default = "default_true")]
        strict: bool,
    },
    /// Axis box with optional faces; None means unbounded on that side.
    #[serde(rename = "box")]
    BoxRegion {
        lo: Vec<Option<f64>>,
        hi: Vec<Option<f64>>,
        #[serde(default = "default_true")]
        strict: bool,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "default_true")]
        inside: bool,
        #[serde(default = "default_norm")]
        norm: Norm,
        #[serde(default = "default_true")]
        strict: bool,
    },
    /// 2-D sector {theta_lo <= angle <= theta_hi, |x| > radius_gt}.
    ConeArc {
        theta_lo: f64,
        theta_hi: f64,
        #[serde(default)]
        radius_gt: f64,
    },
    /// 2-D sliver {x2 > 0, c < x1 < c + c^{1-sigma} x2^sigma} at scale c;
    /// the unit set (c = 1) is {1 < x1 < 1 + x2^sigma}.
    PowerRegion {
        sigma: f64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    #[serde(rename = "or")]
    Union(Vec<Region>),
    #[serde(rename = "and")]
    Intersection(Vec<Region>),
    /// Set difference base \ ball (the removed ball is closed, so the
    /// as-built set excludes the sphere itself).
    MinusBall {
        base: Box<Region>,
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "default_norm")]
        norm: Norm,
    },
}

/// Which realization of the set a point query targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetMode {
    /// Leaf strictness as written.
    AsBuilt,
    /// All comparisons strict.
    Interior,
    /// All comparisons non-strict.
    Closure,
}

impl SetMode {
    fn strict(self, leaf: bool) -> bool {
        match self {
            SetMode::AsBuilt => leaf,
            SetMode::Interior => true,
            SetMode::Closure => false,
        }
    }
}

/// The four set variants of the tail theorem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionVariant {
    Interior,
    Closure,
    Dilated(f64),
    Eroded(f64),
}

impl RegionVariant {
    pub fn label(&self) -> String {
        match self {
            RegionVariant::Interior => "interior".into(),
            RegionVariant::Closure => "closure".into(),
            RegionVariant::Dilated(d) => format!("dilated({d})"),
            RegionVariant::Eroded(d) => format!("eroded({d})"),
        }
    }
}

/// Turn (region, variant) into a concrete tree plus the point-query mode.
/// Dilation/erosion require polyhedral faces and fail on curved leaves.
pub fn realize_variant(region: &Region, variant: RegionVariant) -> Result<(Region, SetMode)> {
    match variant {
        RegionVariant::Interior => Ok((region.clone(), SetMode::Interior)),
        RegionVariant::Closure => Ok((region.clone(), SetMode::Closure)),
        RegionVariant::Dilated(d) => {
            if !(d > 0.0) {
                return Err(Error::InvalidParameter(format!("dilation delta {d} must be > 0")));
            }
            Ok((region.dilate(d)?, SetMode::Interior))
        }
        RegionVariant::Eroded(d) => {
            if !(d > 0.0) {
                return Err(Error::InvalidParameter(format!("erosion delta {d} must be > 0")));
            }
            Ok((region.erode(d)?.0, SetMode::Interior))
        }
    }
}

pub fn contains_variant(region: &Region, x: &[f64], variant: RegionVariant) -> Result<bool> {
    let (tree, mode) = realize_variant(region, variant)?;
    Ok(tree.contains(x, mode))
}

fn cmp(lhs: f64, rhs: f64, strict: bool) -> bool {
    if strict {
        lhs > rhs
    } else {
        lhs >= rhs
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(x: &[f64], c: &[f64], norm: Norm) -> f64 {
    match norm {
        Norm::L2 => x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        Norm::Linf => x.iter().zip(c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
    }
}

impl Region {
    /// Structural checks plus normal normalization; `dim` is the ambient
    /// dimension the region will be used in.
    pub fn validate(&mut self, dim: usize) -> Result<()> {
        match self {
            Region::Halfspace { normal, offset, .. } => {
                if normal.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: normal.len() });
                }
                let n = l2(normal);
                if n == 0.0 {
                    return Err(Error::InvalidParameter("half-space normal is zero".into()));
                }
                for v in normal.iter_mut() {
                    *v /= n;
                }
                *offset /= n;
            }
            Region::BoxRegion { lo, hi, .. } => {
                if lo.len() != dim || hi.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: lo.len() });
                }
                for (l, h) in lo.iter().zip(hi.iter()) {
                    if let (Some(l), Some(h)) = (l, h) {
                        if l > h {
                            return Err(Error::InvalidParameter(format!(
                                "box has empty face range [{l}, {h}]"
                            )));
                        }
                    }
                }
            }
            Region::Ball { center, radius, .. } => {
                if center.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: center.len() });
                }
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "ball radius {radius} must be > 0"
                    )));
                }
            }
            Region::ConeArc { theta_lo, theta_hi, radius_gt } => {
                if dim != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: dim });
                }
                if !(*theta_hi > *theta_lo && *theta_hi - *theta_lo <= 2.0 * PI) {
                    return Err(Error::InvalidParameter(
                        "cone needs theta_lo < theta_hi <= theta_lo + 2 pi".into(),
                    ));
                }
                if *radius_gt < 0.0 {
                    return Err(Error::InvalidParameter("cone radius must be >= 0".into()));
                }
            }
            Region::PowerRegion { sigma, scale } => {
                if dim != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: dim });
                }
                if !(*sigma > 0.0 && *sigma < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "power-region sigma {sigma} must lie in (0,1)"
                    )));
                }
                if !(*scale > 0.0) {
                    return Err(Error::InvalidParameter("power-region scale must be > 0".into()));
                }
            }
            Region::Union(parts) | Region::Intersection(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidParameter("empty composite region".into()));
                }
                for p in parts {
                    p.validate(dim)?;
                }
            }
            Region::MinusBall { base, center, radius, .. } => {
                base.validate(dim)?;
                if center.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: center.len() });
                }
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter("removed-ball radius must be > 0".into()));
                }
            }
        }
        Ok(())
    }

    /// First leaf's ambient dimension, if any leaf pins one.
    pub fn dim_hint(&self) -> Option<usize> {
        match self {
            Region::Halfspace { normal, .. } => Some(normal.len()),
            Region::BoxRegion { lo, .. } => Some(lo.len()),
            Region::Ball { center, .. } => Some(center.len()),
            Region::ConeArc { .. } | Region::PowerRegion { .. } => Some(2),
            Region::Union(parts) | Region::Intersection(parts) => {
                parts.iter().find_map(|p| p.dim_hint())
            }
            Region::MinusBall { base, .. } => base.dim_hint(),
        }
    }

    pub fn contains(&self, x: &[f64], mode: SetMode) -> bool {
        match self {
            Region::Halfspace { normal, offset, strict } => {
                cmp(dot(normal, x), *offset, mode.strict(*strict))
            }
            Region::BoxRegion { lo, hi, strict } => {
                let s = mode.strict(*strict);
                x.iter().enumerate().all(|(i, &v)| {
                    lo[i].map_or(true, |l| cmp(v, l, s)) && hi[i].map_or(true, |h| cmp(h, v, s))
                })
            }
            Region::Ball { center, radius, inside, norm, strict } => {
                let d = dist(x, center, *norm);
                let s = mode.strict(*strict);
                if *inside {
                    cmp(*radius, d, s)
                } else {
                    cmp(d, *radius, s)
                }
            }
            Region::ConeArc { theta_lo, theta_hi, radius_gt } => {
                let r = l2(x);
                if !cmp(r, *radius_gt, mode != SetMode::Closure) {
                    return false;
                }
                let ang = x[1].atan2(x[0]);
                let d = (ang - theta_lo).rem_euclid(2.0 * PI);
                let width = theta_hi - theta_lo;
                match mode {
                    SetMode::Closure => d <= width || d >= 2.0 * PI - 1e-15,
                    _ => d > 0.0 && d < width,
                }
            }
            Region::PowerRegion { sigma, scale } => {
                let s = mode.strict(true);
                cmp(x[1], 0.0, s)
                    && cmp(x[0], *scale, s)
                    && cmp(
                        scale + scale.powf(1.0 - sigma) * x[1].max(0.0).powf(*sigma),
                        x[0],
                        s,
                    )
            }
            Region::Union(parts) => parts.iter().any(|p| p.contains(x, mode)),
            Region::Intersection(parts) => parts.iter().all(|p| p.contains(x, mode)),
            Region::MinusBall { base, center, radius, norm } => {
                // Removed ball is closed; its complement opens/closes with
                // the mode like any other leaf.
                base.contains(x, mode)
                    && cmp(dist(x, center, *norm), *radius, mode != SetMode::Closure)
            }
        }
    }

    /// Region h E: contains(scale(E,h), x) iff contains(E, x/h).
    pub fn scale(&self, h: f64) -> Region {
        assert!(h > 0.0, "scale factor must be positive");
        match self {
            Region::Halfspace { normal, offset, strict } => Region::Halfspace {
                normal: normal.clone(),
                offset: offset * h,
                strict: *strict,
            },
            Region::BoxRegion { lo, hi, strict } => Region::BoxRegion {
                lo: lo.iter().map(|v| v.map(|b| b * h)).collect(),
                hi: hi.iter().map(|v| v.map(|b| b * h)).collect(),
                strict: *strict,
            },
            Region::Ball { center, radius, inside, norm, strict } => Region::Ball {
                center: center.iter().map(|v| v * h).collect(),
                radius: radius * h,
                inside: *inside,
                norm: *norm,
                strict: *strict,
            },
            Region::ConeArc { theta_lo, theta_hi, radius_gt } => Region::ConeArc {
                theta_lo: *theta_lo,
                theta_hi: *theta_hi,
                radius_gt: radius_gt * h,
            },
            Region::PowerRegion { sigma, scale } => {
                Region::PowerRegion { sigma: *sigma, scale: scale * h }
            }
            Region::Union(parts) => Region::Union(parts.iter().map(|p| p.scale(h)).collect()),
            Region::Intersection(parts) => {
                Region::Intersection(parts.iter().map(|p| p.scale(h)).collect())
            }
            Region::MinusBall { base, center, radius, norm } => Region::MinusBall {
                base: Box::new(base.scale(h)),
                center: center.iter().map(|v| v * h).collect(),
                radius: radius * h,
                norm: *norm,
            },
        }
    }

    /// Outward face expansion by delta. Exact for unions; per-face for
    /// boxes/intersections (superset of the Euclidean neighborhood, same
    /// delta -> 0 limit). Curved leaves are unsupported.
    pub fn dilate(&self, delta: f64) -> Result<Region> {
        match self {
            Region::Halfspace { normal, offset, .. } => Ok(Region::Halfspace {
                normal: normal.clone(),
                offset: offset - delta * l2(normal),
                strict: true,
            }),
            Region::BoxRegion { lo, hi, .. } => Ok(Region::BoxRegion {
                lo: lo.iter().map(|v| v.map(|b| b - delta)).collect(),
                hi: hi.iter().map(|v| v.map(|b| b + delta)).collect(),
                strict: true,
            }),
            Region::Ball { center, radius, inside, norm, .. } => Ok(Region::Ball {
                center: center.clone(),
                radius: if *inside { radius + delta } else { (radius - delta).max(0.0) },
                inside: *inside,
                norm: *norm,
                strict: true,
            }),
            Region::ConeArc { .. } => {
                Err(Error::UnsupportedRegion { op: "dilate", node: "cone_arc" })
            }
            Region::PowerRegion { .. } => {
                Err(Error::UnsupportedRegion { op: "dilate", node: "power_region" })
            }
            Region::Union(parts) => Ok(Region::Union(
                parts.iter().map(|p| p.dilate(delta)).collect::<Result<_>>()?,
            )),
            Region::Intersection(parts) => Ok(Region::Intersection(
                parts.iter().map(|p| p.dilate(delta)).collect::<Result<_>>()?,
            )),
            Region::MinusBall { base, center, radius, norm } => Ok(Region::MinusBall {
                base: Box::new(base.dilate(delta)?),
                center: center.clone(),
                radius: (radius - delta).max(0.0),
                norm: *norm,
            }),
        }
    }

    /// Inward face shift by delta. Exact for convex pieces and
    /// intersections; conservative (a subset of the true erosion) for
    /// unions — the boolean is false when that under-approximation was
    /// taken somewhere in the tree.
    pub fn erode(&self, delta: f64) -> Result<(Region, bool)> {
        match self {
            Region::Halfspace { normal, offset, .. } => Ok((
                Region::Halfspace {
                    normal: normal.clone(),
                    offset: offset + delta * l2(normal),
                    strict: true,
                },
                true,
            )),
            Region::BoxRegion { lo, hi, .. } => Ok((
                Region::BoxRegion {
                    lo: lo.iter().map(|v| v.map(|b| b + delta)).collect(),
                    hi: hi.iter().map(|v| v.map(|b| b - delta)).collect(),
                    strict: true,
                },
                true,
            )),
            Region::Ball { center, radius, inside, norm, .. } => Ok((
                Region::Ball {
                    center: center.clone(),
                    radius: if *inside { (radius - delta).max(0.0) } else { radius + delta },
                    inside: *inside,
                    norm: *norm,
                    strict: true,
                },
                true,
            )),
            Region::ConeArc { .. } => {
                Err(Error::UnsupportedRegion { op: "erode", node: "cone_arc" })
            }
            Region::PowerRegion { .. } => {
                Err(Error::UnsupportedRegion { op: "erode", node: "power_region" })
            }
            Region::Union(parts) => {
                let mut out = Vec::with_capacity(parts.len());
                for p in parts {
                    out.push(p.erode(delta)?.0);
                }
                // Piecewise erosion misses points covered only jointly.
                Ok((Region::Union(out), parts.len() <= 1))
            }
            Region::Intersection(parts) => {
                let mut out = Vec::with_capacity(parts.len());
                let mut exact = true;
                for p in parts {
                    let (r, e) = p.erode(delta)?;
                    out.push(r);
                    exact &= e;
                }
                Ok((Region::Intersection(out), exact))
            }
            Region::MinusBall { base, center, radius, norm } => {
                let (b, exact) = base.erode(delta)?;
                Ok((
                    Region::MinusBall {
                        base: Box::new(b),
                        center: center.clone(),
                        radius: radius + delta,
                        norm: *norm,
                    },
                    exact,
                ))
            }
        }
    }

    /// Lower bound on inf{|x| : x in closure}, exact for the shipped leaf
    /// families and for polyhedral intersections (per-piece projection).
    /// Returns +inf for provably empty polyhedral regions.
    pub fn origin_gap(&self) -> f64 {
        match self {
            Region::Halfspace { normal, offset, .. } => (offset / l2(normal)).max(0.0),
            Region::BoxRegion { lo, hi, .. } => {
                let mut d2 = 0.0;
                for i in 0..lo.len() {
                    let v = match (lo[i], hi[i]) {
                        (Some(l), _) if l > 0.0 => l,
                        (_, Some(h)) if h < 0.0 => h,
                        _ => 0.0,
                    };
                    d2 += v * v;
                }
                d2.sqrt()
            }
            Region::Ball { center, radius, inside, norm, .. } => {
                let d0 = dist(&vec![0.0; center.len()], center, *norm);
                // The gap is in the Euclidean norm; for sup-norm balls the
                // sup-norm bound is a valid lower bound since |.|_inf <= |.|_2.
                if *inside {
                    (d0 - radius).max(0.0)
                } else {
                    (radius - d0).max(0.0)
                }
            }
            Region::ConeArc { radius_gt, .. } => *radius_gt,
            Region::PowerRegion { scale, .. } => *scale,
            Region::Union(parts) => {
                parts.iter().map(|p| p.origin_gap()).fold(f64::INFINITY, f64::min)
            }
            Region::Intersection(parts) => {
                let fallback =
                    parts.iter().map(|p| p.origin_gap()).fold(0.0f64, f64::max);
                match self.as_poly_union(SetMode::Closure) {
                    Some(pieces) => pieces
                        .iter()
                        .map(|p| p.origin_distance())
                        .fold(f64::INFINITY, f64::min)
                        .max(fallback),
                    None => fallback,
                }
            }
            Region::MinusBall { base, center, radius, norm } => {
                let d0 = dist(&vec![0.0; center.len()], center, *norm);
                base.origin_gap().max((radius - d0).max(0.0))
            }
        }
    }

    /// Exact finite union of convex polyhedra equal to the given mode of the
    /// region, when the tree is polyhedral; None for curved leaves.
    pub fn as_poly_union(&self, mode: SetMode) -> Option<Vec<ConvexPiece>> {
        match self {
            Region::Halfspace { normal, offset, strict } => Some(vec![ConvexPiece {
                ineqs: vec![LinIneq {
                    normal: normal.clone(),
                    offset: *offset,
                    strict: mode.strict(*strict),
                }],
            }]),
            Region::BoxRegion { lo, hi, strict } => {
                let n = lo.len();
                let s = mode.strict(*strict);
                let mut ineqs = Vec::new();
                for i in 0..n {
                    if let Some(l) = lo[i] {
                        let mut v = vec![0.0; n];
                        v[i] = 1.0;
                        ineqs.push(LinIneq { normal: v, offset: l, strict: s });
                    }
                    if let Some(h) = hi[i] {
                        let mut v = vec![0.0; n];
                        v[i] = -1.0;
                        ineqs.push(LinIneq { normal: v, offset: -h, strict: s });
                    }
                }
                Some(vec![ConvexPiece { ineqs }])
            }
            Region::Ball { center, radius, inside, norm: Norm::Linf, strict } => {
                let n = center.len();
                let s = mode.strict(*strict);
                if *inside {
                    let mut ineqs = Vec::new();
                    for i in 0..n {
                        let mut v = vec![0.0; n];
                        v[i] = 1.0;
                        ineqs.push(LinIneq {
                            normal: v.clone(),
                            offset: center[i] - radius,
                            strict: s,
                        });
                        v[i] = -1.0;
                        ineqs.push(LinIneq {
                            normal: v,
                            offset: -(center[i] + radius),
                            strict: s,
                        });
                    }
                    Some(vec![ConvexPiece { ineqs }])
                } else {
                    // Complement of a sup-norm ball: one slab piece per face.
                    let mut pieces = Vec::with_capacity(2 * n);
                    for i in 0..n {
                        for sign in [1.0, -1.0] {
                            let mut v = vec![0.0; n];
                            v[i] = sign;
                            pieces.push(ConvexPiece {
                                ineqs: vec![LinIneq {
                                    normal: v,
                                    offset: sign * center[i] + radius,
                                    strict: s,
                                }],
                            });
                        }
                    }
                    Some(pieces)
                }
            }
            Region::Ball { norm: Norm::L2, .. }
            | Region::ConeArc { .. }
            | Region::PowerRegion { .. } => None,
            Region::Union(parts) => {
                let mut pieces = Vec::new();
                for p in parts {
                    pieces.extend(p.as_poly_union(mode)?);
                }
                Some(pieces)
            }
            Region::Intersection(parts) => {
                let mut pieces = vec![ConvexPiece { ineqs: vec![] }];
                for p in parts {
                    let child = p.as_poly_union(mode)?;
                    let mut next = Vec::with_capacity(pieces.len() * child.len());
                    for a in &pieces {
                        for b in &child {
                            let mut ineqs = a.ineqs.clone();
                            ineqs.extend(b.ineqs.iter().cloned());
                            next.push(ConvexPiece { ineqs });
                        }
                    }
                    pieces = next;
                }
                Some(pieces)
            }
            Region::MinusBall { base, center, radius, norm } => {
                let Norm::Linf = norm else { return None };
                let shell = Region::Ball {
                    center: center.clone(),
                    radius: *radius,
                    inside: false,
                    norm: Norm::Linf,
                    // Removed ball is closed, so the difference keeps the
                    // strict exterior in as-built mode.
                    strict: mode != SetMode::Closure,
                };
                let shell_pieces = shell.as_poly_union(SetMode::AsBuilt)?;
                let base_pieces = base.as_poly_union(mode)?;
                let mut pieces = Vec::new();
                for a in &base_pieces {
                    for b in &shell_pieces {
                        let mut ineqs = a.ineqs.clone();
                        ineqs.extend(b.ineqs.iter().cloned());
                        pieces.push(ConvexPiece { ineqs });
                    }
                }
                Some(pieces)
            }
        }
    }

    /// Superset of the region by convex polyhedra: the exact pieces when the
    /// tree is polyhedral, a wedge/quadrant enclosure for the curved leaves.
    /// Sound for LP prefilters and coordinate floors; never a substitute for
    /// membership.
    pub fn enclosure_poly_union(&self, mode: SetMode) -> Option<Vec<ConvexPiece>> {
        if let Some(p) = self.as_poly_union(mode) {
            return Some(p);
        }
        match self {
            Region::ConeArc { theta_lo, theta_hi, radius_gt } => {
                let width = theta_hi - theta_lo;
                if width >= PI {
                    // Wide sectors: no convex wedge; fall back to the
                    // radius-only enclosure, which is all of R^2 here.
                    return Some(vec![ConvexPiece { ineqs: vec![] }]);
                }
                let s = mode.strict(true);
                let mid = 0.5 * (theta_lo + theta_hi);
                let ineqs = vec![
                    // Right of the theta_lo ray and left of the theta_hi ray.
                    LinIneq {
                        normal: vec![-theta_lo.sin(), theta_lo.cos()],
                        offset: 0.0,
                        strict: s,
                    },
                    LinIneq {
                        normal: vec![theta_hi.sin(), -theta_hi.cos()],
                        offset: 0.0,
                        strict: s,
                    },
                    LinIneq {
                        normal: vec![mid.cos(), mid.sin()],
                        offset: radius_gt * (0.5 * width).cos(),
                        strict: s,
                    },
                ];
                Some(vec![ConvexPiece { ineqs }])
            }
            Region::PowerRegion { scale, .. } => {
                let s = mode.strict(true);
                Some(vec![ConvexPiece {
                    ineqs: vec![
                        LinIneq { normal: vec![1.0, 0.0], offset: *scale, strict: s },
                        LinIneq { normal: vec![0.0, 1.0], offset: 0.0, strict: s },
                    ],
                }])
            }
            Region::Ball { center, radius, inside: true, norm: Norm::L2, strict } => {
                // Bounding box of the Euclidean ball.
                let n = center.len();
                let s = mode.strict(*strict);
                let mut ineqs = Vec::new();
                for i in 0..n {
                    let mut v = vec![0.0; n];
                    v[i] = 1.0;
                    ineqs.push(LinIneq {
                        normal: v.clone(),
                        offset: center[i] - radius,
                        strict: s,
                    });
                    v[i] = -1.0;
                    ineqs.push(LinIneq { normal: v, offset: -(center[i] + radius), strict: s });
                }
                Some(vec![ConvexPiece { ineqs }])
            }
            Region::Ball { inside: false, .. } => {
                // Exterior of a Euclidean ball: no useful convex enclosure
                // short of all of R^n.
                Some(vec![ConvexPiece { ineqs: vec![] }])
            }
            Region::Union(parts) => {
                let mut pieces = Vec::new();
                for p in parts {
                    pieces.extend(p.enclosure_poly_union(mode)?);
                }
                Some(pieces)
            }
            Region::Intersection(parts) => {
                let mut pieces = vec![ConvexPiece { ineqs: vec![] }];
                for p in parts {
                    let child = p.enclosure_poly_union(mode)?;
                    let mut next = Vec::with_capacity(pieces.len() * child.len());
                    for a in &pieces {
                        for b in &child {
                            let mut ineqs = a.ineqs.clone();
                            ineqs.extend(b.ineqs.iter().cloned());
                            next.push(ConvexPiece { ineqs });
                        }
                    }
                    pieces = next;
                }
                Some(pieces)
            }
            Region::MinusBall { base, .. } => base.enclosure_poly_union(mode),
            _ => None,
        }
    }

    /// {t : p + t d in mode-of-region} as disjoint open intervals (endpoints
    /// carry no probability for the continuous laws this feeds). Supported
    /// for polyhedral trees, Euclidean balls, sectors narrower than pi, and
    /// the power sliver along the vertical axis.
    pub fn line_clip(&self, p: &[f64], d: &[f64], mode: SetMode) -> Result<Vec<(f64, f64)>> {
        match self {
            Region::Halfspace { normal, offset, strict } => Ok(halfline(
                dot(normal, d),
                offset - dot(normal, p),
                mode.strict(*strict),
            )),
            Region::BoxRegion { lo, hi, strict } => {
                let s = mode.strict(*strict);
                let mut acc = vec![(f64::NEG_INFINITY, f64::INFINITY)];
                for i in 0..lo.len() {
                    if let Some(l) = lo[i] {
                        acc = intersect_lists(&acc, &halfline(d[i], l - p[i], s));
                    }
                    if let Some(h) = hi[i] {
                        acc = intersect_lists(&acc, &halfline(-d[i], p[i] - h, s));
                    }
                }
                Ok(acc)
            }
            Region::Ball { center, radius, inside, norm, strict } => {
                // The core below is the inner (closed/open) ball; complement
                // flips strictness, so the outside variant needs the negated
                // flag to keep degenerate parallel lines on the right side.
                let s = if *inside { mode.strict(*strict) } else { !mode.strict(*strict) };
                let core = match norm {
                    Norm::L2 => {
                        // |p + t d - c|^2 = r^2
                        let q: Vec<f64> = p.iter().zip(center).map(|(a, b)| a - b).collect();
                        let a = dot(d, d);
                        let b = 2.0 * dot(&q, d);
                        let c = dot(&q, &q) - radius * radius;
                        if a == 0.0 {
                            if c < 0.0 || (c == 0.0 && !s) {
                                vec![(f64::NEG_INFINITY, f64::INFINITY)]
                            } else {
                                vec![]
                            }
                        } else {
                            let disc = b * b - 4.0 * a * c;
                            if disc <= 0.0 {
                                vec![]
                            } else {
                                let s = disc.sqrt();
                                vec![((-b - s) / (2.0 * a), (-b + s) / (2.0 * a))]
                            }
                        }
                    }
                    Norm::Linf => {
                        let mut acc = vec![(f64::NEG_INFINITY, f64::INFINITY)];
                        for i in 0..center.len() {
                            acc = intersect_lists(
                                &acc,
                                &halfline(d[i], center[i] - radius - p[i], s),
                            );
                            acc = intersect_lists(
                                &acc,
                                &halfline(-d[i], p[i] - center[i] - radius, s),
                            );
                        }
                        acc
                    }
                };
                if *inside {
                    Ok(core)
                } else {
                    Ok(complement_list(&core))
                }
            }
            Region::ConeArc { theta_lo, theta_hi, radius_gt } => {
                let width = theta_hi - theta_lo;
                if width >= PI {
                    return Err(Error::UnsupportedRegion {
                        op: "line_clip",
                        node: "cone_arc wider than pi",
                    });
                }
                // Wedge = two homogeneous half-planes; radius = complement
                // of the disc.
                let n1 = [-theta_lo.sin(), theta_lo.cos()];
                let n2 = [theta_hi.sin(), -theta_hi.cos()];
                let s = mode != SetMode::Closure;
                let mut acc = halfline(
                    n1[0] * d[0] + n1[1] * d[1],
                    -(n1[0] * p[0] + n1[1] * p[1]),
                    s,
                );
                acc = intersect_lists(
                    &acc,
                    &halfline(n2[0] * d[0] + n2[1] * d[1], -(n2[0] * p[0] + n2[1] * p[1]), s),
                );
                if *radius_gt > 0.0 {
                    let disc = Region::Ball {
                        center: vec![0.0, 0.0],
                        radius: *radius_gt,
                        inside: false,
                        norm: Norm::L2,
                        strict: true,
                    };
                    acc = intersect_lists(&acc, &disc.line_clip(p, d, mode)?);
                }
                Ok(acc)
            }
            Region::PowerRegion { sigma, scale } => {
                // Supported along the coordinate axes, where one variable is
                // pinned and the boundary solves in closed form.
                let nrm = l2(d);
                let s = mode.strict(true);
                if d[0].abs() <= 1e-13 * nrm {
                    // Vertical: at fixed x1 the set is {x2 > ((x1-c) c^{sigma-1})^{1/sigma}}.
                    let x1 = p[0];
                    if x1 <= *scale {
                        return Ok(vec![]);
                    }
                    let w0 = ((x1 - scale) * scale.powf(sigma - 1.0)).powf(1.0 / sigma);
                    return Ok(halfline(d[1], w0 - p[1], s));
                }
                if d[1].abs() <= 1e-13 * nrm {
                    // Horizontal: at fixed x2 > 0 the set is {c < x1 < c + c^{1-sigma} x2^sigma}.
                    let x2 = p[1];
                    if x2 <= 0.0 {
                        return Ok(vec![]);
                    }
                    let hi = scale + scale.powf(1.0 - sigma) * x2.powf(*sigma);
                    return Ok(intersect_lists(
                        &halfline(d[0], scale - p[0], s),
                        &halfline(-d[0], p[0] - hi, s),
                    ));
                }
                Err(Error::UnsupportedRegion {
                    op: "line_clip",
                    node: "power_region off the coordinate axes",
                })
            }
            Region::Union(parts) => {
                let mut acc = Vec::new();
                for part in parts {
                    acc.extend(part.line_clip(p, d, mode)?);
                }
                Ok(merge_list(acc))
            }
            Region::Intersection(parts) => {
                let mut acc = vec![(f64::NEG_INFINITY, f64::INFINITY)];
                for part in parts {
                    acc = intersect_lists(&acc, &part.line_clip(p, d, mode)?);
                    if acc.is_empty() {
                        break;
                    }
                }
                Ok(acc)
            }
            Region::MinusBall { base, center, radius, norm } => {
                let ball = Region::Ball {
                    center: center.clone(),
                    radius: *radius,
                    inside: true,
                    norm: *norm,
                    strict: false,
                };
                let hole = ball.line_clip(p, d, mode)?;
                Ok(intersect_lists(&base.line_clip(p, d, mode)?, &complement_list(&hole)))
            }
        }
    }

}

/// {t : a t > b} (">=" when not open) as an interval list. The flag only
/// changes the outcome when the line is parallel to the face (a = 0) and sits
/// exactly on it (b = 0); interior endpoints stay open either way because
/// single points carry no mass downstream.
fn halfline(a: f64, b: f64, open: bool) -> Vec<(f64, f64)> {
    if a == 0.0 {
        if b < 0.0 || (b == 0.0 && !open) {
            vec![(f64::NEG_INFINITY, f64::INFINITY)]
        } else {
            vec![]
        }
    } else if a > 0.0 {
        vec![(b / a, f64::INFINITY)]
    } else {
        vec![(f64::NEG_INFINITY, b / a)]
    }
}

fn merge_list(mut list: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    list.retain(|(a, b)| a < b);
    list.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(list.len());
    for (a, b) in list {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn intersect_lists(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

fn complement_list(list: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(list.len() + 1);
    let mut cursor = f64::NEG_INFINITY;
    for &(a, b) in list {
        if cursor < a {
            out.push((cursor, a));
        }
        cursor = cursor.max(b);
    }
    if cursor < f64::INFINITY {
        out.push((cursor, f64::INFINITY));
    }
    out
}

/// One linear inequality normal . x > offset (>= when not strict).
#[derive(Debug, Clone)]
pub struct LinIneq {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub strict: bool,
}

/// Conjunction of linear inequalities.
#[derive(Debug, Clone)]
pub struct ConvexPiece {
    pub ineqs: Vec<LinIneq>,
}

impl ConvexPiece {
    pub fn dim(&self) -> usize {
        self.ineqs.first().map_or(0, |i| i.normal.len())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.ineqs.iter().all(|i| cmp(dot(&i.normal, x), i.offset, i.strict))
    }

    /// Euclidean distance from the origin to the (closed) piece by
    /// alternating projections with Dykstra's correction; +inf when the
    /// piece is infeasible.
    pub fn origin_distance(&self) -> f64 {
        let n = self.dim();
        if n == 0 || self.ineqs.is_empty() {
            return 0.0;
        }
        // Infeasibility check first: Dykstra does not converge on empty sets.
        let cons: Vec<crate::lp::Constraint> = self
            .ineqs
            .iter()
            .map(|i| crate::lp::Constraint { coeffs: i.normal.clone(), rhs: i.offset })
            .collect();
        if crate::lp::feasible(&cons, n, &vec![false; n]).is_none() {
            return f64::INFINITY;
        }
        let m = self.ineqs.len();
        let mut x = vec![0.0f64; n];
        let mut corr = vec![vec![0.0f64; n]; m];
        for _ in 0..600 {
            let mut moved = 0.0f64;
            for (k, ineq) in self.ineqs.iter().enumerate() {
                let mut y: Vec<f64> = x.iter().zip(&corr[k]).map(|(a, b)| a + b).collect();
                let nn = dot(&ineq.normal, &ineq.normal);
                let viol = ineq.offset - dot(&ineq.normal, &y);
                if viol > 0.0 && nn > 0.0 {
                    for (yi, ni) in y.iter_mut().zip(&ineq.normal) {
                        *yi += viol * ni / nn;
                    }
                }
                for i in 0..n {
                    let new_corr = x[i] + corr[k][i] - y[i];
                    moved = moved.max((y[i] - x[i]).abs());
                    corr[k][i] = new_corr;
                    x[i] = y[i];
                }
            }
            if moved < 1e-13 {
                break;
            }
        }
        l2(&x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_1inf2() -> Region {
        Region::BoxRegion {
            lo: vec![Some(1.0), Some(1.0)],
            hi: vec![None, None],
            strict: true,
        }
    }

    fn corner_region() -> Region {
        // {x1 > 1, x2 < 1}
        Region::Intersection(vec![
            Region::Halfspace { normal: vec![1.0, 0.0], offset: 1.0, strict: true },
            Region::Halfspace { normal: vec![0.0, -1.0], offset: -1.0, strict: true },
        ])
    }

    #[test]
    fn membership_examples() {
        let b = box_1inf2();
        assert!(b.contains(&[2.0, 2.0], SetMode::Interior));
        assert!(!b.contains(&[1.0, 2.0], SetMode::Interior));
        assert!(b.contains(&[1.0, 2.0], SetMode::Closure));

        let cone = Region::ConeArc { theta_lo: PI / 8.0, theta_hi: 3.0 * PI / 8.0, radius_gt: 1.0 };
        assert!(cone.contains(&[1.0, 1.0], SetMode::AsBuilt));
        assert!(!cone.contains(&[1.0, 0.0], SetMode::AsBuilt));
        assert!(!cone.contains(&[0.1, 0.1], SetMode::AsBuilt));

        let pw = Region::PowerRegion { sigma: 0.5, scale: 1.0 };
        assert!(pw.contains(&[1.5, 1.0], SetMode::AsBuilt));
        assert!(!pw.contains(&[1.5, 0.04], SetMode::AsBuilt));
    }

    #[test]
    fn scaling_commutes_with_membership() {
        let regions: Vec<Region> = vec![
            box_1inf2(),
            corner_region(),
            Region::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
                inside: false,
                norm: Norm::L2,
                strict: true,
            },
            Region::ConeArc { theta_lo: 0.3, theta_hi: 1.1, radius_gt: 0.7 },
            Region::PowerRegion { sigma: 0.5, scale: 1.0 },
            Region::MinusBall {
                base: Box::new(corner_region()),
                center: vec![0.0, 0.0],
                radius: 0.5,
                norm: Norm::Linf,
            },
        ];
        let mut rng = crate::rng::substream(17, 0, 0);
        use rand::Rng;
        for region in &regions {
            for h in [0.5, 2.0, 10.0] {
                let scaled = region.scale(h);
                for _ in 0..1000 {
                    let x = [rng.gen::<f64>() * 8.0 - 4.0, rng.gen::<f64>() * 8.0 - 4.0];
                    let inner = [x[0] / h, x[1] / h];
                    assert_eq!(
                        scaled.contains(&x, SetMode::AsBuilt),
                        region.contains(&inner, SetMode::AsBuilt),
                        "h={h} x={x:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn variant_nesting_on_random_points() {
        let regions = vec![box_1inf2(), corner_region()];
        let mut rng = crate::rng::substream(18, 0, 0);
        use rand::Rng;
        for region in &regions {
            for _ in 0..1000 {
                let x = [rng.gen::<f64>() * 6.0 - 2.0, rng.gen::<f64>() * 6.0 - 2.0];
                let e = contains_variant(region, &x, RegionVariant::Eroded(0.2)).unwrap();
                let i = contains_variant(region, &x, RegionVariant::Interior).unwrap();
                let c = contains_variant(region, &x, RegionVariant::Closure).unwrap();
                let d = contains_variant(region, &x, RegionVariant::Dilated(0.2)).unwrap();
                assert!(!e || i, "eroded outside interior at {x:?}");
                assert!(!i || c, "interior outside closure at {x:?}");
                assert!(!c || d, "closure outside dilated at {x:?}");
                // Monotonicity in delta.
                let d2 = contains_variant(region, &x, RegionVariant::Dilated(0.4)).unwrap();
                let e2 = contains_variant(region, &x, RegionVariant::Eroded(0.4)).unwrap();
                assert!(!d || d2);
                assert!(!e2 || e);
            }
        }
    }

    #[test]
    fn dilation_and_erosion_move_faces() {
        let h = Region::Halfspace { normal: vec![1.0, 0.0], offset: 1.0, strict: true };
        match h.dilate(0.1).unwrap() {
            Region::Halfspace { offset, .. } => assert!((offset - 0.9).abs() < 1e-12),
            _ => panic!("leaf type changed"),
        }
        let b = box_1inf2();
        let (er, exact) = b.erode(0.25).unwrap();
        assert!(exact);
        match &er {
            Region::BoxRegion { lo, .. } => assert_eq!(lo[0], Some(1.25)),
            _ => panic!("leaf type changed"),
        }
        // Erode-then-dilate a convex box restores it.
        let back = er.dilate(0.25).unwrap();
        match back {
            Region::BoxRegion { lo, hi, .. } => {
                assert!((lo[0].unwrap() - 1.0).abs() < 1e-12);
                assert!(hi[0].is_none());
            }
            _ => panic!("leaf type changed"),
        }
        let cone = Region::ConeArc { theta_lo: 0.0, theta_hi: 1.0, radius_gt: 1.0 };
        assert!(matches!(cone.dilate(0.1), Err(Error::UnsupportedRegion { .. })));
    }

    #[test]
    fn union_erosion_is_flagged_conservative() {
        let u = Region::Union(vec![box_1inf2(), corner_region()]);
        let (_, exact) = u.erode(0.1).unwrap();
        assert!(!exact);
    }

    #[test]
    fn origin_gaps() {
        assert!((box_1inf2().origin_gap() - 2f64.sqrt()).abs() < 1e-12);
        let h = Region::Halfspace { normal: vec![1.0, 0.0], offset: 1.0, strict: true };
        assert!((h.origin_gap() - 1.0).abs() < 1e-12);
        let shell = Region::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
            inside: false,
            norm: Norm::L2,
            strict: true,
        };
        assert!((shell.origin_gap() - 1.0).abs() < 1e-12);
        // Exact corner distance through the polyhedral path.
        assert!((corner_region().origin_gap() - 1.0).abs() < 1e-9);
        let rotated = Region::Intersection(vec![
            Region::Halfspace { normal: vec![1.0, 1.0], offset: 2.0, strict: true },
            Region::Halfspace { normal: vec![1.0, -1.0], offset: 0.0, strict: true },
        ]);
        // Nearest point of the wedge is (sqrt(2), 0) at distance sqrt(2).
        assert!((rotated.origin_gap() - 2f64.sqrt()).abs() < 1e-6, "{}", rotated.origin_gap());
        let pw = Region::PowerRegion { sigma: 0.5, scale: 3.0 };
        assert!((pw.origin_gap() - 3.0).abs() < 1e-12);
        let cone = Region::ConeArc { theta_lo: 0.1, theta_hi: 0.4, radius_gt: 2.5 };
        assert!((cone.origin_gap() - 2.5).abs() < 1e-12);
        let u = Region::Union(vec![pw, cone]);
        assert!((u.origin_gap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn line_clip_examples() {
        // The corner set clipped along the diagonal from (0, -t2).
        let t2 = 0.75;
        let clips = corner_region().line_clip(&[0.0, -t2], &[1.0, 1.0], SetMode::AsBuilt).unwrap();
        assert_eq!(clips.len(), 1);
        assert!((clips[0].0 - 1.0).abs() < 1e-12);
        assert!((clips[0].1 - (1.0 + t2)).abs() < 1e-12);

        let b = box_1inf2();
        assert!(b.line_clip(&[0.0, 0.0], &[1.0, 0.0], SetMode::AsBuilt).unwrap().is_empty());
        let c = b.line_clip(&[0.0, 2.0], &[1.0, 0.0], SetMode::AsBuilt).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0].0 - 1.0).abs() < 1e-12 && c[0].1.is_infinite());
    }

    #[test]
    fn line_clip_agrees_with_membership() {
        let regions: Vec<Region> = vec![
            corner_region(),
            box_1inf2(),
            Region::MinusBall {
                base: Box::new(box_1inf2()),
                center: vec![2.0, 2.0],
                radius: 0.5,
                norm: Norm::L2,
            },
            Region::ConeArc { theta_lo: 0.2, theta_hi: 1.2, radius_gt: 0.8 },
            Region::Union(vec![corner_region(), box_1inf2()]),
        ];
        let mut rng = crate::rng::substream(19, 0, 0);
        use rand::Rng;
        for region in &regions {
            for _ in 0..200 {
                let p = [rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0];
                let ang = rng.gen::<f64>() * 2.0 * PI;
                let d = [ang.cos(), ang.sin()];
                let clips = region.line_clip(&p, &d, SetMode::AsBuilt).unwrap();
                for _ in 0..40 {
                    let t = rng.gen::<f64>() * 12.0 - 6.0;
                    let x = [p[0] + t * d[0], p[1] + t * d[1]];
                    let inside = region.contains(&x, SetMode::AsBuilt);
                    let clipped = clips.iter().any(|&(a, b)| t > a && t < b);
                    // Skip points essentially on a boundary.
                    let near_edge = clips
                        .iter()
                        .any(|&(a, b)| (t - a).abs() < 1e-9 || (t - b).abs() < 1e-9);
                    if !near_edge {
                        assert_eq!(inside, clipped, "region mismatch at t={t} p={p:?} d={d:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn power_region_vertical_clip() {
        let pw = Region::PowerRegion { sigma: 0.5, scale: 4.0 };
        // At x1 = 5: need x2 > ((5-4) / 4^{0.5})^2 = 1/4.
        let clips = pw.line_clip(&[5.0, 0.0], &[0.0, 1.0], SetMode::AsBuilt).unwrap();
        assert_eq!(clips.len(), 1);
        assert!((clips[0].0 - 0.25).abs() < 1e-12);
        assert!(clips[0].1.is_infinite());
        // Left of the sliver: empty.
        assert!(pw.line_clip(&[3.9, 0.0], &[0.0, 1.0], SetMode::AsBuilt).unwrap().is_empty());
        // Horizontal clip at x2 = 4: x1 in (4, 4 + 2*2) = (4, 8).
        let h = pw.line_clip(&[0.0, 4.0], &[1.0, 0.0], SetMode::AsBuilt).unwrap();
        assert_eq!(h.len(), 1);
        assert!((h[0].0 - 4.0).abs() < 1e-12 && (h[0].1 - 8.0).abs() < 1e-12);
        assert!(pw.line_clip(&[0.0, -1.0], &[1.0, 0.0], SetMode::AsBuilt).unwrap().is_empty());
        // Off-axis direction is unsupported.
        assert!(pw.line_clip(&[5.0, 0.0], &[1.0, 1.0], SetMode::AsBuilt).is_err());
        // Consistency with membership.
        for x2 in [0.01, 0.2, 0.3, 2.0] {
            let inside = pw.contains(&[5.0, x2], SetMode::AsBuilt);
            let clipped = clips.iter().any(|&(a, b)| x2 > a && x2 < b);
            assert_eq!(inside, clipped, "x2={x2}");
        }
    }

    #[test]
    fn poly_union_views() {
        let pieces = corner_region().as_poly_union(SetMode::Closure).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].ineqs.len(), 2);
        assert!(pieces[0].contains(&[2.0, 0.0]));
        assert!(!pieces[0].contains(&[0.0, 0.0]));

        // Sup-norm shell: 4 one-face pieces in the plane.
        let shell = Region::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
            inside: false,
            norm: Norm::Linf,
            strict: true,
        };
        let pieces = shell.as_poly_union(SetMode::AsBuilt).unwrap();
        assert_eq!(pieces.len(), 4);
        assert!(pieces.iter().any(|p| p.contains(&[2.0, 0.0])));
        assert!(!pieces.iter().any(|p| p.contains(&[0.5, 0.5])));

        // Euclidean balls have no exact polyhedral form.
        let l2ball = Region::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
            inside: false,
            norm: Norm::L2,
            strict: true,
        };
        assert!(l2ball.as_poly_union(SetMode::AsBuilt).is_none());

        // Cone enclosure is a superset.
        let cone = Region::ConeArc { theta_lo: PI / 8.0, theta_hi: 3.0 * PI / 8.0, radius_gt: 1.0 };
        let enc = cone.enclosure_poly_union(SetMode::Closure).unwrap();
        let mut rng = crate::rng::substream(20, 0, 0);
        use rand::Rng;
        for _ in 0..500 {
            let x = [rng.gen::<f64>() * 6.0 - 3.0, rng.gen::<f64>() * 6.0 - 3.0];
            if cone.contains(&x, SetMode::Closure) {
                assert!(enc.iter().any(|p| p.contains(&x)), "enclosure missed {x:?}");
            }
        }
    }

    #[test]
    fn origin_distance_of_pieces() {
        let piece = ConvexPiece {
            ineqs: vec![
                LinIneq { normal: vec![1.0, 0.0], offset: 1.0, strict: false },
                LinIneq { normal: vec![0.0, 1.0], offset: 1.0, strict: false },
            ],
        };
        assert!((piece.origin_distance() - 2f64.sqrt()).abs() < 1e-9);
        let infeasible = ConvexPiece {
            ineqs: vec![
                LinIneq { normal: vec![1.0], offset: 1.0, strict: false },
                LinIneq { normal: vec![-1.0], offset: 0.0, strict: false },
            ],
        };
        assert!(infeasible.origin_distance().is_infinite());
    }

    #[test]
    fn validation_and_wire_format() {
        let json = r#"{"and":[{"halfspace":{"normal":[2,0],"offset":2,"strict":true}},
                               {"halfspace":{"normal":[0,-1],"offset":-1}}]}"#;
        let mut region: Region = serde_json::from_str(json).unwrap();
        region.validate(2).unwrap();
        // Normal was normalized: offset 2 with |n|=2 becomes offset 1.
        assert!(region.contains(&[1.5, 0.0], SetMode::AsBuilt));
        assert!(!region.contains(&[0.5, 0.0], SetMode::AsBuilt));

        let round = serde_json::to_string(&region).unwrap();
        let back: Region = serde_json::from_str(&round).unwrap();
        assert_eq!(
            back.contains(&[1.5, 0.0], SetMode::AsBuilt),
            region.contains(&[1.5, 0.0], SetMode::AsBuilt)
        );

        for bad in [
            r#"{"power_region":{"sigma":1.5}}"#,
            r#"{"cone_arc":{"theta_lo":1.0,"theta_hi":0.5}}"#,
            r#"{"halfspace":{"normal":[0,0],"offset":1}}"#,
        ] {
            let mut r: Region = serde_json::from_str(bad).unwrap();
            assert!(r.validate(2).is_err(), "{bad}");
        }

        let shorthand = r#"{"box":{"lo":[1,1],"hi":[null,null]}}"#;
        let mut b: Region = serde_json::from_str(shorthand).unwrap();
        b.validate(2).unwrap();
        assert!(b.contains(&[2.0, 2.0], SetMode::AsBuilt));

        let pw = r#"{"power_region":{"sigma":0.5}}"#;
        let mut p: Region = serde_json::from_str(pw).unwrap();
        p.validate(2).unwrap();
        assert!(p.contains(&[1.5, 1.0], SetMode::AsBuilt));
    }
}
