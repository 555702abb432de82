//! Tail asymptotics for symmetric multivariate stable vectors.
//!
//! The crate models a stable random vector by its spectral measure, and
//! provides the machinery to compute the first- and higher-order power-law
//! behaviour of P(X in h E) as the dilation h grows: exact subset-sum
//! quadrature for the limit coefficients, upper/lower theorem-style bounds,
//! Monte Carlo estimators sharp enough to see second-order terms, and the
//! univariate distributional toolkit underneath.

pub mod error;
pub mod estimate;
pub mod lp;
pub mod quad;
pub mod region;
pub mod rng;
pub mod sobol;
pub mod spectral;
pub mod stats;
pub mod tail;
pub mod univariate;

pub use error::{Error, Result};
pub use estimate::{
    estimate_conditional, estimate_crude, normalized_limit_probe, pick_smoothing_column,
    slope_fit, EstimateReport, Method, ProbeRow,
};
pub use region::{contains_variant, realize_variant, Norm, Region, RegionVariant, SetMode};
pub use spectral::{
    discretize_measure, isotropic_projection_moment, Atom, LePageControl, ModelSpec,
    SpectralMeasure, StableVectorModel,
};
pub use tail::{
    closed_form_reference, coordinate_floors, l_montecarlo, l_quadrature, min_hits,
    theorem_bounds, CoordinateFloors, LStatus, LValue, MonteCarloOptions, QuadratureOptions,
    Reference, TailOrder, TheoremBounds, Witness,
};
pub use univariate::{c_alpha, std_stable_sample, AlphaConstants, AlphaParam};
