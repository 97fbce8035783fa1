//! Multiply robust instrumental-variable estimation.
//!
//! Candidate instruments `G_1..G_K` may violate the exclusion restriction as
//! long as at least `k†` of them are valid. For every `k†`-subset `k→` the
//! crate builds a centered-product instrument
//! `Z_k→ = (H_k→ − Ê H_k→) ∏_{s∉k→} (G_s − Ê G_s)` and estimates the exposure
//! effect by two-stage least squares on the generated instruments.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.
//!
//! ```
//! use mr2::{build_instruments, enumerate_family, fit_2sls, AlleleCount, Centering, Dataset};
//!
//! let g1 = vec![0., 1., 0., 1., 1., 0., 1., 1., 0., 1., 0., 1.];
//! let g2 = vec![0., 0., 1., 1., 0., 1., 1., 1., 0., 0., 1., 1.];
//! let a: Vec<f64> = g1.iter().zip(&g2).enumerate()
//!     .map(|(i, (x, y))| x * y + 0.1 * (i % 3) as f64).collect();
//! let y: Vec<f64> = a.iter().zip(&g2).map(|(a, g)| 2.0 * a + 0.5 * g).collect();
//! let d = Dataset::from_columns(y, a, vec![g1, g2]).unwrap();
//!
//! let fam = enumerate_family(2, 1).unwrap();
//! let z = build_instruments(d.genotypes(), &fam, &AlleleCount, Centering::Marginal).unwrap();
//! let fit = fit_2sls(&d, &z, None).unwrap();
//! assert!(fit.beta_a.is_finite());
//! ```

// `!(x > y)` deliberately treats NaN as failing the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod instruments;
pub mod linalg;
pub mod montecarlo;
pub mod scalar;
pub mod subsets;

pub use diagnostics::{
    first_stage_f, hausman_from_estimates, hausman_test, HausmanResult, HausmanStatus,
};
pub use error::{Mr2Error, Result};
pub use estimator::{
    fit_2sls, fit_naive_2sls, fit_oracle_2sls, fit_ratio, full_product_instrument,
    h_opt_combination, ratio_estimate, variance_homoskedastic, variance_sandwich, FitSummary,
    Method, ResidualVariance, VarianceMode,
};
pub use instruments::{
    build_instruments, build_weighted_instruments, default_h, estimate_weights,
    estimate_weights_with, interaction_basis, AlleleCount, Centering, HFunction, WeightOptions,
};
pub use montecarlo::{generate, preset, run, EstimatorSpec, Link, McReport, McScenario};
pub use scalar::Real;
pub use subsets::{
    complement, enumerate_family, enumerate_family_capped, partial_id_interactions, Subset,
    SubsetFamily,
};

/// `f64` dataset.
pub type Dataset = dataset::Dataset<f64>;
pub type Genotypes = dataset::Genotypes<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type InstrumentMatrix = instruments::InstrumentMatrix<f64>;
pub type WeightVector = instruments::WeightVector<f64>;
pub type FitResult = estimator::FitResult<f64>;
pub type HOptResult = estimator::HOptResult<f64>;
pub type FirstStageF = diagnostics::FirstStageF<f64>;
