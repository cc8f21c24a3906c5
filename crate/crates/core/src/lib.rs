//! Power analysis for stepped wedge cluster-randomized trials with two
//! treatments.
//!
//! The pipeline is: a [`DesignGrid`] of cell conditions, a
//! [`CorrelationSpec`] reduced to the compound-symmetric covariance of
//! cluster-period means, the closed-form covariance of the treatment-effect
//! estimates ([`closed_form_covariance`]), and Wald power
//! ([`design_power`], [`sweep`]). [`oracle_covariance`] recomputes the same
//! covariance by brute-force dense GLS for verification.

pub mod catalog;
pub mod covariance;
pub mod design;
pub mod error;
pub mod format;
pub mod oracle;
pub mod power;
pub mod variance;

pub use catalog::{catalog_design, catalog_ids, CatalogEntry};
pub use covariance::{
    cluster_cov_entries, raw_cov_entries, standardize, unstandardize, CompoundSymmetry,
    CorrelationSpec, CovarianceModel, Parameterization, RawComponents, StandardizedParams,
};
pub use design::{
    build_design_matrix, concurrent_design, generate_standard_swd, Condition, DesignGrid, Effect,
    FixedEffectsMatrix, MeanModel, TransitionPolicy, Validation, Violation,
};
pub use error::{Error, Result};
pub use format::{parse_design, serialize_design, serialize_design_json};
pub use oracle::oracle_covariance;
pub use power::{
    default_rho_grid, design_power, sweep, wald_power, EffectSpec, Pairing, PowerEntry,
    PowerResult, SweepPoint, SweepRow, DEFAULT_ALPHA,
};
pub use variance::{
    closed_form_covariance, contrast_variance, precision_terms, sherman_morrison_entries,
    PrecisionTerms, TreatmentCovariance,
};
