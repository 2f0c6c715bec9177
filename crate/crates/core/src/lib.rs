//! Day-ahead electricity demand forecasting with offline and online
//! regressors, closed-form residual distribution fitting, and an
//! agent-based long-term electricity market driven by sampled forecast
//! error.
//!
//! The crate is organised along the pipeline:
//!
//! - [`data`]: demand series ingestion/synthesis, calendar labelling, lag
//!   features and min-max scaling.
//! - [`offline`]: batch regressors (linear family, trees and ensembles,
//!   linear SVR, kNN, MLP) behind [`offline::Algorithm`] / [`offline::RegressorModel`].
//! - [`online`]: predict-then-learn regressors and progressive validation.
//! - [`eval`]: metrics, grid search, reserve analysis and the per-hour
//!   orchestration of 24 models.
//! - [`residuals`]: distribution fitting, SSE-based selection and sampling.
//! - [`market`]: merit-order dispatch, NPV investment and the yearly
//!   simulation loop with sensitivity sweeps.
//! - [`manifest`]: run manifests for reproducible outputs.

// Index loops mirror the algebra; `!(a > b)` comparisons deliberately reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod eval;
pub mod linalg;
pub mod manifest;
pub mod market;
pub mod offline;
pub mod online;
pub mod residuals;
pub mod rng;

pub use linalg::Matrix;

/// Version string written into serialized artifacts and run manifests.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
