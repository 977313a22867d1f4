//! LASSO regression followed by Stein-type multiplicative shrinkage.
//!
//! The crate covers the full estimation pipeline:
//!
//! * [`model`]: datasets, centering/scaling and the Gram matrix.
//! * [`lasso`]: cyclic coordinate descent for
//!   `sum_i (y_i - x_i' b)^2 + lambda * sum_j |b_j|`, plus regularization
//!   paths indexed by `lambda` or by the standardized bound `s`.
//! * [`shrinkage`]: the Stein constant, the `W_n` statistic and the
//!   SL / PRSL / SL2 / SL3 rescalings of a LASSO fit.
//! * [`simulation`]: the Monte Carlo relative-MSE study.
//! * [`evaluation`]: k-fold CV, the one-standard-error rule and the
//!   case-resampling bootstrap of prediction error.
//! * [`prostate`]: ingestion of the Stamey et al. prostate data.
//! * [`analysis`]: the end-to-end prostate workflow used by the CLI.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases at the crate root fix the scalar to `f64`.

pub mod analysis;
pub mod error;
pub mod evaluation;
pub mod lasso;
pub mod linalg;
pub mod model;
pub mod prostate;
pub mod rng;
pub mod scalar;
pub mod shrinkage;
pub mod simulation;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use evaluation::{EvalReport, Estimator, FoldPlan};
pub use lasso::{LassoConfig, LassoFit, LassoPath, LassoProblem};
pub use model::{CoefficientVector, Dataset, StandardizedDataset};
pub use shrinkage::{ShrinkageVariant, ShrunkenFit, SteinInputs};
pub use simulation::{LambdaRule, SimConfig, SimResult};

pub type Dataset64 = Dataset<f64>;
pub type StandardizedDataset64 = StandardizedDataset<f64>;
pub type CoefficientVector64 = CoefficientVector<f64>;
pub type LassoConfig64 = LassoConfig<f64>;
pub type LassoFit64 = LassoFit<f64>;
pub type LassoPath64 = LassoPath<f64>;
pub type SteinInputs64 = SteinInputs<f64>;
pub type ShrunkenFit64 = ShrunkenFit<f64>;
pub type SimConfig64 = SimConfig<f64>;
pub type SimResult64 = SimResult<f64>;
pub type EvalReport64 = EvalReport<f64>;

pub type Dataset32 = Dataset<f32>;
pub type LassoFit32 = LassoFit<f32>;
