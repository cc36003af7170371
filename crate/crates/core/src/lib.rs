//! Valid prior-free probabilistic inference via plausibility functions.
//!
//! The pipeline has three ingredients: an [`assoc::Association`] mapping data
//! and a candidate parameter to a scalar statistic, a [`cdf`] estimator for the
//! sampling distribution of that statistic, and a predictive random set from
//! [`prs`] that turns the CDF value into a plausibility. The [`plaus`] engine
//! combines them into point/set plausibilities and curves, and [`regions`]
//! extracts plausibility intervals and 2-D regions with a coverage-simulation
//! harness. [`qform`] provides the chi-square-mixture CDF used by the
//! mixed-model application in [`models::mixed`].

pub mod assoc;
pub mod error;
pub mod models;
pub mod optim;
pub mod prs;
pub mod qform;
pub mod seeding;
pub mod special;
pub mod stats;

pub use assoc::{AssocKind, Association, Model, Orientation, Support};
pub use error::{Error, Result};
pub use prs::RandomSetFamily;
pub use qform::ChiSqMix;
