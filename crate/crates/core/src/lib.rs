//! Gradient assisted learning: organizations holding vertical slices of a
//! dataset help one organization (Alice) minimize her loss by fitting the
//! pseudo-residuals she broadcasts, without sharing data, models, or
//! objectives.

pub mod baselines;
pub mod data;
pub mod error;
pub mod experiment;
pub mod gal;
pub mod learners;
pub mod linalg;
pub mod losses;
pub mod metrics;
pub mod optim;
pub mod oracle;
pub mod privacy;
pub mod protocol;

pub use error::{GalError, Result};
