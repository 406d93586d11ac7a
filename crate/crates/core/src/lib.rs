//! Bayesian optimization that stays robust to a misspecified prior mean.
//!
//! A Gaussian-process surrogate is paired with an imprecise GP whose set of
//! constant prior means yields lower and upper bounds on the posterior mean.
//! The GLCB acquisition rewards the width of those bounds on top of the usual
//! lower confidence bound. The [`bench`] module repeats runs across prior
//! settings and acquisition functions and summarizes their paths.

pub mod acquisition;
pub mod bench;
pub mod cli;
pub mod engine;
pub mod error;
pub mod gp;
pub mod igp;
pub mod kernel;
pub mod optimizer;

pub use acquisition::AcquisitionSpec;
pub use engine::{run, run_bo, run_probo, OptimizationTrace, RunConfig, TargetFunction};
pub use error::{ProboError, Result};
pub use gp::{GpModel, MeanForm, MeanSpec, Prediction};
pub use igp::{ImpreciseGp, MeanBounds};
pub use kernel::{KernelFamily, KernelSpec};
pub use optimizer::{BoxBounds, FocusSearchConfig};
