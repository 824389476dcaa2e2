//! Quantile slice sampling and comparator MCMC kernels.
//!
//! A pseudo-target [`ScalarDist`] maps the state onto the unit interval
//! through its CDF; slice sampling with shrinkage then runs on the
//! transformed scale against the ratio of target to pseudo-target density.

pub mod bench;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod gprior;
mod optim;
pub mod pseudo_select;
pub mod rng;
pub mod samplers;
pub mod shrinkage;
mod special;
pub mod ssm;
pub mod target;
pub mod timing;
pub mod tuning;

pub use dist::{Family, ScalarDist};
pub use error::{Error, Result};
pub use samplers::{run_chain, ChainResult, Kernel, MultiPseudo, StepRecord};
pub use target::{std_target, MultiTarget, StdTarget, UnnormTarget};
