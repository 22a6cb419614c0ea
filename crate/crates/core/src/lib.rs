//! Covariate-shift diagnostics built around support sufficiency.
//!
//! The crate computes how well a source distribution covers a target
//! distribution (the support sufficiency divergence and its kernel and hinge
//! variants), classical kernel two-sample statistics, truncated importance
//! weights, and itemized upper bounds on target risk that keep the
//! unobservable information-loss term separate from the observable ones.
//!
//! Every quantity has an exact path for discrete and piecewise-constant grid
//! densities, which is what the synthetic problems in [`synthetic`] use, and a
//! plug-in path for samples.
//!
//! ```
//! use shift_audit::densities::DiscreteDensity;
//! use shift_audit::divergence::{support_divergence_exact, Epsilon};
//!
//! let p = DiscreteDensity::new(vec![0.0, 1.0]).unwrap();
//! let q = DiscreteDensity::new(vec![1.0, 0.0]).unwrap();
//! let d = support_divergence_exact(&p.into(), &q.into(), Epsilon::new(0.5).unwrap()).unwrap();
//! assert_eq!(d.value, 1.0);
//! ```

pub mod bounds;
pub mod densities;
pub mod divergence;
mod error;
pub mod hypotheses;
mod numeric;
pub mod oracle;
pub mod synthetic;
pub mod trainer;
pub mod weighting;

pub use bounds::{BoundReport, EtaReport};
pub use densities::{Density, DiscreteDensity, DomainTag, GridDensity, KdeDensity, SampleSet};
pub use divergence::{DivergenceEstimate, Epsilon, Kernel};
pub use error::{Error, Result};
pub use hypotheses::{Hypothesis, HypothesisClass, Loss, Predictor, Representation};
pub use synthetic::SyntheticProblem;
pub use trainer::{TrainConfig, TrainedModel};

/// Version string recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
