//! Error metrics, convergence studies, CSV output, run configuration and
//! the command-line front end.

pub mod cli;
pub mod config;
pub mod metrics;
pub mod output;
pub mod study;

pub use config::{NonlinearitySpec, PotentialSpec, RunConfig, Scheme};
pub use metrics::{compute_errors, mean_order, ErrorMetrics};
pub use study::{
    compare_schemes, conservation_trace, convergence_study, simulate, spatial_study, ConvergenceRow,
    ConvergenceStudy, ReferenceKind, RunOutcome,
};
