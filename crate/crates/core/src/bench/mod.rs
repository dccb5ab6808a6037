//! Synthetic benchmarks: data generation, metrics, restricted isometry
//! estimates and the replicate runner.

pub mod experiment;
pub mod metrics;
pub mod rip;
pub mod rng;
pub mod synthetic;

pub use experiment::{run_experiment, ExperimentOutput, ExperimentSpec, Method, MethodSummary, ReplicateRecord};
pub use metrics::{misclass_rate, miss_rate, pred_error_regression, Metrics};
pub use rip::{estimate_rip, estimate_rip_exhaustive, rip_ratio_curve, CurvePoint, CurveSpec, RipEstimate};
pub use synthetic::{gen_design, gen_response, generate, true_beta, CovKind, Dataset, Model, Signal, SyntheticSpec};
