//! Slow-kill backward selection for ℓ0-constrained estimation.
//!
//! The solver minimizes `l0(Xβ; y) + (η0/2)‖β‖²` subject to `‖β‖₀ ≤ q` by
//! iterating quantile-thresholded gradient steps while three sequences move
//! together: a decreasing cardinality `q_t`, a scaled ℓ2 shrinkage `η̄_t` and
//! an inverse learning rate `ρ_t` picked by line search.
//!
//! Layout:
//! - [`losses`]: quadratic, logistic and complex multi-response quadratic
//!   losses with gradients and generalized Bregman divergences.
//! - [`thresholding`]: the quantile-thresholding operator, elementwise and
//!   row-grouped.
//! - [`schedules`]: cooling schedules, the shrinkage rule and the line search.
//! - [`solver`]: the main loop, squeezing, polishing and refitting.
//! - [`selection`]: predictive information criteria for choosing `q`.
//! - [`bench`]: synthetic data, metrics, restricted-isometry estimation and
//!   the experiment runner.
//!
//! ```no_run
//! use ndarray::{Array1, Array2};
//! use slowkill::solver::{fit, Problem, SolverConfig};
//!
//! let x = Array2::<f64>::eye(20);
//! let mut y = Array1::<f64>::zeros(20);
//! y[3] = 2.0;
//! let problem = Problem::regression(x, y).unwrap();
//! let result = fit(&problem, &SolverConfig::slow_kill(1)).unwrap();
//! assert_eq!(result.support, vec![3]);
//! ```

pub mod bench;
pub mod design;
pub mod error;
pub mod losses;
pub mod scalar;
pub mod schedules;
pub mod selection;
pub mod solver;
pub mod thresholding;

pub use design::Design;
pub use error::{Error, Result};
pub use losses::{LossKind, LossSpec};
pub use scalar::Scalar;
pub use solver::{fit, iht_baseline, FitResult, Problem, SolverConfig};
