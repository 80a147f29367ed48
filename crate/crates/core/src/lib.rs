//! Graded convergence indices for sequences of random variables and a Monte Carlo
//! checker for the randomized-index Anscombe inequality
//!
//! ```text
//! λ_w(ξ_{N_n} → ξ) ≤ λ_w(ξ_n → ξ) + χ_Ansc((ξ_n)) + inf_{(k_n)} λ_P(N_n / k_n → 1)
//! ```
//!
//! Every index is evaluated as a finite-horizon surrogate: `limsup_{n→∞}` becomes a
//! maximum over a declared n-window, and the suprema/infima over ε, δ and test sets
//! become extrema over declared grids and set families. The [`oracle`] module computes
//! the same surrogates exactly on finite outcome spaces so every Monte Carlo estimator
//! in [`indices`] can be cross-checked.

pub mod cli;
pub mod distributions;
pub mod error;
pub mod indices;
pub mod metric_space;
pub mod oracle;
pub mod processes;

pub use distributions::{normal_cdf, AnalyticLaw, FiniteDistribution, Law, RngStream};
pub use error::{Error, Result};
pub use indices::{
    chi_ansc, infimum_over_kn, lambda_p_ratio, lambda_w, verify_inequality, window_bounds, window_exceedance,
    AlphaGrid, EstimatorGrid, IndexEstimate, InequalityReport, Scenario,
};
pub use metric_space::{HatFunction, Interval, MetricPoint, OpenSet, SetFamily, Side, Space, TestSet};
pub use oracle::{FiniteProcessSpec, FiveFormResult};
pub use processes::{IndexModel, KnSpec, Path, ProcessModel};
