//! Monte Carlo, control variate and multilevel estimators.

pub mod allocation;
pub mod controls;
pub mod cv;
pub mod multilevel;
pub mod stats;

pub use allocation::{optimal_allocation, Allocation};
pub use controls::{Control, ControlBank, SharedControl};
pub use cv::{
    centered_moment_products, cv_estimate, cv_solve, sample_variance_covariance, solve_controls, CvProblem,
    CvSolution, JointMoments, Statistic,
};
pub use multilevel::{
    adaptive_run, estimate_fixed, mlcv_estimate, mlmc_cv_estimate, mlmc_estimate, mlmc_mlcv_estimate,
    replicate_rmse, run_replicates, AlphaMode, ControlSuite, DriverConfig, LevelEstimate, Method, MethodPlan,
    ReplicateSummary, RunReport, TraceStep,
};
pub use stats::{mc_mean, mc_var, pearson, rmse, sample_cov, Comoments};
