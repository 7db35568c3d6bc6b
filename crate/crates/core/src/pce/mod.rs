//! Polynomial chaos surrogates over tensorized Legendre bases.

pub mod basis;
pub mod fit;
pub mod galerkin;
pub mod lars;
pub mod legendre;
pub mod surrogate;

pub use basis::{basis_eval, total_degree_set, Basis, MultiIndex};
pub use fit::{adaptive_fit, ols_fit, q2, q2_values, AdaptiveConfig, DegreeScore};
pub use galerkin::{
    centered_product_covariance, centered_square_covariance, galerkin_tensor, GalerkinTensor,
};
pub use lars::lars_select;
pub use surrogate::{pc_covariance, pc_moments, PcEvaluator, PcSurrogate, Provenance};
