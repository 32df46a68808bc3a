//! Normal representations, linear models and exponential-map linearization
//! around saturated submanifolds.

mod bundle;
mod exp;
mod model;
mod normal;
mod saturate;

pub use bundle::NormalBundle;
pub use exp::{linearize_exp, linearize_with_metrics, verify_linearization, LinearizationResult, LinearizeOptions, INJECTIVITY_RATIO};
pub use model::{linear_model, LinearModel};
pub use normal::{
    lift_along_source, normal_coords, normal_frame, normal_rep, normal_rep_from_lift, normal_rep_matrix, normal_rep_with,
    orbit_tangent, orthogonality_defect,
};
pub use saturate::{saturate_neighborhood, SaturatedNeighborhood};

#[cfg(test)]
mod tests;
