//! Convex hulls, contour and viscosity curvature, and the quadratic-form
//! machinery behind curvature of convex hulls.

mod capsule;
mod curvature;
mod hull;
mod matrix;
mod viscosity;

pub use capsule::{capsule_ruling_profile, hull_inverse_curvature_concavity_check, Capsule};
pub use curvature::{contour_curvature, contour_curvature_with_spacing, loop_curvature};
pub use hull::{convex_hull, convex_hull_points, convexity_deficit, polygon_convexity_deficit};
pub use matrix::{
    graph_mean_curvature, inf_convolution_matrix, inf_convolution_value_numeric, random_spd, trace_inequality_check,
    InfConvolution, SymMatrix,
};
pub use viscosity::{block_reduction_check, touching_quadratic, viscosity_mean_curvature, LocalGraph};
