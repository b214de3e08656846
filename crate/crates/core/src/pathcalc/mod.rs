//! Calculus on the path space of a manifold: Bismut tangents, the damped
//! derivative and its inverse, the filtered derivative `T̄I` of an Itô map,
//! cylinder functions and forms, and Monte Carlo checks of the
//! integration by parts identities they satisfy.

mod cylinder;
mod tangent;
mod verify;

pub use cylinder::{
    cylinder_h_derivative, exterior_derivative_cylinder, pullback_one_form, CylinderOneForm, PathCylinderFunction,
    GRADIENT_ORACLE_TOL, GRADIENT_TANGENCY_TOL,
};

pub use tangent::{
    damped_derivative, damped_inverse, damped_inverse_coords, parallel_h_field, ricci_matrix, tbar_ito, AlongPath,
    BismutTangent,
};
pub use verify::{
    ibp_path_battery, intertwining_expectation, levi_civita_defect, verify_ibp_path, verify_intertwining,
    IntertwiningCheck, CHAIN_RULE_TOL, LEVI_CIVITA_TOL, MIN_IBP_SAMPLES,
};
