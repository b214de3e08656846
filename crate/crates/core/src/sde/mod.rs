//! Stratonovich SDEs on embedded manifolds.

mod bridge;
mod development;
mod generator;
mod integrator;
mod path;
mod system;

pub use bridge::{
    brownian_bridge_path, sample_bismut_loop, BaseSampler, BridgeConfig, BridgeSample, BrownianBridge, LoopSample,
};
pub use development::{antidevelopment, development};
pub use generator::{brownian_defect, generator_apply, validate_brownian, QuadraticProbe, ORACLE_TOL};
pub use integrator::{ito_endpoint, ito_map, ito_map_h_derivative, MAX_DRIVE};
pub use path::{IntegratorConfig, Retraction, Scheme, SolutionPath, TangentPathAlong, PATH_TOL};
pub use system::{CircleSystem, GradientSystem, SdeSystem, So3BiinvariantSystem, So3LeftSystem};
