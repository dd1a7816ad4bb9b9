//! Closed-form qubit models, GKLS generators and a time-ordered integrator.

pub mod generator;
pub mod ode;
pub mod presets;
pub mod quad;
pub mod qubit;
pub mod scalar;
pub mod spec;

pub use generator::{gkls_transfer, integrate_map, GeneratorSpec};
pub use qubit::{classify_qubit_projector, projector_family, special_form_decompose, ProjectorClassification, SpecialForm};
pub use scalar::ScalarFn;
pub use spec::{parse_model, ModelSpec, Omega, RateFn};
