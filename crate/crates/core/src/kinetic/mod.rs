//! Linearized Boltzmann equation with hard-sphere kernel.

pub mod dsmc;
pub mod field;
pub mod inversion;
pub mod monitors;
pub mod operator;
pub mod reference;
pub mod slab;

pub use dsmc::{dsmc_collide, DsmcCell};
pub use field::{advance_linearized, modulate, DistributionField, Geometry, Reconstruction, Stepper, Wall};
pub use inversion::{chapman_enskog, invert_l, project_kernel, TransportCoefficients};
pub use monitors::{EntropyMonitor, MonitorReport, MonitorSample};
pub use operator::{apply_l, collision_frequency, collision_kernel, CollisionOperator};
pub use reference::bin_integrals;
pub use slab::stationary_slab;
