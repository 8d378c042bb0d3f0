//! Interior PM synchronous machine model.
//!
//! Stationary-frame quantities use the amplitude-invariant Clarke transform;
//! the rotor frame is aligned with the magnet (d) axis. All angles are
//! electrical.

mod dynamics;
mod frame;
mod params;
mod physics;

pub use dynamics::{
    electromagnetic_torque, flux_linkage_rotor, flux_linkage_stationary, inductance_matrix,
    step_electrical, step_mechanical, ElectroMechState,
};
pub(crate) use frame::wrap_pm_pi;
pub use frame::{clarke, inverse_clarke, inverse_park, park, wrap_angle, Frame, FrameVector};
pub use params::{MachineParams, MagnetHfModel};
pub use physics::{eddy_loss_density, equivalent_slip, skin_depth, MU_0};
