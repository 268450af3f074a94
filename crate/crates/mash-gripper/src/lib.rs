//! Simulation and analysis toolkit for a soft pneumatic gripper whose
//! fingers combine an extension chamber with electrostatic strain-limiting
//! brakes on their inner and outer walls.
//!
//! The crate covers the full stack: brake electrostatics and engagement
//! dynamics ([`brake`]), hyperelastic membrane energy and the
//! pressure-extension law ([`material`]), constant-curvature finger
//! kinematics with brake-dependent bending ([`actuator`]), the four-finger
//! gripper with its grasp envelope and payload checks ([`gripper`]), grasp
//! strategy state machines ([`controller`]), deterministic closed-loop
//! simulation ([`sim`] and [`scenario`]), parameter fitting ([`calibrate`]),
//! and CSV characterization sweeps ([`characterize`]).

pub mod actuator;
pub mod brake;
pub mod calibrate;
pub mod characterize;
pub mod controller;
pub mod error;
pub mod gripper;
pub mod material;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
