//! Closed-form machinery for force-adaptive humanoid standing.
//!
//! * [`model`]: robot description, canonical joint order, arm presets.
//! * [`dynamics`]: forward kinematics, wrist Jacobians, gravity torques.
//! * [`estimation`]: hand-force estimation from joint torques.
//! * [`sampling`]: curriculum ratio, upper-body targets, hand forces,
//!   domain randomization.
//! * [`curriculum`]: the upper-body action-ratio state machine.
//! * [`reward`]: standing reward terms.
//! * [`policy`]: observations, MLP inference, action scaling, PD law.
//! * [`harness`]: quasi-static force-envelope sweeps and episode driver.

pub mod curriculum;
pub mod dynamics;
pub mod estimation;
pub mod harness;
pub mod model;
pub mod policy;
pub mod reward;
pub mod sampling;
