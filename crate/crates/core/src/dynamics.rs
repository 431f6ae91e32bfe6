//! Forward kinematics, wrist Jacobians and gravity-only inverse dynamics.
//!
//! All quantities are expressed in the world frame with the root link fixed
//! at the origin. Rotations are composed as quaternions and renormalized after
//! every product.
//!
//! Sign convention for external loads: `F` is the force applied *to* the hand
//! by the environment. Holding a pose against gravity and those loads needs
//!
//! ```text
//! tau = tau_g - J_L^T F_L - J_R^T F_R
//! ```
//!
//! so `F = -(J^T)^+ (tau - tau_g)` recovers the applied force with a positive
//! sign. Example: a 1 m massless lever about +x carrying a 10 N downward push
//! at its tip (`F = (0, 0, -10)`, lever along +y) has `J^T F = -10`, so the
//! actuator must supply `tau = +10` N·m.

use nalgebra::{DVector, Isometry3, Matrix3xX, Translation3, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::model::{ChainModel, Side};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("{what}: expected {expected} entries, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what} contains a non-finite value at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("model has no {0}")]
    MissingFrame(String),
}

pub(crate) fn check_vec(what: &'static str, v: &[f64], n: usize) -> Result<(), DynamicsError> {
    if v.len() != n {
        return Err(DynamicsError::DimensionMismatch {
            what,
            expected: n,
            got: v.len(),
        });
    }
    if let Some(index) = v.iter().position(|x| !x.is_finite()) {
        return Err(DynamicsError::NonFinite { what, index });
    }
    Ok(())
}

/// Measured joint positions, velocities and actuator torques.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub tau: Vec<f64>,
}

impl JointState {
    pub fn new(q: Vec<f64>, qd: Vec<f64>, tau: Vec<f64>) -> Self {
        Self { q, qd, tau }
    }

    pub fn validate(&self, model: &ChainModel) -> Result<(), DynamicsError> {
        let n = model.dof();
        check_vec("q", &self.q, n)?;
        check_vec("qd", &self.qd, n)?;
        check_vec("tau", &self.tau, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePose {
    pub position: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl FramePose {
    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            rotation: UnitQuaternion::identity(),
        }
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.position), self.rotation)
    }

    fn compose(&self, rel: &Isometry3<f64>) -> FramePose {
        let mut rotation = self.rotation * rel.rotation;
        rotation.renormalize();
        FramePose {
            position: self.position + self.rotation * rel.translation.vector,
            rotation,
        }
    }

    fn rotate(&self, rot: &UnitQuaternion<f64>) -> FramePose {
        let mut rotation = self.rotation * rot;
        rotation.renormalize();
        FramePose {
            position: self.position,
            rotation,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.rotation * p
    }
}

/// World poses of every link plus per-joint axis data.
#[derive(Debug, Clone)]
pub struct Kinematics {
    /// Indexed like `model.links`.
    pub links: Vec<FramePose>,
    /// World position of each joint frame origin.
    pub joint_origins: Vec<Vector3<f64>>,
    /// World direction of each joint axis.
    pub joint_axes: Vec<Vector3<f64>>,
    /// Wrist end-effector frames, in model declaration order.
    pub wrists: Vec<(Side, FramePose)>,
}

impl Kinematics {
    pub fn wrist(&self, side: Side) -> Option<&FramePose> {
        self.wrists.iter().find(|(s, _)| *s == side).map(|(_, p)| p)
    }

    /// Looks up a frame by link name, or `left_wrist` / `right_wrist`.
    pub fn frame(&self, model: &ChainModel, name: &str) -> Option<FramePose> {
        match name {
            "left_wrist" => self.wrist(Side::Left).copied(),
            "right_wrist" => self.wrist(Side::Right).copied(),
            _ => model.link_index(name).map(|l| self.links[l]),
        }
    }
}

pub fn forward_kinematics(model: &ChainModel, q: &[f64]) -> Result<Kinematics, DynamicsError> {
    check_vec("q", q, model.dof())?;
    let n = model.dof();
    let mut links = vec![FramePose::identity(); model.links.len()];
    let mut joint_origins = vec![Vector3::zeros(); n];
    let mut joint_axes = vec![Vector3::zeros(); n];
    for &j in model.topological_order() {
        let (parent, child) = model.joint_links(j);
        let spec = &model.joints[j];
        let joint_frame = links[parent].compose(&spec.origin);
        joint_origins[j] = joint_frame.position;
        joint_axes[j] = joint_frame.rotation * spec.axis.into_inner();
        links[child] = joint_frame.rotate(&UnitQuaternion::from_axis_angle(&spec.axis, q[j]));
    }
    let wrists = model
        .wrists
        .iter()
        .map(|w| {
            let link = links[w.link];
            (
                w.side,
                FramePose {
                    position: link.transform_point(&w.offset),
                    rotation: link.rotation,
                },
            )
        })
        .collect();
    Ok(Kinematics {
        links,
        joint_origins,
        joint_axes,
        wrists,
    })
}

/// Linear-velocity Jacobian of the wrist origin with respect to the joints of
/// that side's arm sub-chain (3 x 7 for the humanoid profile).
pub fn wrist_jacobian(model: &ChainModel, q: &[f64], side: Side) -> Result<Matrix3xX<f64>, DynamicsError> {
    let kin = forward_kinematics(model, q)?;
    wrist_jacobian_from(model, &kin, side)
}

pub(crate) fn wrist_jacobian_from(
    model: &ChainModel,
    kin: &Kinematics,
    side: Side,
) -> Result<Matrix3xX<f64>, DynamicsError> {
    let wrist = model
        .wrist(side)
        .ok_or_else(|| DynamicsError::MissingFrame(format!("{side} wrist frame")))?;
    let arm = model.subchains.arm(side);
    if arm.is_empty() {
        return Err(DynamicsError::MissingFrame(format!("{side} arm subchain")));
    }
    let p = kin.wrist(side).expect("wrist pose computed").position;
    let mut jac = Matrix3xX::zeros(arm.len());
    for (col, &j) in arm.iter().enumerate() {
        if model.joint_supports_link(j, wrist.link) {
            let v = kin.joint_axes[j].cross(&(p - kin.joint_origins[j]));
            jac.set_column(col, &v);
        }
    }
    Ok(jac)
}

/// Actuator torques that hold `q` at rest against gravity.
///
/// Recursive Newton-Euler with zero joint velocity and acceleration: the
/// forward pass reduces to link poses, the backward pass accumulates each
/// subtree's weight-support force and its moment about the world origin.
pub fn gravity_torques(model: &ChainModel, q: &[f64]) -> Result<DVector<f64>, DynamicsError> {
    let kin = forward_kinematics(model, q)?;
    Ok(gravity_torques_from(model, &kin))
}

pub(crate) fn gravity_torques_from(model: &ChainModel, kin: &Kinematics) -> DVector<f64> {
    let nl = model.links.len();
    let mut force = vec![Vector3::zeros(); nl];
    let mut moment = vec![Vector3::zeros(); nl];
    for (l, link) in model.links.iter().enumerate() {
        let f = -link.mass * model.gravity;
        let c = kin.links[l].transform_point(&link.com);
        force[l] = f;
        moment[l] = c.cross(&f);
    }
    let mut tau = DVector::zeros(model.dof());
    for &j in model.topological_order().iter().rev() {
        let (parent, child) = model.joint_links(j);
        let p = kin.joint_origins[j];
        let about_joint = moment[child] - p.cross(&force[child]);
        tau[j] = kin.joint_axes[j].dot(&about_joint);
        let (f, m) = (force[child], moment[child]);
        force[parent] += f;
        moment[parent] += m;
    }
    tau
}

/// Static equilibrium torques with external forces applied to both hands.
/// Only the arm sub-chain entries receive the `J^T F` contribution.
pub fn static_torques_with_wrenches(
    model: &ChainModel,
    q: &[f64],
    f_left: &Vector3<f64>,
    f_right: &Vector3<f64>,
) -> Result<DVector<f64>, DynamicsError> {
    check_vec("F_L", f_left.as_slice(), 3)?;
    check_vec("F_R", f_right.as_slice(), 3)?;
    let kin = forward_kinematics(model, q)?;
    let mut tau = gravity_torques_from(model, &kin);
    for (side, f) in [(Side::Left, f_left), (Side::Right, f_right)] {
        if model.wrist(side).is_none() || model.subchains.arm(side).is_empty() {
            if f.iter().any(|x| *x != 0.0) {
                return Err(DynamicsError::MissingFrame(format!("{side} wrist frame")));
            }
            continue;
        }
        let jt_f = wrist_jacobian_from(model, &kin, side)?.transpose() * f;
        for (k, &j) in model.subchains.arm(side).iter().enumerate() {
            tau[j] -= jt_f[k];
        }
    }
    Ok(tau)
}

/// Total mass and world centre of mass.
pub fn center_of_mass(model: &ChainModel, kin: &Kinematics) -> (f64, Vector3<f64>) {
    let mut mass = 0.0;
    let mut moment = Vector3::zeros();
    for (l, link) in model.links.iter().enumerate() {
        mass += link.mass;
        moment += link.mass * kin.links[l].transform_point(&link.com);
    }
    if mass > 0.0 {
        (mass, moment / mass)
    } else {
        (0.0, Vector3::zeros())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;

    fn single_joint(axis: &str, com: &str) -> ChainModel {
        ChainModel::from_toml_str(&format!(
            r#"
gravity = [0.0, 0.0, -9.81]
[[links]]
name = "base"
mass = 0.0
com = [0.0, 0.0, 0.0]
inertia = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
[[links]]
name = "arm"
mass = 1.0
com = {com}
inertia = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
[[joints]]
name = "j"
parent = "base"
child = "arm"
axis = {axis}
xyz = [0.1, 0.2, 0.3]
quat = [1.0, 0.0, 0.0, 0.0]
limits = {{ lower = -4.0, upper = 4.0, effort = 10.0, velocity = 5.0 }}
"#
        ))
        .unwrap()
    }

    #[test]
    fn zero_configuration_is_origin_composition() {
        let m = single_joint("[0.0, 0.0, 1.0]", "[0.5, 0.0, 0.0]");
        let kin = forward_kinematics(&m, &[0.0]).unwrap();
        assert_eq!(kin.links[1].position, Vector3::new(0.1, 0.2, 0.3));
        assert_eq!(kin.links[1].rotation, UnitQuaternion::identity());
    }

    #[test]
    fn quarter_turn_about_z() {
        let m = single_joint("[0.0, 0.0, 1.0]", "[0.5, 0.0, 0.0]");
        let kin = forward_kinematics(&m, &[FRAC_PI_2]).unwrap();
        let x = kin.links[1].rotation * Vector3::x();
        assert!((x - Vector3::y()).norm() < 1e-12);
        assert!((kin.links[1].rotation.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn horizontal_pendulum_torque() {
        // axis +x, link along +y: holding torque is m g l_c
        let m = single_joint("[1.0, 0.0, 0.0]", "[0.0, 0.5, 0.0]");
        let tau = gravity_torques(&m, &[0.0]).unwrap();
        assert!((tau[0] - 4.905).abs() < 1e-12, "{}", tau[0]);
    }

    #[test]
    fn dimension_mismatch_reported() {
        let m = single_joint("[1.0, 0.0, 0.0]", "[0.0, 0.5, 0.0]");
        assert!(matches!(
            forward_kinematics(&m, &[0.0, 1.0]),
            Err(DynamicsError::DimensionMismatch { expected: 1, got: 2, .. })
        ));
        assert!(matches!(
            gravity_torques(&m, &[f64::NAN]),
            Err(DynamicsError::NonFinite { .. })
        ));
    }

    #[test]
    fn missing_wrist_is_an_error() {
        let m = single_joint("[1.0, 0.0, 0.0]", "[0.0, 0.5, 0.0]");
        assert!(matches!(wrist_jacobian(&m, &[0.0], Side::Left), Err(DynamicsError::MissingFrame(_))));
    }

    #[test]
    fn bundled_com_is_between_feet() {
        let m = ChainModel::bundled();
        let kin = forward_kinematics(&m, &vec![0.0; m.dof()]).unwrap();
        let (mass, com) = center_of_mass(&m, &kin);
        assert!((mass - m.total_mass()).abs() < 1e-12);
        assert!(com.y.abs() < 1e-12);
    }
}
