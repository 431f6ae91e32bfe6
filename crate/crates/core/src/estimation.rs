//! Sensor-free hand-force estimation.
//!
//! Each hand uses only its own arm's seven torques:
//! `F = -(J^T)^+ (tau_arm - tau_g,arm)`, with the pseudo-inverse taken through
//! an SVD of the 7 x 3 matrix `J^T`. Singular values at or below
//! `cutoff * sigma_max` are dropped; a positive `damping` switches the kept
//! directions to damped least squares, `sigma / (sigma^2 + damping^2)`.

use nalgebra::{DVector, Matrix3xX, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{self, DynamicsError, JointState};
use crate::model::{ChainModel, Side};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("invalid estimator parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    /// Damping `lambda >= 0`; zero gives the plain pseudo-inverse.
    pub damping: f64,
    /// Relative singular-value cutoff `epsilon > 0`.
    pub cutoff: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            damping: 0.0,
            cutoff: 1e-6,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), EstimationError> {
        if !(self.damping.is_finite() && self.damping >= 0.0) {
            return Err(EstimationError::Parameter(format!("damping {} must be finite and >= 0", self.damping)));
        }
        if !(self.cutoff.is_finite() && self.cutoff > 0.0) {
            return Err(EstimationError::Parameter(format!("cutoff {} must be finite and > 0", self.cutoff)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WrenchEstimate {
    pub side: Side,
    /// Estimated force applied to the hand, world frame (N).
    pub force: Vector3<f64>,
    /// Singular values of `J^T`, descending.
    pub singular_values: Vector3<f64>,
    /// `sigma_max / sigma_min`; infinite when `sigma_min == 0`.
    pub condition_number: f64,
    pub rank: usize,
    /// `|| (tau - tau_g) + J^T F ||` over the arm joints (N·m).
    pub residual_norm: f64,
    /// Set when `sigma_max == 0`.
    pub degenerate: bool,
}

/// Solves `J^T F = -r` in the least-squares sense for one arm.
pub fn solve_arm_force(jac: &Matrix3xX<f64>, residual_torque: &DVector<f64>, cfg: &EstimatorConfig) -> (Vector3<f64>, Vector3<f64>, usize) {
    let jt = jac.transpose();
    let svd = jt.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.max();

    let mut sorted: Vec<f64> = sigma.iter().copied().collect();
    sorted.resize(3, 0.0);
    sorted.sort_by(|a, b| b.total_cmp(a));
    let sv = Vector3::new(sorted[0], sorted[1], sorted[2]);

    if sigma_max <= 0.0 {
        return (Vector3::zeros(), sv, 0);
    }
    let threshold = cfg.cutoff * sigma_max;
    let lambda2 = cfg.damping * cfg.damping;
    let mut force = Vector3::zeros();
    let mut rank = 0;
    for (i, &s) in sigma.iter().enumerate() {
        if s <= threshold {
            continue;
        }
        rank += 1;
        let gain = if lambda2 > 0.0 { s / (s * s + lambda2) } else { 1.0 / s };
        let coeff = u.column(i).dot(residual_torque) * gain;
        force -= v_t.row(i).transpose() * coeff;
    }
    (force, sv, rank)
}

pub fn estimate_hand_force(
    model: &ChainModel,
    state: &JointState,
    side: Side,
    cfg: &EstimatorConfig,
) -> Result<WrenchEstimate, EstimationError> {
    cfg.validate()?;
    state.validate(model)?;
    let kin = dynamics::forward_kinematics(model, &state.q)?;
    let tau_g = dynamics::gravity_torques_from(model, &kin);
    estimate_with(model, &kin, &tau_g, state, side, cfg)
}

/// Both hands, each from its own arm's torques.
pub fn estimate_both(
    model: &ChainModel,
    state: &JointState,
    cfg: &EstimatorConfig,
) -> Result<(WrenchEstimate, WrenchEstimate), EstimationError> {
    cfg.validate()?;
    state.validate(model)?;
    let kin = dynamics::forward_kinematics(model, &state.q)?;
    let tau_g = dynamics::gravity_torques_from(model, &kin);
    Ok((
        estimate_with(model, &kin, &tau_g, state, Side::Left, cfg)?,
        estimate_with(model, &kin, &tau_g, state, Side::Right, cfg)?,
    ))
}

fn estimate_with(
    model: &ChainModel,
    kin: &dynamics::Kinematics,
    tau_g: &DVector<f64>,
    state: &JointState,
    side: Side,
    cfg: &EstimatorConfig,
) -> Result<WrenchEstimate, EstimationError> {
    let jac = dynamics::wrist_jacobian_from(model, kin, side)?;
    let arm = model.subchains.arm(side);
    let r = DVector::from_iterator(arm.len(), arm.iter().map(|&j| state.tau[j] - tau_g[j]));
    let (force, singular_values, rank) = solve_arm_force(&jac, &r, cfg);
    let residual_norm = (&r + jac.transpose() * force).norm();
    let condition_number = if singular_values[2] > 0.0 {
        singular_values[0] / singular_values[2]
    } else {
        f64::INFINITY
    };
    Ok(WrenchEstimate {
        side,
        force,
        singular_values,
        condition_number,
        rank,
        residual_norm,
        degenerate: rank == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::static_torques_with_wrenches;

    fn bent_arm_q(model: &ChainModel) -> Vec<f64> {
        let mut q = vec![0.0; model.dof()];
        // shoulder pitch, roll, yaw, elbow pitch per arm
        for (arm, sign) in [(&model.subchains.left_arm, 1.0), (&model.subchains.right_arm, -1.0)] {
            q[arm[0]] = -0.6;
            q[arm[1]] = 0.3 * sign;
            q[arm[2]] = 0.2 * sign;
            q[arm[3]] = 1.1;
            q[arm[5]] = 0.4;
        }
        q
    }

    #[test]
    fn unloaded_arm_gives_zero_force() {
        let m = ChainModel::bundled();
        let q = bent_arm_q(&m);
        let tau = dynamics::gravity_torques(&m, &q).unwrap();
        let state = JointState::new(q, vec![0.0; m.dof()], tau.as_slice().to_vec());
        let est = estimate_hand_force(&m, &state, Side::Left, &EstimatorConfig::default()).unwrap();
        assert_eq!(est.force, Vector3::zeros());
        assert_eq!(est.residual_norm, 0.0);
        assert_eq!(est.rank, 3);
    }

    #[test]
    fn recovers_static_load() {
        let m = ChainModel::bundled();
        let q = bent_arm_q(&m);
        let f = Vector3::new(5.0, -3.0, 10.0);
        let tau = static_torques_with_wrenches(&m, &q, &f, &Vector3::zeros()).unwrap();
        let state = JointState::new(q, vec![0.0; m.dof()], tau.as_slice().to_vec());
        let est = estimate_hand_force(&m, &state, Side::Left, &EstimatorConfig::default()).unwrap();
        assert!((est.force - f).norm() < 1e-6, "{:?}", est.force);
        assert!(est.singular_values[0] >= est.singular_values[1]);
        assert!(est.singular_values[1] >= est.singular_values[2]);
    }

    #[test]
    fn rejects_bad_parameters() {
        let m = ChainModel::bundled();
        let state = JointState::new(vec![0.0; 27], vec![0.0; 27], vec![0.0; 27]);
        let bad = EstimatorConfig { damping: -1.0, cutoff: 1e-6 };
        assert!(matches!(estimate_hand_force(&m, &state, Side::Left, &bad), Err(EstimationError::Parameter(_))));
        let bad = EstimatorConfig { damping: 0.0, cutoff: 0.0 };
        assert!(estimate_both(&m, &state, &bad).is_err());
        let short = JointState::new(vec![0.0; 3], vec![0.0; 27], vec![0.0; 27]);
        assert!(matches!(
            estimate_hand_force(&m, &short, Side::Left, &EstimatorConfig::default()),
            Err(EstimationError::Dynamics(DynamicsError::DimensionMismatch { .. }))
        ));
    }

    #[test]
    fn zero_jacobian_is_degenerate_not_error() {
        let jac = Matrix3xX::zeros(7);
        let r = DVector::from_element(7, 1.0);
        let (f, sv, rank) = solve_arm_force(&jac, &r, &EstimatorConfig::default());
        assert_eq!(f, Vector3::zeros());
        assert_eq!(sv, Vector3::zeros());
        assert_eq!(rank, 0);
    }
}
