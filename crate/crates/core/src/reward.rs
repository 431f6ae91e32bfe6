//! Standing reward.
//!
//! Twenty-eight terms, each reported as `(raw, weight, raw * weight)` and
//! summed in a fixed order. Terms whose closed form is not pinned down by
//! their name use the interpretations below; all thresholds live in
//! [`RewardShaping`] and can be overridden.
//!
//! | term | raw value |
//! |------|-----------|
//! | `feet_lateral_distance` | `clip((d - d_min) / (d_max - d_min), 0, 1)`, `d` = mean lateral foot separation |
//! | `knee_lateral_distance` | same shape on the knee separation |
//! | `feet_parallel` | population variance of the per-point lateral separations |
//! | `feet_ground_parallel` | population variance of the foot heights |
//! | `stand_still` | `1` if the command is zero and `|v_base| > stand_still_speed` |
//! | `knee_deviation` | `|(mean knee angle - 0.5) (h_base - h_cmd)|` |
//! | `feet_slip` | sum over feet in contact of `|v_xy|` |
//! | `contact_momentum` | sum over feet in contact of `min(v_z, 0) (F_z - 50)` |
//! | `no_fly` | `1` if exactly one foot is in contact |
//! | `action_vanish` | mean of `max(|a| - action_bound, 0)^2` |
//!
//! A foot is in contact when `F_z > contact_force`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ChainModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("{field}: expected {expected} entries, got {got}")]
    Dimension {
        field: String,
        expected: usize,
        got: usize,
    },
    #[error("{0} is not finite")]
    NonFinite(String),
    #[error("unknown reward term `{0}`")]
    UnknownTerm(String),
    #[error("invalid reward setting: {0}")]
    Setting(String),
}

macro_rules! terms {
    ($($id:ident => $name:literal, $w:expr;)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Term { $($id),* }

        impl Term {
            pub const ALL: &'static [Term] = &[$(Term::$id),*];

            pub fn name(self) -> &'static str {
                match self { $(Term::$id => $name),* }
            }

            pub fn default_weight(self) -> f64 {
                match self { $(Term::$id => $w),* }
            }
        }
    };
}

terms! {
    HeightTracking => "height_tracking", 3.0;
    LinVelZ => "lin_vel_z", -5.0;
    AngVelXy => "ang_vel_xy", -0.1;
    Orientation => "orientation", -3.0;
    StandStill => "stand_still", -0.8;
    HipDeviation => "hip_deviation", -0.2;
    AnkleDeviation => "ankle_deviation", -0.5;
    KneeDeviation => "knee_deviation", -1.5;
    JointTracking => "joint_tracking", -0.1;
    DofAcc => "dof_acc", -2.5e-5;
    FeetLateralDistance => "feet_lateral_distance", 0.5;
    KneeLateralDistance => "knee_lateral_distance", 1.0;
    FeetParallel => "feet_parallel", -2.5;
    FeetGroundParallel => "feet_ground_parallel", -2.0;
    FeetSlip => "feet_slip", -1.0;
    FeetStumble => "feet_stumble", -1.5;
    FeetContactForces => "feet_contact_forces", -2.5e-4;
    ContactMomentum => "contact_momentum", 2.5e-4;
    NoFly => "no_fly", 0.75;
    ActionRate => "action_rate", -0.02;
    ActionSmoothness => "action_smoothness", -0.1;
    JointPower => "joint_power", -2e-5;
    Torques => "torques", -2.5e-6;
    ActionVanish => "action_vanish", -1.0;
    DofPosLimits => "dof_pos_limits", -2.0;
    DofVel => "dof_vel", -5e-3;
    DofVelLimits => "dof_vel_limits", -2e-3;
    TorqueLimits => "torque_limits", -0.1;
}

impl Term {
    pub fn from_name(name: &str) -> Option<Term> {
        Term::ALL.iter().copied().find(|t| t.name() == name)
    }
}

/// Per-term weights, indexed like [`Term::ALL`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable(Vec<f64>);

impl Default for WeightTable {
    fn default() -> Self {
        Self(Term::ALL.iter().map(|t| t.default_weight()).collect())
    }
}

impl WeightTable {
    pub fn get(&self, term: Term) -> f64 {
        self.0[term as usize]
    }

    pub fn set(&mut self, term: Term, weight: f64) {
        self.0[term as usize] = weight;
    }

    pub fn with_overrides(overrides: &BTreeMap<String, f64>) -> Result<Self, RewardError> {
        let mut table = Self::default();
        for (name, &w) in overrides {
            let term = Term::from_name(name).ok_or_else(|| RewardError::UnknownTerm(name.clone()))?;
            if !w.is_finite() {
                return Err(RewardError::NonFinite(format!("weight `{name}`")));
            }
            table.set(term, w);
        }
        Ok(table)
    }
}

/// Tunables for the terms without a published closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardShaping {
    pub feet_distance_min: f64,
    pub feet_distance_max: f64,
    pub knee_distance_min: f64,
    pub knee_distance_max: f64,
    pub stand_still_speed: f64,
    pub contact_force: f64,
    pub action_bound: f64,
    pub soft_dof_pos_limit: f64,
    pub soft_dof_vel_limit: f64,
    pub soft_torque_limit: f64,
    pub knee_reference: f64,
    pub contact_force_cap: f64,
    pub landing_force_offset: f64,
    pub height_sharpness: f64,
    pub stumble_ratio: f64,
}

impl Default for RewardShaping {
    fn default() -> Self {
        Self {
            feet_distance_min: 0.2,
            feet_distance_max: 0.45,
            knee_distance_min: 0.2,
            knee_distance_max: 0.45,
            stand_still_speed: 0.05,
            contact_force: 5.0,
            action_bound: 1.0,
            soft_dof_pos_limit: 0.975,
            soft_dof_vel_limit: 1.0,
            soft_torque_limit: 0.95,
            knee_reference: 0.5,
            contact_force_cap: 900.0,
            landing_force_offset: 50.0,
            height_sharpness: 4.0,
            stumble_ratio: 3.0,
        }
    }
}

impl RewardShaping {
    pub fn validate(&self) -> Result<(), RewardError> {
        let vals = [
            self.feet_distance_min,
            self.feet_distance_max,
            self.knee_distance_min,
            self.knee_distance_max,
            self.stand_still_speed,
            self.contact_force,
            self.action_bound,
            self.soft_dof_pos_limit,
            self.soft_dof_vel_limit,
            self.soft_torque_limit,
            self.knee_reference,
            self.contact_force_cap,
            self.landing_force_offset,
            self.height_sharpness,
            self.stumble_ratio,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(RewardError::Setting("non-finite shaping value".into()));
        }
        if self.feet_distance_max <= self.feet_distance_min || self.knee_distance_max <= self.knee_distance_min {
            return Err(RewardError::Setting("distance clamp needs max > min".into()));
        }
        Ok(())
    }
}

/// Model-derived data the reward needs: default posture, limits, and the
/// hip / knee / ankle index sets.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardParams {
    pub q_default: Vec<f64>,
    pub q_min: Vec<f64>,
    pub q_max: Vec<f64>,
    pub velocity_limit: Vec<f64>,
    pub torque_limit: Vec<f64>,
    pub hips: Vec<usize>,
    pub knees: Vec<usize>,
    pub ankles: Vec<usize>,
    pub n_actions: usize,
    pub shaping: RewardShaping,
}

impl RewardParams {
    /// Hip, knee and ankle joints are the lower-body joints whose names
    /// contain `hip`, `knee` and `ankle`.
    pub fn from_model(model: &ChainModel, q_default: Vec<f64>, shaping: RewardShaping) -> Result<Self, RewardError> {
        let n = model.dof();
        if q_default.len() != n {
            return Err(RewardError::Dimension {
                field: "q_default".into(),
                expected: n,
                got: q_default.len(),
            });
        }
        shaping.validate()?;
        let pick = |pat: &str| -> Vec<usize> {
            model
                .subchains
                .lower_body
                .iter()
                .copied()
                .filter(|&j| model.joints[j].name.contains(pat))
                .collect()
        };
        Ok(Self {
            q_default,
            q_min: model.joints.iter().map(|j| j.q_min).collect(),
            q_max: model.joints.iter().map(|j| j.q_max).collect(),
            velocity_limit: model.joints.iter().map(|j| j.velocity_limit).collect(),
            torque_limit: model.joints.iter().map(|j| j.torque_limit).collect(),
            hips: pick("hip"),
            knees: pick("knee"),
            ankles: pick("ankle"),
            n_actions: model.subchains.lower_body.len(),
            shaping,
        })
    }

    pub fn dof(&self) -> usize {
        self.q_default.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FootState {
    /// Contact force on the foot (N).
    pub force: [f64; 3],
    /// Sole height above ground (m).
    pub height: f64,
    pub vel_xy: [f64; 2],
    /// Vertical foot velocity (m/s).
    pub vel_z: f64,
    /// Lateral (y) positions of the sole sample points (m), e.g. toe and heel.
    pub lateral: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardInput {
    pub h_base: f64,
    pub h_cmd: f64,
    pub base_lin_vel: [f64; 3],
    pub ang_vel_xy: [f64; 2],
    pub projected_gravity_xy: [f64; 2],
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
    pub q_target: Vec<f64>,
    pub tau: Vec<f64>,
    /// `a_t`, before clipping.
    pub action: Vec<f64>,
    /// `a_{t-1}`
    pub last_action: Vec<f64>,
    /// `a_{t-2}`
    pub last_last_action: Vec<f64>,
    /// Exactly two feet.
    pub feet: Vec<FootState>,
    /// Lateral (y) positions of the two knees (m).
    pub knee_lateral: [f64; 2],
    pub command_is_zero: bool,
}

impl RewardInput {
    /// A motionless robot standing at `h_cmd` in posture `q`.
    pub fn neutral(params: &RewardParams, q: Vec<f64>, h_cmd: f64) -> Self {
        let n = params.dof();
        let foot = |y: f64| FootState {
            force: [0.0, 0.0, 0.0],
            height: 0.0,
            vel_xy: [0.0, 0.0],
            vel_z: 0.0,
            lateral: vec![y, y],
        };
        Self {
            h_base: h_cmd,
            h_cmd,
            base_lin_vel: [0.0; 3],
            ang_vel_xy: [0.0; 2],
            projected_gravity_xy: [0.0; 2],
            q_target: q.clone(),
            q,
            qd: vec![0.0; n],
            qdd: vec![0.0; n],
            tau: vec![0.0; n],
            action: vec![0.0; params.n_actions],
            last_action: vec![0.0; params.n_actions],
            last_last_action: vec![0.0; params.n_actions],
            feet: vec![foot(0.1), foot(-0.1)],
            knee_lateral: [0.1, -0.1],
            command_is_zero: true,
        }
    }

    fn validate(&self, params: &RewardParams) -> Result<(), RewardError> {
        let n = params.dof();
        let joint_vecs: [(&str, &Vec<f64>, usize); 8] = [
            ("q", &self.q, n),
            ("qd", &self.qd, n),
            ("qdd", &self.qdd, n),
            ("q_target", &self.q_target, n),
            ("tau", &self.tau, n),
            ("action", &self.action, params.n_actions),
            ("last_action", &self.last_action, params.n_actions),
            ("last_last_action", &self.last_last_action, params.n_actions),
        ];
        for (field, v, expected) in joint_vecs {
            if v.len() != expected {
                return Err(RewardError::Dimension {
                    field: field.into(),
                    expected,
                    got: v.len(),
                });
            }
            finite(field, v)?;
        }
        finite("h_base", &[self.h_base])?;
        finite("h_cmd", &[self.h_cmd])?;
        finite("base_lin_vel", &self.base_lin_vel)?;
        finite("ang_vel_xy", &self.ang_vel_xy)?;
        finite("projected_gravity_xy", &self.projected_gravity_xy)?;
        finite("knee_lateral", &self.knee_lateral)?;
        if self.feet.len() != 2 {
            return Err(RewardError::Dimension {
                field: "feet".into(),
                expected: 2,
                got: self.feet.len(),
            });
        }
        for (i, f) in self.feet.iter().enumerate() {
            finite(&format!("feet[{i}].force"), &f.force)?;
            finite(&format!("feet[{i}].height"), &[f.height])?;
            finite(&format!("feet[{i}].vel_xy"), &f.vel_xy)?;
            finite(&format!("feet[{i}].vel_z"), &[f.vel_z])?;
            finite(&format!("feet[{i}].lateral"), &f.lateral)?;
        }
        if self.feet[0].lateral.is_empty() || self.feet[0].lateral.len() != self.feet[1].lateral.len() {
            return Err(RewardError::Dimension {
                field: "feet[1].lateral".into(),
                expected: self.feet[0].lateral.len().max(1),
                got: self.feet[1].lateral.len(),
            });
        }
        Ok(())
    }
}

fn finite(field: &str, v: &[f64]) -> Result<(), RewardError> {
    match v.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(i) if v.len() > 1 => Err(RewardError::NonFinite(format!("{field}[{i}]"))),
        Some(_) => Err(RewardError::NonFinite(field.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardTerm {
    pub name: &'static str,
    pub raw: f64,
    pub weight: f64,
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardBreakdown {
    pub terms: Vec<RewardTerm>,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn term(&self, term: Term) -> &RewardTerm {
        &self.terms[term as usize]
    }
}

fn sq_norm(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().map(|x| x * x).sum()
}

fn population_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

fn ramp(d: f64, lo: f64, hi: f64) -> f64 {
    ((d - lo) / (hi - lo)).clamp(0.0, 1.0)
}

fn deviation(q: &[f64], q0: &[f64], idx: &[usize]) -> f64 {
    sq_norm(idx.iter().map(|&j| q[j] - q0[j]))
}

/// Evaluates every term in [`Term::ALL`] order.
pub fn evaluate(input: &RewardInput, params: &RewardParams, weights: &WeightTable) -> Result<RewardBreakdown, RewardError> {
    input.validate(params)?;
    let s = &params.shaping;
    let n = params.dof();
    let in_contact: Vec<bool> = input.feet.iter().map(|f| f.force[2] > s.contact_force).collect();

    let raw = |term: Term| -> f64 {
        match term {
            Term::HeightTracking => (-s.height_sharpness * (input.h_base - input.h_cmd).abs()).exp(),
            Term::LinVelZ => input.base_lin_vel[2] * input.base_lin_vel[2],
            Term::AngVelXy => sq_norm(input.ang_vel_xy),
            Term::Orientation => sq_norm(input.projected_gravity_xy),
            Term::StandStill => {
                let speed = sq_norm(input.base_lin_vel).sqrt();
                f64::from(u8::from(input.command_is_zero && speed > s.stand_still_speed))
            }
            Term::HipDeviation => deviation(&input.q, &params.q_default, &params.hips),
            Term::AnkleDeviation => deviation(&input.q, &params.q_default, &params.ankles),
            Term::KneeDeviation => {
                if params.knees.is_empty() {
                    0.0
                } else {
                    let mean = params.knees.iter().map(|&j| input.q[j]).sum::<f64>() / params.knees.len() as f64;
                    ((mean - s.knee_reference) * (input.h_base - input.h_cmd)).abs()
                }
            }
            Term::JointTracking => sq_norm((0..n).map(|j| input.q_target[j] - input.q[j])),
            Term::DofAcc => sq_norm(input.qdd.iter().copied()),
            Term::FeetLateralDistance => {
                let d = lateral_separations(input);
                let mean = d.iter().sum::<f64>() / d.len() as f64;
                ramp(mean, s.feet_distance_min, s.feet_distance_max)
            }
            Term::KneeLateralDistance => ramp(
                (input.knee_lateral[0] - input.knee_lateral[1]).abs(),
                s.knee_distance_min,
                s.knee_distance_max,
            ),
            Term::FeetParallel => population_variance(&lateral_separations(input)),
            Term::FeetGroundParallel => {
                population_variance(&input.feet.iter().map(|f| f.height).collect::<Vec<_>>())
            }
            Term::FeetSlip => input
                .feet
                .iter()
                .zip(&in_contact)
                .filter(|(_, &c)| c)
                .map(|(f, _)| sq_norm(f.vel_xy).sqrt())
                .sum(),
            Term::FeetStumble => {
                let any = input
                    .feet
                    .iter()
                    .any(|f| (f.force[0].hypot(f.force[1])) > s.stumble_ratio * f.force[2]);
                f64::from(u8::from(any))
            }
            Term::FeetContactForces => input
                .feet
                .iter()
                .map(|f| (sq_norm(f.force).sqrt() - s.contact_force_cap).max(0.0))
                .sum(),
            Term::ContactMomentum => input
                .feet
                .iter()
                .zip(&in_contact)
                .filter(|(_, &c)| c)
                .map(|(f, _)| f.vel_z.min(0.0) * (f.force[2] - s.landing_force_offset))
                .sum(),
            Term::NoFly => f64::from(u8::from(in_contact.iter().filter(|&&c| c).count() == 1)),
            Term::ActionRate => sq_norm(input.action.iter().zip(&input.last_action).map(|(a, b)| a - b)),
            Term::ActionSmoothness => sq_norm(
                input
                    .action
                    .iter()
                    .zip(&input.last_action)
                    .zip(&input.last_last_action)
                    .map(|((a, b), c)| a - 2.0 * b + c),
            ),
            Term::JointPower => input.qd.iter().zip(&input.tau).map(|(v, t)| (v * t).abs()).sum(),
            Term::Torques => sq_norm(input.tau.iter().copied()),
            Term::ActionVanish => {
                let excess = sq_norm(input.action.iter().map(|a| (a.abs() - s.action_bound).max(0.0)));
                excess / params.n_actions.max(1) as f64
            }
            Term::DofPosLimits => (0..n)
                .map(|j| {
                    let mid = 0.5 * (params.q_min[j] + params.q_max[j]);
                    let half = 0.5 * (params.q_max[j] - params.q_min[j]) * s.soft_dof_pos_limit;
                    let (lo, hi) = (mid - half, mid + half);
                    (lo - input.q[j]).max(0.0) + (input.q[j] - hi).max(0.0)
                })
                .sum(),
            Term::DofVel => sq_norm(input.qd.iter().copied()),
            Term::DofVelLimits => (0..n)
                .map(|j| (input.qd[j].abs() - params.velocity_limit[j] * s.soft_dof_vel_limit).max(0.0))
                .sum(),
            Term::TorqueLimits => (0..n)
                .map(|j| (input.tau[j].abs() - params.torque_limit[j] * s.soft_torque_limit).max(0.0))
                .sum(),
        }
    };

    let mut terms = Vec::with_capacity(Term::ALL.len());
    let mut total = 0.0;
    for &term in Term::ALL {
        let r = raw(term);
        let w = weights.get(term);
        let weighted = r * w;
        total += weighted;
        terms.push(RewardTerm {
            name: term.name(),
            raw: r,
            weight: w,
            weighted,
        });
    }
    Ok(RewardBreakdown { terms, total })
}

fn lateral_separations(input: &RewardInput) -> Vec<f64> {
    input.feet[0]
        .lateral
        .iter()
        .zip(&input.feet[1].lateral)
        .map(|(a, b)| (a - b).abs())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> RewardParams {
        let m = ChainModel::bundled();
        RewardParams::from_model(&m, vec![0.0; m.dof()], RewardShaping::default()).unwrap()
    }

    #[test]
    fn index_sets_from_names() {
        let p = params();
        assert_eq!(p.hips.len(), 6);
        assert_eq!(p.knees.len(), 2);
        assert_eq!(p.ankles.len(), 4);
        assert_eq!(p.n_actions, 12);
    }

    #[test]
    fn weights_match_table() {
        let w = WeightTable::default();
        assert_eq!(Term::ALL.len(), 28);
        assert_eq!(w.get(Term::HeightTracking), 3.0);
        assert_eq!(w.get(Term::DofAcc), -2.5e-5);
        assert_eq!(w.get(Term::ContactMomentum), 2.5e-4);
        assert_eq!(w.get(Term::TorqueLimits), -0.1);
    }

    #[test]
    fn height_term_at_target() {
        let p = params();
        let input = RewardInput::neutral(&p, vec![0.0; 27], 1.0);
        let b = evaluate(&input, &p, &WeightTable::default()).unwrap();
        assert_eq!(b.term(Term::HeightTracking).weighted, 3.0);
        for t in &b.terms {
            assert!(t.weighted >= 0.0, "{} = {}", t.name, t.weighted);
        }
    }

    #[test]
    fn height_term_offset() {
        let p = params();
        let mut input = RewardInput::neutral(&p, vec![0.0; 27], 1.0);
        input.h_base = 0.9;
        let b = evaluate(&input, &p, &WeightTable::default()).unwrap();
        let t = b.term(Term::HeightTracking);
        assert!((t.raw - 0.670_320_046_035_639).abs() < 1e-12);
        assert!((t.weighted - 2.010_960_138_106_918).abs() < 1e-12);
    }

    #[test]
    fn stumble_fires() {
        let p = params();
        let mut input = RewardInput::neutral(&p, vec![0.0; 27], 1.0);
        input.feet[0].force = [100.0, 0.0, 20.0];
        let b = evaluate(&input, &p, &WeightTable::default()).unwrap();
        assert_eq!(b.term(Term::FeetStumble).weighted, -1.5);
    }

    #[test]
    fn nan_names_field() {
        let p = params();
        let mut input = RewardInput::neutral(&p, vec![0.0; 27], 1.0);
        input.qd[3] = f64::NAN;
        let err = evaluate(&input, &p, &WeightTable::default()).unwrap_err();
        assert_eq!(err, RewardError::NonFinite("qd[3]".into()));
        let mut input = RewardInput::neutral(&p, vec![0.0; 27], 1.0);
        input.feet[1].vel_z = f64::INFINITY;
        let err = evaluate(&input, &p, &WeightTable::default()).unwrap_err();
        assert_eq!(err, RewardError::NonFinite("feet[1].vel_z".into()));
    }

    #[test]
    fn wrong_dimension() {
        let p = params();
        let mut input = RewardInput::neutral(&p, vec![0.0; 27], 1.0);
        input.action.pop();
        assert!(matches!(evaluate(&input, &p, &WeightTable::default()), Err(RewardError::Dimension { .. })));
    }

    #[test]
    fn overrides() {
        let mut o = BTreeMap::new();
        o.insert("no_fly".to_string(), 0.0);
        let w = WeightTable::with_overrides(&o).unwrap();
        assert_eq!(w.get(Term::NoFly), 0.0);
        o.insert("bogus".to_string(), 1.0);
        assert_eq!(WeightTable::with_overrides(&o), Err(RewardError::UnknownTerm("bogus".into())));
    }
}
