//! Stochastic generators used during training-style rollouts.
//!
//! Every sampler draws through [`RandomSource`], so tests can script exact
//! uniform and normal values. [`RngStream`] is the production source: a
//! ChaCha8 generator keyed by `(seed, stream_id)`. Uniforms are the 53-bit
//! `[0, 1)` values produced by `rand`; normals use the cosine branch of the
//! Box-Muller transform on two consecutive uniforms, `sqrt(-2 ln(1 - u1)) *
//! cos(2 pi u2)`. Both are pure integer/IEEE arithmetic and reproduce across
//! platforms.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ChainModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange { name: String, value: f64, lo: f64, hi: f64 },
    #[error("joint `{joint}`: default position {value} outside [{lo}, {hi}]")]
    DefaultOutsideLimits { joint: String, value: f64, lo: f64, hi: f64 },
    #[error("expected {expected} upper-body entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid interval for {0}")]
    Interval(String),
}

pub trait RandomSource {
    /// Uniform on `[0, 1)`.
    fn uniform(&mut self) -> f64;
    /// Standard normal.
    fn normal(&mut self) -> f64;

    fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// Seeded, independently keyed random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RandomSource for RngStream {
    fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }
}

/// Replays fixed values; panics when a queue runs dry.
#[derive(Debug, Clone, Default)]
pub struct ScriptedSource {
    uniforms: VecDeque<f64>,
    normals: VecDeque<f64>,
}

impl ScriptedSource {
    pub fn new(uniforms: impl IntoIterator<Item = f64>, normals: impl IntoIterator<Item = f64>) -> Self {
        Self {
            uniforms: uniforms.into_iter().collect(),
            normals: normals.into_iter().collect(),
        }
    }

    pub fn uniforms(values: impl IntoIterator<Item = f64>) -> Self {
        Self::new(values, [])
    }
}

impl RandomSource for ScriptedSource {
    fn uniform(&mut self) -> f64 {
        self.uniforms.pop_front().expect("scripted uniform queue exhausted")
    }

    fn normal(&mut self) -> f64 {
        self.normals.pop_front().expect("scripted normal queue exhausted")
    }
}

/// Curriculum sharpness used in training.
pub const DEFAULT_KAPPA: f64 = 20.0;

const RATIO_CLAMP_SLACK: f64 = 1e-9;

/// Maps a uniform `u` to the curriculum-scaled ratio.
///
/// `rho' = -ln(1 - u (1 - exp(-c))) / c` with `c = kappa (1 - rho_a)`,
/// evaluated with `ln_1p`/`exp_m1` so it stays accurate as `c -> 0`. At
/// `rho_a = 1` the removable singularity is replaced by its limit, `u`.
pub fn ratio_from_uniform(rho_a: f64, kappa: f64, u: f64) -> f64 {
    let c = kappa * (1.0 - rho_a);
    if c <= 0.0 {
        return u;
    }
    let x = -(u * (-c).exp_m1()).ln_1p() / c;
    x.clamp(0.0, 1.0)
}

fn checked_rho(rho_a: f64) -> Result<f64, SamplingError> {
    if !rho_a.is_finite() || rho_a < -RATIO_CLAMP_SLACK || rho_a > 1.0 + RATIO_CLAMP_SLACK {
        return Err(SamplingError::OutOfRange {
            name: "rho_a".into(),
            value: rho_a,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if !(0.0..=1.0).contains(&rho_a) {
        log::warn!("rho_a = {rho_a} clamped into [0, 1]");
    }
    Ok(rho_a.clamp(0.0, 1.0))
}

/// Draws the auxiliary ratio `rho_a'` in `[0, 1]`.
pub fn sample_ratio(rho_a: f64, kappa: f64, src: &mut impl RandomSource) -> Result<f64, SamplingError> {
    let rho_a = checked_rho(rho_a)?;
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(SamplingError::OutOfRange {
            name: "kappa".into(),
            value: kappa,
            lo: f64::MIN_POSITIVE,
            hi: f64::INFINITY,
        });
    }
    Ok(ratio_from_uniform(rho_a, kappa, src.uniform()))
}

/// Samples one upper-body target per joint around `q0_ub`.
///
/// Per joint: `a ~ U(0, rho')`, then the target is uniform on
/// `[q0 - a (q0 - q_min), q0 + a (q_max - q0)]`. Draw order is, for each
/// joint in turn, the spread `a` then the position.
pub fn sample_ub_targets(
    model: &ChainModel,
    q0_ub: &[f64],
    rho_prime: f64,
    src: &mut impl RandomSource,
) -> Result<Vec<f64>, SamplingError> {
    let ub = &model.subchains.upper_body;
    if q0_ub.len() != ub.len() {
        return Err(SamplingError::Dimension {
            expected: ub.len(),
            got: q0_ub.len(),
        });
    }
    if !(0.0..=1.0).contains(&rho_prime) {
        return Err(SamplingError::OutOfRange {
            name: "rho_a_prime".into(),
            value: rho_prime,
            lo: 0.0,
            hi: 1.0,
        });
    }
    for (&j, &q0) in ub.iter().zip(q0_ub) {
        let spec = &model.joints[j];
        if !q0.is_finite() || !spec.contains(q0) {
            return Err(SamplingError::DefaultOutsideLimits {
                joint: spec.name.clone(),
                value: q0,
                lo: spec.q_min,
                hi: spec.q_max,
            });
        }
    }
    Ok(ub
        .iter()
        .zip(q0_ub)
        .map(|(&j, &q0)| {
            let spec = &model.joints[j];
            let a = rho_prime * src.uniform();
            let lo = q0 - a * (q0 - spec.q_min);
            let hi = q0 + a * (spec.q_max - q0);
            src.uniform_in(lo, hi).clamp(spec.q_min, spec.q_max)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForceSampleConfig {
    pub r_min: f64,
    pub r_max: f64,
}

impl ForceSampleConfig {
    pub fn new(r_min: f64, r_max: f64) -> Result<Self, SamplingError> {
        let cfg = Self { r_min, r_max };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        if self.r_min.is_finite() && self.r_max.is_finite() && 0.0 <= self.r_min && self.r_min <= self.r_max {
            Ok(())
        } else {
            Err(SamplingError::Interval(format!("force magnitude [{}, {}]", self.r_min, self.r_max)))
        }
    }
}

impl Default for ForceSampleConfig {
    fn default() -> Self {
        Self { r_min: 0.0, r_max: 30.0 }
    }
}

/// Isotropic hand force: normalized Gaussian direction times a uniform
/// magnitude. Draws three normals (redrawn while `|z| < 1e-12`) then one
/// uniform.
pub fn sample_hand_force(cfg: &ForceSampleConfig, src: &mut impl RandomSource) -> Vector3<f64> {
    let dir = loop {
        let z = Vector3::new(src.normal(), src.normal(), src.normal());
        let n = z.norm();
        if n >= 1e-12 {
            break z / n;
        }
    };
    dir * src.uniform_in(cfg.r_min, cfg.r_max)
}

/// Closed interval `[lo, hi]`, written as a two-element array in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval(pub f64, pub f64);

impl Interval {
    pub fn lo(&self) -> f64 {
        self.0
    }

    pub fn hi(&self) -> f64 {
        self.1
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.0 && x <= self.1
    }

    fn draw(&self, src: &mut impl RandomSource) -> f64 {
        src.uniform_in(self.0, self.1)
    }
}

/// Randomization intervals. Defaults are the published training ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainRandRanges {
    pub push_interval_s: f64,
    pub push_velocity_xy: Interval,
    pub joint_injection_noise: Interval,
    pub actuation_offset: Interval,
    /// No delay distribution is published; only the on/off switch.
    pub control_delay: bool,
    pub payload_mass: Interval,
    /// Disabled in training; kept so the schema is complete.
    pub hand_payload_mass: f64,
    pub body_displacement: Interval,
    pub link_mass_scale: Interval,
    pub friction: Interval,
    pub restitution: Interval,
    pub kp_scale: Interval,
    pub kd_scale: Interval,
    pub initial_q_scale: Interval,
    pub initial_q_offset: Interval,
}

impl Default for DomainRandRanges {
    fn default() -> Self {
        Self {
            push_interval_s: 4.0,
            push_velocity_xy: Interval(0.0, 0.5),
            joint_injection_noise: Interval(-0.05, 0.05),
            actuation_offset: Interval(-0.05, 0.05),
            control_delay: true,
            payload_mass: Interval(-3.0, 5.0),
            hand_payload_mass: 0.0,
            body_displacement: Interval(-0.1, 0.1),
            link_mass_scale: Interval(0.8, 1.2),
            friction: Interval(0.1, 3.0),
            restitution: Interval(0.0, 1.0),
            kp_scale: Interval(0.9, 1.1),
            kd_scale: Interval(0.9, 1.1),
            initial_q_scale: Interval(0.8, 1.2),
            initial_q_offset: Interval(-0.1, 0.1),
        }
    }
}

impl DomainRandRanges {
    pub fn validate(&self) -> Result<(), SamplingError> {
        let named = [
            ("push_velocity_xy", self.push_velocity_xy),
            ("joint_injection_noise", self.joint_injection_noise),
            ("actuation_offset", self.actuation_offset),
            ("payload_mass", self.payload_mass),
            ("body_displacement", self.body_displacement),
            ("link_mass_scale", self.link_mass_scale),
            ("friction", self.friction),
            ("restitution", self.restitution),
            ("kp_scale", self.kp_scale),
            ("kd_scale", self.kd_scale),
            ("initial_q_scale", self.initial_q_scale),
            ("initial_q_offset", self.initial_q_offset),
        ];
        for (name, iv) in named {
            if !(iv.0.is_finite() && iv.1.is_finite() && iv.0 <= iv.1) {
                return Err(SamplingError::Interval(name.into()));
            }
        }
        if !(self.push_interval_s.is_finite() && self.push_interval_s > 0.0) {
            return Err(SamplingError::Interval("push_interval_s".into()));
        }
        if !self.hand_payload_mass.is_finite() {
            return Err(SamplingError::Interval("hand_payload_mass".into()));
        }
        Ok(())
    }
}

/// One draw of every randomized quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainRandDraw {
    pub push_interval_s: f64,
    pub push_velocity_xy: [f64; 2],
    /// One entry per joint.
    pub joint_injection_noise: Vec<f64>,
    /// One entry per action.
    pub actuation_offset: Vec<f64>,
    pub control_delay: bool,
    pub payload_mass: f64,
    pub hand_payload_mass: f64,
    pub body_displacement: [f64; 3],
    pub link_mass_scale: f64,
    pub friction: f64,
    pub restitution: f64,
    pub kp_scale: f64,
    pub kd_scale: f64,
    pub initial_q_scale: f64,
    /// One entry per joint.
    pub initial_q_offset: Vec<f64>,
}

/// Draws fields in declaration order.
pub fn sample_domain_randomization(
    ranges: &DomainRandRanges,
    n_joints: usize,
    n_actions: usize,
    src: &mut impl RandomSource,
) -> DomainRandDraw {
    let push_velocity_xy = [ranges.push_velocity_xy.draw(src), ranges.push_velocity_xy.draw(src)];
    let joint_injection_noise = (0..n_joints).map(|_| ranges.joint_injection_noise.draw(src)).collect();
    let actuation_offset = (0..n_actions).map(|_| ranges.actuation_offset.draw(src)).collect();
    let payload_mass = ranges.payload_mass.draw(src);
    let body_displacement = [
        ranges.body_displacement.draw(src),
        ranges.body_displacement.draw(src),
        ranges.body_displacement.draw(src),
    ];
    let link_mass_scale = ranges.link_mass_scale.draw(src);
    let friction = ranges.friction.draw(src);
    let restitution = ranges.restitution.draw(src);
    let kp_scale = ranges.kp_scale.draw(src);
    let kd_scale = ranges.kd_scale.draw(src);
    let initial_q_scale = ranges.initial_q_scale.draw(src);
    let initial_q_offset = (0..n_joints).map(|_| ranges.initial_q_offset.draw(src)).collect();
    DomainRandDraw {
        push_interval_s: ranges.push_interval_s,
        push_velocity_xy,
        joint_injection_noise,
        actuation_offset,
        control_delay: ranges.control_delay,
        payload_mass,
        hand_payload_mass: ranges.hand_payload_mass,
        body_displacement,
        link_mass_scale,
        friction,
        restitution,
        kp_scale,
        kd_scale,
        initial_q_scale,
        initial_q_offset,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_at_zero_uniform_is_zero() {
        for rho in [0.0, 0.3, 0.99, 1.0] {
            let mut src = ScriptedSource::uniforms([0.0]);
            assert_eq!(sample_ratio(rho, 20.0, &mut src).unwrap(), 0.0);
        }
    }

    #[test]
    fn ratio_half_at_rho_zero() {
        // -ln(0.5 + 0.5 e^-20) / 20, evaluated in extended precision offline
        let mut src = ScriptedSource::uniforms([0.5]);
        let x = sample_ratio(0.0, 20.0, &mut src).unwrap();
        assert!((x - 0.034_657_358_925).abs() < 1e-9, "{x}");
    }

    #[test]
    fn ratio_uniform_limit() {
        let mut src = ScriptedSource::uniforms([0.7]);
        assert_eq!(sample_ratio(1.0, 20.0, &mut src).unwrap(), 0.7);
        let near = ratio_from_uniform(1.0 - 1e-8, 20.0, 0.7);
        assert!((near - 0.7).abs() < 1e-6, "{near}");
    }

    #[test]
    fn ratio_rejects_out_of_range() {
        let mut src = ScriptedSource::uniforms([0.5, 0.5]);
        assert!(sample_ratio(1.0 + 1e-12, 20.0, &mut src).is_ok());
        assert!(sample_ratio(1.1, 20.0, &mut src).is_err());
        assert!(sample_ratio(0.5, 0.0, &mut src).is_err());
    }

    #[test]
    fn hand_force_axis_aligned() {
        let cfg = ForceSampleConfig::new(0.0, 10.0).unwrap();
        let mut src = ScriptedSource::new([0.7], [1.0, 0.0, 0.0]);
        assert_eq!(sample_hand_force(&cfg, &mut src), Vector3::new(7.0, 0.0, 0.0));
    }

    #[test]
    fn hand_force_redraws_tiny_direction() {
        let cfg = ForceSampleConfig::new(2.0, 2.0).unwrap();
        let mut src = ScriptedSource::new([0.3], [0.0, 0.0, 0.0, 0.0, -3.0, 0.0]);
        assert_eq!(sample_hand_force(&cfg, &mut src), Vector3::new(0.0, -2.0, 0.0));
    }

    #[test]
    fn targets_zero_ratio_return_default() {
        let m = ChainModel::bundled();
        let q0 = crate::model::ArmConfig::C2.q_ub();
        let mut src = RngStream::new(3, 0);
        let t = sample_ub_targets(&m, &q0, 0.0, &mut src).unwrap();
        assert_eq!(t, q0.to_vec());
    }

    #[test]
    fn targets_full_spread_reaches_limits() {
        let m = ChainModel::bundled();
        let q0 = [0.0; 15];
        // a = 1 for every joint, then position u = 0 (lower) or ~1 (upper)
        let lows = ScriptedSource::uniforms((0..15).flat_map(|_| [1.0, 0.0]));
        let t = sample_ub_targets(&m, &q0, 1.0, &mut { lows }).unwrap();
        for (k, &j) in m.subchains.upper_body.iter().enumerate() {
            assert_eq!(t[k], m.joints[j].q_min);
        }
        let mut highs = ScriptedSource::uniforms((0..15).flat_map(|_| [1.0, 1.0]));
        let t = sample_ub_targets(&m, &q0, 1.0, &mut highs).unwrap();
        for (k, &j) in m.subchains.upper_body.iter().enumerate() {
            assert!((t[k] - m.joints[j].q_max).abs() < 1e-12);
        }
    }

    #[test]
    fn targets_reject_default_outside_limits() {
        let m = ChainModel::bundled();
        let mut q0 = [0.0; 15];
        q0[4] = 10.0;
        let err = sample_ub_targets(&m, &q0, 0.5, &mut RngStream::new(0, 0)).unwrap_err();
        assert!(err.to_string().contains("left_elbow_pitch"), "{err}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = {
            let mut s = RngStream::new(11, 2);
            (0..8).map(|_| s.uniform()).collect()
        };
        let b: Vec<f64> = {
            let mut s = RngStream::new(11, 2);
            (0..8).map(|_| s.uniform()).collect()
        };
        let c: Vec<f64> = {
            let mut s = RngStream::new(11, 3);
            (0..8).map(|_| s.uniform()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn domain_rand_reproducible() {
        let r = DomainRandRanges::default();
        let d1 = sample_domain_randomization(&r, 27, 12, &mut RngStream::new(5, 1));
        let d2 = sample_domain_randomization(&r, 27, 12, &mut RngStream::new(5, 1));
        assert_eq!(d1, d2);
        assert_eq!(d1.hand_payload_mass, 0.0);
        assert_eq!(d1.joint_injection_noise.len(), 27);
        assert_eq!(d1.actuation_offset.len(), 12);
    }
}
