//! Desk-scale evaluation: a quasi-static force-envelope sweep and a
//! closed-loop episode driver.
//!
//! The sweep asks, for each upper-body preset, commanded height and hand
//! force, whether the centre of pressure of gravity plus the hand loads
//! falls strictly inside the support polygon. The episode driver runs the
//! observation, encoder, policy and PD pipeline against a pluggable
//! [`Plant`]. The bundled [`KinematicPlant`] is not a physics simulator: it
//! low-passes joint targets and keeps the pelvis upright over flat feet.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curriculum::{CurriculumConfig, CurriculumError, CurriculumState};
use crate::dynamics::{self, DynamicsError, JointState, Kinematics};
use crate::estimation::{self, EstimationError, EstimatorConfig};
use crate::model::{ArmConfig, ChainModel, Side};
use crate::policy::{self, ControlConfig, ObsScales, ObservationFrame, PolicyError, WeightBundle, LATENT_DIM};
use crate::reward::{self, FootState, RewardError, RewardInput, RewardParams, RewardShaping, Term, WeightTable};
use crate::sampling::{self, ForceSampleConfig, RandomSource, RngStream, SamplingError, DEFAULT_KAPPA};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Curriculum(#[from] CurriculumError),
    #[error("degenerate support polygon: {0}")]
    DegeneratePolygon(String),
    #[error("commanded height {h_cmd} m outside the reachable range [{lo}, {hi}] m")]
    Unreachable { h_cmd: f64, lo: f64, hi: f64 },
    #[error("model has no joint matching `{0}` in its lower body")]
    MissingJoint(String),
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error("non-finite value in stage `{stage}` at step {step}")]
    NonFinite { stage: &'static str, step: usize },
}

/// Convex polygon in the ground plane, counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPolygon {
    vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0);
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    d[0].hypot(d[1])
}

impl SupportPolygon {
    /// Accepts either orientation; rejects fewer than three vertices, zero
    /// area and non-convex outlines.
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Result<Self, HarnessError> {
        if vertices.len() < 3 {
            return Err(HarnessError::DegeneratePolygon(format!("{} vertices", vertices.len())));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(HarnessError::DegeneratePolygon("non-finite vertex".into()));
        }
        let n = vertices.len();
        let area2: f64 = (0..n)
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum();
        if area2.abs() < 1e-12 {
            return Err(HarnessError::DegeneratePolygon("zero area".into()));
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        for i in 0..n {
            if cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]) < -1e-12 {
                return Err(HarnessError::DegeneratePolygon("outline is not convex".into()));
            }
        }
        Ok(Self { vertices })
    }

    pub fn rectangle(x: [f64; 2], y: [f64; 2]) -> Result<Self, HarnessError> {
        Self::new(vec![[x[0], y[0]], [x[1], y[0]], [x[1], y[1]], [x[0], y[1]]])
    }

    /// Rectangle spanning both soles: one sole length along x, centred on
    /// the mean sole position, and from the outer edge of the right sole to
    /// the outer edge of the left.
    pub fn from_feet(model: &ChainModel, kin: &Kinematics) -> Result<Self, HarnessError> {
        let mut xs = Vec::new();
        let mut y_lo = f64::INFINITY;
        let mut y_hi = f64::NEG_INFINITY;
        let mut length: f64 = 0.0;
        for side in Side::BOTH {
            let foot = model
                .foot(side)
                .ok_or_else(|| DynamicsError::MissingFrame(format!("{side} foot frame")))?;
            let p = kin.links[foot.link].transform_point(&foot.sole);
            xs.push(p.x);
            y_lo = y_lo.min(p.y - foot.width / 2.0);
            y_hi = y_hi.max(p.y + foot.width / 2.0);
            length = length.max(foot.length);
        }
        let cx = xs.iter().sum::<f64>() / xs.len() as f64;
        Self::rectangle([cx - length / 2.0, cx + length / 2.0], [y_lo, y_hi])
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.vertices.len() as f64;
        let s = self.vertices.iter().fold([0.0, 0.0], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
        [s[0] / n, s[1] / n]
    }

    /// Homothety about the vertex centroid.
    pub fn scaled(&self, factor: f64) -> Result<Self, HarnessError> {
        let c = self.centroid();
        Self::new(
            self.vertices
                .iter()
                .map(|v| [c[0] + factor * (v[0] - c[0]), c[1] + factor * (v[1] - c[1])])
                .collect(),
        )
    }

    /// Positive inside, negative outside, zero on the boundary.
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        let n = self.vertices.len();
        let mut inside = true;
        let mut d = f64::INFINITY;
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            if cross(a, b, p) < 0.0 {
                inside = false;
            }
            d = d.min(segment_distance(p, a, b));
        }
        if inside {
            d
        } else {
            -d
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Feasibility {
    pub success: bool,
    /// Signed distance of the centre of pressure to the polygon edge (m).
    pub margin: f64,
    pub cop: [f64; 2],
    /// Net ground normal force (N).
    pub normal_force: f64,
}

/// Lowest sole height in the world frame.
pub fn ground_height(model: &ChainModel, kin: &Kinematics) -> Result<f64, HarnessError> {
    let mut z = f64::INFINITY;
    for side in Side::BOTH {
        let foot = model
            .foot(side)
            .ok_or_else(|| DynamicsError::MissingFrame(format!("{side} foot frame")))?;
        z = z.min(kin.links[foot.link].transform_point(&foot.sole).z);
    }
    Ok(z)
}

/// Centre-of-pressure test for the robot held in posture `q` with forces
/// `f_left`, `f_right` applied at the wrists.
///
/// With external force `F` and moment `M` (about the world origin) from
/// gravity and hand loads, the ground reaction is `R = -F` and its centre
/// of pressure on the plane `z = z0` is
/// `p_x = (M_y + z0 R_x) / R_z`, `p_y = (-M_x + z0 R_y) / R_z`.
/// A non-positive normal force is a failure with margin `-inf`.
pub fn quasi_static_feasible(
    model: &ChainModel,
    q: &[f64],
    f_left: &Vector3<f64>,
    f_right: &Vector3<f64>,
    polygon: &SupportPolygon,
) -> Result<Feasibility, HarnessError> {
    let kin = dynamics::forward_kinematics(model, q)?;
    feasible_with(model, &kin, f_left, f_right, polygon)
}

fn feasible_with(
    model: &ChainModel,
    kin: &Kinematics,
    f_left: &Vector3<f64>,
    f_right: &Vector3<f64>,
    polygon: &SupportPolygon,
) -> Result<Feasibility, HarnessError> {
    let z0 = ground_height(model, kin)?;
    let mut force = Vector3::zeros();
    let mut moment = Vector3::zeros();
    for (l, link) in model.links.iter().enumerate() {
        let f = link.mass * model.gravity;
        let r = kin.links[l].transform_point(&link.com);
        force += f;
        moment += r.cross(&f);
    }
    for (side, f) in [(Side::Left, f_left), (Side::Right, f_right)] {
        let r = kin
            .wrist(side)
            .ok_or_else(|| DynamicsError::MissingFrame(format!("{side} wrist frame")))?
            .position;
        force += f;
        moment += r.cross(f);
    }
    let reaction = -force;
    if reaction.z <= 0.0 {
        return Ok(Feasibility {
            success: false,
            margin: f64::NEG_INFINITY,
            cop: [f64::NAN, f64::NAN],
            normal_force: reaction.z,
        });
    }
    let cop = [
        (moment.y + z0 * reaction.x) / reaction.z,
        (-moment.x + z0 * reaction.y) / reaction.z,
    ];
    let margin = polygon.signed_distance(cop);
    Ok(Feasibility {
        success: margin > 0.0,
        margin,
        cop,
        normal_force: reaction.z,
    })
}

struct LegJoints {
    hip_pitch: Vec<usize>,
    knee: Vec<usize>,
    ankle_pitch: Vec<usize>,
}

impl LegJoints {
    fn find(model: &ChainModel) -> Result<Self, HarnessError> {
        let pick = |pat: &str| -> Result<Vec<usize>, HarnessError> {
            let v: Vec<usize> = model
                .subchains
                .lower_body
                .iter()
                .copied()
                .filter(|&j| model.joints[j].name.contains(pat))
                .collect();
            if v.is_empty() {
                Err(HarnessError::MissingJoint(pat.to_string()))
            } else {
                Ok(v)
            }
        };
        Ok(Self {
            hip_pitch: pick("hip_pitch")?,
            knee: pick("knee")?,
            ankle_pitch: pick("ankle_pitch")?,
        })
    }

    /// Largest crouch angle allowed by the joint limits.
    fn theta_max(&self, model: &ChainModel) -> f64 {
        let mut t = f64::INFINITY;
        for &j in self.hip_pitch.iter().chain(&self.ankle_pitch) {
            t = t.min(-model.joints[j].q_min);
        }
        for &j in &self.knee {
            t = t.min(model.joints[j].q_max / 2.0);
        }
        t.clamp(0.0, std::f64::consts::FRAC_PI_2)
    }

    fn apply(&self, q: &mut [f64], theta: f64) {
        for &j in &self.hip_pitch {
            q[j] = -theta;
        }
        for &j in &self.knee {
            q[j] = 2.0 * theta;
        }
        for &j in &self.ankle_pitch {
            q[j] = -theta;
        }
    }
}

/// Pelvis height above the lowest sole.
pub fn base_height(model: &ChainModel, kin: &Kinematics) -> Result<f64, HarnessError> {
    let root = kin.links[model.root_link()].position.z;
    Ok(root - ground_height(model, kin)?)
}

/// Symmetric crouch reaching `h_cmd`: hip pitch `-theta`, knee `2 theta`,
/// ankle pitch `-theta` on both legs, which keeps the soles level. Upper
/// body joints take `q_ub`; every other joint is zero.
pub fn stance_posture(model: &ChainModel, q_ub: &[f64], h_cmd: f64) -> Result<Vec<f64>, HarnessError> {
    let ub = &model.subchains.upper_body;
    if q_ub.len() != ub.len() {
        return Err(SamplingError::Dimension {
            expected: ub.len(),
            got: q_ub.len(),
        }
        .into());
    }
    let legs = LegJoints::find(model)?;
    let mut q = vec![0.0; model.dof()];
    for (&j, &v) in ub.iter().zip(q_ub) {
        q[j] = v;
    }
    let mut height = |theta: f64| -> Result<f64, HarnessError> {
        legs.apply(&mut q, theta);
        base_height(model, &dynamics::forward_kinematics(model, &q)?)
    };
    let (mut lo, mut hi) = (0.0, legs.theta_max(model));
    let (h_top, h_bottom) = (height(lo)?, height(hi)?);
    let tol = 1e-9;
    if !h_cmd.is_finite() || h_cmd > h_top + tol || h_cmd < h_bottom - tol {
        return Err(HarnessError::Unreachable {
            h_cmd,
            lo: h_bottom,
            hi: h_top,
        });
    }
    // Illinois regula falsi on g(theta) = height(theta) - h_cmd, which is
    // decreasing with g(lo) >= 0 >= g(hi).
    let (mut g_lo, mut g_hi) = (h_top - h_cmd, h_bottom - h_cmd);
    let mut theta = lo;
    let mut side = 0i8;
    for _ in 0..100 {
        theta = if g_lo == g_hi { 0.5 * (lo + hi) } else { (lo * g_hi - hi * g_lo) / (g_hi - g_lo) };
        theta = theta.clamp(lo, hi);
        let g = height(theta)? - h_cmd;
        if g.abs() < 1e-13 || hi - lo < 1e-15 {
            break;
        }
        if g > 0.0 {
            lo = theta;
            g_lo = g;
            if side == 1 {
                g_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = theta;
            g_hi = g;
            if side == -1 {
                g_lo *= 0.5;
            }
            side = -1;
        }
    }
    let mut q = q;
    legs.apply(&mut q, theta);
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Grid { nx: usize, ny: usize, nz: usize },
    Random { trials: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub configs: Vec<ArmConfig>,
    pub mode: SweepMode,
    pub fx: [f64; 2],
    pub fy: [f64; 2],
    pub fz: [f64; 2],
    pub h_cmd: [f64; 2],
    /// Evaluation horizon (s); carried into the summary, the quasi-static
    /// test itself has no time axis.
    pub horizon: f64,
    pub seed: u64,
    /// Homothety applied to the foot-derived polygon.
    pub polygon_scale: f64,
    /// Explicit polygon replacing the foot-derived one.
    pub polygon: Option<Vec<[f64; 2]>>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            configs: ArmConfig::ALL.to_vec(),
            mode: SweepMode::Random { trials: 500 },
            fx: [-20.0, 20.0],
            fy: [-20.0, 20.0],
            fz: [-30.0, 30.0],
            h_cmd: [0.7, 1.0],
            horizon: 10.0,
            seed: 0,
            polygon_scale: 1.0,
            polygon: None,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.configs.is_empty() {
            return Err(HarnessError::Spec("no arm configurations selected".into()));
        }
        for (name, r) in [("fx", self.fx), ("fy", self.fy), ("fz", self.fz), ("h_cmd", self.h_cmd)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                return Err(HarnessError::Spec(format!("{name} range [{}, {}] is invalid", r[0], r[1])));
            }
        }
        match self.mode {
            SweepMode::Grid { nx, ny, nz } if nx == 0 || ny == 0 || nz == 0 => {
                return Err(HarnessError::Spec("grid dimensions must be >= 1".into()));
            }
            _ => {}
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(HarnessError::Spec("horizon must be > 0".into()));
        }
        if !(self.polygon_scale.is_finite() && self.polygon_scale > 0.0) {
            return Err(HarnessError::Spec("polygon_scale must be > 0".into()));
        }
        if let Some(v) = &self.polygon {
            SupportPolygon::new(v.clone())?;
        }
        Ok(())
    }

    pub fn cells_per_config(&self) -> usize {
        match self.mode {
            SweepMode::Grid { nx, ny, nz } => nx * ny * nz,
            SweepMode::Random { trials } => trials,
        }
    }
}

fn grid_point(range: [f64; 2], n: usize, i: usize) -> f64 {
    if n == 1 {
        0.5 * (range[0] + range[1])
    } else {
        range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellOutcome {
    pub cfg: ArmConfig,
    pub index: usize,
    /// Force applied to each hand (N, world frame).
    pub force: [f64; 3],
    pub h_cmd: f64,
    pub success: bool,
    pub margin: f64,
    pub cop: [f64; 2],
    pub normal_force: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfigSummary {
    pub cells: usize,
    pub successes: usize,
    pub success_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub cells: Vec<CellOutcome>,
    pub summary: BTreeMap<String, ConfigSummary>,
    pub horizon: f64,
    pub seed: u64,
}

fn config_ordinal(cfg: ArmConfig) -> u64 {
    ArmConfig::ALL.iter().position(|c| *c == cfg).expect("listed") as u64
}

/// Evaluates one cell. Randomness comes from the stream keyed by
/// `(seed, cfg ordinal << 32 | index)`: three force components (random
/// mode only) then `h_cmd`.
pub fn evaluate_cell(model: &ChainModel, spec: &SweepSpec, cfg: ArmConfig, index: usize) -> Result<CellOutcome, HarnessError> {
    let mut src = RngStream::new(spec.seed, (config_ordinal(cfg) << 32) | index as u64);
    let force = match spec.mode {
        SweepMode::Grid { nx, ny, nz } => {
            let (ix, iy, iz) = (index / (ny * nz), (index / nz) % ny, index % nz);
            [grid_point(spec.fx, nx, ix), grid_point(spec.fy, ny, iy), grid_point(spec.fz, nz, iz)]
        }
        SweepMode::Random { .. } => [
            src.uniform_in(spec.fx[0], spec.fx[1]),
            src.uniform_in(spec.fy[0], spec.fy[1]),
            src.uniform_in(spec.fz[0], spec.fz[1]),
        ],
    };
    let h_cmd = src.uniform_in(spec.h_cmd[0], spec.h_cmd[1]);
    let q = stance_posture(model, &cfg.q_ub(), h_cmd)?;
    let kin = dynamics::forward_kinematics(model, &q)?;
    let polygon = match &spec.polygon {
        Some(v) => SupportPolygon::new(v.clone())?,
        None => SupportPolygon::from_feet(model, &kin)?,
    };
    let polygon = if spec.polygon_scale == 1.0 {
        polygon
    } else {
        polygon.scaled(spec.polygon_scale)?
    };
    let f = Vector3::from(force);
    let r = feasible_with(model, &kin, &f, &f, &polygon)?;
    Ok(CellOutcome {
        cfg,
        index,
        force,
        h_cmd,
        success: r.success,
        margin: r.margin,
        cop: r.cop,
        normal_force: r.normal_force,
    })
}

/// Evaluates every cell of every selected configuration. Both hands carry
/// the same force. Cells run in parallel on the current rayon pool and are
/// returned in `(config, index)` order.
pub fn run_sweep(model: &ChainModel, spec: &SweepSpec) -> Result<SweepResult, HarnessError> {
    spec.validate()?;
    let n = spec.cells_per_config();
    let jobs: Vec<(ArmConfig, usize)> = spec.configs.iter().flat_map(|&c| (0..n).map(move |i| (c, i))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(c, i)| evaluate_cell(model, spec, c, i))
        .collect::<Result<Vec<_>, _>>()?;
    let mut summary = BTreeMap::new();
    for &c in &spec.configs {
        let successes = cells.iter().filter(|o| o.cfg == c && o.success).count();
        summary.insert(
            c.id().to_string(),
            ConfigSummary {
                cells: n,
                successes,
                success_fraction: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
            },
        );
    }
    Ok(SweepResult {
        cells,
        summary,
        horizon: spec.horizon,
        seed: spec.seed,
    })
}

/// State reported by a plant after each step.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
    /// Pelvis height above ground (m).
    pub h_base: f64,
    pub base_lin_vel: [f64; 3],
    /// Base angular velocity, body frame.
    pub omega: [f64; 3],
    /// Gravity direction in the base frame.
    pub gravity: [f64; 3],
}

/// Extension point for a dynamics back end.
pub trait Plant {
    fn reset(&mut self, model: &ChainModel, q0: &[f64]) -> Result<(), HarnessError>;
    fn state(&self) -> &PlantState;
    /// Advances by `dt` given full-body joint targets, commanded torques
    /// and the forces on the left and right hands.
    fn step(
        &mut self,
        model: &ChainModel,
        q_target: &[f64],
        tau: &[f64],
        hand_forces: [Vector3<f64>; 2],
        dt: f64,
    ) -> Result<(), HarnessError>;
}

/// Non-physical stand-in: first-order lag `q += dt / (T + dt) (q_target - q)`,
/// base fixed upright, soles on the ground. Torques and hand forces are
/// ignored.
#[derive(Debug, Clone)]
pub struct KinematicPlant {
    pub time_constant: f64,
    state: PlantState,
}

impl KinematicPlant {
    pub fn new(time_constant: f64) -> Self {
        Self {
            time_constant,
            state: PlantState {
                q: Vec::new(),
                qd: Vec::new(),
                qdd: Vec::new(),
                h_base: 0.0,
                base_lin_vel: [0.0; 3],
                omega: [0.0; 3],
                gravity: [0.0, 0.0, -1.0],
            },
        }
    }
}

impl Default for KinematicPlant {
    fn default() -> Self {
        Self::new(0.05)
    }
}

impl Plant for KinematicPlant {
    fn reset(&mut self, model: &ChainModel, q0: &[f64]) -> Result<(), HarnessError> {
        let kin = dynamics::forward_kinematics(model, q0)?;
        let n = q0.len();
        self.state = PlantState {
            q: q0.to_vec(),
            qd: vec![0.0; n],
            qdd: vec![0.0; n],
            h_base: base_height(model, &kin)?,
            base_lin_vel: [0.0; 3],
            omega: [0.0; 3],
            gravity: [0.0, 0.0, -1.0],
        };
        Ok(())
    }

    fn state(&self) -> &PlantState {
        &self.state
    }

    fn step(
        &mut self,
        model: &ChainModel,
        q_target: &[f64],
        _tau: &[f64],
        _hand_forces: [Vector3<f64>; 2],
        dt: f64,
    ) -> Result<(), HarnessError> {
        let alpha = dt / (self.time_constant + dt);
        let s = &mut self.state;
        for j in 0..s.q.len() {
            let dq = alpha * (q_target[j] - s.q[j]);
            s.q[j] += dq;
            let qd = dq / dt;
            s.qdd[j] = (qd - s.qd[j]) / dt;
            s.qd[j] = qd;
        }
        let h = base_height(model, &dynamics::forward_kinematics(model, &s.q)?)?;
        s.base_lin_vel = [0.0, 0.0, (h - s.h_base) / dt];
        s.h_base = h;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", deny_unknown_fields)]
pub enum Disturbance {
    None,
    /// Fixed forces on the left and right hands.
    Constant { left: [f64; 3], right: [f64; 3] },
    /// Fresh isotropic forces at every resample event.
    Random { r_min: f64, r_max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSpec {
    pub preset: ArmConfig,
    pub h_cmd: f64,
    pub dt: f64,
    pub horizon: f64,
    pub disturbance: Disturbance,
    pub rho_a: f64,
    pub kappa: f64,
    pub curriculum: CurriculumConfig,
    pub control: ControlConfig,
    pub scales: ObsScales,
    pub estimator: EstimatorConfig,
    pub shaping: RewardShaping,
    pub weights: WeightTable,
}

impl Default for EpisodeSpec {
    fn default() -> Self {
        Self {
            preset: ArmConfig::C1,
            h_cmd: 0.9,
            dt: policy::CONTROL_DT,
            horizon: 10.0,
            disturbance: Disturbance::None,
            rho_a: 0.0,
            kappa: DEFAULT_KAPPA,
            curriculum: CurriculumConfig::default(),
            control: ControlConfig::default(),
            scales: ObsScales::default(),
            estimator: EstimatorConfig::default(),
            shaping: RewardShaping::default(),
            weights: WeightTable::default(),
        }
    }
}

impl EpisodeSpec {
    pub fn steps(&self) -> Result<usize, HarnessError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(HarnessError::Spec(format!("dt {} must be > 0", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(HarnessError::Spec(format!("horizon {} must be > 0", self.horizon)));
        }
        let n = (self.horizon / self.dt).round();
        if (n * self.dt - self.horizon).abs() > 1e-9 * self.horizon.max(1.0) {
            return Err(HarnessError::Spec(format!(
                "horizon {} is not a whole number of {} s steps",
                self.horizon, self.dt
            )));
        }
        Ok(n as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub rho_a: f64,
    pub resampled: bool,
    pub h_base: f64,
    pub upright: bool,
    pub force_left: [f64; 3],
    pub force_right: [f64; 3],
    pub estimate_left: [f64; 3],
    pub estimate_right: [f64; 3],
    pub latent: [f64; LATENT_DIM],
    pub action: Vec<f64>,
    pub q_target_lb: Vec<f64>,
    pub height_reward: f64,
    pub reward: f64,
}

impl StepRecord {
    pub fn csv_header() -> Vec<String> {
        let mut h: Vec<String> = ["step", "time", "rho_a", "resampled", "h_base", "upright"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for name in ["force_left", "force_right", "estimate_left", "estimate_right"] {
            h.extend(["x", "y", "z"].iter().map(|a| format!("{name}_{a}")));
        }
        h.extend((0..LATENT_DIM).map(|i| format!("z{i}")));
        h.extend((0..policy::N_ACTIONS).map(|i| format!("a{i}")));
        h.extend((0..policy::N_ACTIONS).map(|i| format!("q_target{i}")));
        h.push("height_reward".into());
        h.push("reward".into());
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let mut r = vec![
            self.step.to_string(),
            self.time.to_string(),
            self.rho_a.to_string(),
            u8::from(self.resampled).to_string(),
            self.h_base.to_string(),
            u8::from(self.upright).to_string(),
        ];
        for v in [self.force_left, self.force_right, self.estimate_left, self.estimate_right] {
            r.extend(v.iter().map(f64::to_string));
        }
        r.extend(self.latent.iter().map(f64::to_string));
        r.extend(self.action.iter().map(f64::to_string));
        r.extend(self.q_target_lb.iter().map(f64::to_string));
        r.push(self.height_reward.to_string());
        r.push(self.reward.to_string());
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeTrace {
    pub steps: Vec<StepRecord>,
    pub resample_events: usize,
    pub final_rho_a: f64,
    /// `h_base >= 0.4 h_cmd` and `|g_xy| <= 0.7` at every step.
    pub success: bool,
}

fn check(stage: &'static str, step: usize, values: &[f64]) -> Result<(), HarnessError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(HarnessError::NonFinite { stage, step })
    }
}

/// Upright predicate used for episode success.
pub fn is_upright(h_base: f64, h_cmd: f64, gravity: &[f64; 3]) -> bool {
    h_base >= 0.4 * h_cmd && gravity[0].hypot(gravity[1]) <= 0.7
}

/// Closed-loop rollout. Each step: the hand forces set the arm torques
/// through the static model, the estimator recovers the forces from those
/// torques, the encoder maps upper-body posture and estimates to a latent,
/// the actor maps the stacked history to leg actions, the PD law turns
/// them into torques and the plant advances. Every `resample_period` the
/// upper-body targets and random forces are redrawn from `src`; random
/// forces are also drawn once before the first step.
pub fn run_episode(
    model: &ChainModel,
    weights: &WeightBundle,
    spec: &EpisodeSpec,
    plant: &mut dyn Plant,
    src: &mut impl RandomSource,
) -> Result<EpisodeTrace, HarnessError> {
    let n_steps = spec.steps()?;
    spec.control.validate()?;
    spec.estimator.validate()?;
    weights.check_shapes()?;
    if model.dof() != policy::N_DOF || !model.is_humanoid() {
        return Err(HarnessError::Spec(format!(
            "episodes need a {}-DoF humanoid model, got {} joints",
            policy::N_DOF,
            model.dof()
        )));
    }
    let ub = model.subchains.upper_body.clone();
    let lb = model.subchains.lower_body.clone();
    let preset = spec.preset.q_ub();
    let q_default = stance_posture(model, &preset, spec.h_cmd)?;
    let q0_lb: Vec<f64> = lb.iter().map(|&j| q_default[j]).collect();
    let params = RewardParams::from_model(model, q_default.clone(), spec.shaping)?;
    let torque_limits: Vec<f64> = lb.iter().map(|&j| model.joints[j].torque_limit).collect();
    let (total_mass, _) = dynamics::center_of_mass(model, &dynamics::forward_kinematics(model, &q_default)?);
    let knees: Vec<usize> = params.knees.clone();

    plant.reset(model, &q_default)?;
    let mut curriculum = CurriculumState::new(&spec.curriculum)?.with_rho(spec.rho_a);
    let mut q_target_ub: Vec<f64> = preset.to_vec();
    let mut forces = match &spec.disturbance {
        Disturbance::Constant { left, right } => [Vector3::from(*left), Vector3::from(*right)],
        _ => [Vector3::zeros(), Vector3::zeros()],
    };
    let force_cfg = match &spec.disturbance {
        Disturbance::Random { r_min, r_max } => Some(ForceSampleConfig::new(*r_min, *r_max)?),
        _ => None,
    };
    if let Some(cfg) = &force_cfg {
        forces = [sampling::sample_hand_force(cfg, src), sampling::sample_hand_force(cfg, src)];
    }

    let mut frames: VecDeque<ObservationFrame> = VecDeque::with_capacity(policy::HISTORY);
    let mut latents: VecDeque<[f64; LATENT_DIM]> = VecDeque::with_capacity(policy::HISTORY);
    let mut actions: [Vec<f64>; 2] = [vec![0.0; policy::N_ACTIONS], vec![0.0; policy::N_ACTIONS]];
    let mut records = Vec::with_capacity(n_steps);
    let mut resample_events = 0;
    let mut success = true;

    for step in 0..n_steps {
        let state = plant.state().clone();
        check("plant", step, &state.q)?;

        let tau_arm = dynamics::static_torques_with_wrenches(model, &state.q, &forces[0], &forces[1])?;
        let js = JointState::new(state.q.clone(), state.qd.clone(), tau_arm.as_slice().to_vec());
        let (est_l, est_r) = estimation::estimate_both(model, &js, &spec.estimator)?;
        check("estimator", step, est_l.force.as_slice())?;
        check("estimator", step, est_r.force.as_slice())?;

        let q_ub: Vec<f64> = ub.iter().map(|&j| state.q[j]).collect();
        let z = policy::encoder_forward(weights, &q_ub, &est_l.force.into(), &est_r.force.into())?;
        check("encoder", step, &z)?;

        let frame = ObservationFrame {
            command: [0.0; 3],
            h_cmd: spec.h_cmd,
            omega: state.omega,
            gravity: state.gravity,
            q_err: state.q.iter().zip(&q_default).map(|(q, q0)| q - q0).collect(),
            qd: state.qd.clone(),
            a_prev: actions[0].clone(),
        };
        if frames.is_empty() {
            frames.extend(std::iter::repeat(frame.clone()).take(policy::HISTORY));
            latents.extend(std::iter::repeat(z).take(policy::HISTORY));
        } else {
            frames.pop_back();
            frames.push_front(frame);
            latents.pop_back();
            latents.push_front(z);
        }
        let obs = policy::build_actor_obs(
            frames.make_contiguous(),
            latents.make_contiguous(),
            &spec.scales,
        )?;
        let action = policy::actor_forward(weights, &obs)?;
        check("actor", step, &action)?;

        let q_target_lb = policy::scale_action(&action, &q0_lb, spec.control.action_scale);
        let q_lb: Vec<f64> = lb.iter().map(|&j| state.q[j]).collect();
        let qd_lb: Vec<f64> = lb.iter().map(|&j| state.qd[j]).collect();
        let tau_lb = policy::pd_torque(
            &q_target_lb,
            &q_lb,
            &qd_lb,
            &spec.control.kp,
            &spec.control.kd,
            spec.control.clamp_torques.then_some(torque_limits.as_slice()),
        )?;
        check("pd", step, &tau_lb)?;

        let mut q_target = state.q.clone();
        let mut tau = tau_arm.as_slice().to_vec();
        for (k, &j) in lb.iter().enumerate() {
            q_target[j] = q_target_lb[k];
            tau[j] = tau_lb[k];
        }
        for (k, &j) in ub.iter().enumerate() {
            q_target[j] = q_target_ub[k];
        }
        plant.step(model, &q_target, &tau, forces, spec.dt)?;
        let next = plant.state().clone();
        check("plant", step, &next.q)?;
        check("plant", step, &[next.h_base])?;

        let kin = dynamics::forward_kinematics(model, &next.q)?;
        let ground = ground_height(model, &kin)?;
        let normal = (total_mass * -model.gravity.z - forces[0].z - forces[1].z).max(0.0);
        let mut feet = Vec::with_capacity(2);
        for side in Side::BOTH {
            let foot = model.foot(side).expect("humanoid has feet");
            let pose = &kin.links[foot.link];
            let half = Vector3::new(foot.length / 2.0, 0.0, 0.0);
            let toe = pose.transform_point(&(foot.sole + half));
            let heel = pose.transform_point(&(foot.sole - half));
            let sole = pose.transform_point(&foot.sole);
            feet.push(FootState {
                force: [0.0, 0.0, normal / 2.0],
                height: sole.z - ground,
                vel_xy: [0.0, 0.0],
                vel_z: 0.0,
                lateral: vec![toe.y, heel.y],
            });
        }
        let knee_y = |i: usize| knees.get(i).map_or(0.0, |&j| kin.joint_origins[j].y);
        let input = RewardInput {
            h_base: next.h_base,
            h_cmd: spec.h_cmd,
            base_lin_vel: next.base_lin_vel,
            ang_vel_xy: [next.omega[0], next.omega[1]],
            projected_gravity_xy: [next.gravity[0], next.gravity[1]],
            q: next.q.clone(),
            qd: next.qd.clone(),
            qdd: next.qdd.clone(),
            q_target,
            tau,
            action: action.to_vec(),
            last_action: actions[0].clone(),
            last_last_action: actions[1].clone(),
            feet,
            knee_lateral: [knee_y(0), knee_y(1)],
            command_is_zero: true,
        };
        let breakdown = reward::evaluate(&input, &params, &spec.weights).map_err(|e| match e {
            RewardError::NonFinite(_) => HarnessError::NonFinite { stage: "reward", step },
            other => other.into(),
        })?;
        check("reward", step, &[breakdown.total])?;
        let height_reward = breakdown.term(Term::HeightTracking).weighted;

        let applied = forces;
        let (c, _) = curriculum.record(height_reward, spec.dt);
        let (c, due) = c.tick(spec.dt);
        curriculum = c;
        if due {
            resample_events += 1;
            let rho_prime = sampling::sample_ratio(curriculum.rho_a, spec.kappa, src)?;
            q_target_ub = sampling::sample_ub_targets(model, &preset, rho_prime, src)?;
            if let Some(cfg) = &force_cfg {
                forces = [sampling::sample_hand_force(cfg, src), sampling::sample_hand_force(cfg, src)];
            }
        }

        let upright = is_upright(next.h_base, spec.h_cmd, &next.gravity);
        success &= upright;
        records.push(StepRecord {
            step,
            time: (step + 1) as f64 * spec.dt,
            rho_a: curriculum.rho_a,
            resampled: due,
            h_base: next.h_base,
            upright,
            force_left: applied[0].into(),
            force_right: applied[1].into(),
            estimate_left: est_l.force.into(),
            estimate_right: est_r.force.into(),
            latent: z,
            action: action.to_vec(),
            q_target_lb,
            height_reward,
            reward: breakdown.total,
        });
        actions = [action.to_vec(), std::mem::take(&mut actions[0])];
    }

    Ok(EpisodeTrace {
        steps: records,
        resample_events,
        final_rho_a: curriculum.rho_a,
        success,
    })
}

/// Runs `count` independent episodes; episode `i` draws from stream
/// `(seed, i)` and gets a fresh [`KinematicPlant`].
pub fn run_episodes(
    model: &ChainModel,
    weights: &WeightBundle,
    spec: &EpisodeSpec,
    seed: u64,
    count: usize,
) -> Result<Vec<EpisodeTrace>, HarnessError> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut plant = KinematicPlant::default();
            let mut src = RngStream::new(seed, i as u64);
            run_episode(model, weights, spec, &mut plant, &mut src)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_distance_signs() {
        let p = SupportPolygon::rectangle([-1.0, 1.0], [-0.5, 0.5]).unwrap();
        assert!((p.signed_distance([0.0, 0.0]) - 0.5).abs() < 1e-15);
        assert!((p.signed_distance([2.0, 0.0]) + 1.0).abs() < 1e-15);
        assert_eq!(p.signed_distance([1.0, 0.0]), 0.0);
    }

    #[test]
    fn polygon_orientation_and_degeneracy() {
        let cw = SupportPolygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(cw.signed_distance([0.5, 0.5]) > 0.0);
        assert!(SupportPolygon::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
        assert!(SupportPolygon::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        let dart = vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.2], [1.0, 2.0]];
        assert!(SupportPolygon::new(dart).is_err());
    }

    #[test]
    fn stance_hits_commanded_height() {
        let m = ChainModel::bundled();
        for h in [0.7, 0.85, 1.0] {
            let q = stance_posture(&m, &ArmConfig::C1.q_ub(), h).unwrap();
            let kin = dynamics::forward_kinematics(&m, &q).unwrap();
            assert!((base_height(&m, &kin).unwrap() - h).abs() < 1e-9, "{h}");
        }
        assert!(matches!(
            stance_posture(&m, &ArmConfig::C1.q_ub(), 2.0),
            Err(HarnessError::Unreachable { .. })
        ));
    }

    #[test]
    fn episode_step_count() {
        let spec = EpisodeSpec {
            horizon: 0.3,
            ..Default::default()
        };
        assert_eq!(spec.steps().unwrap(), 15);
        let bad = EpisodeSpec {
            horizon: 0.03,
            ..Default::default()
        };
        assert!(bad.steps().is_err());
    }
}
