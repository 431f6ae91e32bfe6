//! Robot description: links, revolute joints, named sub-chains and the
//! end-effector frames used by the estimator and the balance harness.
//!
//! Models are read from a small TOML schema (see `docs/model_format.md`).
//! The loader rejects unknown keys and validates every structural invariant
//! before handing out a [`ChainModel`], which is immutable afterwards.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Isometry3, Matrix3, Quaternion, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Source of the bundled H12-like description.
pub const BUNDLED_MODEL_TOML: &str = include_str!("../assets/h12_like.toml");

const AXIS_NORM_TOL: f64 = 1e-9;
const QUAT_NORM_TOL: f64 = 1e-9;

pub const ARM_DOF: usize = 7;
pub const UPPER_BODY_DOF: usize = 15;
pub const LOWER_BODY_DOF: usize = 12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read model file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model parse error: {0}")]
    Parse(String),
    #[error("invalid {entity}: {reason}")]
    Validation { entity: String, reason: String },
    #[error("unknown arm configuration `{0}` (expected C1..C5)")]
    UnknownPreset(String),
}

impl ModelError {
    fn invalid(entity: impl Into<String>, reason: impl Into<String>) -> Self {
        ModelError::Validation {
            entity: entity.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A revolute joint connecting `parent_link` to `child_link`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub parent_link: String,
    pub child_link: String,
    /// Rotation axis in the joint frame.
    pub axis: Unit<Vector3<f64>>,
    /// Joint frame relative to the parent link frame.
    pub origin: Isometry3<f64>,
    pub q_min: f64,
    pub q_max: f64,
    pub torque_limit: f64,
    pub velocity_limit: f64,
}

impl JointSpec {
    pub fn contains(&self, q: f64) -> bool {
        q >= self.q_min && q <= self.q_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub name: String,
    pub mass: f64,
    /// Centre of mass in the link frame.
    pub com: Vector3<f64>,
    /// Inertia about the centre of mass.
    pub inertia: Matrix3<f64>,
}

/// End-effector frame rigidly attached to a link.
#[derive(Debug, Clone, PartialEq)]
pub struct WristFrame {
    pub side: Side,
    pub link: usize,
    pub offset: Vector3<f64>,
}

/// Sole geometry used to build the support polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct FootFrame {
    pub side: Side,
    pub link: usize,
    /// Sole centre in the link frame.
    pub sole: Vector3<f64>,
    pub length: f64,
    pub width: f64,
}

/// Joint index sets. `upper_body` is torso followed by both arms; the arm
/// sets are what the per-hand estimator operates on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Subchains {
    pub left_arm: Vec<usize>,
    pub right_arm: Vec<usize>,
    pub upper_body: Vec<usize>,
    pub lower_body: Vec<usize>,
}

impl Subchains {
    pub fn arm(&self, side: Side) -> &[usize] {
        match side {
            Side::Left => &self.left_arm,
            Side::Right => &self.right_arm,
        }
    }
}

/// Validated kinematic tree. Joint order is canonical: it is the order of
/// every joint-space vector (`q`, `qd`, `tau`) used by the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    pub joints: Vec<JointSpec>,
    pub links: Vec<LinkSpec>,
    pub gravity: Vector3<f64>,
    pub subchains: Subchains,
    pub wrists: Vec<WristFrame>,
    pub feet: Vec<FootFrame>,
    root: usize,
    // per joint: (parent link index, child link index)
    joint_links: Vec<(usize, usize)>,
    // per link: joint whose child it is (None for the root)
    parent_joint: Vec<Option<usize>>,
    // joints sorted root to leaf
    topo: Vec<usize>,
}

impl ChainModel {
    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED_MODEL_TOML).expect("bundled model is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        Self::from_file_repr(file)
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn root_link(&self) -> usize {
        self.root
    }

    /// Joints in root-to-leaf order.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// `(parent_link, child_link)` indices of joint `j`.
    pub fn joint_links(&self, j: usize) -> (usize, usize) {
        self.joint_links[j]
    }

    pub fn parent_joint_of_link(&self, link: usize) -> Option<usize> {
        self.parent_joint[link]
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn wrist(&self, side: Side) -> Option<&WristFrame> {
        self.wrists.iter().find(|w| w.side == side)
    }

    pub fn foot(&self, side: Side) -> Option<&FootFrame> {
        self.feet.iter().find(|f| f.side == side)
    }

    /// True when all four humanoid sub-chains are declared (and therefore
    /// sized 7/7/15/12).
    pub fn is_humanoid(&self) -> bool {
        self.subchains.upper_body.len() == UPPER_BODY_DOF
            && self.subchains.lower_body.len() == LOWER_BODY_DOF
    }

    pub fn total_mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum()
    }

    /// Is joint `j` on the path from the root to `link`?
    pub fn joint_supports_link(&self, j: usize, link: usize) -> bool {
        let mut cur = link;
        while let Some(pj) = self.parent_joint[cur] {
            if pj == j {
                return true;
            }
            cur = self.joint_links[pj].0;
        }
        false
    }

    /// Checks `q` against joint limits, naming the first offending joint.
    pub fn check_limits(&self, indices: &[usize], q: &[f64]) -> Result<(), ModelError> {
        for (&j, &v) in indices.iter().zip(q) {
            let js = &self.joints[j];
            if !v.is_finite() || !js.contains(v) {
                return Err(ModelError::invalid(
                    format!("joint `{}`", js.name),
                    format!("value {v} outside [{}, {}]", js.q_min, js.q_max),
                ));
            }
        }
        Ok(())
    }

    pub fn names(&self, indices: &[usize]) -> Vec<&str> {
        indices.iter().map(|&j| self.joints[j].name.as_str()).collect()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_file_repr()).expect("model serializes")
    }

    fn to_file_repr(&self) -> ModelFile {
        let links = self
            .links
            .iter()
            .map(|l| LinkEntry {
                name: l.name.clone(),
                mass: l.mass,
                com: l.com.into(),
                inertia: [
                    l.inertia[(0, 0)],
                    l.inertia[(1, 1)],
                    l.inertia[(2, 2)],
                    l.inertia[(0, 1)],
                    l.inertia[(0, 2)],
                    l.inertia[(1, 2)],
                ],
            })
            .collect();
        let joints = self
            .joints
            .iter()
            .map(|j| {
                let q = j.origin.rotation.quaternion();
                JointEntry {
                    name: j.name.clone(),
                    parent: j.parent_link.clone(),
                    child: j.child_link.clone(),
                    axis: j.axis.into_inner().into(),
                    xyz: j.origin.translation.vector.into(),
                    quat: [q.w, q.i, q.j, q.k],
                    limits: LimitsEntry {
                        lower: j.q_min,
                        upper: j.q_max,
                        effort: j.torque_limit,
                        velocity: j.velocity_limit,
                    },
                }
            })
            .collect();
        let names = |ix: &[usize]| -> Option<Vec<String>> {
            if ix.is_empty() {
                None
            } else {
                Some(ix.iter().map(|&j| self.joints[j].name.clone()).collect())
            }
        };
        let subchains = SubchainsEntry {
            left_arm: names(&self.subchains.left_arm),
            right_arm: names(&self.subchains.right_arm),
            upper_body: names(&self.subchains.upper_body),
            lower_body: names(&self.subchains.lower_body),
        };
        ModelFile {
            gravity: self.gravity.into(),
            links,
            joints,
            subchains: Some(subchains),
            wrists: self
                .wrists
                .iter()
                .map(|w| WristEntry {
                    side: w.side,
                    link: self.links[w.link].name.clone(),
                    offset: w.offset.into(),
                })
                .collect(),
            feet: self
                .feet
                .iter()
                .map(|f| FootEntry {
                    side: f.side,
                    link: self.links[f.link].name.clone(),
                    sole: f.sole.into(),
                    length: f.length,
                    width: f.width,
                })
                .collect(),
        }
    }

    fn from_file_repr(file: ModelFile) -> Result<Self, ModelError> {
        let gravity = Vector3::from(file.gravity);
        if !gravity.iter().all(|g| g.is_finite()) {
            return Err(ModelError::invalid("gravity", "non-finite component"));
        }

        let mut links = Vec::with_capacity(file.links.len());
        let mut link_ix = HashMap::new();
        for l in file.links {
            if link_ix.insert(l.name.clone(), links.len()).is_some() {
                return Err(ModelError::invalid(format!("link `{}`", l.name), "duplicate name"));
            }
            links.push(validate_link(l)?);
        }
        if links.is_empty() {
            return Err(ModelError::invalid("links", "model has no links"));
        }

        let mut joints = Vec::with_capacity(file.joints.len());
        let mut joint_links = Vec::with_capacity(file.joints.len());
        let mut joint_ix = HashMap::new();
        let mut parent_joint: Vec<Option<usize>> = vec![None; links.len()];
        for (j, entry) in file.joints.into_iter().enumerate() {
            let ent = format!("joint `{}`", entry.name);
            if joint_ix.insert(entry.name.clone(), j).is_some() {
                return Err(ModelError::invalid(ent, "duplicate name"));
            }
            let parent = *link_ix
                .get(&entry.parent)
                .ok_or_else(|| ModelError::invalid(&ent, format!("unknown parent link `{}`", entry.parent)))?;
            let child = *link_ix
                .get(&entry.child)
                .ok_or_else(|| ModelError::invalid(&ent, format!("unknown child link `{}`", entry.child)))?;
            if parent == child {
                return Err(ModelError::invalid(ent, "parent and child are the same link"));
            }
            if let Some(other) = parent_joint[child] {
                return Err(ModelError::invalid(
                    ent,
                    format!("link `{}` already has parent joint `{}`", entry.child, joints_name(&joints, other)),
                ));
            }
            parent_joint[child] = Some(j);
            joint_links.push((parent, child));
            joints.push(validate_joint(entry)?);
        }

        let roots: Vec<usize> = (0..links.len()).filter(|&l| parent_joint[l].is_none()).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(ModelError::invalid("kinematic tree", "no root link (cycle)")),
            many => {
                return Err(ModelError::invalid(
                    "kinematic tree",
                    format!(
                        "multiple root links: {}",
                        many.iter().map(|&l| links[l].name.as_str()).collect::<Vec<_>>().join(", ")
                    ),
                ))
            }
        };

        // Breadth-first from the root; anything left over sits on a cycle.
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); links.len()];
        for (j, &(p, _)) in joint_links.iter().enumerate() {
            children[p].push(j);
        }
        let mut topo = Vec::with_capacity(joints.len());
        let mut frontier = vec![root];
        while let Some(l) = frontier.pop() {
            for &j in children[l].iter().rev() {
                topo.push(j);
                frontier.push(joint_links[j].1);
            }
        }
        if topo.len() != joints.len() {
            let stray = (0..joints.len()).find(|j| !topo.contains(j)).unwrap_or(0);
            return Err(ModelError::invalid(
                format!("joint `{}`", joints[stray].name),
                "not reachable from the root link (cycle)",
            ));
        }

        let resolve = |name: &str, list: &str| -> Result<usize, ModelError> {
            joint_ix
                .get(name)
                .copied()
                .ok_or_else(|| ModelError::invalid(format!("subchain `{list}`"), format!("unknown joint `{name}`")))
        };
        let mut subchains = Subchains::default();
        if let Some(sc) = file.subchains {
            let take = |v: Option<Vec<String>>, list: &str| -> Result<Vec<usize>, ModelError> {
                v.unwrap_or_default().iter().map(|n| resolve(n, list)).collect()
            };
            subchains.left_arm = take(sc.left_arm, "left_arm")?;
            subchains.right_arm = take(sc.right_arm, "right_arm")?;
            subchains.upper_body = take(sc.upper_body, "upper_body")?;
            subchains.lower_body = take(sc.lower_body, "lower_body")?;
        }
        validate_subchains(&subchains)?;

        let link_of = |name: &str, what: &str| -> Result<usize, ModelError> {
            link_ix
                .get(name)
                .copied()
                .ok_or_else(|| ModelError::invalid(what.to_string(), format!("unknown link `{name}`")))
        };
        let mut wrists = Vec::new();
        for w in file.wrists {
            let what = format!("{} wrist", w.side);
            if wrists.iter().any(|x: &WristFrame| x.side == w.side) {
                return Err(ModelError::invalid(what, "declared twice"));
            }
            check_finite(&what, &w.offset)?;
            wrists.push(WristFrame {
                side: w.side,
                link: link_of(&w.link, &what)?,
                offset: w.offset.into(),
            });
        }
        let mut feet = Vec::new();
        for f in file.feet {
            let what = format!("{} foot", f.side);
            if feet.iter().any(|x: &FootFrame| x.side == f.side) {
                return Err(ModelError::invalid(what, "declared twice"));
            }
            check_finite(&what, &f.sole)?;
            if !(f.length > 0.0 && f.width > 0.0 && f.length.is_finite() && f.width.is_finite()) {
                return Err(ModelError::invalid(what, "sole length and width must be positive"));
            }
            feet.push(FootFrame {
                side: f.side,
                link: link_of(&f.link, &what)?,
                sole: f.sole.into(),
                length: f.length,
                width: f.width,
            });
        }

        let model = ChainModel {
            joints,
            links,
            gravity,
            subchains,
            wrists,
            feet,
            root,
            joint_links,
            parent_joint,
            topo,
        };
        if model.is_humanoid() {
            for side in Side::BOTH {
                if model.wrist(side).is_none() {
                    return Err(ModelError::invalid(format!("{side} wrist"), "missing wrist frame"));
                }
            }
        }
        Ok(model)
    }
}

fn joints_name(joints: &[JointSpec], j: usize) -> &str {
    joints.get(j).map(|x| x.name.as_str()).unwrap_or("?")
}

fn check_finite(what: &str, v: &[f64]) -> Result<(), ModelError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ModelError::invalid(what.to_string(), "non-finite value"))
    }
}

fn validate_link(l: LinkEntry) -> Result<LinkSpec, ModelError> {
    let ent = format!("link `{}`", l.name);
    check_finite(&ent, &[l.mass])?;
    check_finite(&ent, &l.com)?;
    check_finite(&ent, &l.inertia)?;
    if l.mass < 0.0 {
        return Err(ModelError::invalid(ent, "negative mass"));
    }
    let [ixx, iyy, izz, ixy, ixz, iyz] = l.inertia;
    let inertia = Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz);
    let min_eig = inertia.symmetric_eigenvalues().min();
    let scale = inertia.abs().max().max(1.0);
    if min_eig < -1e-12 * scale {
        return Err(ModelError::invalid(ent, "inertia is not positive semi-definite"));
    }
    Ok(LinkSpec {
        name: l.name,
        mass: l.mass,
        com: l.com.into(),
        inertia,
    })
}

fn validate_joint(e: JointEntry) -> Result<JointSpec, ModelError> {
    let ent = format!("joint `{}`", e.name);
    check_finite(&ent, &e.axis)?;
    check_finite(&ent, &e.xyz)?;
    check_finite(&ent, &e.quat)?;
    let axis = Vector3::from(e.axis);
    if (axis.norm() - 1.0).abs() > AXIS_NORM_TOL {
        return Err(ModelError::invalid(ent, format!("axis norm {} is not 1", axis.norm())));
    }
    let [w, x, y, z] = e.quat;
    let quat = Quaternion::new(w, x, y, z);
    if (quat.norm() - 1.0).abs() > QUAT_NORM_TOL {
        return Err(ModelError::invalid(ent, format!("origin quaternion norm {} is not 1", quat.norm())));
    }
    let lim = e.limits;
    check_finite(&ent, &[lim.lower, lim.upper, lim.effort, lim.velocity])?;
    if lim.lower > lim.upper {
        return Err(ModelError::invalid(ent, format!("lower limit {} above upper {}", lim.lower, lim.upper)));
    }
    if lim.effort <= 0.0 || lim.velocity <= 0.0 {
        return Err(ModelError::invalid(ent, "effort and velocity limits must be positive"));
    }
    Ok(JointSpec {
        name: e.name,
        parent_link: e.parent,
        child_link: e.child,
        // Kept as written (norm already within tolerance) so that
        // serialization round-trips bit-exactly.
        axis: Unit::new_unchecked(axis),
        origin: Isometry3::from_parts(
            Translation3::from(Vector3::from(e.xyz)),
            UnitQuaternion::new_unchecked(quat),
        ),
        q_min: lim.lower,
        q_max: lim.upper,
        torque_limit: lim.effort,
        velocity_limit: lim.velocity,
    })
}

fn validate_subchains(sc: &Subchains) -> Result<(), ModelError> {
    let ub = !sc.upper_body.is_empty();
    let lb = !sc.lower_body.is_empty();
    if ub || lb {
        for (name, v, n) in [
            ("left_arm", &sc.left_arm, ARM_DOF),
            ("right_arm", &sc.right_arm, ARM_DOF),
            ("upper_body", &sc.upper_body, UPPER_BODY_DOF),
            ("lower_body", &sc.lower_body, LOWER_BODY_DOF),
        ] {
            if v.is_empty() {
                return Err(ModelError::invalid(format!("subchain `{name}`"), "missing"));
            }
            if v.len() != n {
                return Err(ModelError::invalid(
                    format!("subchain `{name}`"),
                    format!("has {} joints, expected {n}", v.len()),
                ));
            }
        }
        if sc.upper_body[1..1 + ARM_DOF] != sc.left_arm[..] || sc.upper_body[1 + ARM_DOF..] != sc.right_arm[..] {
            return Err(ModelError::invalid(
                "subchain `upper_body`",
                "must list torso, then the left arm, then the right arm",
            ));
        }
    }
    for (name, v) in [
        ("left_arm", &sc.left_arm),
        ("right_arm", &sc.right_arm),
        ("upper_body", &sc.upper_body),
        ("lower_body", &sc.lower_body),
    ] {
        let mut seen = v.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != v.len() {
            return Err(ModelError::invalid(format!("subchain `{name}`"), "repeats a joint"));
        }
    }
    Ok(())
}

/// Reads and validates a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<ChainModel, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ChainModel::from_toml_str(&text)
}

// On-disk schema.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    gravity: [f64; 3],
    links: Vec<LinkEntry>,
    joints: Vec<JointEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subchains: Option<SubchainsEntry>,
    #[serde(default)]
    wrists: Vec<WristEntry>,
    #[serde(default)]
    feet: Vec<FootEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkEntry {
    name: String,
    mass: f64,
    com: [f64; 3],
    /// ixx, iyy, izz, ixy, ixz, iyz
    inertia: [f64; 6],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointEntry {
    name: String,
    parent: String,
    child: String,
    axis: [f64; 3],
    xyz: [f64; 3],
    /// w, x, y, z
    quat: [f64; 4],
    limits: LimitsEntry,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitsEntry {
    lower: f64,
    upper: f64,
    effort: f64,
    velocity: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubchainsEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left_arm: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right_arm: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    upper_body: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lower_body: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WristEntry {
    side: Side,
    link: String,
    offset: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FootEntry {
    side: Side,
    link: String,
    sole: [f64; 3],
    length: f64,
    width: f64,
}

/// The five fixed evaluation arm configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArmConfig {
    C1,
    C2,
    C3,
    C4,
    C5,
}

impl ArmConfig {
    pub const ALL: [ArmConfig; 5] = [ArmConfig::C1, ArmConfig::C2, ArmConfig::C3, ArmConfig::C4, ArmConfig::C5];

    pub fn id(self) -> &'static str {
        match self {
            ArmConfig::C1 => "C1",
            ArmConfig::C2 => "C2",
            ArmConfig::C3 => "C3",
            ArmConfig::C4 => "C4",
            ArmConfig::C5 => "C5",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ArmConfig::C1 => "forward_extended",
            ArmConfig::C2 => "mid_sideways",
            ArmConfig::C3 => "full_sideways",
            ArmConfig::C4 => "near_full_sideways",
            ArmConfig::C5 => "asym_forward_full",
        }
    }

    /// Upper-body joint angles (rad), torso then left arm then right arm.
    pub fn q_ub(self) -> [f64; UPPER_BODY_DOF] {
        match self {
            ArmConfig::C1 => [0.0, -0.9, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, -0.9, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0],
            ArmConfig::C2 => [0.0, -0.9, 1.3, 0.0, 0.0, 0.0, 0.0, 0.0, -0.9, -1.3, 0.0, 0.0, 0.0, 0.0, 0.0],
            ArmConfig::C3 => [0.0, 1.3, 0.0, 1.2, 0.0, 0.0, 0.0, 0.0, -1.3, 0.0, 1.2, 0.0, 0.0, 0.0, 0.0],
            ArmConfig::C4 => [0.0, 1.0, 0.0, 0.9, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.9, 0.0, 0.0, 0.0, 0.0],
            ArmConfig::C5 => [0.0, -0.9, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 1.3, 0.0, 1.2, 0.0, 0.0, 0.0, 0.0],
        }
    }
}

impl fmt::Display for ArmConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ArmConfig {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ArmConfig::ALL
            .into_iter()
            .find(|c| c.id().eq_ignore_ascii_case(s) || c.label() == s)
            .ok_or_else(|| ModelError::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmConfigPreset {
    pub id: ArmConfig,
    pub q_ub: [f64; UPPER_BODY_DOF],
}

impl ArmConfigPreset {
    pub fn validate(&self, model: &ChainModel) -> Result<(), ModelError> {
        if !model.is_humanoid() {
            return Err(ModelError::invalid("subchain `upper_body`", "model has no upper body"));
        }
        model.check_limits(&model.subchains.upper_body, &self.q_ub)
    }
}

pub fn preset(id: &str) -> Result<ArmConfigPreset, ModelError> {
    let id: ArmConfig = id.parse()?;
    Ok(ArmConfigPreset { id, q_ub: id.q_ub() })
}
