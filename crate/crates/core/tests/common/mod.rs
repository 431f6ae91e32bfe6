#![allow(dead_code)]

use fame_core::model::ChainModel;
use fame_core::sampling::{RandomSource, RngStream};

/// Uniform pose inside the joint limits.
pub fn random_pose(model: &ChainModel, src: &mut RngStream) -> Vec<f64> {
    model.joints.iter().map(|j| src.uniform_in(j.q_min, j.q_max)).collect()
}

/// Two-link planar arm in the x-y plane, both joints about z, wrist at
/// the tip of the second link.
pub fn planar_arm(l1: f64, l2: f64) -> ChainModel {
    ChainModel::from_toml_str(&format!(
        r#"
gravity = [0.0, 0.0, -9.81]

[[links]]
name = "base"
mass = 0.0
com = [0.0, 0.0, 0.0]
inertia = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]

[[links]]
name = "upper"
mass = 1.0
com = [{h1}, 0.0, 0.0]
inertia = [0.01, 0.01, 0.01, 0.0, 0.0, 0.0]

[[links]]
name = "fore"
mass = 0.5
com = [{h2}, 0.0, 0.0]
inertia = [0.01, 0.01, 0.01, 0.0, 0.0, 0.0]

[[joints]]
name = "shoulder"
parent = "base"
child = "upper"
axis = [0.0, 0.0, 1.0]
xyz = [0.0, 0.0, 0.0]
quat = [1.0, 0.0, 0.0, 0.0]
limits = {{ lower = -3.0, upper = 3.0, effort = 50.0, velocity = 5.0 }}

[[joints]]
name = "elbow"
parent = "upper"
child = "fore"
axis = [0.0, 0.0, 1.0]
xyz = [{l1}, 0.0, 0.0]
quat = [1.0, 0.0, 0.0, 0.0]
limits = {{ lower = -3.0, upper = 3.0, effort = 50.0, velocity = 5.0 }}

[subchains]
left_arm = ["shoulder", "elbow"]

[[wrists]]
side = "left"
link = "fore"
offset = [{l2}, 0.0, 0.0]
"#,
        h1 = l1 / 2.0,
        h2 = l2 / 2.0,
    ))
    .expect("planar arm model")
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
