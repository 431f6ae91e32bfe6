//! Observations, network inference and low-level control.
//!
//! Observation layout (one frame, 76 entries):
//!
//! | offset | len | field | scale |
//! |-------:|----:|-------|-------|
//! | 0  | 3  | command            | `command` (per slot) |
//! | 3  | 1  | commanded height   | `h_cmd` |
//! | 4  | 3  | base angular vel.  | `ang_vel` |
//! | 7  | 3  | projected gravity  | 1 |
//! | 10 | 27 | joint position error `q - q0` | `dof_pos` |
//! | 37 | 27 | joint velocity     | `dof_vel` |
//! | 64 | 12 | previous action    | 1 |
//!
//! The actor input stacks three frames newest first (`o_t, o_{t-1},
//! o_{t-2}`, 228 entries) followed by three latents, again newest first (24
//! entries). The critic input is one frame, the current latent and the
//! scaled base linear velocity (87 entries).
//!
//! Networks are multilayer perceptrons with ELU between layers and no
//! activation on the output. Weights come from a manifest plus a flat
//! little-endian `f32` blob; see [`WeightBundle::load`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling::{RandomSource, RngStream};

pub const N_DOF: usize = 27;
pub const N_ACTIONS: usize = 12;
pub const LATENT_DIM: usize = 8;
pub const FRAME_DIM: usize = 3 + 1 + 3 + 3 + 2 * N_DOF + N_ACTIONS;
pub const HISTORY: usize = 3;
pub const PROPRIO_DIM: usize = HISTORY * FRAME_DIM;
pub const LATENT_HISTORY_DIM: usize = HISTORY * LATENT_DIM;
pub const ACTOR_INPUT_DIM: usize = PROPRIO_DIM + LATENT_HISTORY_DIM;
pub const CRITIC_INPUT_DIM: usize = FRAME_DIM + LATENT_DIM + 3;
pub const ENCODER_INPUT_DIM: usize = 15 + 3 + 3;
pub const ESTIMATOR_OUTPUT_DIM: usize = 35;
pub const HEAD_INPUT_DIM: usize = ESTIMATOR_OUTPUT_DIM + FRAME_DIM + LATENT_DIM;
/// Policy and PD update period (50 Hz).
pub const CONTROL_DT: f64 = 0.02;

const MANIFEST_MAGIC: &str = "fame-weights 1";

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("{what}: expected {expected} entries, got {got}")]
    Dimension {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("tensor `{name}`: expected shape {expected:?}, got {got:?}")]
    Shape {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("tensor `{0}` contains a non-finite value")]
    NonFinite(String),
    #[error("weight manifest: {0}")]
    Manifest(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn dim(what: impl Into<String>, got: usize, expected: usize) -> Result<(), PolicyError> {
    if got == expected {
        Ok(())
    } else {
        Err(PolicyError::Dimension {
            what: what.into(),
            expected,
            got,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObsScales {
    pub command: [f64; 3],
    pub h_cmd: f64,
    pub ang_vel: f64,
    pub dof_pos: f64,
    pub dof_vel: f64,
    pub lin_vel: f64,
}

impl Default for ObsScales {
    fn default() -> Self {
        Self {
            command: [2.0, 2.0, 0.25],
            h_cmd: 1.0,
            ang_vel: 0.25,
            dof_pos: 1.0,
            dof_vel: 0.05,
            lin_vel: 2.0,
        }
    }
}

/// One-step proprioceptive observation, unscaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationFrame {
    pub command: [f64; 3],
    pub h_cmd: f64,
    pub omega: [f64; 3],
    pub gravity: [f64; 3],
    /// `q - q_default`, all joints.
    pub q_err: Vec<f64>,
    pub qd: Vec<f64>,
    pub a_prev: Vec<f64>,
}

impl ObservationFrame {
    pub fn zeros() -> Self {
        Self {
            command: [0.0; 3],
            h_cmd: 0.0,
            omega: [0.0; 3],
            gravity: [0.0; 3],
            q_err: vec![0.0; N_DOF],
            qd: vec![0.0; N_DOF],
            a_prev: vec![0.0; N_ACTIONS],
        }
    }

    /// Scaled 76-vector in the documented layout.
    pub fn to_vector(&self, s: &ObsScales) -> Result<Vec<f64>, PolicyError> {
        dim("q_err", self.q_err.len(), N_DOF)?;
        dim("qd", self.qd.len(), N_DOF)?;
        dim("a_prev", self.a_prev.len(), N_ACTIONS)?;
        let mut v = Vec::with_capacity(FRAME_DIM);
        v.extend(self.command.iter().zip(s.command).map(|(c, k)| c * k));
        v.push(self.h_cmd * s.h_cmd);
        v.extend(self.omega.iter().map(|w| w * s.ang_vel));
        v.extend(self.gravity);
        v.extend(self.q_err.iter().map(|x| x * s.dof_pos));
        v.extend(self.qd.iter().map(|x| x * s.dof_vel));
        v.extend(&self.a_prev);
        debug_assert_eq!(v.len(), FRAME_DIM);
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayoutEntry {
    pub name: &'static str,
    pub offset: usize,
    pub len: usize,
}

const FRAME_FIELDS: [(&str, usize); 7] = [
    ("command", 3),
    ("h_cmd", 1),
    ("omega", 3),
    ("gravity", 3),
    ("q_err", N_DOF),
    ("qd", N_DOF),
    ("a_prev", N_ACTIONS),
];

pub fn frame_layout() -> Vec<LayoutEntry> {
    let mut offset = 0;
    FRAME_FIELDS
        .iter()
        .map(|&(name, len)| {
            let e = LayoutEntry { name, offset, len };
            offset += len;
            e
        })
        .collect()
}

/// Machine-readable index map of the 252-entry actor input.
pub fn actor_layout() -> Vec<LayoutEntry> {
    const FRAMES: [&str; HISTORY] = ["t", "t-1", "t-2"];
    let mut out = Vec::new();
    for (k, tag) in FRAMES.iter().enumerate() {
        for e in frame_layout() {
            out.push(LayoutEntry {
                name: leak(format!("o[{tag}].{}", e.name)),
                offset: k * FRAME_DIM + e.offset,
                len: e.len,
            });
        }
    }
    for (k, tag) in FRAMES.iter().enumerate() {
        out.push(LayoutEntry {
            name: leak(format!("z[{tag}]")),
            offset: PROPRIO_DIM + k * LATENT_DIM,
            len: LATENT_DIM,
        });
    }
    out
}

/// Index map of the 87-entry critic input.
pub fn critic_layout() -> Vec<LayoutEntry> {
    let mut out = frame_layout();
    out.push(LayoutEntry {
        name: "z",
        offset: FRAME_DIM,
        len: LATENT_DIM,
    });
    out.push(LayoutEntry {
        name: "v_base",
        offset: FRAME_DIM + LATENT_DIM,
        len: 3,
    });
    out
}

fn leak(s: String) -> &'static str {
    Box::leak(s.into_boxed_str())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorInput(Vec<f64>);

impl ActorInput {
    pub fn from_vec(v: Vec<f64>) -> Result<Self, PolicyError> {
        dim("actor input", v.len(), ACTOR_INPUT_DIM)?;
        Ok(Self(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn current_frame(&self) -> &[f64] {
        &self.0[..FRAME_DIM]
    }

    pub fn current_latent(&self) -> &[f64] {
        &self.0[PROPRIO_DIM..PROPRIO_DIM + LATENT_DIM]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticInput(Vec<f64>);

impl CriticInput {
    pub fn from_vec(v: Vec<f64>) -> Result<Self, PolicyError> {
        dim("critic input", v.len(), CRITIC_INPUT_DIM)?;
        Ok(Self(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Stacks `history` (newest first) and `latents` (newest first).
pub fn build_actor_obs(
    history: &[ObservationFrame],
    latents: &[[f64; LATENT_DIM]],
    scales: &ObsScales,
) -> Result<ActorInput, PolicyError> {
    dim("observation history", history.len(), HISTORY)?;
    dim("latent history", latents.len(), HISTORY)?;
    let mut v = Vec::with_capacity(ACTOR_INPUT_DIM);
    for frame in history {
        v.extend(frame.to_vector(scales)?);
    }
    for z in latents {
        v.extend_from_slice(z);
    }
    ActorInput::from_vec(v)
}

pub fn build_critic_obs(
    frame: &ObservationFrame,
    z: &[f64; LATENT_DIM],
    v_base: &[f64; 3],
    scales: &ObsScales,
) -> Result<CriticInput, PolicyError> {
    let mut v = frame.to_vector(scales)?;
    v.extend_from_slice(z);
    v.extend(v_base.iter().map(|x| x * scales.lin_vel));
    CriticInput::from_vec(v)
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `out x in`
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Linear {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: DMatrix::zeros(output, input),
            bias: DVector::zeros(output),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }
}

/// Linear layers with ELU between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    pub fn new(layers: Vec<Linear>) -> Result<Self, PolicyError> {
        for (k, pair) in layers.windows(2).enumerate() {
            dim(format!("layer {} input", k + 1), pair[1].in_dim(), pair[0].out_dim())?;
        }
        for (k, l) in layers.iter().enumerate() {
            dim(format!("layer {k} bias"), l.bias.len(), l.out_dim())?;
        }
        Ok(Self { layers })
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        Self {
            layers: sizes.windows(2).map(|w| Linear::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, Linear::in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, Linear::out_dim)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.in_dim()];
        s.extend(self.layers.iter().map(Linear::out_dim));
        s
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, PolicyError> {
        dim("network input", input.len(), self.in_dim())?;
        let mut x = DVector::from_column_slice(input);
        let last = self.layers.len().saturating_sub(1);
        for (k, layer) in self.layers.iter().enumerate() {
            x = &layer.weight * x + &layer.bias;
            if k < last {
                x.apply(|v| *v = elu(*v));
            }
        }
        Ok(x.as_slice().to_vec())
    }
}

struct TensorSpec {
    name: String,
    shape: Vec<usize>,
}

const ENCODER_SIZES: [usize; 4] = [ENCODER_INPUT_DIM, 256, 128, LATENT_DIM];
const ESTIMATOR_SIZES: [usize; 4] = [ACTOR_INPUT_DIM, 256, 256, ESTIMATOR_OUTPUT_DIM];
const TARGET_SIZES: [usize; 4] = [FRAME_DIM + LATENT_DIM, 256, 256, 32];
const ACTOR_SIZES: [usize; 5] = [HEAD_INPUT_DIM, 512, 256, 256, N_ACTIONS];
const CRITIC_SIZES: [usize; 5] = [CRITIC_INPUT_DIM, 512, 256, 256, 1];
const PROTO_SHAPE: [usize; 2] = [64, 32];

const NETWORKS: [(&str, &[usize]); 5] = [
    ("encoder", &ENCODER_SIZES),
    ("estimator.encoder", &ESTIMATOR_SIZES),
    ("estimator.target", &TARGET_SIZES),
    ("actor", &ACTOR_SIZES),
    ("critic", &CRITIC_SIZES),
];
const PROTO_NAME: &str = "estimator.proto.weight";

/// Tensor names and shapes in manifest order. Layer `k` of a network is
/// named `<net>.<2k>.weight` / `.bias`, matching a PyTorch `Sequential`
/// with activations at the odd indices.
fn expected_tensors() -> Vec<TensorSpec> {
    let mut out = Vec::new();
    for (net, sizes) in NETWORKS {
        for (k, w) in sizes.windows(2).enumerate() {
            out.push(TensorSpec {
                name: format!("{net}.{}.weight", 2 * k),
                shape: vec![w[1], w[0]],
            });
            out.push(TensorSpec {
                name: format!("{net}.{}.bias", 2 * k),
                shape: vec![w[1]],
            });
        }
        if net == "estimator.target" {
            out.push(TensorSpec {
                name: PROTO_NAME.to_string(),
                shape: PROTO_SHAPE.to_vec(),
            });
        }
    }
    out
}

/// All network parameters. The estimator target branch and prototypes are
/// training-time parts; they are loaded and shape-checked but unused here.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightBundle {
    pub encoder: Mlp,
    pub estimator: Mlp,
    pub estimator_target: Mlp,
    pub prototypes: DMatrix<f64>,
    pub actor: Mlp,
    pub critic: Mlp,
}

impl WeightBundle {
    pub fn zeros() -> Self {
        Self {
            encoder: Mlp::zeros(&ENCODER_SIZES),
            estimator: Mlp::zeros(&ESTIMATOR_SIZES),
            estimator_target: Mlp::zeros(&TARGET_SIZES),
            prototypes: DMatrix::zeros(PROTO_SHAPE[0], PROTO_SHAPE[1]),
            actor: Mlp::zeros(&ACTOR_SIZES),
            critic: Mlp::zeros(&CRITIC_SIZES),
        }
    }

    /// Uniform weights in `[-scale/sqrt(fan_in), scale/sqrt(fan_in)]`, rounded
    /// to `f32` so that a save/load cycle is lossless.
    pub fn random(seed: u64, scale: f64) -> Self {
        let mut src = RngStream::new(seed, 0);
        let mut b = Self::zeros();
        let fill = |m: &mut [f64], fan_in: usize, src: &mut RngStream| {
            let bound = scale / (fan_in as f64).sqrt();
            for x in m.iter_mut() {
                *x = f64::from(src.uniform_in(-bound, bound) as f32);
            }
        };
        for net in b.networks_mut() {
            for layer in &mut net.layers {
                let fan_in = layer.in_dim();
                fill(layer.weight.as_mut_slice(), fan_in, &mut src);
                fill(layer.bias.as_mut_slice(), fan_in, &mut src);
            }
        }
        fill(b.prototypes.as_mut_slice(), PROTO_SHAPE[1], &mut src);
        b
    }

    fn networks(&self) -> [&Mlp; 5] {
        [&self.encoder, &self.estimator, &self.estimator_target, &self.actor, &self.critic]
    }

    fn networks_mut(&mut self) -> [&mut Mlp; 5] {
        [
            &mut self.encoder,
            &mut self.estimator,
            &mut self.estimator_target,
            &mut self.actor,
            &mut self.critic,
        ]
    }

    /// Tensors in manifest order, row-major.
    fn tensors(&self) -> Vec<(String, Vec<usize>, Vec<f64>)> {
        let specs = expected_tensors();
        let mut data: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for ((net, _), mlp) in NETWORKS.iter().zip(self.networks()) {
            for (k, layer) in mlp.layers.iter().enumerate() {
                data.insert(format!("{net}.{}.weight", 2 * k), row_major(&layer.weight));
                data.insert(format!("{net}.{}.bias", 2 * k), layer.bias.as_slice().to_vec());
            }
        }
        data.insert(PROTO_NAME.to_string(), row_major(&self.prototypes));
        specs
            .into_iter()
            .map(|s| {
                let v = data.remove(&s.name).expect("every tensor populated");
                (s.name, s.shape, v)
            })
            .collect()
    }

    /// Writes `<manifest>` and the blob `data_file` next to it.
    pub fn save(&self, manifest: impl AsRef<Path>, data_file: &str) -> Result<(), PolicyError> {
        let manifest = manifest.as_ref();
        let data_path = manifest.parent().unwrap_or(Path::new(".")).join(data_file);
        let mut text = format!("{MANIFEST_MAGIC}\ndata {data_file}\n");
        let mut blob = Vec::new();
        for (name, shape, values) in self.tensors() {
            let shape_s = shape.iter().map(usize::to_string).collect::<Vec<_>>().join("x");
            let _ = writeln!(text, "{name} f32 {shape_s} {}", blob.len());
            for v in values {
                blob.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| PolicyError::Io { path, source }
        };
        std::fs::write(manifest, text).map_err(io(manifest))?;
        std::fs::write(&data_path, blob).map_err(io(&data_path))?;
        Ok(())
    }

    /// Reads a manifest and its data blob.
    ///
    /// Manifest grammar (UTF-8, one record per line, `#` comments):
    ///
    /// ```text
    /// fame-weights 1
    /// data <blob path relative to the manifest>
    /// <tensor name> f32 <d0>x<d1>... <byte offset>
    /// ```
    ///
    /// Every expected tensor must appear exactly once with its exact shape;
    /// unknown names are rejected.
    pub fn load(manifest: impl AsRef<Path>) -> Result<Self, PolicyError> {
        let manifest = manifest.as_ref();
        let text = std::fs::read_to_string(manifest).map_err(|source| PolicyError::Io {
            path: manifest.display().to_string(),
            source,
        })?;
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        if lines.next() != Some(MANIFEST_MAGIC) {
            return Err(PolicyError::Manifest(format!("first line must be `{MANIFEST_MAGIC}`")));
        }
        let data_rel = lines
            .next()
            .and_then(|l| l.strip_prefix("data "))
            .ok_or_else(|| PolicyError::Manifest("second line must be `data <path>`".into()))?;
        let data_path: PathBuf = manifest.parent().unwrap_or(Path::new(".")).join(data_rel.trim());
        let mut blob = Vec::new();
        std::fs::File::open(&data_path)
            .and_then(|mut f| f.read_to_end(&mut blob))
            .map_err(|source| PolicyError::Io {
                path: data_path.display().to_string(),
                source,
            })?;

        let mut entries: BTreeMap<String, (Vec<usize>, usize)> = BTreeMap::new();
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [name, dtype, shape, offset] = parts.as_slice() else {
                return Err(PolicyError::Manifest(format!("malformed line `{line}`")));
            };
            if *dtype != "f32" {
                return Err(PolicyError::Manifest(format!("tensor `{name}`: unsupported dtype `{dtype}`")));
            }
            let shape = shape
                .split('x')
                .map(|d| d.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| PolicyError::Manifest(format!("tensor `{name}`: bad shape `{shape}`")))?;
            let offset = offset
                .parse::<usize>()
                .map_err(|_| PolicyError::Manifest(format!("tensor `{name}`: bad offset `{offset}`")))?;
            if entries.insert(name.to_string(), (shape, offset)).is_some() {
                return Err(PolicyError::Manifest(format!("tensor `{name}` listed twice")));
            }
        }

        let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for spec in expected_tensors() {
            let (shape, offset) = entries
                .remove(&spec.name)
                .ok_or_else(|| PolicyError::Manifest(format!("missing tensor `{}`", spec.name)))?;
            if shape != spec.shape {
                return Err(PolicyError::Shape {
                    name: spec.name,
                    expected: spec.shape,
                    got: shape,
                });
            }
            let count: usize = shape.iter().product();
            let end = offset + 4 * count;
            if offset % 4 != 0 || end > blob.len() {
                return Err(PolicyError::Manifest(format!(
                    "tensor `{}`: bytes {offset}..{end} outside a {}-byte blob",
                    spec.name,
                    blob.len()
                )));
            }
            let v: Vec<f64> = blob[offset..end]
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
                .collect();
            if v.iter().any(|x| !x.is_finite()) {
                return Err(PolicyError::NonFinite(spec.name));
            }
            values.insert(spec.name, v);
        }
        if let Some(extra) = entries.keys().next() {
            return Err(PolicyError::Manifest(format!("unknown tensor `{extra}`")));
        }

        let mut take_mlp = |net: &str, sizes: &[usize]| -> Mlp {
            let layers = sizes
                .windows(2)
                .enumerate()
                .map(|(k, w)| {
                    let wv = values.remove(&format!("{net}.{}.weight", 2 * k)).expect("checked above");
                    let bv = values.remove(&format!("{net}.{}.bias", 2 * k)).expect("checked above");
                    Linear {
                        weight: DMatrix::from_row_slice(w[1], w[0], &wv),
                        bias: DVector::from_vec(bv),
                    }
                })
                .collect();
            Mlp { layers }
        };
        let encoder = take_mlp("encoder", &ENCODER_SIZES);
        let estimator = take_mlp("estimator.encoder", &ESTIMATOR_SIZES);
        let estimator_target = take_mlp("estimator.target", &TARGET_SIZES);
        let actor = take_mlp("actor", &ACTOR_SIZES);
        let critic = take_mlp("critic", &CRITIC_SIZES);
        let proto = values.remove(PROTO_NAME).expect("checked above");
        Ok(Self {
            encoder,
            estimator,
            estimator_target,
            prototypes: DMatrix::from_row_slice(PROTO_SHAPE[0], PROTO_SHAPE[1], &proto),
            actor,
            critic,
        })
    }

    /// Confirms every network has its expected layer sizes.
    pub fn check_shapes(&self) -> Result<(), PolicyError> {
        for ((net, sizes), mlp) in NETWORKS.iter().zip(self.networks()) {
            if mlp.sizes() != *sizes {
                return Err(PolicyError::Shape {
                    name: (*net).to_string(),
                    expected: sizes.to_vec(),
                    got: mlp.sizes(),
                });
            }
        }
        let p = [self.prototypes.nrows(), self.prototypes.ncols()];
        if p != PROTO_SHAPE {
            return Err(PolicyError::Shape {
                name: PROTO_NAME.into(),
                expected: PROTO_SHAPE.to_vec(),
                got: p.to_vec(),
            });
        }
        Ok(())
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Upper-body context encoder: `[q_ub, F_L, F_R]` to an 8-dim latent.
pub fn encoder_forward(
    weights: &WeightBundle,
    q_ub: &[f64],
    f_left: &[f64; 3],
    f_right: &[f64; 3],
) -> Result<[f64; LATENT_DIM], PolicyError> {
    dim("q_ub", q_ub.len(), 15)?;
    let mut x = Vec::with_capacity(ENCODER_INPUT_DIM);
    x.extend_from_slice(q_ub);
    x.extend_from_slice(f_left);
    x.extend_from_slice(f_right);
    let z = weights.encoder.forward(&x)?;
    dim("latent", z.len(), LATENT_DIM)?;
    Ok(z.try_into().expect("length checked"))
}

/// Implicit-state estimate from the full actor input.
pub fn estimator_forward(weights: &WeightBundle, input: &ActorInput) -> Result<Vec<f64>, PolicyError> {
    let out = weights.estimator.forward(input.as_slice())?;
    dim("estimator output", out.len(), ESTIMATOR_OUTPUT_DIM)?;
    Ok(out)
}

/// Deterministic (mean) leg action.
pub fn actor_forward(weights: &WeightBundle, input: &ActorInput) -> Result<[f64; N_ACTIONS], PolicyError> {
    let implicit = estimator_forward(weights, input)?;
    let mut head = Vec::with_capacity(HEAD_INPUT_DIM);
    head.extend_from_slice(input.current_frame());
    head.extend_from_slice(input.current_latent());
    head.extend_from_slice(&implicit);
    dim("actor head input", head.len(), HEAD_INPUT_DIM)?;
    let a = weights.actor.forward(&head)?;
    dim("action", a.len(), N_ACTIONS)?;
    Ok(a.try_into().expect("length checked"))
}

pub fn critic_forward(weights: &WeightBundle, input: &CriticInput) -> Result<f64, PolicyError> {
    let v = weights.critic.forward(input.as_slice())?;
    dim("value", v.len(), 1)?;
    Ok(v[0])
}

/// `q_target = q0_lb + s_a * a`
pub fn scale_action(action: &[f64], q0_lb: &[f64], action_scale: f64) -> Vec<f64> {
    debug_assert_eq!(action.len(), q0_lb.len());
    action.iter().zip(q0_lb).map(|(a, q0)| q0 + action_scale * a).collect()
}

/// `tau = Kp (q_target - q) - Kd qd`, optionally clamped to `+-limit`.
pub fn pd_torque(
    q_target: &[f64],
    q: &[f64],
    qd: &[f64],
    kp: &[f64],
    kd: &[f64],
    limits: Option<&[f64]>,
) -> Result<Vec<f64>, PolicyError> {
    let n = q_target.len();
    dim("q", q.len(), n)?;
    dim("qd", qd.len(), n)?;
    dim("kp", kp.len(), n)?;
    dim("kd", kd.len(), n)?;
    if let Some(l) = limits {
        dim("torque limits", l.len(), n)?;
    }
    Ok((0..n)
        .map(|j| {
            let tau = kp[j] * (q_target[j] - q[j]) + kd[j] * (0.0 - qd[j]);
            match limits {
                Some(l) => tau.clamp(-l[j], l[j]),
                None => tau,
            }
        })
        .collect())
}

/// Leg PD gains in lower-body order (hip pitch, hip roll, hip yaw, knee,
/// ankle pitch, ankle roll, per leg).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    pub action_scale: f64,
    pub kp: Vec<f64>,
    pub kd: Vec<f64>,
    pub clamp_torques: bool,
}

impl Default for ControlConfig {
    fn default() -> Self {
        let kp_leg = [200.0, 200.0, 200.0, 300.0, 40.0, 40.0];
        let kd_leg = [2.5, 2.5, 2.5, 4.0, 2.0, 2.0];
        Self {
            action_scale: 0.25,
            kp: kp_leg.iter().chain(&kp_leg).copied().collect(),
            kd: kd_leg.iter().chain(&kd_leg).copied().collect(),
            clamp_torques: true,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        dim("kp", self.kp.len(), N_ACTIONS)?;
        dim("kd", self.kd.len(), N_ACTIONS)?;
        if !self.action_scale.is_finite() || self.kp.iter().chain(&self.kd).any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(PolicyError::Manifest("control gains must be finite and non-negative".into()));
        }
        Ok(())
    }
}
