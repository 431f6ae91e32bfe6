//! `fame`: hand-force estimation, samplers, reward, inference, envelope
//! sweeps and episodes from the command line.
//!
//! Exit codes: 0 success, 2 input error, 3 dimension or validation error,
//! 4 numeric failure.

mod config;
mod error;
mod io;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fame_core::estimation;
use fame_core::harness::{self, Disturbance, EpisodeSpec, KinematicPlant, SweepMode};
use fame_core::model::{self, ArmConfig, ChainModel};
use fame_core::policy::{self, ActorInput, CriticInput, WeightBundle};
use fame_core::reward::{self, RewardInput, RewardParams};
use fame_core::sampling::{self, ForceSampleConfig, RngStream};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "fame", version, about = "Force-adaptive standing toolkit")]
struct Cli {
    /// Run configuration file (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Robot description (TOML); overrides the configuration.
    #[arg(long, global = true, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Maximum number of worker threads.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate both hand forces from a joint-state file.
    Estimate(EstimateArgs),
    /// Quasi-static force-envelope sweep.
    Sweep(SweepArgs),
    /// Draw samples for external analysis.
    #[command(subcommand)]
    Sample(SampleCommand),
    /// Evaluate the reward terms for one input file.
    Reward(RewardArgs),
    /// Run the encoder, actor and critic on an input file.
    Infer(InferArgs),
    /// Closed-loop episode against the kinematic stand-in plant.
    Episode(EpisodeArgs),
    /// Write a zero or random weight bundle.
    InitWeights(InitWeightsArgs),
    /// Load and check a robot description.
    ValidateModel(ValidateModelArgs),
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// CSV with rows `q`, `qd`, `tau`.
    #[arg(long, value_name = "FILE")]
    state: PathBuf,
    /// Damped-least-squares damping (>= 0).
    #[arg(long)]
    damping: Option<f64>,
    /// Relative singular-value cutoff (> 0).
    #[arg(long)]
    cutoff: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Arm configuration(s): `all` or a comma list such as `C1,C3`.
    #[arg(long, default_value = "all")]
    cfg: String,
    /// Regular force grid `NXxNYxNZ`.
    #[arg(long, value_name = "NXxNYxNZ", conflicts_with = "random")]
    grid: Option<String>,
    /// Uniform random forces (the default mode).
    #[arg(long)]
    random: bool,
    /// Cells per configuration in random mode.
    #[arg(long)]
    trials: Option<usize>,
    /// Scale of the support polygon about its centroid.
    #[arg(long)]
    polygon_scale: Option<f64>,
    /// Master seed; overrides the configuration and `FAME_SEED`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for `sweep.csv`, `sweep_summary.json`, `sweep.svg`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleCommon {
    /// Number of draws.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Master seed; overrides the configuration and `FAME_SEED`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; stdout when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum SampleCommand {
    /// Curriculum ratio `rho_a'`.
    Ratio {
        #[arg(long, default_value_t = 0.0)]
        rho_a: f64,
        #[arg(long)]
        kappa: Option<f64>,
        #[command(flatten)]
        common: SampleCommon,
    },
    /// Upper-body joint targets around a preset.
    Targets {
        #[arg(long)]
        rho_prime: f64,
        #[arg(long, default_value = "C1", value_parser = parse_arm_config)]
        cfg: ArmConfig,
        #[command(flatten)]
        common: SampleCommon,
    },
    /// Isotropic hand forces.
    Force {
        #[arg(long)]
        rmin: Option<f64>,
        #[arg(long)]
        rmax: Option<f64>,
        #[command(flatten)]
        common: SampleCommon,
    },
    /// Domain-randomization draws.
    DomainRand {
        #[command(flatten)]
        common: SampleCommon,
    },
}

#[derive(Debug, Args)]
struct RewardArgs {
    /// JSON with `input` (reward input) and optional `q_default`.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
struct WeightArgs {
    /// Weight manifest.
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    /// All-zero weights.
    #[arg(long)]
    zero_weights: bool,
    /// Seeded random weights.
    #[arg(long, value_name = "SEED")]
    random_weights: Option<u64>,
}

#[derive(Debug, Args)]
struct InferArgs {
    /// JSON with any of `encoder`, `actor`, `critic`.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    #[command(flatten)]
    weights: WeightArgs,
}

#[derive(Debug, Args)]
struct EpisodeArgs {
    /// Arm configuration `C1`..`C5`.
    #[arg(long, value_parser = parse_arm_config)]
    cfg: Option<ArmConfig>,
    /// Commanded base height (m).
    #[arg(long)]
    h_cmd: Option<f64>,
    /// Control period (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Episode length (s).
    #[arg(long)]
    horizon: Option<f64>,
    /// Initial upper-body action ratio.
    #[arg(long)]
    rho_a: Option<f64>,
    /// `none`, `constant:FX,FY,FZ[,FX,FY,FZ]` or `random:RMIN,RMAX`.
    #[arg(long, value_parser = parse_disturbance, allow_hyphen_values = true)]
    disturbance: Option<Disturbance>,
    /// Independent episodes, one random stream each.
    #[arg(long)]
    episodes: Option<usize>,
    /// Master seed; overrides the configuration and `FAME_SEED`.
    #[arg(long)]
    seed: Option<u64>,
    /// Trace CSV (one episode) or directory (several).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(flatten)]
    weights: WeightArgs,
}

#[derive(Debug, Args)]
struct InitWeightsArgs {
    /// Manifest path; the blob is written next to it.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Seed for uniform fan-in scaled weights; zeros when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Weight magnitude multiplier for random bundles.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

#[derive(Debug, Args)]
struct ValidateModelArgs {
    /// Model file; falls back to `--model`, the configuration, then the
    /// bundled model.
    path: Option<PathBuf>,
    /// Print the canonical serialization instead of the summary.
    #[arg(long)]
    dump: bool,
}

fn parse_arm_config(s: &str) -> Result<ArmConfig, String> {
    s.parse().map_err(|e: model::ModelError| e.to_string())
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad number `{v}`")))
        .collect()
}

fn parse_disturbance(s: &str) -> Result<Disturbance, String> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "none" if rest.is_empty() => Ok(Disturbance::None),
        "constant" => {
            let v = parse_floats(rest)?;
            match v.len() {
                3 => Ok(Disturbance::Constant {
                    left: [v[0], v[1], v[2]],
                    right: [v[0], v[1], v[2]],
                }),
                6 => Ok(Disturbance::Constant {
                    left: [v[0], v[1], v[2]],
                    right: [v[3], v[4], v[5]],
                }),
                n => Err(format!("constant disturbance needs 3 or 6 values, got {n}")),
            }
        }
        "random" => match parse_floats(rest)?.as_slice() {
            [lo, hi] => Ok(Disturbance::Random { r_min: *lo, r_max: *hi }),
            _ => Err("random disturbance needs RMIN,RMAX".into()),
        },
        _ => Err(format!("unknown disturbance `{s}`")),
    }
}

fn parse_grid(s: &str) -> Result<SweepMode, CliError> {
    let dims: Vec<usize> = s
        .split(['x', 'X'])
        .map(|d| d.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::input(format!("bad grid `{s}`; expected NXxNYxNZ")))?;
    match dims.as_slice() {
        [nx, ny, nz] => Ok(SweepMode::Grid {
            nx: *nx,
            ny: *ny,
            nz: *nz,
        }),
        _ => Err(CliError::input(format!("bad grid `{s}`; expected NXxNYxNZ"))),
    }
}

fn parse_cfg_list(s: &str) -> Result<Vec<ArmConfig>, CliError> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(ArmConfig::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let c: ArmConfig = part.trim().parse()?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

struct Context {
    cfg: RunConfig,
    model_override: Option<PathBuf>,
}

impl Context {
    fn model(&self) -> Result<ChainModel, CliError> {
        match self.model_override.as_ref().or(self.cfg.model.as_ref()) {
            Some(p) => Ok(model::load_model(p)?),
            None => Ok(ChainModel::bundled()),
        }
    }

    /// `--seed`, then the configuration, then `FAME_SEED`, then zero.
    fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(s) = flag.or(self.cfg.seed) {
            return Ok(s);
        }
        match std::env::var("FAME_SEED") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::input(format!("FAME_SEED=`{v}` is not an unsigned integer"))),
            Err(_) => Ok(0),
        }
    }

    fn weights(&self, args: &WeightArgs) -> Result<WeightBundle, CliError> {
        if args.zero_weights {
            return Ok(WeightBundle::zeros());
        }
        if let Some(seed) = args.random_weights {
            return Ok(WeightBundle::random(seed, 1.0));
        }
        match args.weights.as_ref().or(self.cfg.weights.as_ref()) {
            Some(p) => Ok(WeightBundle::load(p)?),
            None => Err(CliError::input(
                "no weights: pass --weights, --zero-weights or --random-weights",
            )),
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn cmd_estimate(ctx: &Context, args: &EstimateArgs) -> Result<(), CliError> {
    let model = ctx.model()?;
    let state = io::read_state_csv(&args.state, model.dof())?;
    let mut cfg = ctx.cfg.estimator;
    if let Some(d) = args.damping {
        cfg.damping = d;
    }
    if let Some(c) = args.cutoff {
        cfg.cutoff = c;
    }
    let (left, right) = estimation::estimate_both(&model, &state, &cfg)?;
    for e in [&left, &right] {
        if e.degenerate {
            log::warn!("{} arm Jacobian is degenerate; force set to zero", e.side);
        }
    }
    let out: BTreeMap<&str, _> = [("left", left), ("right", right)].into_iter().collect();
    print!("{}", to_json(&out)?);
    Ok(())
}

#[derive(Serialize)]
struct SweepSummaryFile<'a> {
    seed: u64,
    horizon: f64,
    mode: SweepMode,
    configs: &'a BTreeMap<String, harness::ConfigSummary>,
}

fn cmd_sweep(ctx: &Context, args: &SweepArgs) -> Result<(), CliError> {
    let model = ctx.model()?;
    let mut spec = ctx.cfg.sweep.clone();
    spec.configs = parse_cfg_list(&args.cfg)?;
    spec.seed = ctx.seed(args.seed)?;
    if let Some(g) = &args.grid {
        spec.mode = parse_grid(g)?;
    } else if args.random || args.trials.is_some() {
        let default_trials = match spec.mode {
            SweepMode::Random { trials } => trials,
            SweepMode::Grid { .. } => 500,
        };
        spec.mode = SweepMode::Random {
            trials: args.trials.unwrap_or(default_trials),
        };
    }
    if let Some(s) = args.polygon_scale {
        spec.polygon_scale = s;
    }
    let result = harness::run_sweep(&model, &spec)?;
    let dir = args
        .out
        .clone()
        .or_else(|| ctx.cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    io::write_file(&dir.join("sweep.csv"), &io::sweep_csv(&result)?)?;
    let summary = SweepSummaryFile {
        seed: result.seed,
        horizon: result.horizon,
        mode: spec.mode,
        configs: &result.summary,
    };
    io::write_file(&dir.join("sweep_summary.json"), to_json(&summary)?.as_bytes())?;
    io::write_file(&dir.join("sweep.svg"), io::sweep_svg(&result, spec.fx, spec.fz).as_bytes())?;
    for (id, s) in &result.summary {
        println!("{id} {:.4} ({}/{})", s.success_fraction, s.successes, s.cells);
    }
    Ok(())
}

fn cmd_sample(ctx: &Context, cmd: &SampleCommand) -> Result<(), CliError> {
    let (common, bytes) = match cmd {
        SampleCommand::Ratio { rho_a, kappa, common } => {
            let kappa = kappa.unwrap_or(ctx.cfg.sampling.kappa);
            let mut src = RngStream::new(ctx.seed(common.seed)?, 0);
            let rows = (0..common.n)
                .map(|_| sampling::sample_ratio(*rho_a, kappa, &mut src).map(|r| vec![r.to_string()]))
                .collect::<Result<Vec<_>, _>>()?;
            (common, io::csv_bytes(&["rho_prime".to_string()], rows)?)
        }
        SampleCommand::Targets { rho_prime, cfg, common } => {
            let model = ctx.model()?;
            let q0 = cfg.q_ub();
            let mut src = RngStream::new(ctx.seed(common.seed)?, 0);
            let header = model.names(&model.subchains.upper_body);
            let rows = (0..common.n)
                .map(|_| {
                    sampling::sample_ub_targets(&model, &q0, *rho_prime, &mut src)
                        .map(|v| v.iter().map(f64::to_string).collect())
                })
                .collect::<Result<Vec<_>, _>>()?;
            (common, io::csv_bytes(&header, rows)?)
        }
        SampleCommand::Force { rmin, rmax, common } => {
            let base = ctx.cfg.sampling.force;
            let cfg = ForceSampleConfig::new(rmin.unwrap_or(base.r_min), rmax.unwrap_or(base.r_max))?;
            let mut src = RngStream::new(ctx.seed(common.seed)?, 0);
            let header: Vec<String> = ["fx", "fy", "fz"].iter().map(|s| s.to_string()).collect();
            let rows: Vec<Vec<String>> = (0..common.n)
                .map(|_| sampling::sample_hand_force(&cfg, &mut src).iter().map(f64::to_string).collect())
                .collect();
            (common, io::csv_bytes(&header, rows)?)
        }
        SampleCommand::DomainRand { common } => {
            let model = ctx.model()?;
            let ranges = &ctx.cfg.sampling.domain_randomization;
            let (n_joints, n_actions) = (model.dof(), model.subchains.lower_body.len());
            let mut src = RngStream::new(ctx.seed(common.seed)?, 0);
            let mut header: Vec<String> = [
                "push_interval_s",
                "push_vx",
                "push_vy",
                "control_delay",
                "payload_mass",
                "hand_payload_mass",
                "body_dx",
                "body_dy",
                "body_dz",
                "link_mass_scale",
                "friction",
                "restitution",
                "kp_scale",
                "kd_scale",
                "initial_q_scale",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            header.extend((0..n_joints).map(|j| format!("joint_noise_{j}")));
            header.extend((0..n_actions).map(|j| format!("actuation_offset_{j}")));
            header.extend((0..n_joints).map(|j| format!("initial_q_offset_{j}")));
            let rows: Vec<Vec<String>> = (0..common.n)
                .map(|_| {
                    let d = sampling::sample_domain_randomization(ranges, n_joints, n_actions, &mut src);
                    let mut r: Vec<String> = [d.push_interval_s, d.push_velocity_xy[0], d.push_velocity_xy[1]]
                        .iter()
                        .map(f64::to_string)
                        .collect();
                    r.push(u8::from(d.control_delay).to_string());
                    r.extend(
                        [
                            d.payload_mass,
                            d.hand_payload_mass,
                            d.body_displacement[0],
                            d.body_displacement[1],
                            d.body_displacement[2],
                            d.link_mass_scale,
                            d.friction,
                            d.restitution,
                            d.kp_scale,
                            d.kd_scale,
                            d.initial_q_scale,
                        ]
                        .iter()
                        .map(f64::to_string),
                    );
                    r.extend(d.joint_injection_noise.iter().map(f64::to_string));
                    r.extend(d.actuation_offset.iter().map(f64::to_string));
                    r.extend(d.initial_q_offset.iter().map(f64::to_string));
                    r
                })
                .collect();
            (common, io::csv_bytes(&header, rows)?)
        }
    };
    io::emit(common.out.as_deref(), &bytes)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardFile {
    /// Full-body default posture; the C1 stance at the input's `h_cmd`
    /// when absent.
    q_default: Option<Vec<f64>>,
    input: RewardInput,
}

fn cmd_reward(ctx: &Context, args: &RewardArgs) -> Result<(), CliError> {
    let model = ctx.model()?;
    let file: RewardFile = read_json(&args.input)?;
    let q_default = match file.q_default {
        Some(q) => q,
        None => harness::stance_posture(&model, &ArmConfig::C1.q_ub(), file.input.h_cmd)?,
    };
    let params = RewardParams::from_model(&model, q_default, ctx.cfg.reward.shaping)?;
    let breakdown = reward::evaluate(&file.input, &params, &ctx.cfg.reward_weights()?)?;
    print!("{}", to_json(&breakdown)?);
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EncoderInput {
    q_ub: Vec<f64>,
    f_left: [f64; 3],
    f_right: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InferFile {
    encoder: Option<EncoderInput>,
    actor: Option<Vec<f64>>,
    critic: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct InferOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    z: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    action: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
}

fn finite(what: &str, v: &[f64]) -> Result<(), CliError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(CliError {
            kind: error::Kind::Numeric,
            message: format!("non-finite value in {what}"),
        })
    }
}

fn cmd_infer(ctx: &Context, args: &InferArgs) -> Result<(), CliError> {
    let weights = ctx.weights(&args.weights)?;
    let file: InferFile = read_json(&args.input)?;
    let mut out = InferOutput {
        z: None,
        action: None,
        value: None,
    };
    if let Some(e) = &file.encoder {
        let z = policy::encoder_forward(&weights, &e.q_ub, &e.f_left, &e.f_right)?;
        finite("latent", &z)?;
        out.z = Some(z.to_vec());
    }
    if let Some(a) = file.actor {
        let action = policy::actor_forward(&weights, &ActorInput::from_vec(a)?)?;
        finite("action", &action)?;
        out.action = Some(action.to_vec());
    }
    if let Some(c) = file.critic {
        let v = policy::critic_forward(&weights, &CriticInput::from_vec(c)?)?;
        finite("value", &[v])?;
        out.value = Some(v);
    }
    print!("{}", to_json(&out)?);
    Ok(())
}

#[derive(Serialize)]
struct EpisodeSummary {
    episode: usize,
    steps: usize,
    resample_events: usize,
    final_rho_a: f64,
    success: bool,
}

fn cmd_episode(ctx: &Context, args: &EpisodeArgs) -> Result<(), CliError> {
    let model = ctx.model()?;
    let weights = ctx.weights(&args.weights)?;
    let e = &ctx.cfg.episode;
    let spec = EpisodeSpec {
        preset: args.cfg.unwrap_or(e.preset),
        h_cmd: args.h_cmd.unwrap_or(e.h_cmd),
        dt: args.dt.unwrap_or(e.dt),
        horizon: args.horizon.unwrap_or(e.horizon),
        disturbance: args.disturbance.clone().unwrap_or_else(|| e.disturbance.clone()),
        rho_a: args.rho_a.unwrap_or(e.rho_a),
        kappa: ctx.cfg.sampling.kappa,
        curriculum: ctx.cfg.curriculum,
        control: ctx.cfg.control.clone(),
        scales: ctx.cfg.observation,
        estimator: ctx.cfg.estimator,
        shaping: ctx.cfg.reward.shaping,
        weights: ctx.cfg.reward_weights()?,
    };
    if !(0.0..=1.0).contains(&spec.rho_a) {
        return Err(CliError::validation(format!("rho_a = {} must lie in [0, 1]", spec.rho_a)));
    }
    let count = args.episodes.unwrap_or(e.episodes);
    if count == 0 {
        return Err(CliError::validation("--episodes must be >= 1"));
    }
    let seed = ctx.seed(args.seed)?;
    let time_constant = e.plant_time_constant;
    let traces: Vec<harness::EpisodeTrace> = {
        use rayon::prelude::*;
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut plant = KinematicPlant::new(time_constant);
                let mut src = RngStream::new(seed, i as u64);
                harness::run_episode(&model, &weights, &spec, &mut plant, &mut src)
            })
            .collect::<Result<_, _>>()?
    };
    let header = harness::StepRecord::csv_header();
    let csv_of = |t: &harness::EpisodeTrace| io::csv_bytes(&header, t.steps.iter().map(|s| s.csv_row()));
    let summaries: Vec<EpisodeSummary> = traces
        .iter()
        .enumerate()
        .map(|(i, t)| EpisodeSummary {
            episode: i,
            steps: t.steps.len(),
            resample_events: t.resample_events,
            final_rho_a: t.final_rho_a,
            success: t.success,
        })
        .collect();
    match (&args.out, count) {
        (None, 1) => io::emit(None, &csv_of(&traces[0])?),
        (None, _) => Err(CliError::input("--out DIR is required for more than one episode")),
        (Some(path), 1) => {
            io::write_file(path, &csv_of(&traces[0])?)?;
            print!("{}", to_json(&summaries[0])?);
            Ok(())
        }
        (Some(dir), _) => {
            for (i, t) in traces.iter().enumerate() {
                io::write_file(&dir.join(format!("episode_{i:04}.csv")), &csv_of(t)?)?;
            }
            let text = to_json(&summaries)?;
            io::write_file(&dir.join("episodes_summary.json"), text.as_bytes())?;
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_init_weights(args: &InitWeightsArgs) -> Result<(), CliError> {
    let bundle = match args.seed {
        Some(seed) => WeightBundle::random(seed, args.scale),
        None => WeightBundle::zeros(),
    };
    let stem = args
        .out
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CliError::input(format!("{}: bad manifest name", args.out.display())))?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    bundle.save(&args.out, &format!("{stem}.bin"))?;
    Ok(())
}

#[derive(Serialize)]
struct ModelSummary {
    dof: usize,
    links: usize,
    total_mass: f64,
    humanoid: bool,
    joints: Vec<String>,
    presets: BTreeMap<String, String>,
}

fn cmd_validate_model(ctx: &Context, args: &ValidateModelArgs) -> Result<(), CliError> {
    let model = match &args.path {
        Some(p) => model::load_model(p)?,
        None => ctx.model()?,
    };
    if args.dump {
        print!("{}", model.to_toml_string());
        return Ok(());
    }
    let mut presets = BTreeMap::new();
    let mut failed = None;
    if model.is_humanoid() {
        for c in ArmConfig::ALL {
            let status = match model::preset(c.id()).and_then(|p| p.validate(&model)) {
                Ok(()) => "ok".to_string(),
                Err(e) => {
                    failed.get_or_insert_with(|| e.to_string());
                    e.to_string()
                }
            };
            presets.insert(c.id().to_string(), status);
        }
    }
    let all: Vec<usize> = (0..model.dof()).collect();
    let summary = ModelSummary {
        dof: model.dof(),
        links: model.links.len(),
        total_mass: model.total_mass(),
        humanoid: model.is_humanoid(),
        joints: model.names(&all).into_iter().map(String::from).collect(),
        presets,
    };
    print!("{}", to_json(&summary)?);
    match failed {
        Some(e) => Err(CliError::validation(e)),
        None => Ok(()),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &cli.model {
        if !p.exists() {
            return Err(CliError::input(format!("{}: file not found", p.display())));
        }
    }
    let ctx = Context {
        cfg,
        model_override: cli.model.clone(),
    };
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(&ctx, a),
        Command::Sweep(a) => cmd_sweep(&ctx, a),
        Command::Sample(c) => cmd_sample(&ctx, c),
        Command::Reward(a) => cmd_reward(&ctx, a),
        Command::Infer(a) => cmd_infer(&ctx, a),
        Command::Episode(a) => cmd_episode(&ctx, a),
        Command::InitWeights(a) => cmd_init_weights(a),
        Command::ValidateModel(a) => cmd_validate_model(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(0) => Err(CliError::input("--threads must be >= 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(CliError::input(format!("thread pool: {e}"))),
        },
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
