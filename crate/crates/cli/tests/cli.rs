use std::path::Path;
use std::process::{Command, Output};

fn fame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fame")).args(args).output().unwrap()
}

fn fame_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fame")).env(key, value).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn state_csv(dir: &Path, q: &[f64], tau: &[f64]) -> String {
    let row = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
    let path = dir.join("state.csv");
    std::fs::write(&path, format!("q,{}\nqd,{}\ntau,{}\n", row(q), row(&vec![0.0; q.len()]), row(tau))).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn estimate_reports_both_hands() {
    let dir = tempfile::tempdir().unwrap();
    let model = fame_core::model::ChainModel::bundled();
    let q = fame_core::harness::stance_posture(&model, &fame_core::model::ArmConfig::C1.q_ub(), 0.9).unwrap();
    let f = nalgebra::Vector3::new(4.0, -2.0, 6.0);
    let tau = fame_core::dynamics::static_torques_with_wrenches(&model, &q, &f, &nalgebra::Vector3::zeros()).unwrap();
    let path = state_csv(dir.path(), &q, tau.as_slice());
    let out = fame(&["estimate", "--state", &path]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let left: Vec<f64> = serde_json::from_value(v["left"]["force"].clone()).unwrap();
    assert!((left[0] - 4.0).abs() < 1e-6 && (left[2] - 6.0).abs() < 1e-6, "{left:?}");
    assert!(v["right"]["force"][0].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // missing input
    assert_eq!(code(&fame(&["estimate", "--state", "/nonexistent.csv"])), 2);
    // usage error
    assert_eq!(code(&fame(&["sweep", "--bogus"])), 2);
    assert_eq!(code(&fame(&["sweep", "--grid", "2x2x2", "--random"])), 2);
    // dimension mismatch
    let short = state_csv(dir.path(), &[0.0; 5], &[0.0; 5]);
    assert_eq!(code(&fame(&["estimate", "--state", &short])), 3);
    // validation
    assert_eq!(code(&fame(&["sample", "targets", "--rho-prime", "1.5"])), 3);
    assert_eq!(code(&fame(&["sample", "force", "--rmin", "5", "--rmax", "1"])), 3);
    assert_eq!(code(&fame(&["estimate", "--state", &short, "--cutoff", "0"])), 3);
    // non-finite weights
    let manifest = dir.path().join("w.manifest");
    assert_eq!(code(&fame(&["init-weights", "--out", manifest.to_str().unwrap()])), 0);
    let bin = dir.path().join("w.bin");
    let mut bytes = std::fs::read(&bin).unwrap();
    bytes[..4].copy_from_slice(&f32::INFINITY.to_le_bytes());
    std::fs::write(&bin, bytes).unwrap();
    let out = fame(&["episode", "--horizon", "0.1", "--weights", manifest.to_str().unwrap()]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&fame(&["--threads", "0", "sample", "ratio"])), 2);
}

#[test]
fn weights_round_trip_through_infer() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("nets/policy.manifest");
    let m = manifest.to_str().unwrap();
    assert_eq!(code(&fame(&["init-weights", "--out", m, "--seed", "3"])), 0);
    assert!(dir.path().join("nets/policy.bin").exists());
    let input = dir.path().join("infer.json");
    let actor: Vec<f64> = (0..252).map(|i| (i as f64 * 0.01).sin()).collect();
    let critic = vec![0.1; 87];
    std::fs::write(
        &input,
        serde_json::json!({
            "encoder": {"q_ub": vec![0.0; 15], "f_left": [1.0, 0.0, 0.0], "f_right": [0.0, 0.0, -2.0]},
            "actor": actor,
            "critic": critic,
        })
        .to_string(),
    )
    .unwrap();
    let i = input.to_str().unwrap();
    let from_file = fame(&["infer", "--input", i, "--weights", m]);
    let from_seed = fame(&["infer", "--input", i, "--random-weights", "3"]);
    assert_eq!(code(&from_file), 0);
    assert_eq!(from_file.stdout, from_seed.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&from_file)).unwrap();
    assert_eq!(v["z"].as_array().unwrap().len(), 8);
    assert_eq!(v["action"].as_array().unwrap().len(), 12);
    assert!(v["value"].is_f64());
    assert_eq!(code(&fame(&["infer", "--input", i])), 2);

    std::fs::write(&input, serde_json::json!({ "actor": vec![0.0; 250] }).to_string()).unwrap();
    assert_eq!(code(&fame(&["infer", "--input", i, "--zero-weights"])), 3);
}

#[test]
fn sweep_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let o = out_dir.to_str().unwrap();
    let out = fame(&["sweep", "--cfg", "C1,C3", "--grid", "3x3x2", "--out", o]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("C1 1.0000 (18/18)"), "{text}");
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "cfg,fx,fy,fz,h_cmd,success,margin");
    assert_eq!(csv.lines().count(), 1 + 36);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("sweep_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["configs"]["C3"]["cells"], 18);
    assert!(std::fs::read_to_string(out_dir.join("sweep.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 5\n").unwrap();
    let c = cfg.to_str().unwrap();
    let draw = |args: &[&str]| stdout(&fame(args));
    let with_cfg = draw(&["--config", c, "sample", "ratio", "--n", "5"]);
    assert_eq!(with_cfg, draw(&["sample", "ratio", "--n", "5", "--seed", "5"]));
    assert_eq!(
        draw(&["--config", c, "sample", "ratio", "--n", "5", "--seed", "9"]),
        draw(&["sample", "ratio", "--n", "5", "--seed", "9"])
    );
    let env = stdout(&fame_env(&["sample", "ratio", "--n", "5"], "FAME_SEED", "5"));
    assert_eq!(env, with_cfg);
    let env_loses = stdout(&fame_env(&["--config", c, "sample", "ratio", "--n", "5"], "FAME_SEED", "7"));
    assert_eq!(env_loses, with_cfg);
    assert_eq!(code(&fame_env(&["sample", "ratio"], "FAME_SEED", "abc")), 2);
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "sede = 5\n").unwrap();
    assert_eq!(code(&fame(&["--config", cfg.to_str().unwrap(), "sample", "ratio"])), 2);
    std::fs::write(&cfg, "[sampling]\nkappa = -1.0\n").unwrap();
    assert_eq!(code(&fame(&["--config", cfg.to_str().unwrap(), "sample", "ratio"])), 3);
    std::fs::write(&cfg, "model = \"missing.toml\"\n").unwrap();
    assert_eq!(code(&fame(&["--config", cfg.to_str().unwrap(), "sample", "ratio"])), 2);
}

#[test]
fn episode_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let single = fame(&["episode", "--horizon", "0.2", "--zero-weights"]);
    assert_eq!(code(&single), 0);
    assert_eq!(stdout(&single).lines().count(), 1 + 10);
    let out_dir = dir.path().join("eps");
    let o = out_dir.to_str().unwrap();
    let many = fame(&["episode", "--horizon", "0.2", "--episodes", "3", "--zero-weights", "--out", o]);
    assert_eq!(code(&many), 0);
    for i in 0..3 {
        assert!(out_dir.join(format!("episode_{i:04}.csv")).exists());
    }
    let summary: serde_json::Value = serde_json::from_str(&stdout(&many)).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 3);
    assert_eq!(code(&fame(&["episode", "--horizon", "0.2", "--episodes", "3", "--zero-weights"])), 2);
    assert_eq!(code(&fame(&["episode", "--horizon", "0.03", "--zero-weights"])), 3);
}

#[test]
fn validate_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = fame(&["validate-model"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["dof"], 27);
    assert_eq!(v["presets"]["C5"], "ok");
    let dumped = fame(&["validate-model", "--dump"]);
    let path = dir.path().join("model.toml");
    std::fs::write(&path, &dumped.stdout).unwrap();
    let again = fame(&["--model", path.to_str().unwrap(), "validate-model"]);
    assert_eq!(again.stdout, out.stdout);
    std::fs::write(&path, "gravity = [0.0, 0.0, -9.81]\n[[links]]\nname = \"a\"\n").unwrap();
    assert_ne!(code(&fame(&["validate-model", path.to_str().unwrap()])), 0);
}

#[test]
fn reward_defaults_to_stance_posture() {
    let dir = tempfile::tempdir().unwrap();
    let model = fame_core::model::ChainModel::bundled();
    let params = fame_core::reward::RewardParams::from_model(&model, vec![0.0; 27], Default::default()).unwrap();
    let q = fame_core::harness::stance_posture(&model, &fame_core::model::ArmConfig::C1.q_ub(), 0.9).unwrap();
    let input = fame_core::reward::RewardInput::neutral(&params, q, 0.9);
    let path = dir.path().join("reward.json");
    std::fs::write(&path, serde_json::json!({ "input": input }).to_string()).unwrap();
    let out = fame(&["reward", "--input", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let terms = v["terms"].as_array().unwrap();
    let get = |n: &str| terms.iter().find(|t| t["name"] == n).unwrap()["raw"].as_f64().unwrap();
    assert_eq!(get("height_tracking"), 1.0);
    assert_eq!(get("hip_deviation"), 0.0);
    assert_eq!(get("ankle_deviation"), 0.0);
}
