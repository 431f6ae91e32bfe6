use fame_core::dynamics::{center_of_mass, forward_kinematics};
use fame_core::harness::{
    base_height, quasi_static_feasible, run_episode, run_episodes, run_sweep, stance_posture, Disturbance, EpisodeSpec,
    HarnessError, KinematicPlant, SupportPolygon, SweepMode, SweepSpec,
};
use fame_core::model::{ArmConfig, ChainModel, Side};
use fame_core::policy::WeightBundle;
use fame_core::sampling::RngStream;
use nalgebra::Vector3;

fn grid_spec() -> SweepSpec {
    SweepSpec {
        mode: SweepMode::Grid { nx: 9, ny: 9, nz: 5 },
        seed: 3,
        ..Default::default()
    }
}

#[test]
fn vertical_push_threshold_matches_hand_calculation() {
    let model = ChainModel::bundled();
    let q = stance_posture(&model, &ArmConfig::C1.q_ub(), 0.9).unwrap();
    let kin = forward_kinematics(&model, &q).unwrap();
    let polygon = SupportPolygon::from_feet(&model, &kin).unwrap();
    let x_max = polygon.vertices().iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
    let (mass, com) = center_of_mass(&model, &kin);
    let g = -model.gravity.z;
    let (wl, wr) = (kin.wrist(Side::Left).unwrap().position, kin.wrist(Side::Right).unwrap().position);
    assert!((wl.x - wr.x).abs() < 1e-12);
    assert!(wl.x > x_max);
    // downward push f on each hand moves the pressure centre to x_max at f*
    let f_star = mass * g * (x_max - com.x) / (2.0 * (wl.x - x_max));
    for (factor, ok) in [(0.9, true), (1.1, false)] {
        let f = Vector3::new(0.0, 0.0, -factor * f_star);
        let r = quasi_static_feasible(&model, &q, &f, &f, &polygon).unwrap();
        assert_eq!(r.success, ok, "factor {factor}: margin {}", r.margin);
        let want_x = (mass * g * com.x + 2.0 * factor * f_star * wl.x) / (mass * g + 2.0 * factor * f_star);
        assert!((r.cop[0] - want_x).abs() < 1e-9);
        assert!((r.normal_force - (mass * g + 2.0 * factor * f_star)).abs() < 1e-9);
    }
}

#[test]
fn upward_pull_beyond_weight_is_infeasible() {
    let model = ChainModel::bundled();
    let q = stance_posture(&model, &ArmConfig::C2.q_ub(), 0.8).unwrap();
    let kin = forward_kinematics(&model, &q).unwrap();
    let polygon = SupportPolygon::from_feet(&model, &kin).unwrap();
    let w = model.total_mass() * 9.81;
    let f = Vector3::new(0.0, 0.0, 0.6 * w);
    let r = quasi_static_feasible(&model, &q, &f, &f, &polygon).unwrap();
    assert!(!r.success);
    assert_eq!(r.margin, f64::NEG_INFINITY);
}

#[test]
fn stance_meets_commanded_height() {
    let model = ChainModel::bundled();
    for cfg in ArmConfig::ALL {
        for h in [0.7, 0.8, 0.9, 1.0] {
            let q = stance_posture(&model, &cfg.q_ub(), h).unwrap();
            let kin = forward_kinematics(&model, &q).unwrap();
            assert!((base_height(&model, &kin).unwrap() - h).abs() < 1e-9);
            assert_eq!(&q[..15], &cfg.q_ub());
        }
    }
    assert!(matches!(
        stance_posture(&model, &ArmConfig::C1.q_ub(), 2.0),
        Err(HarnessError::Unreachable { .. })
    ));
}

#[test]
fn zero_force_always_succeeds() {
    let model = ChainModel::bundled();
    let spec = SweepSpec {
        fx: [0.0, 0.0],
        fy: [0.0, 0.0],
        fz: [0.0, 0.0],
        mode: SweepMode::Random { trials: 50 },
        ..Default::default()
    };
    let out = run_sweep(&model, &spec).unwrap();
    assert!(out.cells.iter().all(|c| c.success && c.margin > 0.0));
}

#[test]
fn success_is_star_shaped_in_force() {
    let model = ChainModel::bundled();
    let base = SweepSpec {
        fx: [-150.0, 150.0],
        fy: [-150.0, 150.0],
        fz: [-250.0, 250.0],
        ..grid_spec()
    };
    let full = run_sweep(&model, &base).unwrap();
    assert!(full.cells.iter().any(|c| !c.success), "range too small to be informative");
    for alpha in [0.25, 0.5, 0.75] {
        let scaled = SweepSpec {
            fx: base.fx.map(|v| alpha * v),
            fy: base.fy.map(|v| alpha * v),
            fz: base.fz.map(|v| alpha * v),
            ..base.clone()
        };
        let out = run_sweep(&model, &scaled).unwrap();
        for (a, b) in full.cells.iter().zip(&out.cells) {
            assert_eq!((a.cfg, a.index, a.h_cmd), (b.cfg, b.index, b.h_cmd));
            assert!(!a.success || b.success, "{:?} {} at alpha {alpha}", a.cfg, a.index);
        }
    }
}

#[test]
fn shrunk_polygon_successes_are_a_subset() {
    let model = ChainModel::bundled();
    let spec = SweepSpec {
        fx: [-120.0, 120.0],
        fy: [-120.0, 120.0],
        fz: [-200.0, 200.0],
        ..grid_spec()
    };
    let full = run_sweep(&model, &spec).unwrap();
    let half = run_sweep(&model, &SweepSpec { polygon_scale: 0.5, ..spec }).unwrap();
    let (mut n_full, mut n_half) = (0, 0);
    for (a, b) in full.cells.iter().zip(&half.cells) {
        assert!(!b.success || a.success);
        n_full += usize::from(a.success);
        n_half += usize::from(b.success);
    }
    assert!(n_half < n_full);
}

#[test]
fn sweep_is_thread_count_independent() {
    let model = ChainModel::bundled();
    let spec = SweepSpec {
        mode: SweepMode::Random { trials: 200 },
        seed: 9,
        ..Default::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_sweep(&model, &spec).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one.cells.len(), 5 * 200);
    let other = run_sweep(&model, &SweepSpec { seed: 10, ..spec.clone() }).unwrap();
    assert_ne!(one.cells, other.cells);
}

#[test]
fn polygon_validation() {
    assert!(SupportPolygon::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
    assert!(SupportPolygon::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
    assert!(SupportPolygon::new(vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.2], [1.0, 1.0]]).is_err());
    let cw = SupportPolygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
    assert!((cw.signed_distance([0.5, 0.5]) - 0.5).abs() < 1e-15);
    let half = cw.scaled(0.5).unwrap();
    assert!((half.signed_distance([0.5, 0.5]) - 0.25).abs() < 1e-15);
}

#[test]
fn zero_weights_hold_the_default_stance() {
    let model = ChainModel::bundled();
    let spec = EpisodeSpec {
        horizon: 1.0,
        disturbance: Disturbance::Random { r_min: 0.0, r_max: 30.0 },
        ..Default::default()
    };
    let w = WeightBundle::zeros();
    let trace = run_episode(&model, &w, &spec, &mut KinematicPlant::default(), &mut RngStream::new(1, 0)).unwrap();
    assert_eq!(trace.steps.len(), 50);
    let q0 = stance_posture(&model, &spec.preset.q_ub(), spec.h_cmd).unwrap();
    let q0_lb: Vec<f64> = model.subchains.lower_body.iter().map(|&j| q0[j]).collect();
    for s in &trace.steps {
        assert_eq!(s.action, vec![0.0; 12]);
        assert!(s.q_target_lb.iter().zip(&q0_lb).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!((s.h_base - spec.h_cmd).abs() < 1e-9);
        assert!(s.upright);
        for (est, f) in [(s.estimate_left, s.force_left), (s.estimate_right, s.force_right)] {
            let err: f64 = est.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(err < 1e-6);
        }
    }
    assert!(trace.success);
}

#[test]
fn episodes_replay_exactly() {
    let model = ChainModel::bundled();
    let spec = EpisodeSpec {
        horizon: 2.0,
        disturbance: Disturbance::Random { r_min: 5.0, r_max: 25.0 },
        rho_a: 0.5,
        ..Default::default()
    };
    let w = WeightBundle::random(4, 0.5);
    let a = run_episodes(&model, &w, &spec, 12, 3).unwrap();
    let b = run_episodes(&model, &w, &spec, 12, 3).unwrap();
    assert_eq!(a, b);
    assert_ne!(a[0].steps, a[1].steps);
}

#[test]
fn nan_weights_stop_at_the_actor() {
    let model = ChainModel::bundled();
    let mut w = WeightBundle::zeros();
    let last = w.actor.layers.len() - 1;
    w.actor.layers[last].bias[0] = f64::NAN;
    let err = run_episode(&model, &w, &EpisodeSpec::default(), &mut KinematicPlant::default(), &mut RngStream::new(0, 0))
        .unwrap_err();
    assert!(matches!(err, HarnessError::NonFinite { stage: "actor", step: 0 }), "{err}");
}

#[test]
fn uneven_horizon_rejected() {
    let spec = EpisodeSpec {
        horizon: 0.031,
        ..Default::default()
    };
    assert!(spec.steps().is_err());
}
