use fame_core::model::{ArmConfig, ChainModel};
use fame_core::sampling::{
    ratio_from_uniform, sample_domain_randomization, sample_hand_force, sample_ratio, sample_ub_targets, DomainRandRanges,
    ForceSampleConfig, RandomSource, RngStream, ScriptedSource, DEFAULT_KAPPA,
};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn truncated_exp_cdf(x: f64, c: f64) -> f64 {
    if c == 0.0 {
        x
    } else {
        (-c * x).exp_m1() / (-c).exp_m1()
    }
}

#[test]
fn ratio_median_closed_form() {
    let got = ratio_from_uniform(0.0, DEFAULT_KAPPA, 0.5);
    let exact = (std::f64::consts::LN_2 - (-20.0f64).exp().ln_1p()) / 20.0;
    assert!((got - exact).abs() < 1e-15);
    assert!((got - 0.0346574).abs() < 1e-6);
}

#[test]
fn ratio_limits() {
    assert_eq!(ratio_from_uniform(1.0, DEFAULT_KAPPA, 0.3), 0.3);
    assert_eq!(ratio_from_uniform(0.2, DEFAULT_KAPPA, 0.0), 0.0);
    assert!((ratio_from_uniform(0.2, DEFAULT_KAPPA, 1.0) - 1.0).abs() < 1e-10);
    // continuous as rho_a -> 1
    assert!((ratio_from_uniform(1.0 - 1e-12, DEFAULT_KAPPA, 0.3) - 0.3).abs() < 1e-9);
    let mut src = RngStream::new(0, 0);
    assert!(sample_ratio(1.5, DEFAULT_KAPPA, &mut src).is_err());
    assert!(sample_ratio(0.5, 0.0, &mut src).is_err());
    assert!(sample_ratio(f64::NAN, DEFAULT_KAPPA, &mut src).is_err());
}

#[test]
fn ratio_matches_truncated_exponential() {
    for rho in [0.0, 0.5, 0.9] {
        let mut src = RngStream::new(31, 0);
        let mut xs: Vec<f64> = (0..20_000).map(|_| sample_ratio(rho, DEFAULT_KAPPA, &mut src).unwrap()).collect();
        xs.sort_by(f64::total_cmp);
        let c = DEFAULT_KAPPA * (1.0 - rho);
        let n = xs.len() as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = truncated_exp_cdf(x, c);
                (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
            })
            .fold(0.0, f64::max);
        assert!(d < 0.015, "rho {rho}: D = {d}");
    }
}

#[test]
fn scripted_force_draw_order() {
    let cfg = ForceSampleConfig::new(10.0, 20.0).unwrap();
    let mut src = ScriptedSource::new([0.5], [0.0, 3.0, 4.0]);
    let f = sample_hand_force(&cfg, &mut src);
    assert!((f - nalgebra::Vector3::new(0.0, 9.0, 12.0)).norm() < 1e-12);
}

#[test]
fn normals_are_standard() {
    let mut src = RngStream::new(32, 0);
    let mut xs: Vec<f64> = (0..20_000).map(|_| src.normal()).collect();
    xs.sort_by(f64::total_cmp);
    let dist = Normal::new(0.0, 1.0).unwrap();
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (dist.cdf(x) - i as f64 / n).abs())
        .fold(0.0, f64::max);
    assert!(d < 0.015, "{d}");
}

#[test]
fn streams_are_independent_and_reproducible() {
    let draw = |seed, stream| {
        let mut s = RngStream::new(seed, stream);
        (0..8).map(|_| s.uniform()).collect::<Vec<_>>()
    };
    assert_eq!(draw(5, 1), draw(5, 1));
    assert_ne!(draw(5, 1), draw(5, 2));
    assert_ne!(draw(5, 1), draw(6, 1));
}

#[test]
fn domain_randomization_draw_shapes() {
    let ranges = DomainRandRanges::default();
    let mut src = RngStream::new(33, 0);
    let d = sample_domain_randomization(&ranges, 27, 12, &mut src);
    assert_eq!(d.joint_injection_noise.len(), 27);
    assert_eq!(d.initial_q_offset.len(), 27);
    assert_eq!(d.actuation_offset.len(), 12);
    assert_eq!(d.push_interval_s, 4.0);
    assert!(d.control_delay);
    assert_eq!(d.hand_payload_mass, 0.0);
    let mut bad = ranges.clone();
    bad.friction = fame_core::sampling::Interval(3.0, 0.1);
    assert!(bad.validate().is_err());
}

proptest! {
    #[test]
    fn ratio_in_unit_interval_and_monotone(rho in 0.0f64..=1.0, kappa in 0.1f64..100.0, u in 0.0f64..1.0, du in 0.0f64..0.5) {
        let a = ratio_from_uniform(rho, kappa, u);
        let b = ratio_from_uniform(rho, kappa, (u + du).min(1.0));
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a - 1e-15);
    }

    #[test]
    fn ratio_grows_with_curriculum(kappa in 0.1f64..100.0, u in 0.01f64..0.99, r1 in 0.0f64..1.0, dr in 0.0f64..1.0) {
        let r2 = (r1 + dr).min(1.0);
        prop_assert!(ratio_from_uniform(r2, kappa, u) >= ratio_from_uniform(r1, kappa, u) - 1e-12);
    }

    #[test]
    fn upper_body_targets_stay_in_limits(seed in 0u64..1000, rho in 0.0f64..=1.0, cfg in 0usize..5) {
        let model = ChainModel::bundled();
        let q0 = ArmConfig::ALL[cfg].q_ub();
        let mut src = RngStream::new(seed, 0);
        let t = sample_ub_targets(&model, &q0, rho, &mut src).unwrap();
        for (k, &j) in model.subchains.upper_body.iter().enumerate() {
            let spec = &model.joints[j];
            prop_assert!(spec.contains(t[k]));
            // spread never exceeds rho' of the distance to each limit
            prop_assert!(t[k] >= q0[k] - rho * (q0[k] - spec.q_min) - 1e-12);
            prop_assert!(t[k] <= q0[k] + rho * (spec.q_max - q0[k]) + 1e-12);
        }
    }

    #[test]
    fn zero_ratio_returns_defaults(seed in 0u64..1000, cfg in 0usize..5) {
        let model = ChainModel::bundled();
        let q0 = ArmConfig::ALL[cfg].q_ub();
        let mut src = RngStream::new(seed, 0);
        prop_assert_eq!(sample_ub_targets(&model, &q0, 0.0, &mut src).unwrap(), q0.to_vec());
    }

    #[test]
    fn force_magnitude_in_range(seed in 0u64..1000, lo in 0.0f64..20.0, span in 0.0f64..40.0) {
        let cfg = ForceSampleConfig::new(lo, lo + span).unwrap();
        let mut src = RngStream::new(seed, 0);
        let n = sample_hand_force(&cfg, &mut src).norm();
        prop_assert!(n >= lo - 1e-9 && n <= lo + span + 1e-9);
    }
}
