//! Upper-body action-ratio curriculum.
//!
//! `rho_a` starts at zero and grows by `delta_rho` whenever the
//! height-tracking reward beats `threshold`. The trigger is evaluated once per
//! window (default: one 10 s evaluation horizon) on the window-averaged
//! reward. `tick` separately tracks when upper-body targets are due for
//! resampling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid curriculum setting: {0}")]
pub struct CurriculumError(pub String);

/// Relative slack when comparing accumulated time against a period, so that
/// e.g. fifty 0.02 s ticks count as one full second.
const PERIOD_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurriculumConfig {
    pub delta_rho: f64,
    /// Height-reward trigger level (weighted reward units).
    pub threshold: f64,
    /// Upper-body target resample period (s).
    pub resample_period: f64,
    /// Averaging window for the trigger (s).
    pub trigger_window: f64,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            delta_rho: 0.01,
            threshold: 0.9 * 3.0,
            resample_period: 1.0,
            trigger_window: 10.0,
        }
    }
}

impl CurriculumConfig {
    pub fn validate(&self) -> Result<(), CurriculumError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.delta_rho) {
            return Err(CurriculumError(format!("delta_rho {} must be > 0", self.delta_rho)));
        }
        if !self.threshold.is_finite() {
            return Err(CurriculumError("threshold must be finite".into()));
        }
        if !positive(self.resample_period) {
            return Err(CurriculumError(format!("resample_period {} must be > 0", self.resample_period)));
        }
        if !positive(self.trigger_window) {
            return Err(CurriculumError(format!("trigger_window {} must be > 0", self.trigger_window)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurriculumState {
    pub rho_a: f64,
    pub delta_rho: f64,
    pub threshold: f64,
    pub resample_period: f64,
    pub elapsed_since_resample: f64,
    pub trigger_window: f64,
    pub window_elapsed: f64,
    pub window_reward_sum: f64,
    pub window_samples: u32,
}

impl CurriculumState {
    pub fn new(cfg: &CurriculumConfig) -> Result<Self, CurriculumError> {
        cfg.validate()?;
        Ok(Self {
            rho_a: 0.0,
            delta_rho: cfg.delta_rho,
            threshold: cfg.threshold,
            resample_period: cfg.resample_period,
            elapsed_since_resample: 0.0,
            trigger_window: cfg.trigger_window,
            window_elapsed: 0.0,
            window_reward_sum: 0.0,
            window_samples: 0,
        })
    }

    pub fn with_rho(mut self, rho_a: f64) -> Self {
        self.rho_a = rho_a.clamp(0.0, 1.0);
        self
    }

    /// Raises `rho_a` by `delta_rho` (saturating at 1) if the reward beats
    /// the threshold.
    #[must_use]
    pub fn maybe_advance(&self, height_reward: f64) -> CurriculumState {
        let mut next = *self;
        if height_reward > self.threshold {
            next.rho_a = (self.rho_a + self.delta_rho).min(1.0);
        }
        next
    }

    /// Advances the resample clock; the flag is set on the tick that crosses
    /// `resample_period`.
    #[must_use]
    pub fn tick(&self, dt: f64) -> (CurriculumState, bool) {
        debug_assert!(dt > 0.0);
        let mut next = *self;
        next.elapsed_since_resample += dt;
        let due = next.elapsed_since_resample >= self.resample_period * (1.0 - PERIOD_SLACK);
        if due {
            next.elapsed_since_resample = (next.elapsed_since_resample - self.resample_period).max(0.0);
        }
        (next, due)
    }

    /// Accumulates one step of height reward; at the end of each trigger
    /// window the window mean is fed to [`maybe_advance`](Self::maybe_advance).
    #[must_use]
    pub fn record(&self, height_reward: f64, dt: f64) -> (CurriculumState, bool) {
        let mut next = *self;
        next.window_elapsed += dt;
        next.window_reward_sum += height_reward;
        next.window_samples += 1;
        if next.window_elapsed >= self.trigger_window * (1.0 - PERIOD_SLACK) {
            let mean = next.window_reward_sum / f64::from(next.window_samples);
            next = next.maybe_advance(mean);
            next.window_elapsed = 0.0;
            next.window_reward_sum = 0.0;
            next.window_samples = 0;
            return (next, true);
        }
        (next, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> CurriculumState {
        CurriculumState::new(&CurriculumConfig::default()).unwrap()
    }

    #[test]
    fn below_threshold_holds() {
        let s = state().maybe_advance(1.0);
        assert_eq!(s.rho_a, 0.0);
    }

    #[test]
    fn saturates_at_one() {
        let mut s = state().with_rho(0.98);
        s.delta_rho = 0.05;
        assert_eq!(s.maybe_advance(3.0).rho_a, 1.0);
    }

    #[test]
    fn accumulates_linearly() {
        for n in [1usize, 10, 57, 100, 150] {
            let mut s = state();
            for _ in 0..n {
                s = s.maybe_advance(3.0);
            }
            let expect = (0.01 * n as f64).min(1.0);
            assert!((s.rho_a - expect).abs() < 1e-12, "{n}: {}", s.rho_a);
        }
    }

    #[test]
    fn one_second_at_fifty_hertz() {
        let mut s = state();
        let mut fired = 0;
        for _ in 0..50 {
            let (n, due) = s.tick(0.02);
            s = n;
            fired += due as usize;
        }
        assert_eq!(fired, 1);
    }

    #[test]
    fn half_second_ticks() {
        let s = state();
        let (s, first) = s.tick(0.5);
        let (_, second) = s.tick(0.5);
        assert!(!first);
        assert!(second);
    }

    #[test]
    fn counting_over_long_runs() {
        let mut s = state();
        let mut fired = 0;
        for _ in 0..10_000 {
            let (n, due) = s.tick(0.02);
            s = n;
            fired += due as usize;
        }
        assert_eq!(fired, 200);
    }

    #[test]
    fn window_trigger_uses_mean() {
        let mut s = state();
        let mut closes = 0;
        for _ in 0..500 {
            let (n, closed) = s.record(2.9, 0.02);
            s = n;
            closes += closed as usize;
        }
        assert_eq!(closes, 1);
        assert!((s.rho_a - 0.01).abs() < 1e-15);
    }

    #[test]
    fn invalid_config() {
        let cfg = CurriculumConfig {
            delta_rho: 0.0,
            ..Default::default()
        };
        assert!(CurriculumState::new(&cfg).is_err());
    }
}
