use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iterations per action and the regression window length.
pub const WINDOW: usize = 10;
/// `x1` above this (with `x2 = 1`) counts as converged.
pub const CONVERGENCE_X1: f64 = 3.5;
pub const X1_CLAMP: f64 = 10.0;
const SLOPE_FLOOR: f64 = 1e-10;

/// The agent's observation: `x1 = -log10|slope|` of the latest energy
/// window, `x2 = 1` when that window reached a new minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlState {
    pub x1: f64,
    pub x2: bool,
}

impl RlState {
    /// Observation before any window has been seen.
    pub const INITIAL: RlState = RlState { x1: 0.0, x2: true };

    pub fn is_converged(&self) -> bool {
        self.x1 > CONVERGENCE_X1 && self.x2
    }

    /// Network input; `x1` is scaled onto `[-1, 1]`.
    pub fn features(&self) -> [f64; 2] {
        [self.x1 / X1_CLAMP, if self.x2 { 1.0 } else { 0.0 }]
    }
}

/// Ordinary least-squares slope of `values` against `0..len`.
pub fn ols_slope(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean_i = (n - 1.0) / 2.0;
    let mean_v = values.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        let di = i as f64 - mean_i;
        num += di * (v - mean_v);
        den += di * di;
    }
    num / den
}

pub fn compute_state(window: &[f64], tracked_min: f64) -> Result<RlState> {
    if window.len() < WINDOW {
        return Err(Error::Contract(format!(
            "state needs {WINDOW} energies, got {}",
            window.len()
        )));
    }
    let window = &window[window.len() - WINDOW..];
    let slope = ols_slope(window).abs();
    let x1 = if slope < SLOPE_FLOOR || slope.is_nan() {
        X1_CLAMP
    } else {
        (-slope.log10()).clamp(-X1_CLAMP, X1_CLAMP)
    };
    let current = window.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RlState {
        x1,
        x2: current <= tracked_min,
    })
}

/// Tracks the running minimum across windows and produces each new state.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowTracker {
    tracked_min: f64,
}

impl Default for WindowTracker {
    fn default() -> Self {
        WindowTracker {
            tracked_min: f64::INFINITY,
        }
    }
}

impl WindowTracker {
    pub fn tracked_min(&self) -> f64 {
        self.tracked_min
    }

    /// State for the just-finished `window`, then folds it into the minimum.
    pub fn observe(&mut self, window: &[f64]) -> Result<RlState> {
        let state = compute_state(window, self.tracked_min)?;
        let current = window.iter().copied().fold(f64::INFINITY, f64::min);
        self.tracked_min = self.tracked_min.min(current);
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_window() {
        let s = compute_state(&[-1.0; 10], -0.9).unwrap();
        assert_eq!(s, RlState { x1: 10.0, x2: true });
    }

    #[test]
    fn rising_window() {
        let w: Vec<f64> = (0..10).map(|i| -1.0 + 0.01 * i as f64).collect();
        let s = compute_state(&w, -2.0).unwrap();
        assert!((s.x1 - 2.0).abs() < 1e-9);
        assert!(!s.x2);
    }

    #[test]
    fn threshold_window() {
        let slope = -(10f64.powf(-3.5));
        let w: Vec<f64> = (0..10).map(|i| -1.0 + slope * i as f64).collect();
        let s = compute_state(&w, f64::INFINITY).unwrap();
        assert!((s.x1 - 3.5).abs() < 1e-9);
        let nudged: Vec<f64> = (0..10).map(|i| -1.0 + 0.99 * slope * i as f64).collect();
        assert!(compute_state(&nudged, f64::INFINITY).unwrap().is_converged());
    }

    #[test]
    fn short_window_is_contract_error() {
        assert!(matches!(compute_state(&[0.0; 9], 0.0), Err(Error::Contract(_))));
    }

    #[test]
    fn steep_slope_clamps() {
        let w: Vec<f64> = (0..10).map(|i| 1e12 * i as f64).collect();
        assert_eq!(compute_state(&w, 0.0).unwrap().x1, -10.0);
    }

    #[test]
    fn tracker_first_window_is_new_minimum() {
        let mut t = WindowTracker::default();
        assert!(t.observe(&[5.0; 10]).unwrap().x2);
        assert!(!t.observe(&[5.1; 10]).unwrap().x2);
        assert!(t.observe(&[5.0; 10]).unwrap().x2);
        assert_eq!(t.tracked_min(), 5.0);
    }
}
