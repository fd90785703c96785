//! Records shared by the time-dependent solvers.

use num_complex::Complex64;

/// One point of a propagation time series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSample {
    pub t: f64,
    /// `C^H S C`.
    pub norm: f64,
    /// `C^H H(t) C / C^H S C`, rest energy subtracted, in hartree.
    pub energy: f64,
}

/// Final-state observables; absent ones stay `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Probabilities {
    pub p_1s: Option<f64>,
    pub p_minus: Option<f64>,
    pub p_bar_1s: Option<f64>,
    pub p_ct: Option<f64>,
}

/// Outcome of one propagation run.
#[derive(Clone, Debug)]
pub struct PropagationResult {
    pub samples: Vec<TimeSample>,
    pub final_coefficients: Vec<Complex64>,
    pub final_time: f64,
    pub steps: usize,
    /// Largest `|C^H S C - N_0| / N_0` seen during the run.
    pub max_norm_drift: f64,
    /// `<H(0)>` at closest approach, when the run passes `t = 0`.
    pub closest_approach_energy: Option<f64>,
    pub probabilities: Probabilities,
    /// Inner solver iterations summed over all steps (0 for direct solves).
    pub inner_iterations: usize,
}

/// Step schedule over `[t_start, t_end]`: uniform, or uniform on each side
/// of `t = 0` when `zero_step` is set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    /// Step index pinned to `t = 0`.
    pub zero_step: Option<usize>,
}

impl TimeGrid {
    pub fn uniform(t_start: f64, t_end: f64, steps: usize) -> Self {
        Self {
            t_start,
            t_end,
            steps,
            zero_step: None,
        }
    }

    /// Two uniform segments meeting at `t = 0`, with the steps shared in
    /// proportion to the segment lengths.
    pub fn through_zero(t_start: f64, t_end: f64, steps: usize) -> Self {
        let before = (-t_start / (t_end - t_start) * steps as f64).round() as usize;
        Self {
            t_start,
            t_end,
            steps,
            zero_step: Some(before.clamp(1, steps.max(2) - 1)),
        }
    }

    /// Mean step width.
    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps as f64
    }

    /// Time after `k` steps, computed from the ends to avoid accumulated rounding.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            return self.t_end;
        }
        match self.zero_step {
            Some(z) if k <= z => self.t_start * (z - k) as f64 / z as f64,
            Some(z) => self.t_end * (k - z) as f64 / (self.steps - z) as f64,
            None => self.t_start + self.dt() * k as f64,
        }
    }

    /// Width of step `k`, from `time(k)` to `time(k + 1)`.
    pub fn width(&self, k: usize) -> f64 {
        self.time(k + 1) - self.time(k)
    }

    /// Step index that lands on `t = 0`, if any.
    pub fn zero_crossing(&self) -> Option<usize> {
        if self.zero_step.is_some() {
            return self.zero_step;
        }
        (0..=self.steps).find(|&k| self.time(k).abs() <= 1e-9 * self.dt().abs())
    }
}
