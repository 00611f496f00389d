use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::SpectralError;

/// Uniform square frequency grid shared by the signal and idler axes.
///
/// Both axes use the same spacing; `center_s` and `center_i` set each
/// axis midpoint. Energy conservation `ω_s + ω_i = 2ω_p` lands exactly on
/// matrix anti-diagonals when `center_s + center_i = 2ω_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    center_s: f64,
    center_i: f64,
    span: f64,
    n_points: usize,
}

impl FrequencyGrid {
    pub fn new(center_s: f64, center_i: f64, span: f64, n_points: usize) -> Result<Self, SpectralError> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(SpectralError::InvalidGrid(format!(
                "n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        if !(span.is_finite() && span > 0.0) {
            return Err(SpectralError::InvalidGrid(format!("span must be positive, got {span}")));
        }
        if !(center_s.is_finite() && center_i.is_finite()) {
            return Err(SpectralError::InvalidGrid("centers must be finite".into()));
        }
        let lowest = center_s.min(center_i) - span / 2.0;
        if lowest <= 0.0 {
            return Err(SpectralError::InvalidGrid("grid extends to non-positive frequency".into()));
        }
        Ok(Self { center_s, center_i, span, n_points })
    }

    /// Grid whose inverse-transform delay axis has step `delay_step_s`:
    /// spacing Δω = 2π/(n·Δt), so the delay window is n·Δt wide.
    pub fn for_delay_step(
        center_s: f64,
        center_i: f64,
        n_points: usize,
        delay_step_s: f64,
    ) -> Result<Self, SpectralError> {
        if !(delay_step_s.is_finite() && delay_step_s > 0.0) {
            return Err(SpectralError::InvalidGrid("delay step must be positive".into()));
        }
        let spacing = 2.0 * PI / (n_points as f64 * delay_step_s);
        Self::new(center_s, center_i, spacing * (n_points as f64 - 1.0), n_points)
    }

    /// Degenerate grid: both axes centered on the pump.
    pub fn centered_on(pump_center: f64, span: f64, n_points: usize) -> Result<Self, SpectralError> {
        Self::new(pump_center, pump_center, span, n_points)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn center_s(&self) -> f64 {
        self.center_s
    }

    pub fn center_i(&self) -> f64 {
        self.center_i
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    /// Δω, identical on both axes.
    pub fn spacing(&self) -> f64 {
        self.span / (self.n_points as f64 - 1.0)
    }

    /// Step of the conjugate delay axis, 2π/(n·Δω).
    pub fn delay_step(&self) -> f64 {
        2.0 * PI / (self.n_points as f64 * self.spacing())
    }

    pub fn signal(&self, idx: usize) -> f64 {
        self.center_s - self.span / 2.0 + idx as f64 * self.spacing()
    }

    pub fn idler(&self, idx: usize) -> f64 {
        self.center_i - self.span / 2.0 + idx as f64 * self.spacing()
    }

    pub fn signal_axis(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.signal(i)).collect()
    }

    pub fn idler_axis(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.idler(i)).collect()
    }

    /// Pump frequencies for which `2ω_p` lies inside the span of `ω_s + ω_i`.
    pub fn pump_range(&self) -> (f64, f64) {
        let mid = 0.5 * (self.center_s + self.center_i);
        (mid - self.span / 2.0, mid + self.span / 2.0)
    }

    pub fn signal_range(&self) -> (f64, f64) {
        (self.signal(0), self.signal(self.n_points - 1))
    }

    pub fn idler_range(&self) -> (f64, f64) {
        (self.idler(0), self.idler(self.n_points - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(FrequencyGrid::new(1e15, 1e15, 1e13, 100).is_err());
        assert!(FrequencyGrid::new(1e15, 1e15, 1e13, 4).is_err());
        assert!(FrequencyGrid::new(1e15, 1e15, 0.0, 16).is_err());
    }

    #[test]
    fn axis_is_strictly_increasing_with_uniform_spacing() {
        let g = FrequencyGrid::new(1.2e15, 1.3e15, 4e13, 64).unwrap();
        let ax = g.signal_axis();
        for w in ax.windows(2) {
            assert!(w[1] > w[0]);
            assert!(((w[1] - w[0]) - g.spacing()).abs() < 1.0);
        }
        assert!((ax[63] - ax[0] - g.span()).abs() < 1.0);
    }

    #[test]
    fn delay_step_grid_round_trips() {
        let g = FrequencyGrid::for_delay_step(1.2e15, 1.3e15, 512, 1e-12).unwrap();
        assert!((g.delay_step() - 1e-12).abs() < 1e-24);
    }
}
