use nalgebra::{DMatrix, DVector};

use super::ChshError;

/// C(Δ) = A(1 + V cos(2Δ + δ))/2 with Δ in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub amplitude: f64,
    pub visibility: f64,
    /// δ, rad, in (−π, π].
    pub phase_offset: f64,
    /// Set when the fitted visibility exceeds 1 beyond the tolerance.
    pub exceeds_unity: bool,
    pub rms_residual: f64,
}

impl FringeFit {
    pub fn eval(&self, delta_rad: f64) -> f64 {
        0.5 * self.amplitude * (1.0 + self.visibility * (2.0 * delta_rad + self.phase_offset).cos())
    }

    pub fn eval_deg(&self, delta_deg: f64) -> f64 {
        self.eval(delta_deg.to_radians())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFitOptions {
    pub min_points: usize,
    /// Visibility above 1 + this is flagged.
    pub unity_tolerance: f64,
}

impl Default for FringeFitOptions {
    fn default() -> Self {
        Self { min_points: 8, unity_tolerance: 1e-6 }
    }
}

/// Linear least squares on `c₀ + c₁cos2Δ + c₂sin2Δ`: A = 2c₀,
/// V = √(c₁² + c₂²)/c₀, δ = atan2(−c₂, c₁).
pub fn fit_fringe(points: &[(f64, f64)], opts: FringeFitOptions) -> Result<FringeFit, ChshError> {
    if points.len() < opts.min_points {
        return Err(ChshError::FitDiverged(format!("need {} points, got {}", opts.min_points, points.len())));
    }
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.0), h.max(p.0)));
    // half of the π period of cos 2Δ
    if !(hi - lo > std::f64::consts::FRAC_PI_2) {
        return Err(ChshError::FitDiverged("sweep spans less than half a period".into()));
    }
    if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(ChshError::FitDiverged("non-finite sweep point".into()));
    }
    let n = points.len();
    let m = DMatrix::from_fn(n, 3, |r, c| {
        let x = 2.0 * points[r].0;
        match c {
            0 => 1.0,
            1 => x.cos(),
            _ => x.sin(),
        }
    });
    let y = DVector::from_iterator(n, points.iter().map(|p| p.1));
    let coef = m
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| ChshError::FitDiverged(e.to_string()))?;
    let (c0, c1, c2) = (coef[0], coef[1], coef[2]);
    if !(c0 > 0.0) {
        return Err(ChshError::FitDiverged(format!("non-positive mean level {c0}")));
    }
    let visibility = (c1 * c1 + c2 * c2).sqrt() / c0;
    let fit = FringeFit {
        amplitude: 2.0 * c0,
        visibility,
        phase_offset: (-c2).atan2(c1),
        exceeds_unity: visibility > 1.0 + opts.unity_tolerance,
        rms_residual: ((&m * &coef - &y).norm_squared() / n as f64).sqrt(),
    };
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    fn sweep() -> Vec<f64> {
        (0..=39).map(|k| (7.0 * k as f64).to_radians()).collect()
    }

    #[test]
    fn ideal_sweep_has_unit_visibility() {
        let alpha = 0.3;
        let pts: Vec<(f64, f64)> = sweep().into_iter().map(|b| (b, 500.0 * (alpha - b).cos().powi(2))).collect();
        let f = fit_fringe(&pts, FringeFitOptions::default()).unwrap();
        assert!((f.visibility - 1.0).abs() < 1e-6);
        assert!((f.amplitude - 500.0).abs() < 1e-6);
        assert!((f.eval(alpha) - 500.0).abs() < 1e-6);
        assert!(!f.exceeds_unity);
    }

    #[test]
    fn noisy_sweep_recovers_injected_visibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for v in [0.6, 0.85, 0.95] {
            let pts: Vec<(f64, f64)> = sweep()
                .into_iter()
                .map(|b| {
                    let mean = 800.0 * 0.5 * (1.0 + v * (2.0 * b - 0.7).cos());
                    (b, Poisson::new(mean.max(1e-9)).unwrap().sample(&mut rng))
                })
                .collect();
            let f = fit_fringe(&pts, FringeFitOptions::default()).unwrap();
            assert!((f.visibility - v).abs() < 0.02, "{} vs {v}", f.visibility);
        }
    }

    #[test]
    fn rejects_short_or_narrow_sweeps() {
        let few: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 1.0)).collect();
        assert!(fit_fringe(&few, FringeFitOptions::default()).is_err());
        let narrow: Vec<(f64, f64)> = (0..10).map(|k| (k as f64 * 0.1, 1.0 + k as f64)).collect();
        assert!(fit_fringe(&narrow, FringeFitOptions::default()).is_err());
    }

    #[test]
    fn over_unity_is_flagged() {
        let pts: Vec<(f64, f64)> = sweep().into_iter().map(|b| (b, 100.0 * (1.0 + 1.2 * (2.0 * b).cos()))).collect();
        assert!(fit_fringe(&pts, FringeFitOptions::default()).unwrap().exceeds_unity);
    }
}
